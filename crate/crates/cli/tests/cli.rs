use std::path::Path;
use std::process::{Command, Output};

fn elastica(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_elastica"));
    cmd.args(args).env_remove("ELASTICA_OUT");
    if let Some(dir) = out {
        cmd.env("ELASTICA_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn last_line(o: &Output) -> String {
    stdout(o).lines().last().unwrap_or("").to_string()
}

#[test]
fn mesh_gen_headers_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (n, header) in [(1, "8 6"), (2, "27 48")] {
        let o = elastica(&["mesh-gen", "--n", &n.to_string()], Some(dir.path()));
        assert!(o.status.success());
        assert_eq!(last_line(&o), "STATUS: pass");
        let text = std::fs::read_to_string(dir.path().join(format!("cube_{n}.tetmesh"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("tetmesh 1"));
        assert_eq!(lines.next(), Some(header));
        let mesh = elastica_core::SimplicialMesh::from_ascii(&text).unwrap();
        assert_eq!(mesh.to_ascii(), text);
    }
}

#[test]
fn zero_case_passes_with_zero_norms() {
    let o = elastica(&["solve", "--case", "zero", "--n", "1"], None);
    assert!(o.status.success(), "{}", stdout(&o));
    let s = stdout(&o);
    assert!(s.contains("e_sigma=0.000000e0"));
    assert!(s.contains("e_u=0.000000e0"));
    assert_eq!(last_line(&o), "STATUS: pass");
}

#[test]
fn invalid_mode_path_combination_fails() {
    let o = elastica(&["solve", "--mode", "exact", "--path", "reduced"], None);
    assert!(!o.status.success());
    assert_eq!(last_line(&o), "STATUS: fail");
    let o = elastica(&["solve", "--mode", "sideways"], None);
    assert!(!o.status.success());
    assert_eq!(last_line(&o), "STATUS: fail");
}

fn field(s: &str, key: &str) -> f64 {
    s.lines().find_map(|l| l.strip_prefix(&format!("{key}="))).unwrap().parse().unwrap()
}

#[test]
fn reduced_and_full_paths_agree() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["solve", "--case", "trig_varcoef", "--mode", "corner", "--n", "2"];
    let full = elastica(&[&base[..], &["--path", "full"]].concat(), Some(dir.path()));
    let red = elastica(&[&base[..], &["--path", "reduced"]].concat(), Some(dir.path()));
    assert!(full.status.success() && red.status.success());
    let (a, b) = (stdout(&full), stdout(&red));
    for key in ["e_sigma", "e_u", "e_p"] {
        let (x, y) = (field(&a, key), field(&b, key));
        assert!((x - y).abs() <= 1e-8 * x.abs(), "{key}: {x} vs {y}");
    }
    let vtk = std::fs::read_to_string(dir.path().join("trig_varcoef_corner_reduced.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0"));
    assert!(vtk.contains("CELL_TYPES 48"));
}

#[test]
fn convergence_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["convergence", "--case", "trig", "--mode", "corner", "--path", "reduced", "--n-list", "1,2,3"];
    let first = elastica(&args, Some(dir.path()));
    let csv_path = dir.path().join("rates_trig_corner_reduced.csv");
    let a = std::fs::read_to_string(&csv_path).unwrap();
    let second = elastica(&args, Some(dir.path()));
    let b = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with("n,h,e_sigma,e_u,e_p,e_superconv,rate_sigma,rate_u,rate_p,rate_superconv\n"));
    assert_eq!(a.lines().count(), 4);
    for o in [first, second] {
        let last = last_line(&o);
        assert!(last == "STATUS: pass" || last == "STATUS: fail");
    }
}

#[test]
fn patch_convergence_passes_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "case=linear_patch\nmode=corner\npath=reduced\nn_list=1,2,3\n").unwrap();
    let o = elastica(&["convergence", "--config", cfg.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(last_line(&o), "STATUS: pass");
}

#[test]
fn infsup_writes_csv_and_respects_cap() {
    let dir = tempfile::tempdir().unwrap();
    let o = elastica(&["infsup", "--mode", "exact", "--n-list", "1"], Some(dir.path()));
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("infsup_exact.csv")).unwrap();
    assert!(csv.starts_with("n,beta_full,beta_c_kerb,alpha,mode\n1,"));
    assert!(csv.trim_end().ends_with(",exact"));
    let o = elastica(&["infsup", "--n-list", "3"], None);
    assert!(!o.status.success());
    assert_eq!(last_line(&o), "STATUS: fail");
}

#[test]
fn threads_flag_gives_identical_output() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let args = ["solve", "--case", "trig", "--mode", "corner", "--path", "reduced", "--n", "2"];
    elastica(&args, Some(d1.path()));
    elastica(&[&args[..], &["--threads", "2"]].concat(), Some(d2.path()));
    for f in ["trig_corner_reduced_u.csv", "trig_corner_reduced_sigma_n.csv", "trig_corner_reduced_p.csv"] {
        assert_eq!(std::fs::read(d1.path().join(f)).unwrap(), std::fs::read(d2.path().join(f)).unwrap(), "{f}");
    }
}

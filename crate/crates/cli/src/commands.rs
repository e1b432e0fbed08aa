use std::time::Instant;

use anyhow::{bail, Context, Result};
use elastica_core::assembly::QuadratureMode;
use elastica_core::verification::report::{infsup_csv, rate_table_csv};
use elastica_core::verification::{
    convergence_study, estimate_infsup, manufactured_case, rate_ok, run_case, ConvergenceStudy, ManufacturedCase,
    RunOptions,
};
use elastica_core::{BoxExtent, ExecPolicy, SimplicialMesh};

use crate::config::RunConfig;
use crate::export;

/// Relative tolerance of the conservation and weak-symmetry checks.
const IDENTITY_TOL: f64 = 1e-10;
/// Error bound for cases the discretization reproduces exactly.
const EXACT_TOL: f64 = 1e-9;
/// Slack allowed below the asymptotic order on the finest pair.
const RATE_SLACK: f64 = 0.3;

/// Prints a check line and returns its outcome.
fn check(name: &str, pass: bool, detail: String) -> bool {
    println!("check {name}: {} ({detail})", if pass { "pass" } else { "fail" });
    pass
}

fn load_case(cfg: &RunConfig) -> Result<ManufacturedCase> {
    if cfg.case == "trig_varcoef" && cfg.material.is_some() {
        eprintln!("warning: trig_varcoef has a fixed material; --lambda/--mu ignored");
    }
    Ok(manufactured_case(&cfg.case, cfg.material)?)
}

fn run_options(cfg: &RunConfig) -> RunOptions {
    let policy = ExecPolicy::from_threads(cfg.threads);
    let mut opts = RunOptions::new(cfg.mode, cfg.path);
    opts.assembly.policy = policy;
    opts.solver.policy = policy;
    opts.solver.rtol = cfg.rtol;
    opts
}

fn load_mesh(cfg: &RunConfig, n: usize) -> Result<SimplicialMesh> {
    match &cfg.mesh {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading mesh {}", p.display()))?;
            Ok(SimplicialMesh::from_ascii(&text)?)
        }
        None => Ok(SimplicialMesh::generate_cube_mesh(n, BoxExtent::unit())?),
    }
}

fn exact_case(name: &str) -> bool {
    matches!(name, "zero" | "linear_patch")
}

pub fn mesh_gen(cfg: &RunConfig) -> Result<bool> {
    let mesh = SimplicialMesh::generate_cube_mesh(cfg.n, BoxExtent::unit())?;
    let dir = cfg.out_dir().unwrap_or(std::path::Path::new("."));
    let path = export::write(dir, &format!("cube_{}.tetmesh", cfg.n), &mesh.to_ascii())?;
    println!("vertices={} cells={}", mesh.num_vertices(), mesh.num_cells());
    println!("wrote {}", path.display());
    Ok(true)
}

pub fn solve(cfg: &RunConfig) -> Result<bool> {
    let case = load_case(cfg)?;
    let mesh = load_mesh(cfg, cfg.n)?;
    println!("case={} mode={} path={} cells={}", case.name, cfg.mode, cfg.path, mesh.num_cells());
    let t = Instant::now();
    let run = run_case(&case, mesh, &run_options(cfg))?;
    let elapsed = t.elapsed().as_secs_f64();
    for line in run.solution.diagnostics.to_lines() {
        println!("{line}");
    }
    let r = &run.report;
    println!("h={:.6e}", r.h);
    println!("e_sigma={:.6e}\ne_u={:.6e}\ne_p={:.6e}\ne_superconv={:.6e}", r.e_sigma, r.e_u, r.e_p, r.e_superconv);
    println!("skw_sigma={:.6e}", r.skw_sigma);
    println!("total_seconds={elapsed:.3}");

    let mut ok = check(
        "residual",
        run.solution.diagnostics.residual <= cfg.rtol,
        format!("{:.3e} <= {:.1e}", run.solution.diagnostics.residual, cfg.rtol),
    );
    let rel = if r.g_norm > 0.0 { r.div_residual / r.g_norm } else { r.div_residual };
    ok &= check("conservation", r.conservation_holds(IDENTITY_TOL), format!("{rel:.3e} <= {IDENTITY_TOL:.0e}"));
    ok &= check(
        "weak_symmetry",
        run.constraints.weak_symmetry <= IDENTITY_TOL,
        format!("{:.3e} <= {IDENTITY_TOL:.0e}", run.constraints.weak_symmetry),
    );
    if exact_case(&case.name) {
        let worst = r.e_sigma.max(r.e_p).max(r.e_superconv);
        ok &= check("reproduction", worst <= EXACT_TOL, format!("{worst:.3e} <= {EXACT_TOL:.0e}"));
    }

    if let Some(dir) = cfg.out_dir() {
        let stem = format!("{}_{}_{}", case.name, cfg.mode, cfg.path);
        for (name, body) in [
            (format!("{stem}_u.csv"), export::displacement_csv(&run.mesh, &run.solution)),
            (format!("{stem}_sigma_n.csv"), export::traction_csv(&run.mesh, &run.spaces, &run.solution)),
            (format!("{stem}_p.csv"), export::multiplier_csv(&run.mesh, &run.spaces, &run.solution)),
            (format!("{stem}.vtk"), export::vtk(&run.mesh, &run.solution, &stem)),
        ] {
            println!("wrote {}", export::write(dir, &name, &body)?.display());
        }
    }
    Ok(ok)
}

/// Minimum finest-pair slopes for smooth cases.
fn expected_rates(mode: QuadratureMode) -> Vec<(&'static str, f64)> {
    match mode {
        QuadratureMode::Exact => vec![("sigma", 2.0), ("u", 1.0), ("p", 2.0), ("superconv", 2.0)],
        QuadratureMode::Corner => vec![("sigma", 1.0), ("u", 1.0), ("superconv", 2.0)],
    }
}

fn study_checks(study: &ConvergenceStudy) -> bool {
    let mut ok = true;
    for row in &study.rows {
        let r = &row.report;
        ok &= check(&format!("conservation n={}", row.n), r.conservation_holds(IDENTITY_TOL), format!("{:.3e}", r.div_residual));
    }
    if exact_case(&study.case) {
        let worst = study.rows.iter().map(|r| r.report.e_sigma.max(r.report.e_p).max(r.report.e_superconv)).fold(0.0, f64::max);
        ok &= check("reproduction", worst <= EXACT_TOL, format!("{worst:.3e} <= {EXACT_TOL:.0e}"));
        return ok;
    }
    let hs = study.hs();
    for (name, order) in expected_rates(study.mode) {
        let col = study.column(|r| match name {
            "sigma" => r.e_sigma,
            "u" => r.e_u,
            "p" => r.e_p,
            _ => r.e_superconv,
        });
        let min = order - RATE_SLACK;
        let k = col.len() - 1;
        let slope = elastica_core::verification::observed_rate(col[k - 1], col[k], hs[k - 1], hs[k]);
        ok &= check(&format!("rate_{name}"), rate_ok(&col, &hs, min), format!("{slope:.3} >= {min:.1}"));
    }
    ok
}

pub fn convergence(cfg: &RunConfig) -> Result<bool> {
    if cfg.mesh.is_some() {
        bail!("convergence studies use generated cube meshes; drop --mesh");
    }
    let case = load_case(cfg)?;
    let n_list = cfg.n_list.clone().unwrap_or_else(|| vec![2, 4, 8]);
    let study = convergence_study(&case, &n_list, &run_options(cfg))?;
    let csv = rate_table_csv(&study);
    print!("{csv}");
    let ok = study_checks(&study);
    if let Some(dir) = cfg.out_dir() {
        let name = format!("rates_{}_{}_{}.csv", case.name, cfg.mode, cfg.path);
        println!("wrote {}", export::write(dir, &name, &csv)?.display());
    }
    Ok(ok)
}

pub fn infsup(cfg: &RunConfig) -> Result<bool> {
    let n_list = cfg.n_list.clone().unwrap_or_else(|| vec![1, 2]);
    if n_list.iter().any(|&n| n == 0 || n > 2) {
        bail!("inf-sup estimates are limited to n <= 2, got {n_list:?}");
    }
    let lame = cfg.material.unwrap_or((1.0, 1.0));
    let mut rows = Vec::new();
    for &n in &n_list {
        let mesh = SimplicialMesh::generate_cube_mesh(n, BoxExtent::unit())?;
        rows.push((n, estimate_infsup(&mesh, cfg.mode, lame)?));
    }
    let csv = infsup_csv(&rows);
    print!("{csv}");
    let mut ok = true;
    for (n, r) in &rows {
        ok &= check(
            &format!("positive n={n}"),
            r.beta_full > 0.0 && r.beta_c_kerb > 0.0 && r.alpha > 0.0,
            format!("{:.4e} {:.4e} {:.4e}", r.beta_full, r.beta_c_kerb, r.alpha),
        );
    }
    for w in rows.windows(2) {
        let (a, b) = (&w[0].1, &w[1].1);
        ok &= check(
            &format!("no_collapse n={}->{}", w[0].0, w[1].0),
            b.beta_c_kerb >= 0.5 * a.beta_c_kerb,
            format!("{:.4e} >= {:.4e}", b.beta_c_kerb, 0.5 * a.beta_c_kerb),
        );
    }
    if let Some(dir) = cfg.out_dir() {
        println!("wrote {}", export::write(dir, &format!("infsup_{}.csv", cfg.mode), &csv)?.display());
    }
    Ok(ok)
}

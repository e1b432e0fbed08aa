//! Field export as CSV tables and a legacy ASCII VTK unstructured grid.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use elastica_core::fespace::Spaces;
use elastica_core::solver::Solution;
use elastica_core::SimplicialMesh;

fn e(x: f64) -> String {
    format!("{x:.11e}")
}

/// Cell values of `u_h`.
pub fn displacement_csv(mesh: &SimplicialMesh, sol: &Solution) -> String {
    let mut s = String::from("cell,x,y,z,u1,u2,u3\n");
    for c in 0..mesh.num_cells() {
        let p = mesh.cell_points(c);
        let x = (p[0] + p[1] + p[2] + p[3]).scale(0.25);
        let _ = writeln!(s, "{c},{},{},{},{},{},{}", e(x[0]), e(x[1]), e(x[2]), e(sol.u[3 * c]), e(sol.u[3 * c + 1]), e(sol.u[3 * c + 2]));
    }
    s
}

/// Facet averages of `σ_h n` with the facet's global normal.
pub fn traction_csv(mesh: &SimplicialMesh, spaces: &Spaces, sol: &Solution) -> String {
    let mut s = String::from("facet,x,y,z,t1,t2,t3\n");
    for f in 0..mesh.num_facets() {
        let (cell, _) = mesh.facet_cells(f);
        let k = mesh.cell_facets(cell).iter().position(|&g| g == f).expect("facet belongs to its cell");
        let mut bary = [1.0 / 3.0; 4];
        bary[k] = 0.0;
        let t = spaces.stress_value(&sol.sigma, cell, &bary).mul_vec(&mesh.facet_normal(f));
        let p = mesh.facet_points(f);
        let x = (p[0] + p[1] + p[2]).scale(1.0 / 3.0);
        let _ = writeln!(s, "{f},{},{},{},{},{},{}", e(x[0]), e(x[1]), e(x[2]), e(t[0]), e(t[1]), e(t[2]));
    }
    s
}

/// `vec p_h` at edge midpoints, evaluated in the first cell containing the edge.
pub fn multiplier_csv(mesh: &SimplicialMesh, spaces: &Spaces, sol: &Solution) -> String {
    let mut s = String::from("edge,x,y,z,w1,w2,w3\n");
    for ed in 0..mesh.num_edges() {
        let cell = mesh.edge_cells(ed)[0];
        let [a, b] = mesh.edge(ed);
        let mut bary = [0.0; 4];
        for v in [a, b] {
            bary[mesh.local_vertex(cell, v).expect("edge vertex in cell")] = 0.5;
        }
        let w = spaces.multiplier_value(&sol.p, cell, &bary);
        let x = (mesh.vertex(a) + mesh.vertex(b)).scale(0.5);
        let _ = writeln!(s, "{ed},{},{},{},{},{},{}", e(x[0]), e(x[1]), e(x[2]), e(w[0]), e(w[1]), e(w[2]));
    }
    s
}

pub fn vtk(mesh: &SimplicialMesh, sol: &Solution, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.num_vertices());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", e(v[0]), e(v[1]), e(v[2]));
    }
    let nc = mesh.num_cells();
    let _ = writeln!(s, "CELLS {nc} {}", 5 * nc);
    for c in mesh.cells() {
        let _ = writeln!(s, "4 {} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        s.push_str("10\n");
    }
    let _ = writeln!(s, "CELL_DATA {nc}\nVECTORS u double");
    for c in 0..nc {
        let _ = writeln!(s, "{} {} {}", e(sol.u[3 * c]), e(sol.u[3 * c + 1]), e(sol.u[3 * c + 2]));
    }
    s
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let p = dir.join(name);
    std::fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
    Ok(p)
}

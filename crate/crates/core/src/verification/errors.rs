//! Error norms of a discrete solution against a manufactured case.

use crate::assembly::SaddleSystem;
use crate::fespace::Spaces;
use crate::mesh::SimplicialMesh;
use crate::quadrature::{bary_to_point, simplex_rule};
use crate::solver::Solution;
use crate::sparse::norm;
use crate::tensor::{skw, Vec3};

use super::cases::ManufacturedCase;
use super::VerificationError;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorReport {
    pub h: f64,
    pub e_sigma: f64,
    pub e_u: f64,
    pub e_p: f64,
    /// `‖u_h − P_h u‖₀`, with `P_h u` the cell averages.
    pub e_superconv: f64,
    /// `‖div σ_h − P_h g‖₀`.
    pub div_residual: f64,
    pub g_norm: f64,
    /// `‖skw σ_h‖₀`; informative only.
    pub skw_sigma: f64,
}

impl ErrorReport {
    /// Whether `‖div σ_h − P_h g‖ ≤ tol ‖g‖` (absolute `tol` when `g = 0`).
    pub fn conservation_holds(&self, tol: f64) -> bool {
        if self.g_norm == 0.0 {
            self.div_residual <= tol
        } else {
            self.div_residual <= tol * self.g_norm
        }
    }
}

/// Computes all norms with the simplex rule of `quad_degree`.
pub fn compute_errors(
    mesh: &SimplicialMesh,
    spaces: &Spaces,
    solution: &Solution,
    case: &ManufacturedCase,
    quad_degree: usize,
) -> Result<ErrorReport, VerificationError> {
    let rule = simplex_rule(quad_degree)?;
    let mut acc = [0.0f64; 7];
    for c in 0..mesh.num_cells() {
        let pts = mesh.cell_points(c);
        let vol = mesh.cell_volume(c);
        let uh = Vec3::from_fn(|k| solution.u[3 * c + k]);
        let div_h = spaces.stress_divergence(&solution.sigma, c);
        let mut u_avg = Vec3::ZERO;
        let mut g_avg = Vec3::ZERO;
        for (bary, w) in rule.iter() {
            let x = bary_to_point(&pts, bary);
            let wt = w * vol;
            let sh = spaces.stress_value(&solution.sigma, c, bary);
            let ph = spaces.multiplier_matrix(&solution.p, c, bary);
            let u = (case.u)(&x);
            let g = (case.g)(&x);
            acc[0] += wt * ((case.sigma)(&x) - sh).norm().powi(2);
            acc[1] += wt * (u - uh).norm_squared();
            acc[2] += wt * ((case.p)(&x) - ph).norm().powi(2);
            acc[5] += wt * g.norm_squared();
            acc[6] += wt * skw(&sh).norm().powi(2);
            u_avg += u.scale(w);
            g_avg += g.scale(w);
        }
        acc[3] += vol * (uh - u_avg).norm_squared();
        acc[4] += vol * (div_h - g_avg).norm_squared();
    }
    Ok(ErrorReport {
        h: mesh.quality().h_max,
        e_sigma: acc[0].sqrt(),
        e_u: acc[1].sqrt(),
        e_p: acc[2].sqrt(),
        e_superconv: acc[3].sqrt(),
        div_residual: acc[4].sqrt(),
        g_norm: acc[5].sqrt(),
        skw_sigma: acc[6].sqrt(),
    })
}

/// Algebraic constraint residuals of a solution.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConstraintResiduals {
    /// `‖B σ − rhs_g‖ / ‖rhs_g‖` (absolute when `rhs_g = 0`).
    pub divergence: f64,
    /// `‖C σ‖ / ‖ |C| |σ| ‖`: cancellation relative to the magnitude of the
    /// terms (0 when `σ = 0`).
    pub weak_symmetry: f64,
}

pub fn constraint_residuals(system: &SaddleSystem, solution: &Solution) -> ConstraintResiduals {
    let bs = system.b.mul_vec(&solution.sigma);
    let r: Vec<f64> = bs.iter().zip(&system.rhs_g).map(|(a, b)| a - b).collect();
    let gn = norm(&system.rhs_g);
    let divergence = if gn > 0.0 { norm(&r) / gn } else { norm(&r) };
    let cs = system.c.mul_vec(&solution.sigma);
    let mut scale = vec![0.0; system.num_multiplier()];
    for (i, j, v) in system.c.triplets() {
        scale[i] += (v * solution.sigma[j]).abs();
    }
    let sn = norm(&scale);
    let weak_symmetry = if sn > 0.0 { norm(&cs) / sn } else { 0.0 };
    ConstraintResiduals { divergence, weak_symmetry }
}

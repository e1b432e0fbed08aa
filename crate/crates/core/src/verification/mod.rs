//! Verification harness: manufactured solutions, error norms, convergence
//! studies, numerical inf-sup constants and quadrature-error probes.

pub mod cases;
pub mod convergence;
pub mod errors;
pub mod infsup;
pub mod probe;
pub mod report;

pub use cases::{manufactured_case, ManufacturedCase, CASE_NAMES};
pub use convergence::{convergence_study, run_case, CaseRun, ConvergenceStudy, RunOptions, SolvePath, StudyRow};
pub use errors::{compute_errors, constraint_residuals, ConstraintResiduals, ErrorReport};
pub use infsup::{estimate_infsup, InfSupReport, INFSUP_DIM_CAP};
pub use probe::{quadrature_error_probe, ProbeResult};

use crate::assembly::AssemblyError;
use crate::mesh::MeshError;
use crate::quadrature::QuadratureError;
use crate::solver::SolverError;
use crate::tensor::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum VerificationError {
    #[error("unknown case `{0}` (expected one of zero, linear_patch, trig, trig_varcoef)")]
    UnknownCase(String),
    #[error(transparent)]
    Material(TensorError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("dense estimate needs dimension {dim}, above the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dense linear algebra failed: {0}")]
    Linalg(String),
}

/// Observed order between two levels: `log(e₁/e₂) / log(h₁/h₂)`.
pub fn observed_rate(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}

/// Asymptotic order check: strictly decreasing errors and a finest-pair
/// slope of at least `min_rate`.
pub fn rate_ok(errors: &[f64], hs: &[f64], min_rate: f64) -> bool {
    if errors.len() < 2 || errors.len() != hs.len() {
        return false;
    }
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let k = errors.len() - 1;
    decreasing && observed_rate(errors[k - 1], errors[k], hs[k - 1], hs[k]) >= min_rate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates() {
        assert!((observed_rate(4.0, 1.0, 2.0, 1.0) - 2.0).abs() < 1e-15);
        assert!(rate_ok(&[1.0, 0.5, 0.25], &[1.0, 0.5, 0.25], 0.95));
        assert!(!rate_ok(&[1.0, 1.1, 0.25], &[1.0, 0.5, 0.25], 0.5));
        assert!(!rate_ok(&[1.0], &[1.0], 0.5));
    }
}

//! Single solves and refinement studies on the cube family.

use crate::assembly::{assemble, AssemblyOptions, QuadratureMode, SaddleSystem};
use crate::fespace::{build_spaces, Spaces, Variant};
use crate::mesh::{BoxExtent, SimplicialMesh};
use crate::solver::{build_reduced, solve_full, Solution, SolverOptions};

use super::cases::ManufacturedCase;
use super::errors::{compute_errors, constraint_residuals, ConstraintResiduals, ErrorReport};
use super::{observed_rate, VerificationError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolvePath {
    #[default]
    Full,
    Reduced,
}

impl std::fmt::Display for SolvePath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolvePath::Full => "full",
            SolvePath::Reduced => "reduced",
        })
    }
}

impl std::str::FromStr for SolvePath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(SolvePath::Full),
            "reduced" => Ok(SolvePath::Reduced),
            other => Err(format!("unknown solve path `{other}` (expected full or reduced)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub mode: QuadratureMode,
    pub path: SolvePath,
    /// Variant of the DOF functionals; `None` uses moments for exact mode
    /// and nodal values for corner mode.
    pub variant: Option<Variant>,
    pub error_degree: usize,
    pub assembly: AssemblyOptions,
    pub solver: SolverOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            mode: QuadratureMode::Exact,
            path: SolvePath::Full,
            variant: None,
            error_degree: 6,
            assembly: AssemblyOptions::default(),
            solver: SolverOptions::default(),
        }
    }
}

impl RunOptions {
    pub fn new(mode: QuadratureMode, path: SolvePath) -> Self {
        RunOptions { mode, path, ..Default::default() }
    }

    pub fn variant(&self) -> Variant {
        self.variant.unwrap_or(match self.mode {
            QuadratureMode::Exact => Variant::Moment,
            QuadratureMode::Corner => Variant::Nodal,
        })
    }

    pub fn validate(&self) -> Result<(), VerificationError> {
        if self.path == SolvePath::Reduced && self.mode != QuadratureMode::Corner {
            return Err(VerificationError::Config("the reduced path requires corner quadrature".into()));
        }
        if self.mode == QuadratureMode::Corner && self.variant() != Variant::Nodal {
            return Err(VerificationError::Config("corner quadrature requires the nodal variant".into()));
        }
        if !(self.solver.rtol > 0.0) {
            return Err(VerificationError::Config(format!("rtol must be positive, got {}", self.solver.rtol)));
        }
        Ok(())
    }
}

/// Everything produced by one solve.
pub struct CaseRun {
    pub mesh: SimplicialMesh,
    pub spaces: Spaces,
    pub system: SaddleSystem,
    pub solution: Solution,
    pub report: ErrorReport,
    pub constraints: ConstraintResiduals,
}

/// Assembles and solves `case` on `mesh`, then measures the errors.
pub fn run_case(case: &ManufacturedCase, mesh: SimplicialMesh, opts: &RunOptions) -> Result<CaseRun, VerificationError> {
    opts.validate()?;
    let spaces = build_spaces(&mesh, opts.variant());
    let system = assemble(&mesh, &spaces, &case.problem(), opts.mode, &opts.assembly)?;
    let solution = match opts.path {
        SolvePath::Full => solve_full(&system, &opts.solver)?,
        SolvePath::Reduced => build_reduced(&system, opts.solver.policy)?.solve(&opts.solver)?,
    };
    let report = compute_errors(&mesh, &spaces, &solution, case, opts.error_degree)?;
    let constraints = constraint_residuals(&system, &solution);
    Ok(CaseRun { mesh, spaces, system, solution, report, constraints })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub report: ErrorReport,
    pub constraints: ConstraintResiduals,
    pub residual: f64,
}

/// Observed orders against the previous row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rates {
    pub sigma: f64,
    pub u: f64,
    pub p: f64,
    pub superconv: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceStudy {
    pub case: String,
    pub mode: QuadratureMode,
    pub path: SolvePath,
    pub rows: Vec<StudyRow>,
}

impl ConvergenceStudy {
    /// Rates per row; `None` for the coarsest.
    pub fn rates(&self) -> Vec<Option<Rates>> {
        let mut out = vec![None];
        for w in self.rows.windows(2) {
            let (a, b) = (&w[0].report, &w[1].report);
            let r = |x: f64, y: f64| observed_rate(x, y, a.h, b.h);
            out.push(Some(Rates {
                sigma: r(a.e_sigma, b.e_sigma),
                u: r(a.e_u, b.e_u),
                p: r(a.e_p, b.e_p),
                superconv: r(a.e_superconv, b.e_superconv),
            }));
        }
        out.truncate(self.rows.len());
        out
    }

    pub fn column(&self, f: impl Fn(&ErrorReport) -> f64) -> Vec<f64> {
        self.rows.iter().map(|r| f(&r.report)).collect()
    }

    pub fn hs(&self) -> Vec<f64> {
        self.column(|r| r.h)
    }
}

/// Runs `case` on `cube_mesh(n)` for each `n` in `n_list` (ascending, at
/// least three levels).
pub fn convergence_study(
    case: &ManufacturedCase,
    n_list: &[usize],
    opts: &RunOptions,
) -> Result<ConvergenceStudy, VerificationError> {
    if n_list.len() < 3 {
        return Err(VerificationError::Config(format!("need at least three mesh levels, got {}", n_list.len())));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) || n_list[0] == 0 {
        return Err(VerificationError::Config(format!("mesh levels must be positive and ascending: {n_list:?}")));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mesh = SimplicialMesh::generate_cube_mesh(n, BoxExtent::unit())?;
        let run = run_case(case, mesh, opts)?;
        rows.push(StudyRow {
            n,
            report: run.report,
            constraints: run.constraints,
            residual: run.solution.diagnostics.residual,
        });
    }
    Ok(ConvergenceStudy { case: case.name.clone(), mode: opts.mode, path: opts.path, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verification::manufactured_case;

    fn cube(n: usize) -> SimplicialMesh {
        SimplicialMesh::generate_cube_mesh(n, BoxExtent::unit()).unwrap()
    }

    #[test]
    fn patch_reproduced_in_both_modes() {
        let case = manufactured_case("linear_patch", None).unwrap();
        for opts in [RunOptions::new(QuadratureMode::Exact, SolvePath::Full), RunOptions::new(QuadratureMode::Corner, SolvePath::Reduced)] {
            let r = run_case(&case, cube(2), &opts).unwrap().report;
            // u_h is cellwise constant: reproduction means u_h = P_h u.
            assert!(r.e_sigma < 1e-9 && r.e_superconv < 1e-9 && r.e_p < 1e-9, "{:?} {r:?}", opts.mode);
        }
    }

    #[test]
    fn zero_case_has_zero_errors() {
        let case = manufactured_case("zero", None).unwrap();
        let r = run_case(&case, cube(1), &RunOptions::default()).unwrap().report;
        assert_eq!((r.e_sigma, r.e_u, r.e_p, r.e_superconv), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn trig_errors_positive_and_conservative() {
        let case = manufactured_case("trig", None).unwrap();
        let run = run_case(&case, cube(2), &RunOptions::default()).unwrap();
        let r = run.report;
        assert!(r.e_sigma > 0.0 && r.e_u > 0.0 && r.e_p > 0.0 && r.e_sigma.is_finite());
        assert!(r.conservation_holds(1e-10));
        assert!(run.constraints.weak_symmetry < 1e-10);
    }

    #[test]
    fn invalid_configurations_rejected() {
        let case = manufactured_case("zero", None).unwrap();
        let bad = RunOptions::new(QuadratureMode::Exact, SolvePath::Reduced);
        assert!(matches!(run_case(&case, cube(1), &bad), Err(VerificationError::Config(_))));
        let bad = RunOptions { variant: Some(Variant::Moment), ..RunOptions::new(QuadratureMode::Corner, SolvePath::Full) };
        assert!(bad.validate().is_err());
        let opts = RunOptions::default();
        assert!(convergence_study(&case, &[1, 2], &opts).is_err());
        assert!(convergence_study(&case, &[2, 1, 3], &opts).is_err());
    }

    #[test]
    fn rates_of_short_study() {
        let case = manufactured_case("trig", None).unwrap();
        let s = convergence_study(&case, &[1, 2, 3], &RunOptions::new(QuadratureMode::Corner, SolvePath::Reduced)).unwrap();
        let rates = s.rates();
        assert!(rates[0].is_none());
        assert!(rates[2].unwrap().u > 0.5);
        let csv = crate::verification::report::rate_table_csv(&s);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().ends_with(",,,,"));
    }
}

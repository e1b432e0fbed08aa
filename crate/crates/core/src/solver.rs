//! Linear solvers for the saddle-point system.
//!
//! Two paths:
//! - [`solve_full`]: the monolithic matrix (either quadrature mode), by
//!   sparse LU or, for large systems, Schur-complement CG; both finish with
//!   a residual check and iterative refinement.
//! - [`build_reduced`] + [`ReducedSystem::solve`]: corner mode only. For each
//!   vertex the local block `[[Ǎ_v, Č_vᵀ], [Č_v, 0]]` is factorized and the
//!   stress and multiplier are eliminated, giving
//!   `Ž_v = Ǎ_v⁻¹ − Ǎ_v⁻¹Č_vᵀ (Č_v Ǎ_v⁻¹ Č_vᵀ)⁻¹ Č_v Ǎ_v⁻¹`. The displacement
//!   then solves the SPD system `B Ž Bᵀ u = B Ž f − g`, and
//!   `σ = Ž (f − Bᵀu)`, `p = W⁻¹ Č Ǎ⁻¹ (f − Bᵀu)` with `W = Č Ǎ⁻¹ Čᵀ`.

use std::time::Instant;

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, Side};

use crate::assembly::{vertex_block_structure, QuadratureMode, SaddleSystem, VertexBlock};
use crate::exec::ExecPolicy;
use crate::sparse::{dot, norm, CsrMatrix, TripletBuilder};

pub const DEFAULT_RTOL: f64 = 1e-10;
/// Largest reduced dimension solved with sparse Cholesky under
/// [`SpdMethod::Auto`]; larger systems use Jacobi-preconditioned CG.
pub const CHOLESKY_LIMIT: usize = 20_000;
const MAX_REFINEMENTS: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("singular local block at vertex {vertex} (|eigenvalue| range [{min_abs_eig:e}, {max_abs_eig:e}])")]
    SingularBlock { vertex: usize, min_abs_eig: f64, max_abs_eig: f64 },
    #[error("the reduced path requires a corner-quadrature system")]
    NotCornerMode,
    #[error("conjugate gradients broke down at iteration {iteration} (pᵀSp = {curvature:e})")]
    Breakdown { iteration: usize, curvature: f64 },
    #[error("linear solve did not reach rtol {rtol:e}: relative residual {residual:e} after {iterations} iterations")]
    NotConverged { rtol: f64, residual: f64, iterations: usize },
    #[error("right-hand side has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SpdMethod {
    #[default]
    Auto,
    Cholesky,
    Cg,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub rtol: f64,
    pub spd_method: SpdMethod,
    pub full_method: FullMethod,
    pub policy: ExecPolicy,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { rtol: DEFAULT_RTOL, spd_method: SpdMethod::Auto, full_method: FullMethod::Auto, policy: ExecPolicy::Sequential }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveDiagnostics {
    pub method: String,
    pub dim: usize,
    pub nnz: usize,
    /// Relative residual `‖K x − b‖ / ‖b‖` of the monolithic system (0 when
    /// `b = 0` and `x = 0`).
    pub residual: f64,
    pub rhs_norm: f64,
    pub iterations: usize,
    pub factor_seconds: f64,
    pub solve_seconds: f64,
    pub num_blocks: usize,
    pub block_cond_min: f64,
    pub block_cond_max: f64,
}

impl SolveDiagnostics {
    /// `key=value` lines for reports.
    pub fn to_lines(&self) -> Vec<String> {
        let mut v = vec![
            format!("method={}", self.method),
            format!("dim={}", self.dim),
            format!("nnz={}", self.nnz),
            format!("residual={:.6e}", self.residual),
            format!("rhs_norm={:.6e}", self.rhs_norm),
            format!("iterations={}", self.iterations),
            format!("factor_seconds={:.3}", self.factor_seconds),
            format!("solve_seconds={:.3}", self.solve_seconds),
        ];
        if self.num_blocks > 0 {
            v.push(format!("vertex_blocks={}", self.num_blocks));
            v.push(format!("block_cond_min={:.6e}", self.block_cond_min));
            v.push(format!("block_cond_max={:.6e}", self.block_cond_max));
        }
        v
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub sigma: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub diagnostics: SolveDiagnostics,
}

impl Solution {
    pub fn stacked(&self) -> Vec<f64> {
        let mut x = self.sigma.clone();
        x.extend_from_slice(&self.u);
        x.extend_from_slice(&self.p);
        x
    }
}

fn relative_residual(system: &SaddleSystem, x: &[f64], rhs: &[f64]) -> f64 {
    let kx = system.apply(x);
    let r: Vec<f64> = kx.iter().zip(rhs).map(|(a, b)| a - b).collect();
    let bn = norm(rhs);
    let rn = norm(&r);
    if bn == 0.0 {
        rn
    } else {
        rn / bn
    }
}

/// Method for the monolithic system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FullMethod {
    /// Sparse LU up to [`LU_LIMIT`] unknowns, Schur-complement CG beyond.
    #[default]
    Auto,
    SparseLu,
    SchurCg,
}

/// Largest monolithic dimension factorized by sparse LU under
/// [`FullMethod::Auto`].
pub const LU_LIMIT: usize = 40_000;

/// Preconditioned Schur-complement iteration for the monolithic system.
///
/// With `K = [B; C]` and `y = [u; p]`, the outer CG runs on
/// `K A⁻¹ Kᵀ y = K A⁻¹ f − h`, preconditioned by a sparse Cholesky
/// factorization of `K D⁻¹ Kᵀ`, where `D` is the 9×9 facet-block diagonal of
/// `A`. Inner solves with `A` use CG preconditioned by `D`.
struct SchurCg {
    d_inv: Vec<[[f64; 9]; 9]>,
    k: CsrMatrix,
    precond: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl SchurCg {
    fn new(system: &SaddleSystem) -> Result<Self, SolverError> {
        let ns = system.num_stress();
        let nb = ns / 9;
        let mut d_inv = Vec::with_capacity(nb);
        for f in 0..nb {
            let idx: Vec<usize> = (9 * f..9 * f + 9).collect();
            let blk = system.a.submatrix(&idx, &idx);
            let llt = blk.llt(Side::Lower).map_err(|_| SolverError::Factorization(format!("stress block {f} not SPD")))?;
            let inv = llt.inverse();
            d_inv.push(std::array::from_fn(|i| std::array::from_fn(|j| inv[(i, j)])));
        }
        // K = [B; C].
        let nu = system.num_displacement();
        let ny = nu + system.num_multiplier();
        let mut t = TripletBuilder::with_capacity(ny, ns, system.b.nnz() + system.c.nnz());
        for (i, j, v) in system.b.triplets() {
            t.push(i, j, v);
        }
        for (i, j, v) in system.c.triplets() {
            t.push(nu + i, j, v);
        }
        let k = t.build();
        let kt = k.transpose();
        let mut pt = TripletBuilder::new(ny, ny);
        for (f, di) in d_inv.iter().enumerate() {
            let mut rows: Vec<usize> = (0..9).flat_map(|l| kt.row(9 * f + l).map(|(r, _)| r)).collect();
            rows.sort_unstable();
            rows.dedup();
            let mut kf = vec![[0.0; 9]; rows.len()];
            for l in 0..9 {
                for (r, v) in kt.row(9 * f + l) {
                    kf[rows.binary_search(&r).expect("row collected")][l] = v;
                }
            }
            // (K_f D_f⁻¹) then times K_fᵀ.
            let kd: Vec<[f64; 9]> =
                kf.iter().map(|kr| std::array::from_fn(|j| (0..9).map(|l| kr[l] * di[l][j]).sum())).collect();
            for (a, &r1) in rows.iter().enumerate() {
                for (b, &r2) in rows.iter().enumerate() {
                    pt.push(r1, r2, (0..9).map(|l| kd[a][l] * kf[b][l]).sum());
                }
            }
        }
        let precond = pt
            .build()
            .to_faer()
            .sp_cholesky(Side::Lower)
            .map_err(|e| SolverError::Factorization(format!("Schur preconditioner: {e:?}")))?;
        Ok(SchurCg { d_inv, k, precond })
    }

    fn apply_d_inv(&self, r: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; r.len()];
        for (f, di) in self.d_inv.iter().enumerate() {
            let rb = &r[9 * f..9 * f + 9];
            for i in 0..9 {
                z[9 * f + i] = (0..9).map(|j| di[i][j] * rb[j]).sum();
            }
        }
        z
    }

    /// PCG for `A x = b` to relative tolerance `tol`.
    fn solve_a(&self, a: &CsrMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, usize), SolverError> {
        let n = b.len();
        let bn = norm(b);
        let mut x = vec![0.0; n];
        if bn == 0.0 {
            return Ok((x, 0));
        }
        let mut r = b.to_vec();
        let mut z = self.apply_d_inv(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        let max_iter = 10 * n.max(1);
        for it in 1..=max_iter {
            a.mul_vec_into(&p, &mut ap);
            let curv = dot(&p, &ap);
            if !(curv > 0.0) {
                return Err(SolverError::Breakdown { iteration: it, curvature: curv });
            }
            let alpha = rz / curv;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if norm(&r) <= tol * bn {
                return Ok((x, it));
            }
            z = self.apply_d_inv(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(SolverError::NotConverged { rtol: tol, residual: norm(&r) / bn, iterations: max_iter })
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let n = r.len();
        let col = Mat::<f64>::from_fn(n, 1, |i, _| r[i]);
        let z = self.precond.solve(&col);
        (0..n).map(|i| z[(i, 0)]).collect()
    }

    /// Solves `K x = rhs` for the stacked system; returns `x` and the total
    /// number of inner iterations.
    fn solve(&self, system: &SaddleSystem, rhs: &[f64], rtol: f64) -> Result<(Vec<f64>, usize), SolverError> {
        let ns = system.num_stress();
        let (f, h) = rhs.split_at(ns);
        let inner_tol = rtol * 1e-3;
        let mut inner_iters = 0;
        let mut a_solve = |b: &[f64]| -> Result<Vec<f64>, SolverError> {
            let (x, it) = self.solve_a(&system.a, b, inner_tol)?;
            inner_iters += it;
            Ok(x)
        };
        let ainv_f = a_solve(f)?;
        let mut c: Vec<f64> = self.k.mul_vec(&ainv_f);
        for (ci, hi) in c.iter_mut().zip(h) {
            *ci -= hi;
        }
        let ny = c.len();
        let cn = norm(&c);
        let mut y = vec![0.0; ny];
        if cn > 0.0 {
            let outer_tol = rtol * 0.1;
            let mut r = c.clone();
            let mut z = self.precondition(&r);
            let mut p = z.clone();
            let mut rz = dot(&r, &z);
            let max_iter = 10 * ny.max(1);
            let mut converged = false;
            for it in 1..=max_iter {
                let sp = self.k.mul_vec(&a_solve(&self.k.mul_transpose_vec(&p))?);
                let curv = dot(&p, &sp);
                if !(curv > 0.0) {
                    return Err(SolverError::Breakdown { iteration: it, curvature: curv });
                }
                let alpha = rz / curv;
                for i in 0..ny {
                    y[i] += alpha * p[i];
                    r[i] -= alpha * sp[i];
                }
                if norm(&r) <= outer_tol * cn {
                    converged = true;
                    break;
                }
                z = self.precondition(&r);
                let rz_new = dot(&r, &z);
                let beta = rz_new / rz;
                rz = rz_new;
                for i in 0..ny {
                    p[i] = z[i] + beta * p[i];
                }
            }
            if !converged {
                return Err(SolverError::NotConverged { rtol: outer_tol, residual: norm(&r) / cn, iterations: max_iter });
            }
        }
        let mut fs = f.to_vec();
        for (fi, v) in fs.iter_mut().zip(self.k.mul_transpose_vec(&y)) {
            *fi -= v;
        }
        let mut x = a_solve(&fs)?;
        x.extend_from_slice(&y);
        Ok((x, inner_iters))
    }
}

enum Backend {
    Lu(faer::sparse::linalg::solvers::Lu<usize, f64>),
    Schur(Box<SchurCg>),
}

/// Monolithic solver; factor (or precondition) once, solve many.
pub struct FullSaddleSolver<'a> {
    system: &'a SaddleSystem,
    backend: Backend,
    nnz: usize,
    factor_seconds: f64,
}

impl<'a> FullSaddleSolver<'a> {
    pub fn new(system: &'a SaddleSystem) -> Result<Self, SolverError> {
        Self::with_method(system, FullMethod::Auto)
    }

    pub fn with_method(system: &'a SaddleSystem, method: FullMethod) -> Result<Self, SolverError> {
        let t0 = Instant::now();
        let use_lu = match method {
            FullMethod::Auto => system.dim() <= LU_LIMIT,
            FullMethod::SparseLu => true,
            FullMethod::SchurCg => false,
        };
        let (backend, nnz) = if use_lu {
            let kkt = system.kkt_matrix();
            let nnz = kkt.nnz();
            let lu = kkt.to_faer().sp_lu().map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
            (Backend::Lu(lu), nnz)
        } else {
            let nnz = system.a.nnz() + 2 * (system.b.nnz() + system.c.nnz());
            (Backend::Schur(Box::new(SchurCg::new(system)?)), nnz)
        };
        Ok(FullSaddleSolver { system, backend, nnz, factor_seconds: t0.elapsed().as_secs_f64() })
    }

    pub fn method_name(&self) -> &'static str {
        match self.backend {
            Backend::Lu(_) => "sparse-lu",
            Backend::Schur(_) => "schur-pcg",
        }
    }

    /// Solves with the system's own right-hand side.
    pub fn solve(&self, rtol: f64) -> Result<Solution, SolverError> {
        self.solve_rhs(&self.system.rhs(), rtol)
    }

    /// Solves `K x = rhs` for an arbitrary stacked right-hand side.
    pub fn solve_rhs(&self, rhs: &[f64], rtol: f64) -> Result<Solution, SolverError> {
        let sys = self.system;
        let n = sys.dim();
        if rhs.len() != n {
            return Err(SolverError::DimensionMismatch { expected: n, got: rhs.len() });
        }
        let t0 = Instant::now();
        let mut iterations = 0;
        let mut solve = |b: &[f64]| -> Result<Vec<f64>, SolverError> {
            match &self.backend {
                Backend::Lu(lu) => {
                    let col = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
                    let x = lu.solve(&col);
                    Ok((0..n).map(|i| x[(i, 0)]).collect())
                }
                Backend::Schur(s) => {
                    let (x, it) = s.solve(sys, b, rtol)?;
                    iterations += it;
                    Ok(x)
                }
            }
        };
        let bn = norm(rhs);
        let mut x = if bn == 0.0 { vec![0.0; n] } else { solve(rhs)? };
        let mut res = relative_residual(sys, &x, rhs);
        let mut refinements = 0;
        while res > rtol && refinements < MAX_REFINEMENTS && res.is_finite() {
            let kx = sys.apply(&x);
            let r: Vec<f64> = rhs.iter().zip(&kx).map(|(b, k)| b - k).collect();
            let dx = solve(&r)?;
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            refinements += 1;
            res = relative_residual(sys, &x, rhs);
        }
        if !(res <= rtol) {
            return Err(SolverError::NotConverged { rtol, residual: res, iterations: refinements });
        }
        let (ns, nu) = (sys.num_stress(), sys.num_displacement());
        Ok(Solution {
            sigma: x[..ns].to_vec(),
            u: x[ns..ns + nu].to_vec(),
            p: x[ns + nu..].to_vec(),
            diagnostics: SolveDiagnostics {
                method: self.method_name().into(),
                dim: n,
                nnz: self.nnz,
                residual: res,
                rhs_norm: bn,
                iterations: iterations + refinements,
                factor_seconds: self.factor_seconds,
                solve_seconds: t0.elapsed().as_secs_f64(),
                ..Default::default()
            },
        })
    }
}

/// Solves the monolithic system (sparse LU or Schur-complement CG).
pub fn solve_full(system: &SaddleSystem, opts: &SolverOptions) -> Result<Solution, SolverError> {
    FullSaddleSolver::with_method(system, opts.full_method)?.solve(opts.rtol)
}

/// Eliminated data of one vertex block.
#[derive(Clone, Debug)]
pub struct LocalElimination {
    pub vertex: usize,
    pub stress: Vec<usize>,
    pub multiplier: Vec<usize>,
    /// Displacement DOFs coupled to the block through `B`.
    pub displacement: Vec<usize>,
    /// `Ž_v`, symmetric `ns × ns`.
    pub z: Mat<f64>,
    /// `W⁻¹ Č Ǎ⁻¹`, `nq × ns`.
    pub p_recovery: Mat<f64>,
    /// `B_v`, `nd × ns`.
    pub b: Mat<f64>,
    /// Spectral condition number of the local saddle block.
    pub cond: f64,
}

/// The displacement system left after vertex elimination.
pub struct ReducedSystem<'a> {
    system: &'a SaddleSystem,
    pub s: CsrMatrix,
    pub blocks: Vec<LocalElimination>,
    build_seconds: f64,
}

fn dense_mul(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    a * b
}

fn eliminate_block(system: &SaddleSystem, bt: &CsrMatrix, block: &VertexBlock) -> Result<LocalElimination, SolverError> {
    let (sd, qd) = (&block.stress, &block.multiplier);
    let ns = sd.len();
    let nq = qd.len();
    let a = system.a.submatrix(sd, sd);
    let c = system.c.submatrix(qd, sd);

    let kkt = Mat::<f64>::from_fn(ns + nq, ns + nq, |i, j| match (i < ns, j < ns) {
        (true, true) => a[(i, j)],
        (false, true) => c[(i - ns, j)],
        (true, false) => c[(j - ns, i)],
        (false, false) => 0.0,
    });
    let eig = kkt
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| SolverError::Factorization(format!("vertex {}: {e:?}", block.vertex)))?;
    let max_abs = eig.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let min_abs = eig.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
    let singular = SolverError::SingularBlock { vertex: block.vertex, min_abs_eig: min_abs, max_abs_eig: max_abs };
    if !(min_abs > 1e-13 * max_abs) {
        return Err(singular);
    }

    let a_llt = a.llt(Side::Lower).map_err(|_| SolverError::SingularBlock {
        vertex: block.vertex,
        min_abs_eig: min_abs,
        max_abs_eig: max_abs,
    })?;
    let a_inv = a_llt.inverse();
    // X = Ǎ⁻¹ Čᵀ, W = Č X.
    let x = a_llt.solve(c.transpose());
    let w = dense_mul(&c, &x);
    let w_llt = w.llt(Side::Lower).map_err(|_| SolverError::SingularBlock {
        vertex: block.vertex,
        min_abs_eig: min_abs,
        max_abs_eig: max_abs,
    })?;
    let p_recovery = w_llt.solve(x.transpose());
    let z_full = &a_inv - dense_mul(&x, &p_recovery);
    let z = Mat::<f64>::from_fn(ns, ns, |i, j| 0.5 * (z_full[(i, j)] + z_full[(j, i)]));

    let mut disp: Vec<usize> = sd.iter().flat_map(|&d| bt.row(d).map(|(k, _)| k)).collect();
    disp.sort_unstable();
    disp.dedup();
    let b = system.b.submatrix(&disp, sd);

    Ok(LocalElimination {
        vertex: block.vertex,
        stress: sd.clone(),
        multiplier: qd.clone(),
        displacement: disp,
        z,
        p_recovery,
        b,
        cond: max_abs / min_abs,
    })
}

/// Eliminates stress and multiplier vertex by vertex and assembles
/// `S = B Ž Bᵀ`.
pub fn build_reduced<'a>(system: &'a SaddleSystem, policy: ExecPolicy) -> Result<ReducedSystem<'a>, SolverError> {
    if system.mode != QuadratureMode::Corner {
        return Err(SolverError::NotCornerMode);
    }
    let t0 = Instant::now();
    let blocks = vertex_block_structure(system).map_err(|_| SolverError::NotCornerMode)?;
    let bt = system.b.transpose();
    let blocks = policy.try_map_indexed(blocks.len(), |v| eliminate_block(system, &bt, &blocks[v]))?;

    let locals: Vec<Mat<f64>> = policy.map_indexed(blocks.len(), |v| {
        let blk = &blocks[v];
        dense_mul(&blk.b, &blk.z) * blk.b.transpose()
    });
    let nu = system.num_displacement();
    let cap = locals.iter().map(|m| m.nrows() * m.ncols()).sum();
    let mut t = TripletBuilder::with_capacity(nu, nu, cap);
    for (blk, m) in blocks.iter().zip(&locals) {
        for (a, &i) in blk.displacement.iter().enumerate() {
            for (b, &j) in blk.displacement.iter().enumerate() {
                t.push(i, j, m[(a, b)]);
            }
        }
    }
    Ok(ReducedSystem { system, s: t.build(), blocks, build_seconds: t0.elapsed().as_secs_f64() })
}

/// Result of an SPD solve.
#[derive(Clone, Debug)]
pub struct SpdSolve {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub method: &'static str,
}

/// Jacobi-preconditioned conjugate gradients.
pub fn conjugate_gradient(s: &CsrMatrix, b: &[f64], rtol: f64, max_iter: usize) -> Result<SpdSolve, SolverError> {
    let n = b.len();
    let bn = norm(b);
    let mut x = vec![0.0; n];
    if bn == 0.0 {
        return Ok(SpdSolve { x, iterations: 0, residual: 0.0, method: "pcg-jacobi" });
    }
    let dinv: Vec<f64> = s.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut sp = vec![0.0; n];
    for it in 1..=max_iter {
        s.mul_vec_into(&p, &mut sp);
        let curv = dot(&p, &sp);
        if !(curv > 0.0) {
            return Err(SolverError::Breakdown { iteration: it, curvature: curv });
        }
        let alpha = rz / curv;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * sp[i];
        }
        let rel = norm(&r) / bn;
        if rel <= rtol {
            return Ok(SpdSolve { x, iterations: it, residual: rel, method: "pcg-jacobi" });
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::NotConverged { rtol, residual: norm(&r) / bn, iterations: max_iter })
}

/// Sparse Cholesky solve followed by a residual check.
pub fn cholesky_solve(s: &CsrMatrix, b: &[f64], rtol: f64) -> Result<SpdSolve, SolverError> {
    let n = b.len();
    let llt = s.to_faer().sp_cholesky(Side::Lower).map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
    let col = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    let sol = llt.solve(&col);
    let mut x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    let bn = norm(b);
    let resid = |x: &[f64]| {
        let sx = s.mul_vec(x);
        let r: Vec<f64> = b.iter().zip(&sx).map(|(a, c)| a - c).collect();
        (norm(&r) / if bn == 0.0 { 1.0 } else { bn }, r)
    };
    let (mut res, mut r) = resid(&x);
    let mut it = 0;
    while res > rtol && it < MAX_REFINEMENTS {
        let rc = Mat::<f64>::from_fn(n, 1, |i, _| r[i]);
        let dx = llt.solve(&rc);
        for i in 0..n {
            x[i] += dx[(i, 0)];
        }
        it += 1;
        (res, r) = resid(&x);
    }
    if !(res <= rtol) {
        return Err(SolverError::NotConverged { rtol, residual: res, iterations: it });
    }
    Ok(SpdSolve { x, iterations: it, residual: res, method: "sparse-cholesky" })
}

impl<'a> ReducedSystem<'a> {
    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    pub fn block_conditions(&self) -> impl Iterator<Item = f64> + '_ {
        self.blocks.iter().map(|b| b.cond)
    }

    /// `B Ž f − g` for stress data `f` and load `g`.
    pub fn rhs(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = g.iter().map(|v| -v).collect();
        for blk in &self.blocks {
            let fl = Mat::<f64>::from_fn(blk.stress.len(), 1, |i, _| f[blk.stress[i]]);
            let y = dense_mul(&blk.b, &dense_mul(&blk.z, &fl));
            for (a, &d) in blk.displacement.iter().enumerate() {
                out[d] += y[(a, 0)];
            }
        }
        out
    }

    /// Back-substitution of `σ` and `p` from `u`.
    pub fn recover_fields(&self, f: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut r = f.to_vec();
        for (ri, bu) in r.iter_mut().zip(self.system.b.mul_transpose_vec(u)) {
            *ri -= bu;
        }
        let mut sigma = vec![0.0; self.system.num_stress()];
        let mut p = vec![0.0; self.system.num_multiplier()];
        for blk in &self.blocks {
            let rl = Mat::<f64>::from_fn(blk.stress.len(), 1, |i, _| r[blk.stress[i]]);
            let s = dense_mul(&blk.z, &rl);
            let q = dense_mul(&blk.p_recovery, &rl);
            for (a, &d) in blk.stress.iter().enumerate() {
                sigma[d] = s[(a, 0)];
            }
            for (a, &d) in blk.multiplier.iter().enumerate() {
                p[d] = q[(a, 0)];
            }
        }
        (sigma, p)
    }

    /// Solves the SPD displacement system and recovers all fields. The
    /// residual reported is that of the monolithic corner-mode system.
    pub fn solve(&self, opts: &SolverOptions) -> Result<Solution, SolverError> {
        self.solve_with(&self.system.rhs_bc, &self.system.rhs_g, opts)
    }

    pub fn solve_with(&self, f: &[f64], g: &[f64], opts: &SolverOptions) -> Result<Solution, SolverError> {
        let t0 = Instant::now();
        let rhs = self.rhs(f, g);
        let dim = self.dim();
        let use_cholesky = match opts.spd_method {
            SpdMethod::Auto => dim <= CHOLESKY_LIMIT,
            SpdMethod::Cholesky => true,
            SpdMethod::Cg => false,
        };
        let spd = if use_cholesky {
            cholesky_solve(&self.s, &rhs, opts.rtol)?
        } else {
            conjugate_gradient(&self.s, &rhs, opts.rtol, 10 * dim.max(1))?
        };
        let (sigma, p) = self.recover_fields(f, &spd.x);
        let mut full_rhs = f.to_vec();
        full_rhs.extend_from_slice(g);
        full_rhs.extend(std::iter::repeat_n(0.0, self.system.num_multiplier()));
        let sol = Solution { sigma, u: spd.x, p, diagnostics: SolveDiagnostics::default() };
        let residual = relative_residual(self.system, &sol.stacked(), &full_rhs);
        let conds: Vec<f64> = self.block_conditions().collect();
        Ok(Solution {
            diagnostics: SolveDiagnostics {
                method: format!("vertex-elimination+{}", spd.method),
                dim,
                nnz: self.s.nnz(),
                residual,
                rhs_norm: norm(&full_rhs),
                iterations: spd.iterations,
                factor_seconds: self.build_seconds,
                solve_seconds: t0.elapsed().as_secs_f64(),
                num_blocks: self.blocks.len(),
                block_cond_min: conds.iter().copied().fold(f64::INFINITY, f64::min),
                block_cond_max: conds.iter().copied().fold(0.0, f64::max),
            },
            ..sol
        })
    }
}

/// Builds the reduced system and solves it.
pub fn solve_reduced(system: &SaddleSystem, opts: &SolverOptions) -> Result<Solution, SolverError> {
    build_reduced(system, opts.policy)?.solve(opts)
}

//! Dense estimates of the stability constants on small meshes.
//!
//! Norms: `‖τ‖²_div = ‖τ‖² + ‖div τ‖²` on the stress space, L² on the
//! displacement and on the multiplier (Frobenius norm of the skew matrix,
//! i.e. twice the squared norm of its axial vector). In corner mode the
//! forms `a` and `c` are replaced by their vertex-quadrature versions; the
//! norms are always computed exactly.

use faer::{Mat, Side};

use crate::assembly::{assemble, multiplier_mass, stress_mass, AssemblyOptions, ProblemSpec, QuadratureMode};
use crate::fespace::{build_spaces, Variant};
use crate::mesh::SimplicialMesh;

use super::VerificationError;

/// Largest total dimension accepted by [`estimate_infsup`].
pub const INFSUP_DIM_CAP: usize = 2500;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfSupReport {
    pub mode: QuadratureMode,
    /// `inf_{v,q} sup_τ (b(τ,v) + c(τ,q)) / (‖τ‖_div ‖(v,q)‖)`.
    pub beta_full: f64,
    /// `inf_q sup_{τ ∈ ker b} c(τ,q) / (‖τ‖_div ‖q‖)`.
    pub beta_c_kerb: f64,
    /// Coercivity of `a` on the kernel of `(b, c)` in the `‖·‖_div` norm.
    pub alpha: f64,
    pub dim: usize,
}

fn dense_sym(m: Mat<f64>) -> Mat<f64> {
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// `λ_min` of the pencil `(a, b)` with `b` SPD.
fn min_generalized_eig(a: &Mat<f64>, b: &Mat<f64>) -> Result<f64, VerificationError> {
    let eig = dense_sym(b.clone())
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| VerificationError::Linalg(format!("{e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let n = b.nrows();
    if (0..n).any(|i| !(s[i] > 0.0)) {
        return Err(VerificationError::Linalg("metric is not positive definite".into()));
    }
    // b^{-1/2} = U diag(s^{-1/2}) Uᵀ
    let scaled = Mat::<f64>::from_fn(n, n, |i, j| u[(i, j)] / s[j].sqrt());
    let half = &scaled * u.transpose();
    let h = dense_sym(&half * a * &half);
    let ev = h.self_adjoint_eigenvalues(Side::Lower).map_err(|e| VerificationError::Linalg(format!("{e:?}")))?;
    Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Orthonormal basis of the null space of `m` (rows × cols), by SVD.
fn kernel_basis(m: &Mat<f64>) -> Result<Mat<f64>, VerificationError> {
    let svd = m.svd().map_err(|e| VerificationError::Linalg(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let k = s.nrows();
    let smax = (0..k).map(|i| s[i].abs()).fold(0.0, f64::max);
    let rank = (0..k).filter(|&i| s[i].abs() > 1e-10 * smax).count();
    let v = svd.V();
    let n = m.ncols();
    Ok(Mat::from_fn(n, n - rank, |i, j| v[(i, rank + j)]))
}

/// Computes the three constants for material `(λ, μ)`.
pub fn estimate_infsup(
    mesh: &SimplicialMesh,
    mode: QuadratureMode,
    lame: (f64, f64),
) -> Result<InfSupReport, VerificationError> {
    let variant = match mode {
        QuadratureMode::Exact => Variant::Moment,
        QuadratureMode::Corner => Variant::Nodal,
    };
    let spaces = build_spaces(mesh, variant);
    let dim = spaces.total_dofs();
    if dim > INFSUP_DIM_CAP {
        return Err(VerificationError::DimensionCap { dim, cap: INFSUP_DIM_CAP });
    }
    let mass = stress_mass(mesh, &spaces, Default::default())?;
    let material = ProblemSpec::isotropic(lame.0, lame.1).map_err(VerificationError::Material)?;
    let forms = assemble(mesh, &spaces, &material, mode, &AssemblyOptions::default())?;

    let (ns, nu, nq) = (spaces.stress.num_dofs, spaces.displacement.num_dofs, spaces.multiplier.num_dofs);
    let b = forms.b.to_dense();
    let c = forms.c.to_dense();
    let a = dense_sym(forms.a.to_dense());

    // G_Σ = M + Bᵀ M_V⁻¹ B, with M_V = diag(|T|).
    let mv_inv: Vec<f64> = (0..nu).map(|i| 1.0 / mesh.cell_volume(i / 3)).collect();
    let bs = Mat::<f64>::from_fn(nu, ns, |i, j| b[(i, j)] * mv_inv[i]);
    let g_sigma = dense_sym(mass.to_dense() + b.transpose() * &bs);
    let m_q = dense_sym(multiplier_mass(mesh, &spaces)?.to_dense());

    let llt = g_sigma.llt(Side::Lower).map_err(|e| VerificationError::Linalg(format!("{e:?}")))?;
    use faer::linalg::solvers::Solve;

    // Full inf-sup: K G_Σ⁻¹ Kᵀ against blockdiag(M_V, M_Q).
    let k = Mat::<f64>::from_fn(nu + nq, ns, |i, j| if i < nu { b[(i, j)] } else { c[(i - nu, j)] });
    let x = llt.solve(k.transpose());
    let t = dense_sym(&k * &x);
    let g_y = Mat::<f64>::from_fn(nu + nq, nu + nq, |i, j| match (i < nu, j < nu) {
        (true, true) => {
            if i == j {
                mesh.cell_volume(i / 3)
            } else {
                0.0
            }
        }
        (false, false) => m_q[(i - nu, j - nu)],
        _ => 0.0,
    });
    let beta_full = min_generalized_eig(&t, &g_y)?.max(0.0).sqrt();

    // c restricted to ker b.
    let nb = kernel_basis(&b)?;
    let g_n = dense_sym(nb.transpose() * &g_sigma * &nb);
    let cn = &c * &nb;
    let llt_n = g_n.llt(Side::Lower).map_err(|e| VerificationError::Linalg(format!("{e:?}")))?;
    let tc = dense_sym(&cn * llt_n.solve(cn.transpose()));
    let beta_c_kerb = min_generalized_eig(&tc, &m_q)?.max(0.0).sqrt();

    // Coercivity of a on ker(b, c).
    let nk = kernel_basis(&k)?;
    let alpha = if nk.ncols() == 0 {
        f64::INFINITY
    } else {
        let ak = dense_sym(nk.transpose() * &a * &nk);
        let gk = dense_sym(nk.transpose() * &g_sigma * &nk);
        min_generalized_eig(&ak, &gk)?
    };

    Ok(InfSupReport { mode, beta_full, beta_c_kerb, alpha, dim })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoxExtent;

    #[test]
    fn constants_positive_on_single_cube() {
        let mesh = SimplicialMesh::generate_cube_mesh(1, BoxExtent::unit()).unwrap();
        for mode in [QuadratureMode::Exact, QuadratureMode::Corner] {
            let r = estimate_infsup(&mesh, mode, (1.0, 1.0)).unwrap();
            assert!(r.beta_full > 1e-3 && r.beta_c_kerb > 1e-3 && r.alpha > 1e-3, "{r:?}");
            assert_eq!(r.dim, 218);
        }
    }

    #[test]
    fn identity_compliance_coercivity_bounded_by_one() {
        let mesh = SimplicialMesh::generate_cube_mesh(1, BoxExtent::unit()).unwrap();
        let r = estimate_infsup(&mesh, QuadratureMode::Exact, (0.0, 0.5)).unwrap();
        assert!(r.alpha > 0.0 && r.alpha <= 1.0 + 1e-10, "{r:?}");
    }

    #[test]
    fn dimension_cap_enforced() {
        let mesh = SimplicialMesh::generate_cube_mesh(3, BoxExtent::unit()).unwrap();
        let err = estimate_infsup(&mesh, QuadratureMode::Exact, (1.0, 1.0)).unwrap_err();
        assert!(matches!(err, VerificationError::DimensionCap { cap: INFSUP_DIM_CAP, .. }));
    }
}

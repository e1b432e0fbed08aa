//! Consistency error of the vertex quadrature.
//!
//! With `K = [[A, Cᵀ], [C, 0]]` acting on stress × multiplier coefficients and
//! `D = K_exact − K_corner`, the probe reports for a smooth pair `ξ` and a
//! second smooth pair `ζ`:
//! - `dual = sup_{η_h} |ηᵀ D Π ξ| / ‖η_h‖₀`, the L² dual norm of the
//!   consistency error against arbitrary discrete test functions;
//! - `both = |Π ζᵀ D Π ξ|`, with both arguments interpolated.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::assembly::{assemble, multiplier_mass, stress_mass, AssemblyOptions, ProblemSpec, QuadratureMode, SaddleSystem};
use crate::fespace::{build_spaces, Variant};
use crate::mesh::SimplicialMesh;
use crate::solver::conjugate_gradient;
use crate::sparse::dot;
use crate::tensor::{axial, ComplianceField, Mat3, Vec3};

use super::VerificationError;

pub type MatFn = Arc<dyn Fn(&Vec3) -> Mat3 + Send + Sync>;
pub type VecFn = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;

/// A stress field and a multiplier given by its axial vector.
#[derive(Clone)]
pub struct ProbeField {
    pub sigma: MatFn,
    pub w: VecFn,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeResult {
    pub h: f64,
    pub dual: f64,
    pub both: f64,
}

fn apply_difference(exact: &SaddleSystem, corner: &SaddleSystem, s: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut top = exact.a.mul_vec(s);
    let ac = corner.a.mul_vec(s);
    let ce = exact.c.mul_transpose_vec(q);
    let cc = corner.c.mul_transpose_vec(q);
    for i in 0..top.len() {
        top[i] += ce[i] - ac[i] - cc[i];
    }
    let mut bot = exact.c.mul_vec(s);
    for (b, v) in bot.iter_mut().zip(corner.c.mul_vec(s)) {
        *b -= v;
    }
    (top, bot)
}

pub fn quadrature_error_probe(
    mesh: &SimplicialMesh,
    compliance: Arc<dyn ComplianceField>,
    xi: &ProbeField,
    zeta: &ProbeField,
    exact_degree: Option<usize>,
) -> Result<ProbeResult, VerificationError> {
    let spaces = build_spaces(mesh, Variant::Nodal);
    let problem = ProblemSpec::new(compliance);
    let opts = AssemblyOptions { exact_degree, ..Default::default() };
    let exact = assemble(mesh, &spaces, &problem, QuadratureMode::Exact, &opts)?;
    let corner = assemble(mesh, &spaces, &problem, QuadratureMode::Corner, &opts)?;

    let interp = |f: &ProbeField| {
        (spaces.interpolate_stress(mesh, |x| (f.sigma)(x)), spaces.interpolate_multiplier(mesh, |x| (f.w)(x)))
    };
    let (sx, qx) = interp(xi);
    let (sz, qz) = interp(zeta);
    let (rs, rq) = apply_difference(&exact, &corner, &sx, &qx);

    let both = (dot(&sz, &rs) + dot(&qz, &rq)).abs();

    let ms = stress_mass(mesh, &spaces, Default::default())?;
    let mq = multiplier_mass(mesh, &spaces)?;
    let ys = conjugate_gradient(&ms, &rs, 1e-12, 10 * rs.len())?;
    let yq = conjugate_gradient(&mq, &rq, 1e-12, 10 * rq.len())?;
    let dual = (dot(&rs, &ys.x) + dot(&rq, &yq.x)).max(0.0).sqrt();

    Ok(ProbeResult { h: mesh.quality().h_max, dual, both })
}

/// The smooth pair of the variable-coefficient trigonometric case.
pub fn varcoef_field() -> Result<(Arc<dyn ComplianceField>, ProbeField), VerificationError> {
    let case = super::cases::manufactured_case("trig_varcoef", None)?;
    let p = case.p.clone();
    Ok((case.compliance.clone(), ProbeField { sigma: case.sigma.clone(), w: Arc::new(move |x| axial(&p(x))) }))
}

/// A second smooth pair, unrelated to the first.
pub fn companion_field() -> ProbeField {
    ProbeField {
        sigma: Arc::new(|x| Mat3::from_fn(|i, j| (PI * (x[i] + 0.5 * x[j])).cos() + 0.3 * (i as f64 - j as f64) * x[(i + j) % 3])),
        w: Arc::new(|x| Vec3::new((PI * x[1]).sin(), x[0] * (PI * x[2]).cos(), (PI * x[0] * x[1]).sin())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoxExtent;
    use crate::tensor::IsotropicCompliance;

    #[test]
    fn constant_fields_give_zero_error() {
        let mesh = SimplicialMesh::generate_cube_mesh(2, BoxExtent::unit()).unwrap();
        let comp: Arc<dyn ComplianceField> = Arc::new(IsotropicCompliance::new(1.0, 1.0).unwrap());
        let s0 = Mat3([[1.0, 2.0, -1.0], [0.5, 3.0, 0.0], [1.5, -2.0, 0.7]]);
        let xi = ProbeField { sigma: Arc::new(move |_| s0), w: Arc::new(|_| Vec3::new(0.3, -1.0, 2.0)) };
        let r = quadrature_error_probe(&mesh, comp, &xi, &companion_field(), None).unwrap();
        assert!(r.dual < 1e-12, "{r:?}");
        assert!(r.both < 1e-12, "{r:?}");
    }

    #[test]
    fn smooth_fields_give_nonzero_error() {
        let mesh = SimplicialMesh::generate_cube_mesh(2, BoxExtent::unit()).unwrap();
        let (comp, xi) = varcoef_field().unwrap();
        let r = quadrature_error_probe(&mesh, comp, &xi, &companion_field(), None).unwrap();
        assert!(r.dual > 1e-3 && r.both > 1e-3 && r.dual.is_finite());
    }
}

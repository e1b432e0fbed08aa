//! Closed-form solutions used by the verification harness.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::assembly::ProblemSpec;
use crate::tensor::{skw, sym, ComplianceField, IsotropicCompliance, LameField, Mat3, Vec3};

use super::VerificationError;

type VecFn = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;
type MatFn = Arc<dyn Fn(&Vec3) -> Mat3 + Send + Sync>;

pub const CASE_NAMES: [&str; 4] = ["zero", "linear_patch", "trig", "trig_varcoef"];

/// Displacement gradient of the linear patch case.
pub const PATCH_GRADIENT: Mat3 = Mat3([[1.0, 2.0, 0.0], [0.0, -1.0, 3.0], [1.0, 0.0, 1.0]]);

#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: String,
    pub u: VecFn,
    pub grad_u: MatFn,
    pub sigma: MatFn,
    /// The skew multiplier `skw grad u`.
    pub p: MatFn,
    pub g: VecFn,
    /// Boundary displacement; `None` means homogeneous.
    pub u_d: Option<VecFn>,
    pub compliance: Arc<dyn ComplianceField>,
    /// Lamé pair when the material is homogeneous.
    pub lame: Option<(f64, f64)>,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase").field("name", &self.name).field("lame", &self.lame).finish()
    }
}

impl ManufacturedCase {
    pub fn problem(&self) -> ProblemSpec {
        let g = self.g.clone();
        let mut spec = ProblemSpec::new(self.compliance.clone()).with_body_load(move |x| g(x));
        if let Some(ud) = &self.u_d {
            let ud = ud.clone();
            spec = spec.with_boundary_displacement(move |x| ud(x));
        }
        spec
    }

    /// Largest violation of `A σ = sym grad u`, `p = skw grad u` and
    /// `div σ = g` (the latter by central differences with step `h`) over
    /// `points`.
    pub fn consistency_residual(&self, points: &[Vec3], h: f64) -> f64 {
        let mut worst = 0.0f64;
        for x in points {
            let grad = (self.grad_u)(x);
            let s = (self.sigma)(x);
            let a = self.compliance.at(0, x);
            worst = worst.max((a.apply(&s) - sym(&grad)).max_abs());
            worst = worst.max(((self.p)(x) - skw(&grad)).max_abs());
            let div = Vec3::from_fn(|i| {
                (0..3)
                    .map(|j| {
                        let e = Vec3::unit(j).scale(h);
                        ((self.sigma)(&(*x + e)).0[i][j] - (self.sigma)(&(*x - e)).0[i][j]) / (2.0 * h)
                    })
                    .sum()
            });
            worst = worst.max((div - (self.g)(x)).norm() / (self.g)(x).norm().max(1.0));
            // grad u against differences of u.
            let fd = Mat3::from_fn(|i, j| {
                let e = Vec3::unit(j).scale(h);
                ((self.u)(&(*x + e))[i] - (self.u)(&(*x - e))[i]) / (2.0 * h)
            });
            worst = worst.max((fd - grad).max_abs() / grad.max_abs().max(1.0));
        }
        worst
    }
}

/// Builds a named case. `material` overrides the Lamé pair of the
/// homogeneous cases (`zero`, `linear_patch`, `trig`); `trig_varcoef` has a
/// fixed variable shear modulus and ignores it.
pub fn manufactured_case(name: &str, material: Option<(f64, f64)>) -> Result<ManufacturedCase, VerificationError> {
    let (lambda, mu) = material.unwrap_or((1.0, 1.0));
    let homogeneous = || IsotropicCompliance::new(lambda, mu).map_err(VerificationError::Material);
    match name {
        "zero" => {
            let zero_v: VecFn = Arc::new(|_| Vec3::ZERO);
            let zero_m: MatFn = Arc::new(|_| Mat3::ZERO);
            Ok(ManufacturedCase {
                name: name.into(),
                u: zero_v.clone(),
                grad_u: zero_m.clone(),
                sigma: zero_m.clone(),
                p: zero_m,
                g: zero_v,
                u_d: None,
                compliance: Arc::new(homogeneous()?),
                lame: Some((lambda, mu)),
            })
        }
        "linear_patch" => {
            let b = PATCH_GRADIENT;
            let comp = homogeneous()?;
            let s = comp.stiffness(&sym(&b));
            let u: VecFn = Arc::new(move |x| b.mul_vec(x));
            Ok(ManufacturedCase {
                name: name.into(),
                u: u.clone(),
                grad_u: Arc::new(move |_| b),
                sigma: Arc::new(move |_| s),
                p: Arc::new(move |_| skw(&b)),
                g: Arc::new(|_| Vec3::ZERO),
                u_d: Some(u),
                compliance: Arc::new(comp),
                lame: Some((lambda, mu)),
            })
        }
        "trig" => {
            let comp = homogeneous()?;
            Ok(trig_case(name, Arc::new(comp), Some((lambda, mu)), move |_| (lambda, mu, Vec3::ZERO)))
        }
        "trig_varcoef" => {
            let mu_fn = |x: &Vec3| 1.0 + 0.5 * (PI * x[0]).sin();
            let comp = LameField::new(|_| 1.0, mu_fn);
            Ok(trig_case(name, Arc::new(comp), None, move |x| {
                (1.0, mu_fn(x), Vec3::new(0.5 * PI * (PI * x[0]).cos(), 0.0, 0.0))
            }))
        }
        other => Err(VerificationError::UnknownCase(other.into())),
    }
}

/// `s = sin πx sin πy sin πz`, its gradient and Hessian.
fn trig_scalar(x: &Vec3) -> (f64, Vec3, Mat3) {
    let sn = Vec3::from_fn(|i| (PI * x[i]).sin());
    let cs = Vec3::from_fn(|i| (PI * x[i]).cos());
    let s = sn[0] * sn[1] * sn[2];
    let grad = Vec3::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        PI * cs[i] * sn[j] * sn[k]
    });
    let hess = Mat3::from_fn(|i, j| {
        if i == j {
            -PI * PI * s
        } else {
            let k = 3 - i - j;
            PI * PI * cs[i] * cs[j] * sn[k]
        }
    });
    (s, grad, hess)
}

/// `u_i = s` for every component with Lamé data `(λ(x), μ(x), ∇μ(x))`
/// (λ constant).
fn trig_case(
    name: &str,
    compliance: Arc<dyn ComplianceField>,
    lame: Option<(f64, f64)>,
    params: impl Fn(&Vec3) -> (f64, f64, Vec3) + Send + Sync + Clone + 'static,
) -> ManufacturedCase {
    let grad_u = |x: &Vec3| {
        let (_, gs, _) = trig_scalar(x);
        Mat3::from_rows(gs, gs, gs)
    };
    let pa = params.clone();
    let sigma = move |x: &Vec3| {
        let (lambda, mu, _) = pa(x);
        let g = grad_u(x);
        sym(&g).scale(2.0 * mu) + Mat3::IDENTITY.scale(lambda * g.trace())
    };
    let pb = params;
    let load = move |x: &Vec3| {
        let (lambda, mu, dmu) = pb(x);
        let (_, gs, hs) = trig_scalar(x);
        let lap = hs.trace();
        let div_grad_tr = Vec3::from_fn(|i| (0..3).map(|j| hs.0[i][j]).sum());
        let eps = sym(&Mat3::from_rows(gs, gs, gs));
        Vec3::from_fn(|i| {
            let div_eps = 0.5 * (lap + div_grad_tr[i]);
            2.0 * mu * div_eps + 2.0 * eps.row(i).dot(&dmu) + lambda * div_grad_tr[i]
        })
    };
    ManufacturedCase {
        name: name.into(),
        u: Arc::new(|x| {
            let (s, _, _) = trig_scalar(x);
            Vec3::new(s, s, s)
        }),
        grad_u: Arc::new(grad_u),
        sigma: Arc::new(sigma),
        p: Arc::new(move |x| skw(&grad_u(x))),
        g: Arc::new(load),
        u_d: None,
        compliance,
        lame,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PROBE: Vec3 = Vec3::new(0.3, 0.55, 0.8);

    #[test]
    fn trig_reference_values() {
        let c = manufactured_case("trig", None).unwrap();
        let q = Vec3::new(0.25, 0.25, 0.25);
        assert!(((c.sigma)(&q).0[0][0] - 5.5536036726979578).abs() < 1e-12);
        let g = (c.g)(&PROBE);
        let g_ref = [-33.515297079386046, -22.223257601500504, -30.427404510099800];
        let s_ref = [
            0.95150788676934953,
            0.83833060803432921,
            -0.95885329245997918,
            0.83833060803432921,
            -1.6599531819419900,
            -2.2645838268156490,
            -0.95885329245997918,
            -2.2645838268156490,
            -5.2543209829306068,
        ];
        for i in 0..3 {
            assert!((g[i] - g_ref[i]).abs() < 1e-11);
        }
        let s = (c.sigma)(&PROBE);
        for k in 0..9 {
            assert!((s.0[k / 3][k % 3] - s_ref[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn varcoef_reference_values() {
        let c = manufactured_case("trig_varcoef", None).unwrap();
        let q = Vec3::new(0.25, 0.25, 0.25);
        assert!(((c.sigma)(&q).0[0][0] - 6.3390018360954061).abs() < 1e-12);
        let g = (c.g)(&PROBE);
        let g_ref = [-41.126961063920297, -28.756627766473090, -40.279421811775144];
        let s_ref = [
            1.8187988373555861,
            1.1774424624365568,
            -1.3467175968162266,
            1.1774424624365568,
            -1.8490204237237714,
            -3.1806272273559053,
            -1.3467175968162266,
            -3.1806272273559053,
            -6.8973405422293381,
        ];
        for i in 0..3 {
            assert!((g[i] - g_ref[i]).abs() < 1e-11);
        }
        let s = (c.sigma)(&PROBE);
        for k in 0..9 {
            assert!((s.0[k / 3][k % 3] - s_ref[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn patch_stress() {
        let c = manufactured_case("linear_patch", None).unwrap();
        let expected = sym(&PATCH_GRADIENT).scale(2.0) + Mat3::IDENTITY;
        assert!(((c.sigma)(&PROBE) - expected).max_abs() < 1e-15);
    }

    #[test]
    fn all_cases_consistent() {
        let pts = [PROBE, Vec3::new(0.1, 0.9, 0.4), Vec3::new(0.7, 0.2, 0.35)];
        for name in CASE_NAMES {
            let c = manufactured_case(name, None).unwrap();
            assert!(c.consistency_residual(&pts, 1e-4) < 1e-6, "{name}");
        }
        assert!(manufactured_case("linear_patch", Some((2.5, 0.3))).unwrap().consistency_residual(&pts, 1e-4) < 1e-6);
        assert!(matches!(manufactured_case("nope", None), Err(VerificationError::UnknownCase(_))));
    }
}

//! Quadrature on the reference tetrahedron and triangle.
//!
//! Rules are expressed in barycentric coordinates with weights normalized to
//! sum to one; callers scale by the simplex measure. Degrees 3..=6 on the
//! tetrahedron (and the facet rules) are Stroud conical products of
//! Gauss–Jacobi rules, so all weights are positive.

use std::sync::OnceLock;

use faer::{Mat, Side};
use thiserror::Error;

use crate::tensor::Vec3;

pub const MAX_DEGREE: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadratureError {
    #[error("unsupported quadrature degree {0} (supported: 1..={MAX_DEGREE})")]
    UnsupportedDegree(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    /// Barycentric coordinates of each point (4 entries on a tetrahedron,
    /// 3 on a triangle).
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points.iter().map(|p| p.as_slice()).zip(self.weights.iter().copied())
    }

    /// Integrates `f` over a simplex with the given vertices. `f` receives the
    /// barycentric coordinates and the physical point.
    pub fn integrate(&self, vertices: &[Vec3], measure: f64, mut f: impl FnMut(&[f64], &Vec3) -> f64) -> f64 {
        let mut s = 0.0;
        for (bary, w) in self.iter() {
            let x = bary_to_point(vertices, bary);
            s += w * f(bary, &x);
        }
        s * measure
    }
}

pub fn bary_to_point(vertices: &[Vec3], bary: &[f64]) -> Vec3 {
    let mut x = Vec3::ZERO;
    for (v, &l) in vertices.iter().zip(bary) {
        x += v.scale(l);
    }
    x
}

/// Gauss–Jacobi nodes and weights on [0, 1] for the weight `(1 − s)^alpha`,
/// with weights normalized to sum to one. Golub–Welsch on the Jacobi matrix.
fn gauss_jacobi_unit(m: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    // Jacobi polynomials on [-1, 1] with weight (1 - x)^alpha (beta = 0).
    let beta = 0.0;
    let ab = alpha + beta;
    let diag = |k: usize| {
        let k = k as f64;
        if k == 0.0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
        }
    };
    let off = |k: usize| {
        let k = k as f64;
        let num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
        let den = (2.0 * k + ab).powi(2) * (2.0 * k + ab + 1.0) * (2.0 * k + ab - 1.0);
        (num / den).sqrt()
    };
    let jm = Mat::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            diag(i)
        } else if i == j + 1 {
            off(i)
        } else if j == i + 1 {
            off(j)
        } else {
            0.0
        }
    });
    let eig = jm.self_adjoint_eigen(Side::Lower).expect("tridiagonal eigensolve");
    let vals = eig.S().column_vector();
    let vecs = eig.U();
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for k in 0..m {
        let x = vals[k];
        nodes.push(0.5 * (x + 1.0));
        weights.push(vecs[(0, k)] * vecs[(0, k)]);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    (nodes, weights)
}

/// Conical product rule on the tetrahedron with `m` points per direction,
/// exact through degree `2m − 1`.
fn conical_tet(m: usize, degree: usize) -> QuadratureRule {
    let (x1, w1) = gauss_jacobi_unit(m, 2.0);
    let (x2, w2) = gauss_jacobi_unit(m, 1.0);
    let (x3, w3) = gauss_jacobi_unit(m, 0.0);
    let mut points = Vec::with_capacity(m * m * m);
    let mut weights = Vec::with_capacity(m * m * m);
    for (a, wa) in x1.iter().zip(&w1) {
        for (b, wb) in x2.iter().zip(&w2) {
            for (c, wc) in x3.iter().zip(&w3) {
                let x = *a;
                let y = b * (1.0 - a);
                let z = c * (1.0 - a) * (1.0 - b);
                points.push(vec![1.0 - x - y - z, x, y, z]);
                weights.push(wa * wb * wc);
            }
        }
    }
    QuadratureRule { points, weights, degree }
}

fn conical_tri(m: usize, degree: usize) -> QuadratureRule {
    let (x1, w1) = gauss_jacobi_unit(m, 1.0);
    let (x2, w2) = gauss_jacobi_unit(m, 0.0);
    let mut points = Vec::with_capacity(m * m);
    let mut weights = Vec::with_capacity(m * m);
    for (a, wa) in x1.iter().zip(&w1) {
        for (b, wb) in x2.iter().zip(&w2) {
            let x = *a;
            let y = b * (1.0 - a);
            points.push(vec![1.0 - x - y, x, y]);
            weights.push(wa * wb);
        }
    }
    QuadratureRule { points, weights, degree }
}

fn build_tet(degree: usize) -> QuadratureRule {
    match degree {
        1 => QuadratureRule { points: vec![vec![0.25; 4]], weights: vec![1.0], degree: 1 },
        2 => {
            let a = (5.0 + 3.0 * 5f64.sqrt()) / 20.0;
            let b = (5.0 - 5f64.sqrt()) / 20.0;
            let points = (0..4)
                .map(|k| (0..4).map(|j| if j == k { a } else { b }).collect())
                .collect();
            QuadratureRule { points, weights: vec![0.25; 4], degree: 2 }
        }
        d => conical_tet((d + 2) / 2, d),
    }
}

/// Positive-weight rule on the reference tetrahedron exact for polynomials of
/// total degree ≤ `degree`.
pub fn simplex_rule(degree: usize) -> Result<&'static QuadratureRule, QuadratureError> {
    static RULES: [OnceLock<QuadratureRule>; MAX_DEGREE] = [const { OnceLock::new() }; MAX_DEGREE];
    if degree == 0 || degree > MAX_DEGREE {
        return Err(QuadratureError::UnsupportedDegree(degree));
    }
    Ok(RULES[degree - 1].get_or_init(|| build_tet(degree)))
}

/// Positive-weight rule on the reference triangle.
pub fn triangle_rule(degree: usize) -> Result<&'static QuadratureRule, QuadratureError> {
    static RULES: [OnceLock<QuadratureRule>; MAX_DEGREE] = [const { OnceLock::new() }; MAX_DEGREE];
    if degree == 0 || degree > MAX_DEGREE {
        return Err(QuadratureError::UnsupportedDegree(degree));
    }
    Ok(RULES[degree - 1].get_or_init(|| conical_tri((degree + 2) / 2, degree)))
}

/// Gauss–Legendre rule on the unit interval with barycentric points
/// `(1 − s, s)`, exact through `degree`.
pub fn line_rule(degree: usize) -> Result<&'static QuadratureRule, QuadratureError> {
    static RULES: [OnceLock<QuadratureRule>; MAX_DEGREE] = [const { OnceLock::new() }; MAX_DEGREE];
    if degree == 0 || degree > MAX_DEGREE {
        return Err(QuadratureError::UnsupportedDegree(degree));
    }
    Ok(RULES[degree - 1].get_or_init(|| {
        let (x, w) = gauss_jacobi_unit((degree + 2) / 2, 0.0);
        QuadratureRule { points: x.iter().map(|s| vec![1.0 - s, *s]).collect(), weights: w, degree }
    }))
}

/// Vertex ("corner") rule: `measure/4 · Σ_v f(v)`, exact on linears.
pub fn corner_quadrature(vertices: &[Vec3; 4], volume: f64, mut f: impl FnMut(&Vec3) -> f64) -> f64 {
    0.25 * volume * vertices.iter().map(&mut f).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// ∫_T x^a y^b z^c over the reference tetrahedron.
    fn monomial_tet(a: u32, b: u32, c: u32) -> f64 {
        factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)
    }

    fn monomial_tri(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    fn reference() -> [Vec3; 4] {
        [Vec3::ZERO, Vec3::unit(0), Vec3::unit(1), Vec3::unit(2)]
    }

    #[test]
    fn tet_rules_exact_on_monomials() {
        let verts = reference();
        for degree in 1..=MAX_DEGREE {
            let rule = simplex_rule(degree).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    for c in 0..=(degree as u32 - a - b) {
                        let q = rule.integrate(&verts, 1.0 / 6.0, |_, x| {
                            x[0].powi(a as i32) * x[1].powi(b as i32) * x[2].powi(c as i32)
                        });
                        let exact = monomial_tet(a, b, c);
                        assert!((q - exact).abs() < 1e-14, "degree {degree}: x^{a} y^{b} z^{c}: {q} vs {exact}");
                    }
                }
            }
        }
    }

    #[test]
    fn named_values() {
        let verts = reference();
        let r1 = simplex_rule(1).unwrap();
        assert!((r1.integrate(&verts, 1.0 / 6.0, |_, _| 1.0) - 1.0 / 6.0).abs() < 1e-16);
        assert!((r1.integrate(&verts, 1.0 / 6.0, |_, x| x[0]) - 1.0 / 24.0).abs() < 1e-16);
        let r2 = simplex_rule(2).unwrap();
        assert!((r2.integrate(&verts, 1.0 / 6.0, |_, x| x[0] * x[0]) - 1.0 / 60.0).abs() < 1e-15);
        assert!((r2.integrate(&verts, 1.0 / 6.0, |_, x| x[0] * x[1]) - 1.0 / 120.0).abs() < 1e-15);
        let r6 = simplex_rule(6).unwrap();
        assert!((r6.integrate(&verts, 1.0 / 6.0, |_, x| x[0].powi(6)) - 1.0 / 504.0).abs() < 1e-15);
    }

    #[test]
    fn unsupported_degrees() {
        assert_eq!(simplex_rule(0), Err(QuadratureError::UnsupportedDegree(0)));
        assert_eq!(simplex_rule(7), Err(QuadratureError::UnsupportedDegree(7)));
    }

    #[test]
    fn triangle_rules_exact() {
        let verts = [Vec3::ZERO, Vec3::unit(0), Vec3::unit(1)];
        for degree in 1..=MAX_DEGREE {
            let rule = triangle_rule(degree).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let q = rule.integrate(&verts, 0.5, |_, x| x[0].powi(a as i32) * x[1].powi(b as i32));
                    assert!((q - monomial_tri(a, b)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn line_rules_exact() {
        let verts = [Vec3::ZERO, Vec3::unit(0)];
        for degree in 1..=MAX_DEGREE {
            let rule = line_rule(degree).unwrap();
            for a in 0..=degree as i32 {
                let q = rule.integrate(&verts, 1.0, |_, x| x[0].powi(a));
                assert!((q - 1.0 / (a + 1) as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn corner_rule() {
        let verts = reference();
        let vol = 1.0 / 6.0;
        assert!((corner_quadrature(&verts, vol, |_| 1.0) - 1.0 / 6.0).abs() < 1e-16);
        assert!((corner_quadrature(&verts, vol, |x| x[0]) - 1.0 / 24.0).abs() < 1e-16);
        // Not exact on quadratics: 1/24 versus the true 1/60.
        let q = corner_quadrature(&verts, vol, |x| x[0] * x[0]);
        assert!((q - 1.0 / 24.0).abs() < 1e-16);
        assert!((q - monomial_tet(2, 0, 0)).abs() > 1e-2);
    }
}

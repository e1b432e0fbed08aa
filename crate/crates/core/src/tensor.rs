//! Pointwise 3x3 matrix and vector algebra.
//!
//! Matrix fields are differentiated row-wise throughout the crate: the
//! divergence of a matrix field is the vector of row divergences and the curl
//! is the matrix whose rows are the curls of the rows. The operators here
//! (`sym`, `skw`, `vec_of`/`skew_of`, `xi`/`xi_inv`) and the isotropic
//! compliance law are the only places the crate touches tensor algebra
//! directly.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

/// Relative tolerance used by [`vec_of`] to decide that a matrix is skew.
pub const SKEW_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("matrix is not skew-symmetric: |sym M| = {sym_norm:e}, |M| = {norm:e}")]
    NotSkew { sym_norm: f64, norm: f64 },
    #[error("invalid Lamé parameters lambda = {lambda}, mu = {mu} (need mu > 0, 3 lambda + 2 mu > 0)")]
    InvalidLame { lambda: f64, mu: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn unit(i: usize) -> Self {
        let mut v = [0.0; 3];
        v[i] = 1.0;
        Vec3(v)
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(&self, other: &Vec3) -> Vec3 {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = other.0;
        Vec3([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn scale(&self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    /// Outer product `self ⊗ other`.
    pub fn outer(&self, other: &Vec3) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[i] * other.0[j])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3(v)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        for i in 0..3 {
            self.0[i] += o.0[i];
        }
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        for i in 0..3 {
            self.0[i] -= o.0[i];
        }
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

/// A 3x3 real matrix stored row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = f(i, j);
            }
        }
        Mat3(m)
    }

    pub fn from_rows(r0: Vec3, r1: Vec3, r2: Vec3) -> Self {
        Mat3([r0.0, r1.0, r2.0])
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Mat3::from_rows(c0, c1, c2).transpose()
    }

    /// Matrix whose only nonzero row is `row`, placed at index `i`.
    pub fn with_row(i: usize, row: Vec3) -> Self {
        let mut m = Mat3::ZERO;
        m.0[i] = row.0;
        m
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3(self.0[i])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    pub fn transpose(&self) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[j][i])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Frobenius inner product `self : other`.
    pub fn ddot(&self, other: &Mat3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.0[i][j] * other.0[i][j];
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[i][j] * s)
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        Vec3([self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v)])
    }

    pub fn mul_mat(&self, other: &Mat3) -> Mat3 {
        Mat3::from_fn(|i, j| (0..3).map(|k| self.0[i][k] * other.0[k][j]).sum())
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse by cofactors; `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Mat3> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let c0 = self.row(1).cross(&self.row(2));
        let c1 = self.row(2).cross(&self.row(0));
        let c2 = self.row(0).cross(&self.row(1));
        Some(Mat3::from_cols(c0, c1, c2).scale(1.0 / d))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[i][j] + o.0[i][j])
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, o: Mat3) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[i][j] - o.0[i][j])
    }
}

impl AddAssign for Mat3 {
    fn add_assign(&mut self, o: Mat3) {
        *self = *self + o;
    }
}

impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, s: f64) -> Mat3 {
        self.scale(s)
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        self.mul_vec(&v)
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        self.mul_mat(&o)
    }
}

pub fn sym(m: &Mat3) -> Mat3 {
    Mat3::from_fn(|i, j| 0.5 * (m.0[i][j] + m.0[j][i]))
}

pub fn skw(m: &Mat3) -> Mat3 {
    Mat3::from_fn(|i, j| 0.5 * (m.0[i][j] - m.0[j][i]))
}

/// The skew matrix `K` with `K b = w × b`.
pub fn skew_of(w: &Vec3) -> Mat3 {
    let [a, b, c] = w.0;
    Mat3([[0.0, -c, b], [c, 0.0, -a], [-b, a, 0.0]])
}

/// Axial vector of a skew matrix. Rejects inputs whose symmetric part exceeds
/// [`SKEW_TOLERANCE`] relative to the matrix norm.
pub fn vec_of(k: &Mat3) -> Result<Vec3, TensorError> {
    let norm = k.norm();
    let sym_norm = sym(k).norm();
    if sym_norm > SKEW_TOLERANCE * norm {
        return Err(TensorError::NotSkew { sym_norm, norm });
    }
    Ok(axial(k))
}

/// Axial vector of the skew part, without a skewness check.
pub fn axial(k: &Mat3) -> Vec3 {
    Vec3([
        0.5 * (k.0[2][1] - k.0[1][2]),
        0.5 * (k.0[0][2] - k.0[2][0]),
        0.5 * (k.0[1][0] - k.0[0][1]),
    ])
}

/// Axial-vector parameterization of a skew matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SkewParam {
    pub w: Vec3,
}

impl SkewParam {
    pub fn to_matrix(&self) -> Mat3 {
        skew_of(&self.w)
    }

    pub fn from_matrix(k: &Mat3) -> Result<Self, TensorError> {
        vec_of(k).map(|w| SkewParam { w })
    }
}

/// `Ξ M = Mᵀ − tr(M) I`.
pub fn xi(m: &Mat3) -> Mat3 {
    m.transpose() - Mat3::IDENTITY.scale(m.trace())
}

/// `Ξ⁻¹ M = Mᵀ − ½ tr(M) I`.
pub fn xi_inv(m: &Mat3) -> Mat3 {
    m.transpose() - Mat3::IDENTITY.scale(0.5 * m.trace())
}

/// Isotropic compliance with Lamé parameters, applied verbatim to all of 𝕄.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsotropicCompliance {
    pub lambda: f64,
    pub mu: f64,
}

impl IsotropicCompliance {
    pub fn new(lambda: f64, mu: f64) -> Result<Self, TensorError> {
        if !(mu > 0.0) || !(3.0 * lambda + 2.0 * mu > 0.0) || !lambda.is_finite() || !mu.is_finite() {
            return Err(TensorError::InvalidLame { lambda, mu });
        }
        Ok(IsotropicCompliance { lambda, mu })
    }

    /// `A M = (M − λ/(3λ+2μ) tr(M) I) / (2μ)`.
    pub fn apply(&self, m: &Mat3) -> Mat3 {
        let k = self.lambda / (3.0 * self.lambda + 2.0 * self.mu);
        (*m - Mat3::IDENTITY.scale(k * m.trace())).scale(0.5 / self.mu)
    }

    /// `A M : N` without materializing `A M`.
    pub fn energy(&self, m: &Mat3, n: &Mat3) -> f64 {
        let k = self.lambda / (3.0 * self.lambda + 2.0 * self.mu);
        (m.ddot(n) - k * m.trace() * n.trace()) * 0.5 / self.mu
    }

    /// Hooke's law `2μ M + λ tr(M) I`, the inverse of [`apply`](Self::apply).
    pub fn stiffness(&self, m: &Mat3) -> Mat3 {
        m.scale(2.0 * self.mu) + Mat3::IDENTITY.scale(self.lambda * m.trace())
    }

    /// Eigenvalues of the induced map on 𝕄: `1/(2μ)` (deviatoric and skew
    /// directions, multiplicity 8) and `1/(3λ+2μ)` (spherical direction).
    pub fn eigenvalues(&self) -> (f64, f64) {
        (0.5 / self.mu, 1.0 / (3.0 * self.lambda + 2.0 * self.mu))
    }
}

/// Pointwise compliance field. Evaluated cell-side so that coefficients may
/// jump across facets.
pub trait ComplianceField: Send + Sync {
    fn at(&self, cell: usize, x: &Vec3) -> IsotropicCompliance;

    fn is_constant(&self) -> bool {
        false
    }
}

impl ComplianceField for IsotropicCompliance {
    fn at(&self, _cell: usize, _x: &Vec3) -> IsotropicCompliance {
        *self
    }

    fn is_constant(&self) -> bool {
        true
    }
}

/// Spatially varying Lamé parameters given by closures of position.
pub struct LameField {
    lambda: Box<dyn Fn(&Vec3) -> f64 + Send + Sync>,
    mu: Box<dyn Fn(&Vec3) -> f64 + Send + Sync>,
}

impl LameField {
    pub fn new(
        lambda: impl Fn(&Vec3) -> f64 + Send + Sync + 'static,
        mu: impl Fn(&Vec3) -> f64 + Send + Sync + 'static,
    ) -> Self {
        LameField { lambda: Box::new(lambda), mu: Box::new(mu) }
    }
}

impl ComplianceField for LameField {
    fn at(&self, _cell: usize, x: &Vec3) -> IsotropicCompliance {
        IsotropicCompliance { lambda: (self.lambda)(x), mu: (self.mu)(x) }
    }
}

impl std::fmt::Debug for LameField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("LameField")
    }
}

pub fn apply_compliance(field: &dyn ComplianceField, m: &Mat3, cell: usize, x: &Vec3) -> Mat3 {
    field.at(cell, x).apply(m)
}

/// A matrix field with exactly known first derivatives.
pub trait MatField {
    fn eval(&self, x: &Vec3) -> Mat3;
    /// `∂_k M` for `k = 0, 1, 2`.
    fn partials(&self, x: &Vec3) -> [Mat3; 3];
}

/// Polynomial matrix field: each entry is a sum of `coef · x^a y^b z^c` terms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolyMatField {
    pub entries: [[Vec<(f64, [u32; 3])>; 3]; 3],
}

fn monomial(x: &Vec3, e: [u32; 3]) -> f64 {
    x.0[0].powi(e[0] as i32) * x.0[1].powi(e[1] as i32) * x.0[2].powi(e[2] as i32)
}

impl PolyMatField {
    pub fn constant(m: Mat3) -> Self {
        let mut f = PolyMatField::default();
        for i in 0..3 {
            for j in 0..3 {
                f.entries[i][j].push((m.0[i][j], [0, 0, 0]));
            }
        }
        f
    }

    pub fn add_term(&mut self, i: usize, j: usize, coef: f64, exps: [u32; 3]) {
        self.entries[i][j].push((coef, exps));
    }
}

impl MatField for PolyMatField {
    fn eval(&self, x: &Vec3) -> Mat3 {
        Mat3::from_fn(|i, j| self.entries[i][j].iter().map(|&(c, e)| c * monomial(x, e)).sum())
    }

    fn partials(&self, x: &Vec3) -> [Mat3; 3] {
        let d = |k: usize| {
            Mat3::from_fn(|i, j| {
                self.entries[i][j]
                    .iter()
                    .filter(|(_, e)| e[k] > 0)
                    .map(|&(c, e)| {
                        let mut de = e;
                        de[k] -= 1;
                        c * e[k] as f64 * monomial(x, de)
                    })
                    .sum()
            })
        };
        [d(0), d(1), d(2)]
    }
}

/// Row-wise divergence from partial derivatives.
pub fn div_from_partials(p: &[Mat3; 3]) -> Vec3 {
    Vec3::from_fn(|i| p[0].0[i][0] + p[1].0[i][1] + p[2].0[i][2])
}

/// Row-wise curl from partial derivatives.
pub fn curl_from_partials(p: &[Mat3; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| {
        let (a, b) = ((j + 1) % 3, (j + 2) % 3);
        p[a].0[i][b] - p[b].0[i][a]
    })
}

impl Vec3 {
    pub fn from_fn(f: impl Fn(usize) -> f64) -> Self {
        Vec3([f(0), f(1), f(2)])
    }
}

/// Curl of a vector field from its partial derivatives `∂_k w`.
fn curl_vec_from_partials(p: &[Vec3; 3]) -> Vec3 {
    Vec3::from_fn(|j| {
        let (a, b) = ((j + 1) % 3, (j + 2) % 3);
        p[a].0[b] - p[b].0[a]
    })
}

/// Residuals of `div skw M = −curl vec skw M` and `div Ξ M = 2 vec skw curl M`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdentityResiduals {
    pub div_skw: f64,
    pub div_xi: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.div_skw.max(self.div_xi)
    }
}

fn central_partials(f: &dyn Fn(&Vec3) -> Mat3, x: &Vec3, h: f64) -> [Mat3; 3] {
    let d = |k: usize| {
        let e = Vec3::unit(k).scale(h);
        (f(&(*x + e)) - f(&(*x - e))).scale(0.5 / h)
    };
    [d(0), d(1), d(2)]
}

/// Checks the two differential identities at `probes`. The left-hand sides are
/// computed by central differences of the composed fields with step `h_fd`;
/// the right-hand sides use the field's exact derivatives. The residual
/// therefore measures the O(h_fd²) truncation error of the difference
/// quotients and vanishes for fields of degree ≤ 2.
pub fn check_differential_identities(
    field: &dyn MatField,
    probes: &[Vec3],
    h_fd: f64,
) -> IdentityResiduals {
    let mut out = IdentityResiduals::default();
    for x in probes {
        let exact = field.partials(x);

        let skw_field = |y: &Vec3| skw(&field.eval(y));
        let lhs3 = div_from_partials(&central_partials(&skw_field, x, h_fd));
        let dw = [axial(&skw(&exact[0])), axial(&skw(&exact[1])), axial(&skw(&exact[2]))];
        let rhs3 = -curl_vec_from_partials(&dw);
        out.div_skw = out.div_skw.max((lhs3 - rhs3).norm());

        let xi_field = |y: &Vec3| xi(&field.eval(y));
        let lhs4 = div_from_partials(&central_partials(&xi_field, x, h_fd));
        let rhs4 = axial(&skw(&curl_from_partials(&exact))).scale(2.0);
        out.div_xi = out.div_xi.max((lhs4 - rhs4).norm());
    }
    out
}

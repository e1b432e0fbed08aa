//! Lowest-order discrete spaces for the weakly symmetric stress element.
//!
//! - Stress: matrix fields whose rows are H(div)-conforming full linears,
//!   9 DOFs per facet (3 vertices × 3 rows).
//! - Displacement: cellwise-constant vectors, 3 DOFs per cell.
//! - Multiplier: skew fields stored through their axial vector `w`, an
//!   H(curl)-conforming full linear with 2 DOFs per edge.
//!
//! Global numbering follows the mesh: stress DOF `9 f + 3 s + i` is row `i`
//! at the `s`-th (ascending) vertex of facet `f`; multiplier DOF `2 e + s` sits
//! at endpoint `s` of edge `e`; displacement DOF `3 c + k`.
//!
//! The nodal variant uses point values `(σ n_f)_i(v)` and `(w · t_e)(v)`. The
//! moment variant uses the normalized moments against the barycentric
//! coordinate of each entity vertex, `|f|⁻¹ ∫_f (σ n_f)_i λ_v` and
//! `|e|⁻¹ ∫_e (w · t_e) λ_v`. Both span the same space; the change of basis is
//! the entity's P1 mass matrix.

use crate::mesh::{SimplicialMesh, LOCAL_EDGES};
use crate::quadrature::{bary_to_point, line_rule, simplex_rule, triangle_rule, QuadratureError};
use crate::tensor::{skew_of, Mat3, Vec3};

/// Polynomial order parameter of the family; only `0` is implemented.
pub const ORDER: usize = 0;

pub const STRESS_LOCAL: usize = 36;
pub const MULT_LOCAL: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    Moment,
    Nodal,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Moment => "moment",
            Variant::Nodal => "nodal",
        })
    }
}

/// Inverse of the normalized P1 mass matrix on a triangle, `12 δ − 3`.
const FACET_MINV: [[f64; 3]; 3] = [[9.0, -3.0, -3.0], [-3.0, 9.0, -3.0], [-3.0, -3.0, 9.0]];
/// Normalized P1 mass matrix on a triangle, `(1 + δ) / 12`.
const FACET_M: [[f64; 3]; 3] = [[2.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0], [1.0 / 12.0, 2.0 / 12.0, 1.0 / 12.0], [1.0 / 12.0, 1.0 / 12.0, 2.0 / 12.0]];
/// Inverse of the normalized P1 mass matrix on an edge, `6 δ − 2`.
const EDGE_MINV: [[f64; 2]; 2] = [[4.0, -2.0], [-2.0, 4.0]];
const EDGE_M: [[f64; 2]; 2] = [[2.0 / 6.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 6.0]];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StressSpace {
    pub variant: Variant,
    pub num_dofs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DisplacementSpace {
    pub num_dofs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MultiplierSpace {
    pub variant: Variant,
    pub num_dofs: usize,
}

/// Per-cell nodal basis data. Stress function `(k, s, i)` is
/// `λ_a(x) · dir` in row `i`, where `a` is the local vertex of slot `s` of
/// local facet `k`; multiplier function `(j, s)` is `λ_a(x) · dir`.
#[derive(Clone, Debug)]
struct CellBasis {
    stress_vertex: [[usize; 3]; 4],
    stress_dir: [[Vec3; 3]; 4],
    mult_vertex: [[usize; 2]; 6],
    mult_dir: [[Vec3; 2]; 6],
    grad_lambda: [Vec3; 4],
}

/// Global numbering tables and the cell-wise basis data they index.
#[derive(Clone, Debug)]
pub struct DofMap {
    stress: Vec<[usize; STRESS_LOCAL]>,
    mult: Vec<[usize; MULT_LOCAL]>,
    stress_vertex: Vec<usize>,
    mult_vertex: Vec<usize>,
    cells: Vec<CellBasis>,
}

impl DofMap {
    pub fn stress_dofs(&self, cell: usize) -> &[usize; STRESS_LOCAL] {
        &self.stress[cell]
    }

    pub fn multiplier_dofs(&self, cell: usize) -> &[usize; MULT_LOCAL] {
        &self.mult[cell]
    }

    pub fn displacement_dofs(&self, cell: usize) -> [usize; 3] {
        [3 * cell, 3 * cell + 1, 3 * cell + 2]
    }

    /// Vertex carrying a stress DOF (its nodal point).
    pub fn stress_dof_vertex(&self, dof: usize) -> usize {
        self.stress_vertex[dof]
    }

    pub fn multiplier_dof_vertex(&self, dof: usize) -> usize {
        self.mult_vertex[dof]
    }

    pub fn stress_dof_vertices(&self) -> &[usize] {
        &self.stress_vertex
    }

    pub fn multiplier_dof_vertices(&self) -> &[usize] {
        &self.mult_vertex
    }
}

#[derive(Clone, Debug)]
pub struct Spaces {
    pub order: usize,
    pub stress: StressSpace,
    pub displacement: DisplacementSpace,
    pub multiplier: MultiplierSpace,
    pub dofmap: DofMap,
}

/// Values of the 36 local stress basis functions at a point.
#[derive(Clone, Debug)]
pub struct StressBasisValues {
    pub dofs: [usize; STRESS_LOCAL],
    pub values: [Mat3; STRESS_LOCAL],
    /// Row-wise divergence, constant on the cell.
    pub divs: [Vec3; STRESS_LOCAL],
}

/// Values of the 12 local multiplier basis functions (axial-vector proxy).
#[derive(Clone, Debug)]
pub struct MultiplierBasisValues {
    pub dofs: [usize; MULT_LOCAL],
    pub values: [Vec3; MULT_LOCAL],
    pub curls: [Vec3; MULT_LOCAL],
}

/// Compact stress basis value: a single nonzero row.
#[derive(Clone, Copy, Debug, Default)]
pub struct RowValue {
    pub row: usize,
    pub vec: Vec3,
}

impl RowValue {
    pub fn to_matrix(&self) -> Mat3 {
        Mat3::with_row(self.row, self.vec)
    }
}

pub fn build_spaces(mesh: &SimplicialMesh, variant: Variant) -> Spaces {
    let nf = mesh.num_facets();
    let ne = mesh.num_edges();
    let nc = mesh.num_cells();

    let mut stress_vertex = vec![0; 9 * nf];
    for f in 0..nf {
        for (s, &v) in mesh.facet(f).iter().enumerate() {
            for i in 0..3 {
                stress_vertex[9 * f + 3 * s + i] = v;
            }
        }
    }
    let mut mult_vertex = vec![0; 2 * ne];
    for e in 0..ne {
        for (s, &v) in mesh.edge(e).iter().enumerate() {
            mult_vertex[2 * e + s] = v;
        }
    }

    let mut stress = Vec::with_capacity(nc);
    let mut mult = Vec::with_capacity(nc);
    let mut cells = Vec::with_capacity(nc);
    for c in 0..nc {
        let verts = mesh.cell(c);
        let pts = mesh.cell_points(c);
        let grad_lambda = mesh.barycentric_gradients(c);
        let cf = mesh.cell_facets(c);
        let ce = mesh.cell_edges(c);

        let mut sd = [0; STRESS_LOCAL];
        let mut s_vertex = [[0; 3]; 4];
        let mut s_dir = [[Vec3::ZERO; 3]; 4];
        for k in 0..4 {
            let f = cf[k];
            let n = mesh.facet_normal(f);
            for (s, &v) in mesh.facet(f).iter().enumerate() {
                let a = mesh.local_vertex(c, v).expect("facet vertex belongs to cell");
                // Edge from the nodal vertex to the vertex opposite facet k:
                // orthogonal to the other two facet normals at that vertex.
                let edge = pts[k] - pts[a];
                s_vertex[k][s] = a;
                s_dir[k][s] = edge.scale(1.0 / edge.dot(&n));
                for i in 0..3 {
                    sd[9 * k + 3 * s + i] = 9 * f + 3 * s + i;
                }
            }
        }

        let mut md = [0; MULT_LOCAL];
        let mut m_vertex = [[0; 2]; 6];
        let mut m_dir = [[Vec3::ZERO; 2]; 6];
        for (j, _) in LOCAL_EDGES.iter().enumerate() {
            let e = ce[j];
            let t = mesh.edge_tangent(e);
            let [lo, hi] = mesh.edge(e);
            for (s, (v, other)) in [(lo, hi), (hi, lo)].into_iter().enumerate() {
                let a = mesh.local_vertex(c, v).expect("edge vertex belongs to cell");
                let b = mesh.local_vertex(c, other).expect("edge vertex belongs to cell");
                m_vertex[j][s] = a;
                m_dir[j][s] = grad_lambda[b].scale(1.0 / grad_lambda[b].dot(&t));
                md[2 * j + s] = 2 * e + s;
            }
        }
        debug_assert!(verts.len() == 4);
        stress.push(sd);
        mult.push(md);
        cells.push(CellBasis { stress_vertex: s_vertex, stress_dir: s_dir, mult_vertex: m_vertex, mult_dir: m_dir, grad_lambda });
    }

    Spaces {
        order: ORDER,
        stress: StressSpace { variant, num_dofs: 9 * nf },
        displacement: DisplacementSpace { num_dofs: 3 * nc },
        multiplier: MultiplierSpace { variant, num_dofs: 2 * ne },
        dofmap: DofMap { stress, mult, stress_vertex, mult_vertex, cells },
    }
}

impl Spaces {
    pub fn variant(&self) -> Variant {
        self.stress.variant
    }

    pub fn total_dofs(&self) -> usize {
        self.stress.num_dofs + self.displacement.num_dofs + self.multiplier.num_dofs
    }

    /// Stress basis rows at barycentric point `bary` of `cell`, in local order
    /// `9 k + 3 s + i`, for the space's variant.
    pub fn stress_rows(&self, cell: usize, bary: &[f64]) -> [RowValue; STRESS_LOCAL] {
        let cb = &self.dofmap.cells[cell];
        let mut out = [RowValue::default(); STRESS_LOCAL];
        for k in 0..4 {
            let nodal: [Vec3; 3] = std::array::from_fn(|s| cb.stress_dir[k][s].scale(bary[cb.stress_vertex[k][s]]));
            let vecs = match self.stress.variant {
                Variant::Nodal => nodal,
                Variant::Moment => std::array::from_fn(|t| {
                    (0..3).fold(Vec3::ZERO, |acc, s| acc + nodal[s].scale(FACET_MINV[s][t]))
                }),
            };
            for s in 0..3 {
                for i in 0..3 {
                    out[9 * k + 3 * s + i] = RowValue { row: i, vec: vecs[s] };
                }
            }
        }
        out
    }

    /// Divergence of each local stress function: `div_scalar · e_row`.
    pub fn stress_div_scalars(&self, cell: usize) -> [f64; STRESS_LOCAL] {
        let cb = &self.dofmap.cells[cell];
        let mut out = [0.0; STRESS_LOCAL];
        for k in 0..4 {
            let nodal: [f64; 3] = std::array::from_fn(|s| cb.grad_lambda[cb.stress_vertex[k][s]].dot(&cb.stress_dir[k][s]));
            let d = match self.stress.variant {
                Variant::Nodal => nodal,
                Variant::Moment => std::array::from_fn(|t| (0..3).map(|s| nodal[s] * FACET_MINV[s][t]).sum()),
            };
            for s in 0..3 {
                for i in 0..3 {
                    out[9 * k + 3 * s + i] = d[s];
                }
            }
        }
        out
    }

    /// Multiplier proxy values at `bary`, local order `2 j + s`.
    pub fn multiplier_vecs(&self, cell: usize, bary: &[f64]) -> [Vec3; MULT_LOCAL] {
        let cb = &self.dofmap.cells[cell];
        let mut out = [Vec3::ZERO; MULT_LOCAL];
        for j in 0..6 {
            let nodal: [Vec3; 2] = std::array::from_fn(|s| cb.mult_dir[j][s].scale(bary[cb.mult_vertex[j][s]]));
            let vecs = match self.multiplier.variant {
                Variant::Nodal => nodal,
                Variant::Moment => std::array::from_fn(|t| nodal[0].scale(EDGE_MINV[0][t]) + nodal[1].scale(EDGE_MINV[1][t])),
            };
            out[2 * j] = vecs[0];
            out[2 * j + 1] = vecs[1];
        }
        out
    }

    fn multiplier_curls(&self, cell: usize) -> [Vec3; MULT_LOCAL] {
        let cb = &self.dofmap.cells[cell];
        let mut out = [Vec3::ZERO; MULT_LOCAL];
        for j in 0..6 {
            let nodal: [Vec3; 2] = std::array::from_fn(|s| cb.grad_lambda[cb.mult_vertex[j][s]].cross(&cb.mult_dir[j][s]));
            let vecs = match self.multiplier.variant {
                Variant::Nodal => nodal,
                Variant::Moment => std::array::from_fn(|t| nodal[0].scale(EDGE_MINV[0][t]) + nodal[1].scale(EDGE_MINV[1][t])),
            };
            out[2 * j] = vecs[0];
            out[2 * j + 1] = vecs[1];
        }
        out
    }

    /// Nonzero nodal stress functions at local vertex `a`: nine entries of
    /// `(local index, row value)`. Only meaningful in the nodal variant.
    pub fn nodal_stress_at_vertex(&self, cell: usize, a: usize) -> [(usize, RowValue); 9] {
        let cb = &self.dofmap.cells[cell];
        let mut out = [(0, RowValue::default()); 9];
        let mut n = 0;
        for k in 0..4 {
            for s in 0..3 {
                if cb.stress_vertex[k][s] == a {
                    for i in 0..3 {
                        out[n] = (9 * k + 3 * s + i, RowValue { row: i, vec: cb.stress_dir[k][s] });
                        n += 1;
                    }
                }
            }
        }
        debug_assert_eq!(n, 9);
        out
    }

    /// Nonzero nodal multiplier functions at local vertex `a`.
    pub fn nodal_multiplier_at_vertex(&self, cell: usize, a: usize) -> [(usize, Vec3); 3] {
        let cb = &self.dofmap.cells[cell];
        let mut out = [(0, Vec3::ZERO); 3];
        let mut n = 0;
        for j in 0..6 {
            for s in 0..2 {
                if cb.mult_vertex[j][s] == a {
                    out[n] = (2 * j + s, cb.mult_dir[j][s]);
                    n += 1;
                }
            }
        }
        debug_assert_eq!(n, 3);
        out
    }

    pub fn eval_stress_basis(&self, cell: usize, ref_point: &Vec3) -> StressBasisValues {
        let bary = ref_to_bary(ref_point);
        let rows = self.stress_rows(cell, &bary);
        let divs = self.stress_div_scalars(cell);
        StressBasisValues {
            dofs: self.dofmap.stress[cell],
            values: std::array::from_fn(|l| rows[l].to_matrix()),
            divs: std::array::from_fn(|l| Vec3::unit(rows[l].row).scale(divs[l])),
        }
    }

    pub fn eval_multiplier_basis(&self, cell: usize, ref_point: &Vec3) -> MultiplierBasisValues {
        let bary = ref_to_bary(ref_point);
        MultiplierBasisValues {
            dofs: self.dofmap.mult[cell],
            values: self.multiplier_vecs(cell, &bary),
            curls: self.multiplier_curls(cell),
        }
    }

    /// Stress field of a coefficient vector at a barycentric point.
    pub fn stress_value(&self, coeffs: &[f64], cell: usize, bary: &[f64]) -> Mat3 {
        let rows = self.stress_rows(cell, bary);
        let dofs = &self.dofmap.stress[cell];
        let mut m = Mat3::ZERO;
        for (l, rv) in rows.iter().enumerate() {
            let c = coeffs[dofs[l]];
            for j in 0..3 {
                m.0[rv.row][j] += c * rv.vec[j];
            }
        }
        m
    }

    /// Cellwise-constant row-wise divergence of a stress coefficient vector.
    pub fn stress_divergence(&self, coeffs: &[f64], cell: usize) -> Vec3 {
        let divs = self.stress_div_scalars(cell);
        let dofs = &self.dofmap.stress[cell];
        let mut d = Vec3::ZERO;
        for l in 0..STRESS_LOCAL {
            d[l % 3] += coeffs[dofs[l]] * divs[l];
        }
        d
    }

    /// Axial vector `w` of the multiplier at a barycentric point.
    pub fn multiplier_value(&self, coeffs: &[f64], cell: usize, bary: &[f64]) -> Vec3 {
        let vals = self.multiplier_vecs(cell, bary);
        let dofs = &self.dofmap.mult[cell];
        vals.iter().zip(dofs).fold(Vec3::ZERO, |acc, (v, &d)| acc + v.scale(coeffs[d]))
    }

    /// The skew multiplier matrix `skew_of(w)`.
    pub fn multiplier_matrix(&self, coeffs: &[f64], cell: usize, bary: &[f64]) -> Mat3 {
        skew_of(&self.multiplier_value(coeffs, cell, bary))
    }

    /// Interpolates a stress field with the variant's DOF functionals.
    pub fn interpolate_stress(&self, mesh: &SimplicialMesh, field: impl Fn(&Vec3) -> Mat3) -> Vec<f64> {
        let mut out = vec![0.0; self.stress.num_dofs];
        let rule = triangle_rule(6).expect("supported degree");
        for f in 0..mesh.num_facets() {
            let n = mesh.facet_normal(f);
            let tri = mesh.facet(f);
            match self.stress.variant {
                Variant::Nodal => {
                    for (s, &v) in tri.iter().enumerate() {
                        let flux = field(&mesh.vertex(v)).mul_vec(&n);
                        for i in 0..3 {
                            out[9 * f + 3 * s + i] = flux[i];
                        }
                    }
                }
                Variant::Moment => {
                    let pts = mesh.facet_points(f);
                    for s in 0..3 {
                        for i in 0..3 {
                            out[9 * f + 3 * s + i] = rule.integrate(&pts, 1.0, |b, x| field(x).mul_vec(&n)[i] * b[s]);
                        }
                    }
                }
            }
        }
        out
    }

    /// Interpolates a multiplier given through its axial-vector field `w`.
    pub fn interpolate_multiplier(&self, mesh: &SimplicialMesh, field: impl Fn(&Vec3) -> Vec3) -> Vec<f64> {
        let mut out = vec![0.0; self.multiplier.num_dofs];
        let rule = line_rule(6).expect("supported degree");
        for e in 0..mesh.num_edges() {
            let t = mesh.edge_tangent(e);
            let ed = mesh.edge(e);
            match self.multiplier.variant {
                Variant::Nodal => {
                    for (s, &v) in ed.iter().enumerate() {
                        out[2 * e + s] = field(&mesh.vertex(v)).dot(&t);
                    }
                }
                Variant::Moment => {
                    let pts = [mesh.vertex(ed[0]), mesh.vertex(ed[1])];
                    for s in 0..2 {
                        out[2 * e + s] = rule.integrate(&pts, 1.0, |b, x| field(x).dot(&t) * b[s]);
                    }
                }
            }
        }
        out
    }

    /// Nodal-variant coefficients of a stress coefficient vector.
    pub fn stress_to_nodal(&self, coeffs: &[f64]) -> Vec<f64> {
        match self.stress.variant {
            Variant::Nodal => coeffs.to_vec(),
            Variant::Moment => transform_blocks::<3>(coeffs, &FACET_MINV),
        }
    }

    /// Coefficients in this space's variant from nodal coefficients.
    pub fn stress_from_nodal(&self, nodal: &[f64]) -> Vec<f64> {
        match self.stress.variant {
            Variant::Nodal => nodal.to_vec(),
            Variant::Moment => transform_blocks::<3>(nodal, &FACET_M),
        }
    }

    pub fn multiplier_to_nodal(&self, coeffs: &[f64]) -> Vec<f64> {
        match self.multiplier.variant {
            Variant::Nodal => coeffs.to_vec(),
            Variant::Moment => transform_blocks::<2>(coeffs, &EDGE_MINV),
        }
    }

    pub fn multiplier_from_nodal(&self, nodal: &[f64]) -> Vec<f64> {
        match self.multiplier.variant {
            Variant::Nodal => nodal.to_vec(),
            Variant::Moment => transform_blocks::<2>(nodal, &EDGE_M),
        }
    }
}

/// Applies `out_w = Σ_s mat[w][s] in_s` within each entity block. Stress
/// blocks interleave rows (`3 s + i`), multiplier blocks have one component.
fn transform_blocks<const N: usize>(input: &[f64], mat: &[[f64; N]; N]) -> Vec<f64> {
    let comps = if N == 3 { 3 } else { 1 };
    let block = N * comps;
    let mut out = vec![0.0; input.len()];
    for (ib, ob) in input.chunks(block).zip(out.chunks_mut(block)) {
        for i in 0..comps {
            for w in 0..N {
                ob[comps * w + i] = (0..N).map(|s| mat[w][s] * ib[comps * s + i]).sum();
            }
        }
    }
    out
}

/// Barycentric coordinates of a point of the reference tetrahedron.
pub fn ref_to_bary(p: &Vec3) -> [f64; 4] {
    [1.0 - p[0] - p[1] - p[2], p[0], p[1], p[2]]
}

/// Cell averages of `u` (the L² projection onto cellwise constants).
pub fn project_displacement(
    mesh: &SimplicialMesh,
    u: impl Fn(&Vec3) -> Vec3,
    quad_degree: usize,
) -> Result<Vec<f64>, QuadratureError> {
    let rule = simplex_rule(quad_degree)?;
    let mut out = vec![0.0; 3 * mesh.num_cells()];
    for c in 0..mesh.num_cells() {
        let pts = mesh.cell_points(c);
        let mut acc = Vec3::ZERO;
        for (b, w) in rule.iter() {
            acc += u(&bary_to_point(&pts, b)).scale(w);
        }
        out[3 * c..3 * c + 3].copy_from_slice(&acc.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoxExtent;

    fn reference_mesh() -> SimplicialMesh {
        SimplicialMesh::build_connectivity(vec![Vec3::ZERO, Vec3::unit(0), Vec3::unit(1), Vec3::unit(2)], vec![[0, 1, 2, 3]])
            .unwrap()
    }

    fn skewed_mesh() -> SimplicialMesh {
        SimplicialMesh::build_connectivity(
            vec![Vec3::new(0.1, -0.2, 0.0), Vec3::new(1.3, 0.1, 0.2), Vec3::new(0.2, 0.9, -0.1), Vec3::new(0.3, 0.2, 1.1)],
            vec![[0, 1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn dof_counts() {
        let m = reference_mesh();
        let s = build_spaces(&m, Variant::Nodal);
        assert_eq!((s.stress.num_dofs, s.displacement.num_dofs, s.multiplier.num_dofs), (36, 3, 12));
        assert_eq!(s.total_dofs(), 51);
        for (n, expected) in [(1, (162, 18, 38)), (2, (1080, 144, 196))] {
            let m = SimplicialMesh::generate_cube_mesh(n, BoxExtent::unit()).unwrap();
            let s = build_spaces(&m, Variant::Moment);
            assert_eq!((s.stress.num_dofs, s.displacement.num_dofs, s.multiplier.num_dofs), expected);
        }
    }

    #[test]
    fn nodal_stress_kronecker() {
        for m in [reference_mesh(), skewed_mesh()] {
            let s = build_spaces(&m, Variant::Nodal);
            let cf = m.cell_facets(0);
            for (k, &f) in cf.iter().enumerate() {
                let n = m.facet_normal(f);
                for (s_idx, &v) in m.facet(f).iter().enumerate() {
                    let a = m.local_vertex(0, v).unwrap();
                    let bary: Vec<f64> = (0..4).map(|j| if j == a { 1.0 } else { 0.0 }).collect();
                    let rows = s.stress_rows(0, &bary);
                    for (l, rv) in rows.iter().enumerate() {
                        for i in 0..3 {
                            let flux = rv.to_matrix().mul_vec(&n)[i];
                            let expected = if l == 9 * k + 3 * s_idx + i { 1.0 } else { 0.0 };
                            assert!((flux - expected).abs() < 1e-13, "cell facet {k} slot {s_idx} row {i} fn {l}: {flux}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn moment_stress_duality() {
        let m = skewed_mesh();
        let s = build_spaces(&m, Variant::Moment);
        let rule = triangle_rule(4).unwrap();
        for (k, &f) in m.cell_facets(0).iter().enumerate() {
            let n = m.facet_normal(f);
            let fv = m.facet(f);
            let locals: [usize; 3] = std::array::from_fn(|j| m.local_vertex(0, fv[j]).unwrap());
            let pts = m.facet_points(f);
            for l in 0..STRESS_LOCAL {
                for t in 0..3 {
                    for i in 0..3 {
                        let moment = rule.integrate(&pts, 1.0, |b, _| {
                            let mut bary = [0.0; 4];
                            for j in 0..3 {
                                bary[locals[j]] = b[j];
                            }
                            s.stress_rows(0, &bary)[l].to_matrix().mul_vec(&n)[i] * b[t]
                        });
                        let expected = if l == 9 * k + 3 * t + i { 1.0 } else { 0.0 };
                        assert!((moment - expected).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn nodal_multiplier_kronecker() {
        let m = skewed_mesh();
        let s = build_spaces(&m, Variant::Nodal);
        for (j, &e) in m.cell_edges(0).iter().enumerate() {
            let t = m.edge_tangent(e);
            for (slot, &v) in m.edge(e).iter().enumerate() {
                let a = m.local_vertex(0, v).unwrap();
                let bary: Vec<f64> = (0..4).map(|q| if q == a { 1.0 } else { 0.0 }).collect();
                let vals = s.multiplier_vecs(0, &bary);
                for (l, w) in vals.iter().enumerate() {
                    let expected = if l == 2 * j + slot { 1.0 } else { 0.0 };
                    assert!((w.dot(&t) - expected).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn constants_and_linears_reproduced() {
        let m = SimplicialMesh::generate_cube_mesh(2, BoxExtent::unit()).unwrap();
        let lin = |x: &Vec3| Mat3::from_fn(|i, j| 0.3 * i as f64 - 0.7 * j as f64 + x[i] * (j as f64 + 1.0) - x[j] * 0.5);
        let wlin = |x: &Vec3| Vec3::new(x[1], x[0], 0.0); // grad(x₁ x₂)
        let points = [[0.1, 0.2, 0.3, 0.4], [0.7, 0.1, 0.1, 0.1], [0.25; 4], [0.05, 0.05, 0.6, 0.3]];
        for variant in [Variant::Nodal, Variant::Moment] {
            let s = build_spaces(&m, variant);
            let cst = Mat3([[1.0, -2.0, 0.5], [3.0, 0.0, 1.5], [-1.0, 2.0, 4.0]]);
            let cs = s.interpolate_stress(&m, |_| cst);
            let ls = s.interpolate_stress(&m, lin);
            let lw = s.interpolate_multiplier(&m, wlin);
            for c in [0, 17, 47] {
                let pts = m.cell_points(c);
                for b in &points {
                    let x = bary_to_point(&pts, b);
                    assert!((s.stress_value(&cs, c, b) - cst).max_abs() < 1e-12);
                    assert!((s.stress_value(&ls, c, b) - lin(&x)).max_abs() < 1e-12);
                    assert!((s.multiplier_value(&lw, c, b) - wlin(&x)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn quadratic_not_reproduced() {
        let m = SimplicialMesh::generate_cube_mesh(1, BoxExtent::unit()).unwrap();
        let s = build_spaces(&m, Variant::Nodal);
        let quad = |x: &Vec3| Mat3::IDENTITY.scale(x[0] * x[0]);
        let cs = s.interpolate_stress(&m, quad);
        let b = [0.25; 4];
        let x = bary_to_point(&m.cell_points(0), &b);
        assert!((s.stress_value(&cs, 0, &b) - quad(&x)).max_abs() > 1e-3);
    }

    #[test]
    fn normal_and_tangential_continuity() {
        let m = SimplicialMesh::generate_cube_mesh(2, BoxExtent::unit()).unwrap();
        for variant in [Variant::Nodal, Variant::Moment] {
            let s = build_spaces(&m, variant);
            // A pseudo-random global coefficient vector.
            let coeffs: Vec<f64> = (0..s.stress.num_dofs).map(|i| ((i * 7919) % 113) as f64 / 57.0 - 1.0).collect();
            let wco: Vec<f64> = (0..s.multiplier.num_dofs).map(|i| ((i * 104729) % 89) as f64 / 44.0 - 1.0).collect();
            for f in 0..m.num_facets() {
                let (c0, Some(c1)) = m.facet_cells(f) else { continue };
                let n = m.facet_normal(f);
                let tri = m.facet(f);
                for fb in [[0.2, 0.3, 0.5], [0.6, 0.3, 0.1]] {
                    let to_bary = |c: usize| {
                        let mut b = [0.0; 4];
                        for j in 0..3 {
                            b[m.local_vertex(c, tri[j]).unwrap()] = fb[j];
                        }
                        b
                    };
                    let (b0, b1) = (to_bary(c0), to_bary(c1));
                    let jump = s.stress_value(&coeffs, c0, &b0).mul_vec(&n) - s.stress_value(&coeffs, c1, &b1).mul_vec(&n);
                    assert!(jump.norm() < 1e-12);
                    let dw = s.multiplier_value(&wco, c0, &b0) - s.multiplier_value(&wco, c1, &b1);
                    let tangential = dw - n.scale(dw.dot(&n));
                    assert!(tangential.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn variant_change_of_basis() {
        let m = SimplicialMesh::generate_cube_mesh(1, BoxExtent::unit()).unwrap();
        let nodal = build_spaces(&m, Variant::Nodal);
        let moment = build_spaces(&m, Variant::Moment);
        let field = |x: &Vec3| Mat3::from_fn(|i, j| (i + 2 * j) as f64 * x[(i + j) % 3] + 1.0);
        let w = |x: &Vec3| Vec3::new(x[2] - 1.0, 2.0 * x[0], x[1] + x[2]);
        let cn = nodal.interpolate_stress(&m, field);
        let cm = moment.interpolate_stress(&m, field);
        let diff = moment.stress_to_nodal(&cm).iter().zip(&cn).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
        let back = moment.stress_from_nodal(&cn);
        assert!(back.iter().zip(&cm).all(|(a, b)| (a - b).abs() < 1e-12));
        let wn = nodal.interpolate_multiplier(&m, w);
        let wm = moment.interpolate_multiplier(&m, w);
        assert!(moment.multiplier_to_nodal(&wm).iter().zip(&wn).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(moment.multiplier_from_nodal(&wn).iter().zip(&wm).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn divergence_is_cellwise_constant() {
        let m = skewed_mesh();
        let s = build_spaces(&m, Variant::Moment);
        let h = 1e-6;
        let p = Vec3::new(0.2, 0.3, 0.1);
        let vals = s.eval_stress_basis(0, &p);
        let (jac, _) = m.affine_map(0);
        let jinv = jac.inverse().unwrap();
        for l in 0..STRESS_LOCAL {
            // Physical divergence by central differences in reference
            // coordinates: ∂σ/∂x = ∂σ/∂ξ J⁻¹.
            let d: [Mat3; 3] = std::array::from_fn(|k| {
                let e = Vec3::unit(k).scale(h);
                (s.eval_stress_basis(0, &(p + e)).values[l] - s.eval_stress_basis(0, &(p - e)).values[l]).scale(0.5 / h)
            });
            let div = Vec3::from_fn(|i| (0..3).map(|j| (0..3).map(|k| d[k].0[i][j] * jinv.0[k][j]).sum::<f64>()).sum());
            assert!((div - vals.divs[l]).norm() < 1e-7);
        }
    }

    #[test]
    fn piola_pullback_preserves_kronecker_structure() {
        // Pulling a physical nodal function back with the contravariant
        // Piola map gives a reference function whose normal fluxes at the
        // reference facet vertices are those of the physical function scaled
        // by |f| / |f̂|.
        let phys = skewed_mesh();
        let refm = reference_mesh();
        let s = build_spaces(&phys, Variant::Nodal);
        let (jac, _) = phys.affine_map(0);
        let det = jac.det();
        let jinv = jac.inverse().unwrap();
        for (k, &f) in phys.cell_facets(0).iter().enumerate() {
            let fr = refm.cell_facets(0)[k];
            let scale = phys.facet_area(f) / refm.facet_area(fr);
            let sign = {
                // Orientation of the pulled-back global normal relative to
                // the reference one.
                let n_pull = jac.transpose().mul_vec(&phys.facet_normal(f));
                n_pull.dot(&refm.facet_normal(fr)).signum()
            };
            for a in 0..4 {
                if a == k {
                    continue;
                }
                let mut p = Vec3::ZERO;
                if a > 0 {
                    p[a - 1] = 1.0;
                }
                let vals = s.eval_stress_basis(0, &p);
                for l in 0..STRESS_LOCAL {
                    let pulled = vals.values[l].mul_mat(&jinv.transpose()).scale(det);
                    let flux_ref = pulled.mul_vec(&refm.facet_normal(fr));
                    let flux_phys = vals.values[l].mul_vec(&phys.facet_normal(f));
                    assert!((flux_ref - flux_phys.scale(scale * sign)).norm() < 1e-12);
                }
            }
        }
        // Covariant counterpart for the multiplier proxy.
        let vals = s.eval_multiplier_basis(0, &Vec3::new(0.1, 0.2, 0.3));
        for (j, &e) in phys.cell_edges(0).iter().enumerate() {
            let er = refm.cell_edges(0)[j];
            let t_pull = jinv.mul_vec(&phys.edge_tangent(e)).scale(phys.edge_length(e));
            let t_ref = refm.edge_tangent(er).scale(refm.edge_length(er));
            assert!((t_pull - t_ref).norm() < 1e-12 || (t_pull + t_ref).norm() < 1e-12);
            for l in 0..MULT_LOCAL {
                let w_ref = jac.transpose().mul_vec(&vals.values[l]);
                assert!((w_ref.dot(&t_pull) - vals.values[l].dot(&phys.edge_tangent(e)) * phys.edge_length(e)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_examples() {
        let m = reference_mesh();
        let p = project_displacement(&m, |_| Vec3::new(1.0, -2.0, 3.0), 2).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && (p[1] + 2.0).abs() < 1e-15 && (p[2] - 3.0).abs() < 1e-15);
        let p = project_displacement(&m, |x| Vec3::new(x[0], 0.0, 0.0), 1).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15);
    }
}

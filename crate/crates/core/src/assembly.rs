//! Assembly of the saddle-point blocks
//!
//! ```text
//! [ A  Bᵀ Cᵀ ] [σ]   [rhs_bc]
//! [ B  0  0  ] [u] = [rhs_g ]
//! [ C  0  0  ] [p]   [  0   ]
//! ```
//!
//! with `A = (Aσ, τ)`, `B = (div τ, v)`, `C = (τ, q)` and
//! `rhs_bc = ∫_∂Ω (τ n)·u_D`. In corner mode `A` and `C` are integrated with
//! the vertex rule `|T|/4 Σ_v f(v)`, which makes both block diagonal over
//! vertices when the nodal basis is used.

use std::sync::Arc;

use crate::exec::ExecPolicy;
use crate::fespace::{Spaces, Variant, MULT_LOCAL, STRESS_LOCAL};
use crate::mesh::SimplicialMesh;
use crate::quadrature::{bary_to_point, simplex_rule, triangle_rule, QuadratureError};
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::tensor::{ComplianceField, IsotropicCompliance, Vec3};

pub type VectorField = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum QuadratureMode {
    #[default]
    Exact,
    Corner,
}

impl std::fmt::Display for QuadratureMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            QuadratureMode::Exact => "exact",
            QuadratureMode::Corner => "corner",
        })
    }
}

impl std::str::FromStr for QuadratureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(QuadratureMode::Exact),
            "corner" => Ok(QuadratureMode::Corner),
            other => Err(format!("unknown quadrature mode `{other}` (expected exact or corner)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AssemblyError {
    #[error("corner quadrature requires the nodal variant, got {0}")]
    VariantMismatch(Variant),
    #[error("vertex block structure is only defined for corner-mode systems")]
    NotCornerMode,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Material and data of a boundary value problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub compliance: Arc<dyn ComplianceField>,
    pub body_load: Option<VectorField>,
    pub boundary_displacement: Option<VectorField>,
}

impl ProblemSpec {
    pub fn new(compliance: Arc<dyn ComplianceField>) -> Self {
        ProblemSpec { compliance, body_load: None, boundary_displacement: None }
    }

    pub fn isotropic(lambda: f64, mu: f64) -> Result<Self, crate::tensor::TensorError> {
        Ok(ProblemSpec::new(Arc::new(IsotropicCompliance::new(lambda, mu)?)))
    }

    pub fn with_body_load(mut self, g: impl Fn(&Vec3) -> Vec3 + Send + Sync + 'static) -> Self {
        self.body_load = Some(Arc::new(g));
        self
    }

    pub fn with_boundary_displacement(mut self, u: impl Fn(&Vec3) -> Vec3 + Send + Sync + 'static) -> Self {
        self.boundary_displacement = Some(Arc::new(u));
        self
    }
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("constant_compliance", &self.compliance.is_constant())
            .field("body_load", &self.body_load.is_some())
            .field("boundary_displacement", &self.boundary_displacement.is_some())
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Degree of the cell rule for `a` and `c` in exact mode. `None` picks 2
    /// for constant compliance and 4 otherwise.
    pub exact_degree: Option<usize>,
    pub load_degree: usize,
    pub boundary_degree: usize,
    pub policy: ExecPolicy,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { exact_degree: None, load_degree: 6, boundary_degree: 4, policy: ExecPolicy::Sequential }
    }
}

/// DOF → vertex maps for the stress and multiplier unknowns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexPartition {
    pub stress: Vec<usize>,
    pub multiplier: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    pub c: CsrMatrix,
    pub rhs_g: Vec<f64>,
    pub rhs_bc: Vec<f64>,
    pub mode: QuadratureMode,
    pub vertex_partition: Option<VertexPartition>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexBlock {
    pub vertex: usize,
    pub stress: Vec<usize>,
    pub multiplier: Vec<usize>,
}

impl SaddleSystem {
    pub fn num_stress(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_displacement(&self) -> usize {
        self.b.nrows()
    }

    pub fn num_multiplier(&self) -> usize {
        self.c.nrows()
    }

    pub fn dim(&self) -> usize {
        self.num_stress() + self.num_displacement() + self.num_multiplier()
    }

    /// Full right-hand side `[rhs_bc; rhs_g; 0]`.
    pub fn rhs(&self) -> Vec<f64> {
        let mut r = self.rhs_bc.clone();
        r.extend_from_slice(&self.rhs_g);
        r.extend(std::iter::repeat_n(0.0, self.num_multiplier()));
        r
    }

    /// The monolithic symmetric matrix in `(σ, u, p)` ordering.
    pub fn kkt_matrix(&self) -> CsrMatrix {
        let (ns, nu) = (self.num_stress(), self.num_displacement());
        let n = self.dim();
        let mut t = TripletBuilder::with_capacity(n, n, self.a.nnz() + 2 * (self.b.nnz() + self.c.nnz()));
        for (i, j, v) in self.a.triplets() {
            t.push(i, j, v);
        }
        for (off, m) in [(ns, &self.b), (ns + nu, &self.c)] {
            for (i, j, v) in m.triplets() {
                t.push(off + i, j, v);
                t.push(j, off + i, v);
            }
        }
        t.build()
    }

    /// `K x` for `x = [σ; u; p]`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (ns, nu) = (self.num_stress(), self.num_displacement());
        let (s, rest) = x.split_at(ns);
        let (u, p) = rest.split_at(nu);
        let mut top = self.a.mul_vec(s);
        for (t, (bu, cp)) in top.iter_mut().zip(self.b.mul_transpose_vec(u).iter().zip(self.c.mul_transpose_vec(p))) {
            *t += bu + cp;
        }
        top.extend(self.b.mul_vec(s));
        top.extend(self.c.mul_vec(s));
        top
    }
}

/// Dense element contributions of one cell, in local DOF order.
#[derive(Clone, Debug)]
pub struct ElementMatrices {
    pub a: Vec<[f64; STRESS_LOCAL]>,
    pub b: [[f64; STRESS_LOCAL]; 3],
    pub c: [[f64; STRESS_LOCAL]; MULT_LOCAL],
    pub load: [f64; 3],
    pub bc: [f64; STRESS_LOCAL],
}

impl ElementMatrices {
    fn zero() -> Self {
        ElementMatrices {
            a: vec![[0.0; STRESS_LOCAL]; STRESS_LOCAL],
            b: [[0.0; STRESS_LOCAL]; 3],
            c: [[0.0; STRESS_LOCAL]; MULT_LOCAL],
            load: [0.0; 3],
            bc: [0.0; STRESS_LOCAL],
        }
    }
}

/// `A(e_r ⊗ v) : (e_s ⊗ w)` for the isotropic compliance.
#[inline]
fn compliance_pair(a: &IsotropicCompliance, r: usize, v: &Vec3, s: usize, w: &Vec3) -> f64 {
    let k = a.lambda / (3.0 * a.lambda + 2.0 * a.mu);
    let dev = if r == s { v.dot(w) } else { 0.0 };
    (dev - k * v[r] * w[s]) / (2.0 * a.mu)
}

fn check_variant(spaces: &Spaces, mode: QuadratureMode) -> Result<(), AssemblyError> {
    if mode == QuadratureMode::Corner && spaces.variant() != Variant::Nodal {
        return Err(AssemblyError::VariantMismatch(spaces.variant()));
    }
    Ok(())
}

fn exact_degree(problem: &ProblemSpec, opts: &AssemblyOptions) -> usize {
    opts.exact_degree.unwrap_or(if problem.compliance.is_constant() { 2 } else { 4 })
}

/// Element matrices of `cell`.
pub fn element_matrices(
    mesh: &SimplicialMesh,
    spaces: &Spaces,
    problem: &ProblemSpec,
    mode: QuadratureMode,
    opts: &AssemblyOptions,
    cell: usize,
) -> Result<ElementMatrices, AssemblyError> {
    check_variant(spaces, mode)?;
    let pts = mesh.cell_points(cell);
    let vol = mesh.cell_volume(cell);
    let mut el = ElementMatrices::zero();

    match mode {
        QuadratureMode::Exact => {
            let rule = simplex_rule(exact_degree(problem, opts))?;
            for (bary, w) in rule.iter() {
                let x = bary_to_point(&pts, bary);
                let comp = problem.compliance.at(cell, &x);
                let rows = spaces.stress_rows(cell, bary);
                let ws = spaces.multiplier_vecs(cell, bary);
                let wt = w * vol;
                for l in 0..STRESS_LOCAL {
                    for m in 0..=l {
                        el.a[l][m] += wt * compliance_pair(&comp, rows[l].row, &rows[l].vec, rows[m].row, &rows[m].vec);
                    }
                }
                for (j, wj) in ws.iter().enumerate() {
                    for (l, rv) in rows.iter().enumerate() {
                        el.c[j][l] += wt * wj.cross(&rv.vec)[rv.row];
                    }
                }
            }
            for l in 0..STRESS_LOCAL {
                for m in 0..l {
                    el.a[m][l] = el.a[l][m];
                }
            }
        }
        QuadratureMode::Corner => {
            let wt = vol / 4.0;
            for (a, x) in pts.iter().enumerate() {
                let comp = problem.compliance.at(cell, x);
                let st = spaces.nodal_stress_at_vertex(cell, a);
                let mu = spaces.nodal_multiplier_at_vertex(cell, a);
                for &(l, rl) in &st {
                    for &(m, rm) in &st {
                        el.a[l][m] += wt * compliance_pair(&comp, rl.row, &rl.vec, rm.row, &rm.vec);
                    }
                    for &(j, wj) in &mu {
                        el.c[j][l] += wt * wj.cross(&rl.vec)[rl.row];
                    }
                }
            }
        }
    }

    let divs = spaces.stress_div_scalars(cell);
    for (l, d) in divs.iter().enumerate() {
        el.b[l % 3][l] = vol * d;
    }

    if let Some(g) = &problem.body_load {
        let rule = simplex_rule(opts.load_degree)?;
        for (bary, w) in rule.iter() {
            let gx = g(&bary_to_point(&pts, bary));
            for k in 0..3 {
                el.load[k] += w * vol * gx[k];
            }
        }
    }

    if let Some(ud) = &problem.boundary_displacement {
        let rule = triangle_rule(opts.boundary_degree)?;
        for f in mesh.cell_facets(cell) {
            if !mesh.is_boundary_facet(f) {
                continue;
            }
            let n = mesh.facet_normal(f);
            let tri = mesh.facet(f);
            let locals: [usize; 3] = std::array::from_fn(|j| mesh.local_vertex(cell, tri[j]).expect("facet of cell"));
            let fpts = mesh.facet_points(f);
            let area = mesh.facet_area(f);
            for (fb, w) in rule.iter() {
                let mut bary = [0.0; 4];
                for j in 0..3 {
                    bary[locals[j]] = fb[j];
                }
                let u = ud(&bary_to_point(&fpts, fb));
                let rows = spaces.stress_rows(cell, &bary);
                for (l, rv) in rows.iter().enumerate() {
                    el.bc[l] += w * area * rv.vec.dot(&n) * u[rv.row];
                }
            }
        }
    }
    Ok(el)
}

/// Assembles the global system. Element work follows `opts.policy`; global
/// accumulation is always sequential in cell order.
pub fn assemble(
    mesh: &SimplicialMesh,
    spaces: &Spaces,
    problem: &ProblemSpec,
    mode: QuadratureMode,
    opts: &AssemblyOptions,
) -> Result<SaddleSystem, AssemblyError> {
    check_variant(spaces, mode)?;
    let nc = mesh.num_cells();
    let elements = opts.policy.try_map_indexed(nc, |c| element_matrices(mesh, spaces, problem, mode, opts, c))?;

    let ns = spaces.stress.num_dofs;
    let nu = spaces.displacement.num_dofs;
    let nq = spaces.multiplier.num_dofs;
    let a_cap = match mode {
        QuadratureMode::Exact => nc * STRESS_LOCAL * STRESS_LOCAL,
        QuadratureMode::Corner => nc * 4 * 81,
    };
    let mut ta = TripletBuilder::with_capacity(ns, ns, a_cap);
    let mut tb = TripletBuilder::with_capacity(nu, ns, nc * STRESS_LOCAL);
    let mut tc = TripletBuilder::with_capacity(nq, ns, nc * MULT_LOCAL * STRESS_LOCAL);
    let mut rhs_g = vec![0.0; nu];
    let mut rhs_bc = vec![0.0; ns];

    for (cell, el) in elements.iter().enumerate() {
        let sd = spaces.dofmap.stress_dofs(cell);
        let md = spaces.dofmap.multiplier_dofs(cell);
        let ud = spaces.dofmap.displacement_dofs(cell);
        for l in 0..STRESS_LOCAL {
            for m in 0..STRESS_LOCAL {
                let v = el.a[l][m];
                if v != 0.0 {
                    ta.push(sd[l], sd[m], v);
                }
            }
            rhs_bc[sd[l]] += el.bc[l];
        }
        for k in 0..3 {
            for l in 0..STRESS_LOCAL {
                if el.b[k][l] != 0.0 {
                    tb.push(ud[k], sd[l], el.b[k][l]);
                }
            }
            rhs_g[ud[k]] += el.load[k];
        }
        for j in 0..MULT_LOCAL {
            for l in 0..STRESS_LOCAL {
                if el.c[j][l] != 0.0 {
                    tc.push(md[j], sd[l], el.c[j][l]);
                }
            }
        }
    }

    let vertex_partition = (mode == QuadratureMode::Corner).then(|| VertexPartition {
        stress: spaces.dofmap.stress_dof_vertices().to_vec(),
        multiplier: spaces.dofmap.multiplier_dof_vertices().to_vec(),
    });

    Ok(SaddleSystem { a: ta.build(), b: tb.build(), c: tc.build(), rhs_g, rhs_bc, mode, vertex_partition })
}

/// L² Gram matrix of the stress basis (Frobenius inner product).
pub fn stress_mass(mesh: &SimplicialMesh, spaces: &Spaces, policy: ExecPolicy) -> Result<CsrMatrix, AssemblyError> {
    let identity = ProblemSpec::new(Arc::new(IsotropicCompliance { lambda: 0.0, mu: 0.5 }));
    let opts = AssemblyOptions { exact_degree: Some(2), policy, ..Default::default() };
    Ok(assemble(mesh, spaces, &identity, QuadratureMode::Exact, &opts)?.a)
}

/// L² Gram matrix of the multiplier as skew matrices, `2 ∫ w_i · w_j`.
pub fn multiplier_mass(mesh: &SimplicialMesh, spaces: &Spaces) -> Result<CsrMatrix, AssemblyError> {
    let nq = spaces.multiplier.num_dofs;
    let rule = simplex_rule(2)?;
    let mut t = TripletBuilder::with_capacity(nq, nq, mesh.num_cells() * MULT_LOCAL * MULT_LOCAL);
    for c in 0..mesh.num_cells() {
        let vol = mesh.cell_volume(c);
        let dofs = spaces.dofmap.multiplier_dofs(c);
        let mut local = [[0.0; MULT_LOCAL]; MULT_LOCAL];
        for (bary, w) in rule.iter() {
            let vals = spaces.multiplier_vecs(c, bary);
            for a in 0..MULT_LOCAL {
                for b in 0..MULT_LOCAL {
                    local[a][b] += 2.0 * w * vol * vals[a].dot(&vals[b]);
                }
            }
        }
        for a in 0..MULT_LOCAL {
            for b in 0..MULT_LOCAL {
                t.push(dofs[a], dofs[b], local[a][b]);
            }
        }
    }
    Ok(t.build())
}

/// Groups the stress and multiplier DOFs of a corner-mode system by vertex.
pub fn vertex_block_structure(system: &SaddleSystem) -> Result<Vec<VertexBlock>, AssemblyError> {
    let part = system.vertex_partition.as_ref().ok_or(AssemblyError::NotCornerMode)?;
    let nv = part.stress.iter().chain(&part.multiplier).max().map_or(0, |m| m + 1);
    let mut blocks: Vec<VertexBlock> =
        (0..nv).map(|v| VertexBlock { vertex: v, stress: Vec::new(), multiplier: Vec::new() }).collect();
    for (d, &v) in part.stress.iter().enumerate() {
        blocks[v].stress.push(d);
    }
    for (d, &v) in part.multiplier.iter().enumerate() {
        blocks[v].multiplier.push(d);
    }
    Ok(blocks)
}

/// Largest entry of `Ǎ` or `Č` that couples DOFs of different vertices.
pub fn off_block_max(system: &SaddleSystem) -> Result<f64, AssemblyError> {
    let part = system.vertex_partition.as_ref().ok_or(AssemblyError::NotCornerMode)?;
    let a = system
        .a
        .triplets()
        .filter(|&(i, j, _)| part.stress[i] != part.stress[j])
        .fold(0.0f64, |m, (_, _, v)| m.max(v.abs()));
    let c = system
        .c
        .triplets()
        .filter(|&(i, j, _)| part.multiplier[i] != part.stress[j])
        .fold(0.0f64, |m, (_, _, v)| m.max(v.abs()));
    Ok(a.max(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::build_spaces;
    use crate::mesh::BoxExtent;
    use crate::tensor::{Mat3, Vec3};

    fn ref_tet() -> SimplicialMesh {
        SimplicialMesh::build_connectivity(vec![Vec3::ZERO, Vec3::unit(0), Vec3::unit(1), Vec3::unit(2)], vec![[0, 1, 2, 3]])
            .unwrap()
    }

    #[test]
    fn constant_fields_in_kernels() {
        let m = SimplicialMesh::generate_cube_mesh(2, BoxExtent::unit()).unwrap();
        let problem = ProblemSpec::isotropic(1.0, 1.0).unwrap();
        for (variant, mode) in [(Variant::Moment, QuadratureMode::Exact), (Variant::Nodal, QuadratureMode::Exact), (Variant::Nodal, QuadratureMode::Corner)] {
            let s = build_spaces(&m, variant);
            let sys = assemble(&m, &s, &problem, mode, &AssemblyOptions::default()).unwrap();
            let m0 = Mat3([[1.0, 2.0, -1.0], [0.5, 3.0, 2.0], [4.0, -2.0, 1.0]]);
            let s0 = s.interpolate_stress(&m, |_| m0);
            assert!(sys.b.mul_vec(&s0).iter().all(|v| v.abs() < 1e-12));
            let id = s.interpolate_stress(&m, |_| Mat3::IDENTITY);
            assert!(sys.c.mul_vec(&id).iter().all(|v| v.abs() < 1e-13));
            assert!(sys.a.asymmetry() < 1e-14);
            assert!(sys.rhs().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn corner_requires_nodal() {
        let m = ref_tet();
        let s = build_spaces(&m, Variant::Moment);
        let p = ProblemSpec::isotropic(1.0, 1.0).unwrap();
        assert!(matches!(
            assemble(&m, &s, &p, QuadratureMode::Corner, &AssemblyOptions::default()),
            Err(AssemblyError::VariantMismatch(Variant::Moment))
        ));
        let exact = assemble(&m, &s, &p, QuadratureMode::Exact, &AssemblyOptions::default()).unwrap();
        assert!(matches!(vertex_block_structure(&exact), Err(AssemblyError::NotCornerMode)));
    }

    #[test]
    fn corner_diagonal_matches_dense_evaluation() {
        let m = ref_tet();
        let s = build_spaces(&m, Variant::Nodal);
        let p = ProblemSpec::isotropic(0.0, 0.5).unwrap();
        let sys = assemble(&m, &s, &p, QuadratureMode::Corner, &AssemblyOptions::default()).unwrap();
        let vol = m.cell_volume(0);
        for l in 0..STRESS_LOCAL {
            let mut expected = 0.0;
            for a in 0..4 {
                let mut bary = [0.0; 4];
                bary[a] = 1.0;
                let v = s.stress_rows(0, &bary)[l].to_matrix();
                expected += vol / 4.0 * v.ddot(&v);
            }
            let d = s.dofmap.stress_dofs(0)[l];
            assert!((sys.a.get(d, d) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn vertex_blocks() {
        let m = ref_tet();
        let s = build_spaces(&m, Variant::Nodal);
        let p = ProblemSpec::isotropic(1.0, 1.0).unwrap();
        let sys = assemble(&m, &s, &p, QuadratureMode::Corner, &AssemblyOptions::default()).unwrap();
        let blocks = vertex_block_structure(&sys).unwrap();
        assert_eq!(blocks.len(), 4);
        assert!(blocks.iter().all(|b| b.stress.len() == 9 && b.multiplier.len() == 3));

        let m = SimplicialMesh::generate_cube_mesh(1, BoxExtent::unit()).unwrap();
        let s = build_spaces(&m, Variant::Nodal);
        let sys = assemble(&m, &s, &p, QuadratureMode::Corner, &AssemblyOptions::default()).unwrap();
        let blocks = vertex_block_structure(&sys).unwrap();
        assert_eq!(blocks.iter().map(|b| b.stress.len()).sum::<usize>(), 162);
        assert_eq!(blocks.iter().map(|b| b.multiplier.len()).sum::<usize>(), 38);
        for b in &blocks {
            assert_eq!(b.stress.len(), 3 * m.vertex_facets(b.vertex).len());
            assert_eq!(b.multiplier.len(), m.vertex_edges(b.vertex).len());
        }
        assert_eq!(off_block_max(&sys).unwrap(), 0.0);
    }

    #[test]
    fn corner_matches_exact_on_linear_integrands() {
        // c(s, q) with s cellwise constant is linear per cell, so both rules
        // agree.
        let m = SimplicialMesh::generate_cube_mesh(2, BoxExtent::unit()).unwrap();
        let s = build_spaces(&m, Variant::Nodal);
        let p = ProblemSpec::isotropic(1.0, 1.0).unwrap();
        let ex = assemble(&m, &s, &p, QuadratureMode::Exact, &AssemblyOptions::default()).unwrap();
        let co = assemble(&m, &s, &p, QuadratureMode::Corner, &AssemblyOptions::default()).unwrap();
        let m0 = Mat3([[1.0, 2.0, -1.0], [0.5, 3.0, 2.0], [4.0, -2.0, 1.0]]);
        let s0 = s.interpolate_stress(&m, |_| m0);
        let q: Vec<f64> = (0..s.multiplier.num_dofs).map(|i| (i as f64 * 0.37).sin()).collect();
        let lhs = crate::sparse::dot(&q, &ex.c.mul_vec(&s0));
        let rhs = crate::sparse::dot(&q, &co.c.mul_vec(&s0));
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        // Same for a with a constant field on one side.
        let s1: Vec<f64> = (0..s.stress.num_dofs).map(|i| (i as f64 * 0.11).cos()).collect();
        let ae = crate::sparse::dot(&s1, &ex.a.mul_vec(&s0));
        let ac = crate::sparse::dot(&s1, &co.a.mul_vec(&s0));
        assert!((ae - ac).abs() < 1e-12 * ae.abs().max(1.0));
    }

    #[test]
    fn boundary_rhs_matches_divergence_theorem() {
        // With u_D = x and σ constant, Σ_j s_j rhs_bc[j] = ∫_∂Ω (σ n)·x = ∫ tr σ.
        let m = SimplicialMesh::generate_cube_mesh(2, BoxExtent::unit()).unwrap();
        let s = build_spaces(&m, Variant::Moment);
        let p = ProblemSpec::isotropic(1.0, 1.0).unwrap().with_boundary_displacement(|x| *x);
        let sys = assemble(&m, &s, &p, QuadratureMode::Exact, &AssemblyOptions::default()).unwrap();
        let m0 = Mat3([[1.0, 2.0, -1.0], [0.5, 3.0, 2.0], [4.0, -2.0, 1.5]]);
        let s0 = s.interpolate_stress(&m, |_| m0);
        let lhs = crate::sparse::dot(&s0, &sys.rhs_bc);
        assert!((lhs - m0.trace()).abs() < 1e-12);
    }

    #[test]
    fn parallel_assembly_matches_sequential() {
        let m = SimplicialMesh::generate_cube_mesh(2, BoxExtent::unit()).unwrap();
        let s = build_spaces(&m, Variant::Moment);
        let p = ProblemSpec::isotropic(1.0, 1.0).unwrap().with_body_load(|x| Vec3::new(x[0], x[1] * x[2], 1.0));
        let seq = assemble(&m, &s, &p, QuadratureMode::Exact, &AssemblyOptions::default()).unwrap();
        let par =
            assemble(&m, &s, &p, QuadratureMode::Exact, &AssemblyOptions { policy: ExecPolicy::Parallel, ..Default::default() })
                .unwrap();
        assert_eq!(seq.a, par.a);
        assert_eq!(seq.b, par.b);
        assert_eq!(seq.c, par.c);
        assert_eq!(seq.rhs_g, par.rhs_g);
    }

    #[test]
    fn exact_a_is_spd_on_small_mesh() {
        let m = SimplicialMesh::generate_cube_mesh(1, BoxExtent::unit()).unwrap();
        for mode in [QuadratureMode::Exact, QuadratureMode::Corner] {
            let s = build_spaces(&m, Variant::Nodal);
            let p = ProblemSpec::isotropic(1.0, 1.0).unwrap();
            let sys = assemble(&m, &s, &p, mode, &AssemblyOptions::default()).unwrap();
            let ev = sys.a.to_dense().self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
            assert!(ev.iter().all(|&e| e > 0.0), "{mode}");
        }
    }
}

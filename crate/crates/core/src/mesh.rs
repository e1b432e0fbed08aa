//! Conformal tetrahedral simplicial complexes.
//!
//! Every sub-simplex is stored with ascending vertex indices. Edges and
//! facets are enumerated in lexicographic order of those tuples, so derived
//! numbering depends only on the vertex numbering and the cell order. Cells
//! are stored sorted, with the last two vertices swapped when needed to make
//! the signed volume positive.
//!
//! Orientation conventions:
//! - local facet `k` of a cell is the facet opposite local vertex `k`;
//! - the global normal of a facet points out of its lower-indexed cell (and
//!   hence outward on the boundary);
//! - the global tangent of an edge points from its lower to its higher vertex.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::tensor::{Mat3, Vec3};

/// Local edges of a cell as pairs of local vertices.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("cell {cell} references vertex {vertex}, but the mesh has {num_vertices} vertices")]
    InvalidVertex { cell: usize, vertex: usize, num_vertices: usize },
    #[error("cell {cell} repeats a vertex: {vertices:?}")]
    RepeatedVertex { cell: usize, vertices: [usize; 4] },
    #[error("cell {cell} {vertices:?} is degenerate (signed volume {volume:e})")]
    DegenerateCell { cell: usize, vertices: [usize; 4], volume: f64 },
    #[error("non-conforming mesh: facet {facet:?} is shared by {count} cells")]
    OverSharedFacet { facet: [usize; 3], count: usize },
    #[error("non-conforming mesh: vertex {vertex} hangs inside facet {facet:?}")]
    HangingVertex { vertex: usize, facet: [usize; 3] },
    #[error("mesh has no cells")]
    Empty,
    #[error("mesh generator requires n >= 1")]
    InvalidResolution,
    #[error("mesh file parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mesh file i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Axis-aligned box `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxExtent {
    pub min: Vec3,
    pub max: Vec3,
}

impl BoxExtent {
    pub fn unit() -> Self {
        BoxExtent { min: Vec3::ZERO, max: Vec3::new(1.0, 1.0, 1.0) }
    }

    pub fn volume(&self) -> f64 {
        let d = self.max - self.min;
        d[0] * d[1] * d[2]
    }
}

#[derive(Clone, Debug)]
pub struct SimplicialMesh {
    vertices: Vec<Vec3>,
    cells: Vec<[usize; 4]>,
    edges: Vec<[usize; 2]>,
    facets: Vec<[usize; 3]>,
    cell_facets: Vec<[usize; 4]>,
    cell_edges: Vec<[usize; 6]>,
    facet_cells: Vec<(usize, Option<usize>)>,
    edge_cells: Vec<Vec<usize>>,
    vertex_cells: Vec<Vec<usize>>,
    vertex_facets: Vec<Vec<usize>>,
    vertex_edges: Vec<Vec<usize>>,
    facet_normals: Vec<Vec3>,
    facet_areas: Vec<f64>,
    edge_tangents: Vec<Vec3>,
    edge_lengths: Vec<f64>,
    cell_volumes: Vec<f64>,
    facet_boundary: Vec<bool>,
    edge_boundary: Vec<bool>,
    vertex_boundary: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshQuality {
    pub h_max: f64,
    /// `max_T h_T³ / |T|`; at least `6√2` (regular tetrahedron).
    pub regularity: f64,
}

/// Cells, facets and edges around a vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexPatch {
    pub vertex: usize,
    pub cells: Vec<usize>,
    /// Facets of the patch that contain the vertex.
    pub inner_facets: Vec<usize>,
    /// Facets of the patch that do not contain the vertex.
    pub outer_facets: Vec<usize>,
    pub edges: Vec<usize>,
}

fn signed_volume(p: &[Vec3; 4]) -> f64 {
    Mat3::from_cols(p[1] - p[0], p[2] - p[0], p[3] - p[0]).det() / 6.0
}

fn point_in_triangle(x: &Vec3, tri: [&Vec3; 3], tol: f64) -> bool {
    let e1 = *tri[1] - *tri[0];
    let e2 = *tri[2] - *tri[0];
    let n = e1.cross(&e2);
    let area2 = n.norm();
    let d = *x - *tri[0];
    let scale = e1.norm().max(e2.norm());
    if (d.dot(&n) / area2).abs() > tol * scale {
        return false;
    }
    // Barycentric coordinates in the facet plane.
    let l1 = d.cross(&e2).dot(&n) / (area2 * area2);
    let l2 = e1.cross(&d).dot(&n) / (area2 * area2);
    let l0 = 1.0 - l1 - l2;
    l0 >= -tol && l1 >= -tol && l2 >= -tol
}

impl SimplicialMesh {
    /// Builds the full complex from vertex coordinates and cell tuples.
    pub fn build_connectivity(vertices: Vec<Vec3>, cells: Vec<[usize; 4]>) -> Result<Self, MeshError> {
        if cells.is_empty() {
            return Err(MeshError::Empty);
        }
        let nv = vertices.len();
        let mut canonical = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            if let Some(&v) = cell.iter().find(|&&v| v >= nv) {
                return Err(MeshError::InvalidVertex { cell: c, vertex: v, num_vertices: nv });
            }
            let mut s = *cell;
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(MeshError::RepeatedVertex { cell: c, vertices: *cell });
            }
            let p = s.map(|v| vertices[v]);
            let vol = signed_volume(&p);
            let h = (p[1] - p[0]).norm().max((p[2] - p[0]).norm()).max((p[3] - p[0]).norm());
            if !(vol.abs() > 1e-14 * h * h * h) {
                return Err(MeshError::DegenerateCell { cell: c, vertices: *cell, volume: vol });
            }
            if vol < 0.0 {
                s.swap(2, 3);
            }
            canonical.push(s);
        }

        let sorted3 = |mut t: [usize; 3]| {
            t.sort_unstable();
            t
        };
        let sorted2 = |a: usize, b: usize| if a < b { [a, b] } else { [b, a] };

        let mut facets: Vec<[usize; 3]> = Vec::with_capacity(canonical.len() * 4);
        let mut edges: Vec<[usize; 2]> = Vec::with_capacity(canonical.len() * 6);
        for cell in &canonical {
            for k in 0..4 {
                let t = [cell[(k + 1) % 4], cell[(k + 2) % 4], cell[(k + 3) % 4]];
                facets.push(sorted3(t));
            }
            for [a, b] in LOCAL_EDGES {
                edges.push(sorted2(cell[a], cell[b]));
            }
        }
        facets.sort_unstable();
        facets.dedup();
        edges.sort_unstable();
        edges.dedup();
        let facet_index: HashMap<[usize; 3], usize> = facets.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        let edge_index: HashMap<[usize; 2], usize> = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();

        let mut cell_facets = Vec::with_capacity(canonical.len());
        let mut cell_edges = Vec::with_capacity(canonical.len());
        let mut facet_cell_lists: Vec<Vec<usize>> = vec![Vec::new(); facets.len()];
        let mut edge_cells: Vec<Vec<usize>> = vec![Vec::new(); edges.len()];
        let mut vertex_cells: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (c, cell) in canonical.iter().enumerate() {
            let mut cf = [0; 4];
            for (k, slot) in cf.iter_mut().enumerate() {
                let t = sorted3([cell[(k + 1) % 4], cell[(k + 2) % 4], cell[(k + 3) % 4]]);
                *slot = facet_index[&t];
                facet_cell_lists[*slot].push(c);
            }
            let mut ce = [0; 6];
            for (j, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                ce[j] = edge_index[&sorted2(cell[*a], cell[*b])];
                edge_cells[ce[j]].push(c);
            }
            for &v in cell {
                vertex_cells[v].push(c);
            }
            cell_facets.push(cf);
            cell_edges.push(ce);
        }

        let mut facet_cells = Vec::with_capacity(facets.len());
        for (f, list) in facet_cell_lists.iter().enumerate() {
            match list.as_slice() {
                [a] => facet_cells.push((*a, None)),
                [a, b] => facet_cells.push(((*a).min(*b), Some((*a).max(*b)))),
                _ => return Err(MeshError::OverSharedFacet { facet: facets[f], count: list.len() }),
            }
        }

        let cell_volumes: Vec<f64> = canonical.iter().map(|c| signed_volume(&c.map(|v| vertices[v]))).collect();

        let mut facet_normals = Vec::with_capacity(facets.len());
        let mut facet_areas = Vec::with_capacity(facets.len());
        for (f, tri) in facets.iter().enumerate() {
            let [a, b, c] = tri.map(|v| vertices[v]);
            let n = (b - a).cross(&(c - a));
            let area = 0.5 * n.norm();
            let mut n = n.scale(1.0 / n.norm());
            // Point out of the lower-indexed adjacent cell.
            let owner = &canonical[facet_cells[f].0];
            let opposite = owner.iter().copied().find(|v| !tri.contains(v)).expect("cell has a vertex off the facet");
            if n.dot(&(vertices[opposite] - a)) > 0.0 {
                n = -n;
            }
            facet_normals.push(n);
            facet_areas.push(area);
        }

        let mut edge_tangents = Vec::with_capacity(edges.len());
        let mut edge_lengths = Vec::with_capacity(edges.len());
        for [a, b] in &edges {
            let t = vertices[*b] - vertices[*a];
            let len = t.norm();
            edge_tangents.push(t.scale(1.0 / len));
            edge_lengths.push(len);
        }

        let facet_boundary: Vec<bool> = facet_cells.iter().map(|(_, b)| b.is_none()).collect();
        let mut edge_boundary = vec![false; edges.len()];
        let mut vertex_boundary = vec![false; nv];
        for (f, tri) in facets.iter().enumerate() {
            if facet_boundary[f] {
                for &v in tri {
                    vertex_boundary[v] = true;
                }
                for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                    edge_boundary[edge_index[&[tri[a], tri[b]]]] = true;
                }
            }
        }

        let mut vertex_facets: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (f, tri) in facets.iter().enumerate() {
            for &v in tri {
                vertex_facets[v].push(f);
            }
        }
        let mut vertex_edges: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (e, ed) in edges.iter().enumerate() {
            for &v in ed {
                vertex_edges[v].push(e);
            }
        }

        let mesh = SimplicialMesh {
            vertices,
            cells: canonical,
            edges,
            facets,
            cell_facets,
            cell_edges,
            facet_cells,
            edge_cells,
            vertex_cells,
            vertex_facets,
            vertex_edges,
            facet_normals,
            facet_areas,
            edge_tangents,
            edge_lengths,
            cell_volumes,
            facet_boundary,
            edge_boundary,
            vertex_boundary,
        };
        mesh.check_hanging_vertices()?;
        Ok(mesh)
    }

    /// A vertex lying on a boundary facet it does not belong to means a
    /// neighbouring cell was split without splitting this one.
    fn check_hanging_vertices(&self) -> Result<(), MeshError> {
        let tol = 1e-10;
        for (f, tri) in self.facets.iter().enumerate() {
            if !self.facet_boundary[f] {
                continue;
            }
            let p = tri.map(|v| &self.vertices[v]);
            let mut lo = *p[0];
            let mut hi = *p[0];
            for q in &p[1..] {
                for k in 0..3 {
                    lo[k] = lo[k].min(q[k]);
                    hi[k] = hi[k].max(q[k]);
                }
            }
            let pad = tol * (hi - lo).norm();
            for v in 0..self.vertices.len() {
                if tri.contains(&v) || !self.vertex_boundary[v] {
                    continue;
                }
                let x = &self.vertices[v];
                if (0..3).any(|k| x[k] < lo[k] - pad || x[k] > hi[k] + pad) {
                    continue;
                }
                if point_in_triangle(x, p, tol) {
                    return Err(MeshError::HangingVertex { vertex: v, facet: *tri });
                }
            }
        }
        Ok(())
    }

    /// Structured Kuhn triangulation of a box: `(n+1)³` lattice vertices and
    /// six tetrahedra per sub-cube, all sharing the sub-cube's main diagonal.
    pub fn generate_cube_mesh(n: usize, extent: BoxExtent) -> Result<Self, MeshError> {
        if n == 0 {
            return Err(MeshError::InvalidResolution);
        }
        let np = n + 1;
        let idx = |i: usize, j: usize, k: usize| i + np * (j + np * k);
        let d = extent.max - extent.min;
        let mut vertices = Vec::with_capacity(np * np * np);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    let t = [i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64];
                    vertices.push(Vec3::from_fn(|a| extent.min[a] + d[a] * t[a]));
                }
            }
        }
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut cells = Vec::with_capacity(6 * n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for perm in PERMS {
                        let mut at = [i, j, k];
                        let mut cell = [idx(i, j, k), 0, 0, 0];
                        for (step, &axis) in perm.iter().enumerate() {
                            at[axis] += 1;
                            cell[step + 1] = idx(at[0], at[1], at[2]);
                        }
                        cells.push(cell);
                    }
                }
            }
        }
        Self::build_connectivity(vertices, cells)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }
    pub fn vertex(&self, v: usize) -> Vec3 {
        self.vertices[v]
    }
    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }
    pub fn cell(&self, c: usize) -> [usize; 4] {
        self.cells[c]
    }
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }
    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }
    pub fn facets(&self) -> &[[usize; 3]] {
        &self.facets
    }
    pub fn facet(&self, f: usize) -> [usize; 3] {
        self.facets[f]
    }
    /// Global facet index of local facet `k` (opposite local vertex `k`).
    pub fn cell_facets(&self, c: usize) -> [usize; 4] {
        self.cell_facets[c]
    }
    pub fn cell_edges(&self, c: usize) -> [usize; 6] {
        self.cell_edges[c]
    }
    /// Adjacent cells of a facet: `(lower, higher)`; `higher` is `None` on the
    /// boundary.
    pub fn facet_cells(&self, f: usize) -> (usize, Option<usize>) {
        self.facet_cells[f]
    }
    pub fn edge_cells(&self, e: usize) -> &[usize] {
        &self.edge_cells[e]
    }
    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }
    pub fn vertex_facets(&self, v: usize) -> &[usize] {
        &self.vertex_facets[v]
    }
    pub fn vertex_edges(&self, v: usize) -> &[usize] {
        &self.vertex_edges[v]
    }
    pub fn facet_normal(&self, f: usize) -> Vec3 {
        self.facet_normals[f]
    }
    pub fn facet_area(&self, f: usize) -> f64 {
        self.facet_areas[f]
    }
    pub fn edge_tangent(&self, e: usize) -> Vec3 {
        self.edge_tangents[e]
    }
    pub fn edge_length(&self, e: usize) -> f64 {
        self.edge_lengths[e]
    }
    pub fn cell_volume(&self, c: usize) -> f64 {
        self.cell_volumes[c]
    }
    pub fn is_boundary_facet(&self, f: usize) -> bool {
        self.facet_boundary[f]
    }
    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_boundary[e]
    }
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_boundary[v]
    }

    pub fn cell_points(&self, c: usize) -> [Vec3; 4] {
        self.cells[c].map(|v| self.vertices[v])
    }

    pub fn facet_points(&self, f: usize) -> [Vec3; 3] {
        self.facets[f].map(|v| self.vertices[v])
    }

    /// +1 when the facet's global normal is outward for `cell`, −1 otherwise.
    pub fn facet_sign(&self, cell: usize, f: usize) -> f64 {
        if self.facet_cells[f].0 == cell {
            1.0
        } else {
            -1.0
        }
    }

    /// Position of `v` among the cell's stored vertices.
    pub fn local_vertex(&self, cell: usize, v: usize) -> Option<usize> {
        self.cells[cell].iter().position(|&w| w == v)
    }

    /// Reference-to-physical map `x = J ξ + x₀` sending `(0, e₁, e₂, e₃)` to the
    /// cell's vertices. `det J = 6 |T|`.
    pub fn affine_map(&self, c: usize) -> (Mat3, Vec3) {
        let p = self.cell_points(c);
        (Mat3::from_cols(p[1] - p[0], p[2] - p[0], p[3] - p[0]), p[0])
    }

    /// Gradients of the four barycentric coordinates of a cell.
    pub fn barycentric_gradients(&self, c: usize) -> [Vec3; 4] {
        let (jac, _) = self.affine_map(c);
        let inv = jac.inverse().expect("cells are nondegenerate by construction");
        let (g1, g2, g3) = (inv.row(0), inv.row(1), inv.row(2));
        [-(g1 + g2 + g3), g1, g2, g3]
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_facets() as i64 - self.num_cells() as i64
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        self.cell_edges[c].iter().map(|&e| self.edge_lengths[e]).fold(0.0, f64::max)
    }

    pub fn quality(&self) -> MeshQuality {
        let mut h_max = 0.0f64;
        let mut regularity = 0.0f64;
        for c in 0..self.num_cells() {
            let h = self.cell_diameter(c);
            h_max = h_max.max(h);
            regularity = regularity.max(h * h * h / self.cell_volumes[c]);
        }
        MeshQuality { h_max, regularity }
    }

    pub fn total_volume(&self) -> f64 {
        self.cell_volumes.iter().sum()
    }

    pub fn vertex_patch(&self, v: usize) -> VertexPatch {
        let cells = self.vertex_cells[v].clone();
        let mut inner = Vec::new();
        let mut outer = Vec::new();
        let mut edges = Vec::new();
        for &c in &cells {
            for f in self.cell_facets[c] {
                if self.facets[f].contains(&v) {
                    inner.push(f);
                } else {
                    outer.push(f);
                }
            }
            for e in self.cell_edges[c] {
                if self.edges[e].contains(&v) {
                    edges.push(e);
                }
            }
        }
        for list in [&mut inner, &mut outer, &mut edges] {
            list.sort_unstable();
            list.dedup();
        }
        VertexPatch { vertex: v, cells, inner_facets: inner, outer_facets: outer, edges }
    }

    /// Serializes to the ASCII `tetmesh 1` format using stored (canonical) cells.
    pub fn to_ascii(&self) -> String {
        let mut s = String::new();
        s.push_str("tetmesh 1\n");
        let _ = writeln!(s, "{} {}", self.num_vertices(), self.num_cells());
        for v in &self.vertices {
            let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
        }
        for c in &self.cells {
            let _ = writeln!(s, "{} {} {} {}", c[0], c[1], c[2], c[3]);
        }
        s
    }

    pub fn from_ascii(text: &str) -> Result<Self, MeshError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, message: &str| MeshError::Parse { line: line + 1, message: message.to_string() };
        let (ln, header) = lines.next().ok_or_else(|| parse_err(0, "empty file"))?;
        if header.trim() != "tetmesh 1" {
            return Err(parse_err(ln, "expected header 'tetmesh 1'"));
        }
        let (ln, counts) = lines.next().ok_or_else(|| parse_err(1, "missing counts line"))?;
        let counts: Vec<usize> = counts
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(ln, "invalid count")))
            .collect::<Result<_, _>>()?;
        let [nv, nt] = counts[..] else {
            return Err(parse_err(ln, "expected '<V> <T>'"));
        };
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines.next().ok_or_else(|| parse_err(usize::MAX - 1, "unexpected end of file in vertices"))?;
            let xs: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| parse_err(ln, "invalid coordinate")))
                .collect::<Result<_, _>>()?;
            let [x, y, z] = xs[..] else {
                return Err(parse_err(ln, "expected 3 coordinates"));
            };
            vertices.push(Vec3::new(x, y, z));
        }
        let mut cells = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, l) = lines.next().ok_or_else(|| parse_err(usize::MAX - 1, "unexpected end of file in cells"))?;
            let vs: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| parse_err(ln, "invalid vertex index")))
                .collect::<Result<_, _>>()?;
            let [a, b, c, d] = vs[..] else {
                return Err(parse_err(ln, "expected 4 vertex indices"));
            };
            cells.push([a, b, c, d]);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(parse_err(ln, "trailing content"));
        }
        Self::build_connectivity(vertices, cells)
    }

    pub fn write_ascii(&self, path: &Path) -> Result<(), MeshError> {
        std::fs::write(path, self.to_ascii())?;
        Ok(())
    }

    pub fn read_ascii(path: &Path) -> Result<Self, MeshError> {
        Self::from_ascii(&std::fs::read_to_string(path)?)
    }
}

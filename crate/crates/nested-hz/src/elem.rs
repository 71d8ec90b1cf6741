//! Local shape functions on a triangle: scalar cubic Lagrange, vector
//! quadratic Lagrange for the displacement, and the thirty symmetric
//! matrix-valued stress shapes (vertex, interior, edge-tangential bubble and
//! edge-normal groups).

use crate::la::{cross, normalize, perp, sub};
use crate::mesh::Mesh;

/// Symmetric 2x2 matrix, stored as the three independent entries.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMatrix2 {
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
}

impl SymMatrix2 {
    pub const ZERO: SymMatrix2 = SymMatrix2 { s11: 0.0, s12: 0.0, s22: 0.0 };

    pub fn identity() -> Self {
        SymMatrix2 { s11: 1.0, s12: 0.0, s22: 1.0 }
    }

    /// Canonical basis: `S_1 = e1 e1^T`, `S_2 = e1 e2^T + e2 e1^T`, `S_3 = e2 e2^T`.
    pub fn canonical(j: usize) -> Self {
        match j {
            0 => SymMatrix2 { s11: 1.0, s12: 0.0, s22: 0.0 },
            1 => SymMatrix2 { s11: 0.0, s12: 1.0, s22: 0.0 },
            2 => SymMatrix2 { s11: 0.0, s12: 0.0, s22: 1.0 },
            _ => unreachable!("canonical basis index"),
        }
    }

    /// Rank-one matrix `v v^T`.
    pub fn outer(v: [f64; 2]) -> Self {
        SymMatrix2 { s11: v[0] * v[0], s12: v[0] * v[1], s22: v[1] * v[1] }
    }

    /// Symmetrized product `u v^T + v u^T`.
    pub fn sym_outer(u: [f64; 2], v: [f64; 2]) -> Self {
        SymMatrix2 { s11: 2.0 * u[0] * v[0], s12: u[0] * v[1] + u[1] * v[0], s22: 2.0 * u[1] * v[1] }
    }

    pub fn trace(&self) -> f64 {
        self.s11 + self.s22
    }

    /// Frobenius inner product `A : B`.
    pub fn ddot(&self, other: &SymMatrix2) -> f64 {
        self.s11 * other.s11 + 2.0 * self.s12 * other.s12 + self.s22 * other.s22
    }

    pub fn matvec(&self, v: [f64; 2]) -> [f64; 2] {
        [self.s11 * v[0] + self.s12 * v[1], self.s12 * v[0] + self.s22 * v[1]]
    }

    pub fn scaled(&self, s: f64) -> Self {
        SymMatrix2 { s11: self.s11 * s, s12: self.s12 * s, s22: self.s22 * s }
    }

    pub fn add(&self, other: &SymMatrix2) -> Self {
        SymMatrix2 { s11: self.s11 + other.s11, s12: self.s12 + other.s12, s22: self.s22 + other.s22 }
    }

    pub fn sub(&self, other: &SymMatrix2) -> Self {
        SymMatrix2 { s11: self.s11 - other.s11, s12: self.s12 - other.s12, s22: self.s22 - other.s22 }
    }

    /// Coefficients with respect to the canonical basis.
    pub fn components(&self) -> [f64; 3] {
        [self.s11, self.s12, self.s22]
    }

    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }
}

/// Per-element geometry: vertex coordinates, barycentric gradients, and the
/// globally oriented frame of each edge (tangent from the lower vertex id to
/// the higher one, normal rotated +90 degrees). Local edge `e` is opposite
/// local vertex `e`.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub vertex_ids: [usize; 3],
    pub coords: [[f64; 2]; 3],
    pub area: f64,
    pub grad_lambda: [[f64; 2]; 3],
    pub edge_tangent: [[f64; 2]; 3],
    pub edge_normal: [[f64; 2]; 3],
    pub edge_len: [f64; 3],
}

impl ElementGeometry {
    pub fn new(vertex_ids: [usize; 3], coords: [[f64; 2]; 3]) -> Self {
        let area = 0.5 * cross(sub(coords[1], coords[0]), sub(coords[2], coords[0]));
        assert!(area > 0.0, "element must be positively oriented");
        let mut grad_lambda = [[0.0; 2]; 3];
        for k in 0..3 {
            let e = sub(coords[(k + 2) % 3], coords[(k + 1) % 3]);
            grad_lambda[k] = [perp(e)[0] / (2.0 * area), perp(e)[1] / (2.0 * area)];
        }
        let mut edge_tangent = [[0.0; 2]; 3];
        let mut edge_normal = [[0.0; 2]; 3];
        let mut edge_len = [0.0; 3];
        for e in 0..3 {
            let (la, lb) = ((e + 1) % 3, (e + 2) % 3);
            let (lo, hi) = if vertex_ids[la] < vertex_ids[lb] { (la, lb) } else { (lb, la) };
            let d = sub(coords[hi], coords[lo]);
            edge_len[e] = d[0].hypot(d[1]);
            edge_tangent[e] = normalize(d);
            edge_normal[e] = perp(edge_tangent[e]);
        }
        ElementGeometry { vertex_ids, coords, area, grad_lambda, edge_tangent, edge_normal, edge_len }
    }

    pub fn from_mesh(mesh: &Mesh, elem: usize) -> Self {
        Self::new(mesh.elem_vertices(elem), mesh.elem_coords(elem))
    }

    pub fn hk(&self) -> f64 {
        self.area.sqrt()
    }

    pub fn point(&self, l: [f64; 3]) -> [f64; 2] {
        [
            l[0] * self.coords[0][0] + l[1] * self.coords[1][0] + l[2] * self.coords[2][0],
            l[0] * self.coords[0][1] + l[1] * self.coords[1][1] + l[2] * self.coords[2][1],
        ]
    }

    pub fn bary(&self, p: [f64; 2]) -> [f64; 3] {
        let c = &self.coords;
        let area2 = 2.0 * self.area;
        [
            cross(sub(c[2], c[1]), sub(p, c[1])) / area2,
            cross(sub(c[0], c[2]), sub(p, c[2])) / area2,
            cross(sub(c[1], c[0]), sub(p, c[0])) / area2,
        ]
    }

    /// Barycentric coordinates of a point on local edge `e` at parameter
    /// `s in [0,1]` measured along the global tangent direction.
    pub fn edge_bary(&self, e: usize, s: f64) -> [f64; 3] {
        let (la, lb) = ((e + 1) % 3, (e + 2) % 3);
        let (lo, hi) = if self.vertex_ids[la] < self.vertex_ids[lb] { (la, lb) } else { (lb, la) };
        let mut l = [0.0; 3];
        l[lo] = 1.0 - s;
        l[hi] = s;
        l
    }

    /// Global node slot (0 or 1) of the edge-interior node `(e, j)`: nodes
    /// are ordered along the global tangent, so shared degrees of freedom
    /// match across neighbouring elements without sign tables.
    pub fn edge_node_slot(&self, e: usize, j: usize) -> usize {
        let near = (e + 1 + j) % 3;
        let far = (e + 1 + (1 - j)) % 3;
        if self.vertex_ids[near] < self.vertex_ids[far] {
            0
        } else {
            1
        }
    }
}

/// Values of the ten scalar cubic Lagrange basis functions.
///
/// Node order: vertices 0..3, then the two interior nodes of each edge
/// (edge `e` opposite vertex `e`, node `(e, j)` nearest local vertex
/// `(e+1+j) % 3`), then the center node.
pub fn lagrange_p3(l: [f64; 3]) -> [f64; 10] {
    let mut out = [0.0; 10];
    for k in 0..3 {
        out[k] = 4.5 * l[k] * (l[k] - 1.0 / 3.0) * (l[k] - 2.0 / 3.0);
    }
    for e in 0..3 {
        for j in 0..2 {
            let near = (e + 1 + j) % 3;
            out[3 + 2 * e + j] = 13.5 * l[(e + 1) % 3] * l[(e + 2) % 3] * (l[near] - 1.0 / 3.0);
        }
    }
    out[9] = 27.0 * l[0] * l[1] * l[2];
    out
}

/// Barycentric partial derivatives of the cubic basis, `d phi / d lambda_k`.
pub fn lagrange_p3_dl(l: [f64; 3]) -> [[f64; 3]; 10] {
    let mut out = [[0.0; 3]; 10];
    for k in 0..3 {
        let x = l[k];
        out[k][k] = 4.5 * ((x - 1.0 / 3.0) * (x - 2.0 / 3.0) + x * (x - 2.0 / 3.0) + x * (x - 1.0 / 3.0));
    }
    for e in 0..3 {
        let (p, q) = ((e + 1) % 3, (e + 2) % 3);
        for j in 0..2 {
            let near = (e + 1 + j) % 3;
            let idx = 3 + 2 * e + j;
            out[idx][p] += 13.5 * l[q] * (l[near] - 1.0 / 3.0);
            out[idx][q] += 13.5 * l[p] * (l[near] - 1.0 / 3.0);
            out[idx][near] += 13.5 * l[p] * l[q];
        }
    }
    out[9][0] = 27.0 * l[1] * l[2];
    out[9][1] = 27.0 * l[0] * l[2];
    out[9][2] = 27.0 * l[0] * l[1];
    out
}

/// Physical gradients of the cubic basis on the given element.
pub fn lagrange_p3_grad(l: [f64; 3], geo: &ElementGeometry) -> [[f64; 2]; 10] {
    let dl = lagrange_p3_dl(l);
    let mut out = [[0.0; 2]; 10];
    for i in 0..10 {
        for k in 0..3 {
            out[i][0] += dl[i][k] * geo.grad_lambda[k][0];
            out[i][1] += dl[i][k] * geo.grad_lambda[k][1];
        }
    }
    out
}

/// Values of the six scalar quadratic Lagrange basis functions: vertices
/// 0..3, then the midpoint of edge `e` at slot `3 + e`.
pub fn lagrange_p2(l: [f64; 3]) -> [f64; 6] {
    let mut out = [0.0; 6];
    for k in 0..3 {
        out[k] = l[k] * (2.0 * l[k] - 1.0);
    }
    for e in 0..3 {
        out[3 + e] = 4.0 * l[(e + 1) % 3] * l[(e + 2) % 3];
    }
    out
}

pub const N_STRESS_SHAPES: usize = 30;
pub const N_DISP_SHAPES: usize = 12;

/// Role of a local stress shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeRole {
    /// `phi_p S_j` at local vertex `p`, canonical matrix `j`.
    Vertex { p: usize, j: usize },
    /// `phi_0 S_j` (interior bubble).
    Interior { j: usize },
    /// `phi_(e,j)|_K  t_e t_e^T` (edge-tangential bubble, one-sided).
    EdgeTangential { e: usize, j: usize },
    /// `phi_(e,j) S_perp(e,m)` (shared edge-normal shape).
    EdgeNormal { e: usize, j: usize, m: usize },
}

/// Decodes a local stress shape index.
///
/// Layout: `3p + j` for vertex shapes (0..9), `9 + j` interior (9..12),
/// `12 + 2e + j` edge-tangential (12..18), `18 + 4e + 2j + m` edge-normal
/// (18..30).
pub fn shape_role(idx: usize) -> ShapeRole {
    match idx {
        0..=8 => ShapeRole::Vertex { p: idx / 3, j: idx % 3 },
        9..=11 => ShapeRole::Interior { j: idx - 9 },
        12..=17 => ShapeRole::EdgeTangential { e: (idx - 12) / 2, j: (idx - 12) % 2 },
        18..=29 => {
            let r = idx - 18;
            ShapeRole::EdgeNormal { e: r / 4, j: (r / 2) % 2, m: r % 2 }
        }
        _ => unreachable!("stress shape index out of range"),
    }
}

/// The thirty stress shapes of one element: each is a scalar cubic Lagrange
/// function times a constant symmetric matrix.
#[derive(Debug, Clone)]
pub struct StressShapes {
    pub geo: ElementGeometry,
    /// Constant matrix factor per shape.
    matrices: [SymMatrix2; N_STRESS_SHAPES],
    /// Scalar cubic node feeding each shape.
    scalar_node: [usize; N_STRESS_SHAPES],
}

impl StressShapes {
    pub fn new(geo: ElementGeometry) -> Self {
        let mut matrices = [SymMatrix2::ZERO; N_STRESS_SHAPES];
        let mut scalar_node = [0usize; N_STRESS_SHAPES];
        for idx in 0..N_STRESS_SHAPES {
            match shape_role(idx) {
                ShapeRole::Vertex { p, j } => {
                    matrices[idx] = SymMatrix2::canonical(j);
                    scalar_node[idx] = p;
                }
                ShapeRole::Interior { j } => {
                    matrices[idx] = SymMatrix2::canonical(j);
                    scalar_node[idx] = 9;
                }
                ShapeRole::EdgeTangential { e, j } => {
                    matrices[idx] = SymMatrix2::outer(geo.edge_tangent[e]);
                    scalar_node[idx] = 3 + 2 * e + j;
                }
                ShapeRole::EdgeNormal { e, j, m } => {
                    let n = geo.edge_normal[e];
                    let t = geo.edge_tangent[e];
                    matrices[idx] = if m == 0 { SymMatrix2::outer(n) } else { SymMatrix2::sym_outer(n, t) };
                    scalar_node[idx] = 3 + 2 * e + j;
                }
            }
        }
        StressShapes { geo, matrices, scalar_node }
    }

    pub fn from_mesh(mesh: &Mesh, elem: usize) -> Self {
        Self::new(ElementGeometry::from_mesh(mesh, elem))
    }

    /// Constant matrix factor of shape `idx`.
    pub fn matrix(&self, idx: usize) -> SymMatrix2 {
        self.matrices[idx]
    }

    pub fn scalar_node(&self, idx: usize) -> usize {
        self.scalar_node[idx]
    }

    pub fn eval(&self, idx: usize, l: [f64; 3]) -> SymMatrix2 {
        let phi = lagrange_p3(l)[self.scalar_node[idx]];
        self.matrices[idx].scaled(phi)
    }

    /// Values of all thirty shapes at once.
    pub fn eval_all(&self, l: [f64; 3]) -> [SymMatrix2; N_STRESS_SHAPES] {
        let phi = lagrange_p3(l);
        let mut out = [SymMatrix2::ZERO; N_STRESS_SHAPES];
        for idx in 0..N_STRESS_SHAPES {
            out[idx] = self.matrices[idx].scaled(phi[self.scalar_node[idx]]);
        }
        out
    }

    /// Row-wise divergence of shape `idx`: with a constant matrix factor `S`
    /// this is `S grad(phi)`.
    pub fn div(&self, idx: usize, l: [f64; 3]) -> [f64; 2] {
        let grad = lagrange_p3_grad(l, &self.geo)[self.scalar_node[idx]];
        self.matrices[idx].matvec(grad)
    }

    pub fn div_all(&self, l: [f64; 3]) -> [[f64; 2]; N_STRESS_SHAPES] {
        let grads = lagrange_p3_grad(l, &self.geo);
        let mut out = [[0.0; 2]; N_STRESS_SHAPES];
        for idx in 0..N_STRESS_SHAPES {
            out[idx] = self.matrices[idx].matvec(grads[self.scalar_node[idx]]);
        }
        out
    }
}

/// Vector quadratic displacement shapes: shape `2s + c` is the scalar P2
/// function `s` times coordinate direction `c`. Purely element-local.
pub fn disp_shape(idx: usize, l: [f64; 3]) -> [f64; 2] {
    let v = lagrange_p2(l)[idx / 2];
    if idx % 2 == 0 {
        [v, 0.0]
    } else {
        [0.0, v]
    }
}

pub fn disp_shapes_all(l: [f64; 3]) -> [[f64; 2]; N_DISP_SHAPES] {
    let p2 = lagrange_p2(l);
    let mut out = [[0.0; 2]; N_DISP_SHAPES];
    for s in 0..6 {
        out[2 * s] = [p2[s], 0.0];
        out[2 * s + 1] = [0.0, p2[s]];
    }
    out
}

/// Checks that a barycentric triple sums to one; evaluation outside the
/// triangle (negative coordinates) is deliberately allowed for trace math.
pub fn assert_bary(l: [f64; 3]) {
    debug_assert!((l[0] + l[1] + l[2] - 1.0).abs() < 1e-9, "barycentric coordinates must sum to 1");
}

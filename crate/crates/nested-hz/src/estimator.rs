//! Residual a-posteriori error estimator, data oscillations, and bulk
//! (Doerfler) marking.
//!
//! Per element `eta^2(K) = h_K^4 ||curl curl(A sigma_h)||_K^2 +
//! sum_edges (h_K ||J_1||_e^2 + h_K^3 ||J_2||_e^2)` with `h_K = |K|^(1/2)`.
//! On interior edges the `J` terms are jumps of the tangential strain and
//! of the rotation of the strain; on displacement-boundary edges they are
//! one-sided values corrected by tangential derivatives of the boundary
//! data; traction-boundary edges carry the data oscillation of `g` instead.
//! All differentiation of the discrete stress is exact polynomial algebra.

use crate::elem::{lagrange_p2, ElementGeometry, StressShapes, SymMatrix2};
use crate::fields::StressField;
use crate::la::{dot, solve_dense, sub};
use crate::poly::{lattice_nodes, Poly3};
use crate::problems::{DirichletKind, ProblemSpec};
use crate::quad::{edge_rule, triangle_rule};
use crate::system::QuadConfig;
use std::sync::OnceLock;

/// Per-element indicators and data oscillations.
#[derive(Debug, Clone)]
pub struct Estimate {
    /// `eta^2(K)` per element.
    pub eta2: Vec<f64>,
    /// `h_K^2 ||f - Q f||_K^2` per element.
    pub osc_f2: Vec<f64>,
    /// `h_e ||g - sigma_h n||_e^2` per edge (zero off the traction boundary).
    pub osc_g2: Vec<f64>,
    pub eta2_total: f64,
    pub osc_f2_total: f64,
    pub osc_g2_total: f64,
}

impl Estimate {
    /// Total estimator `(eta^2 + osc_f^2 + osc_g^2)^(1/2)`.
    pub fn total(&self) -> f64 {
        (self.eta2_total + self.osc_f2_total + self.osc_g2_total).sqrt()
    }

    pub fn eta(&self) -> f64 {
        self.eta2_total.sqrt()
    }
}

/// Cubic polynomials of the ten scalar nodal functions in the first two
/// barycentric coordinates, shared by all elements.
fn scalar_node_polys() -> &'static [Poly3; 10] {
    static POLYS: OnceLock<[Poly3; 10]> = OnceLock::new();
    POLYS.get_or_init(|| {
        let nodes = lattice_nodes();
        let mut out = [Poly3::zero(); 10];
        for (k, poly) in out.iter_mut().enumerate() {
            let mut vals = [0.0; 10];
            for (i, n) in nodes.iter().enumerate() {
                vals[i] = crate::elem::lagrange_p3(*n)[k];
            }
            *poly = Poly3::from_p3_nodal(&vals);
        }
        out
    })
}

/// The three component polynomials of `A sigma_h` on one element, plus the
/// element geometry needed to differentiate them in physical coordinates.
struct StrainPolys {
    m11: Poly3,
    m12: Poly3,
    m22: Poly3,
    grad_l1: [f64; 2],
    grad_l2: [f64; 2],
}

impl StrainPolys {
    fn build(field: &StressField, elem: usize, shapes: &StressShapes, mat: &crate::system::ComplianceTensor) -> Self {
        let local = field.dofmap.local_stress_coeffs(elem, &field.coeffs);
        let polys = scalar_node_polys();
        let mut m11 = Poly3::zero();
        let mut m12 = Poly3::zero();
        let mut m22 = Poly3::zero();
        for (l, c) in local.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let amat = mat.apply(&shapes.matrix(l));
            let p = &polys[shapes.scalar_node(l)];
            m11.add_scaled(p, c * amat.s11);
            m12.add_scaled(p, c * amat.s12);
            m22.add_scaled(p, c * amat.s22);
        }
        StrainPolys {
            m11,
            m12,
            m22,
            grad_l1: shapes.geo.grad_lambda[0],
            grad_l2: shapes.geo.grad_lambda[1],
        }
    }

    /// Physical x-derivative of a component polynomial.
    fn dx(&self, p: &Poly3) -> Poly3 {
        let mut out = p.da().scaled(self.grad_l1[0]);
        out.add_scaled(&p.db(), self.grad_l2[0]);
        out
    }

    fn dy(&self, p: &Poly3) -> Poly3 {
        let mut out = p.da().scaled(self.grad_l1[1]);
        out.add_scaled(&p.db(), self.grad_l2[1]);
        out
    }

    /// `curl(A sigma) = (d1 m12 - d2 m11, d1 m22 - d2 m12)`.
    fn curl(&self) -> [Poly3; 2] {
        let mut c1 = self.dx(&self.m12);
        c1.add_scaled(&self.dy(&self.m11), -1.0);
        let mut c2 = self.dx(&self.m22);
        c2.add_scaled(&self.dy(&self.m12), -1.0);
        [c1, c2]
    }

    /// `curl curl (A sigma)`, a linear polynomial.
    fn curl_curl(&self) -> Poly3 {
        let [c1, c2] = self.curl();
        let mut out = self.dx(&c2);
        out.add_scaled(&self.dy(&c1), -1.0);
        out
    }

    fn value(&self, l: [f64; 3]) -> SymMatrix2 {
        SymMatrix2 {
            s11: self.m11.eval(l[0], l[1]),
            s12: self.m12.eval(l[0], l[1]),
            s22: self.m22.eval(l[0], l[1]),
        }
    }
}

/// Tangential derivative `d/ds (u_D . t)` along an edge, from the analytic
/// gradient when the problem has one.
fn ud_t_derivative(problem: &ProblemSpec, x: [f64; 2], t: [f64; 2]) -> f64 {
    match problem.dirichlet {
        DirichletKind::Zero => 0.0,
        DirichletKind::FromExact => {
            let g = problem.exact.as_ref().expect("exact solution present").grad(x);
            // d/ds (u . t) = t^T (grad u) t
            t[0] * (g[0][0] * t[0] + g[0][1] * t[1]) + t[1] * (g[1][0] * t[0] + g[1][1] * t[1])
        }
    }
}

/// Second tangential derivative `d^2/ds^2 (u_D . n)` along an edge.
fn ud_nn_derivative(problem: &ProblemSpec, x: [f64; 2], t: [f64; 2], n: [f64; 2]) -> f64 {
    match problem.dirichlet {
        DirichletKind::Zero => 0.0,
        DirichletKind::FromExact => {
            let h = problem.exact.as_ref().expect("exact solution present").hess(x);
            let second = |hc: [f64; 3]| t[0] * t[0] * hc[0] + 2.0 * t[0] * t[1] * hc[1] + t[1] * t[1] * hc[2];
            n[0] * second(h[0]) + n[1] * second(h[1])
        }
    }
}

/// Evaluates the residual estimator for a discrete stress.
pub fn estimate(field: &StressField, problem: &ProblemSpec, quad: &QuadConfig) -> Estimate {
    let dofmap = &field.dofmap;
    let mesh = dofmap.mesh.as_ref();
    let ne = mesh.n_elems();
    let vol_rule = triangle_rule(4).expect("fixed degree");
    let edge_q = edge_rule(quad.edge_degree.max(8)).expect("fixed degree");

    // pass 1: strain polynomials and volume terms
    let mut polys = Vec::with_capacity(ne);
    let mut eta2 = vec![0.0f64; ne];
    for elem in 0..ne {
        let shapes = StressShapes::from_mesh(mesh, elem);
        let mat = problem.material.at(mesh.elem_centroid(elem));
        let sp = StrainPolys::build(field, elem, &shapes, &mat);
        let cc = sp.curl_curl();
        let area2 = 2.0 * shapes.geo.area;
        let mut vol = 0.0;
        for (p, w) in vol_rule.points.iter().zip(&vol_rule.weights) {
            let v = cc.eval(p[0], p[1]);
            vol += w * area2 * v * v;
        }
        let hk = mesh.elem_hk(elem);
        eta2[elem] += hk.powi(4) * vol;
        polys.push(sp);
    }

    // pass 2: edge terms
    let mut osc_g2 = vec![0.0f64; mesh.edges.len()];
    for (eidx, edge) in mesh.edges.iter().enumerate() {
        let len = crate::la::norm(sub(mesh.pos(edge.b), mesh.pos(edge.a)));
        let t = edge.tangent;
        let n = edge.normal;
        if edge.is_boundary() {
            let elem = edge.elems[0];
            let geo = ElementGeometry::from_mesh(mesh, elem);
            let le = mesh.elem_edges(elem).iter().position(|&e| e == eidx).expect("edge in element");
            let sp = &polys[elem];
            if edge.is_neumann() {
                // no J terms; data oscillation of the imposed traction
                let n_out = edge.outward_normal();
                let shapes = StressShapes::new(geo.clone());
                let mut osc = 0.0;
                for (s, w) in edge_q.points.iter().zip(&edge_q.weights) {
                    let l = geo.edge_bary(le, *s);
                    let x = geo.point(l);
                    let gv = problem.traction(edge.marker, x);
                    let tn = field.eval_with(&shapes, elem, l).matvec(n_out);
                    let d = [gv[0] - tn[0], gv[1] - tn[1]];
                    osc += w * len * dot(d, d);
                }
                osc_g2[eidx] = len * osc;
                continue;
            }
            // Dirichlet boundary edge: one-sided J terms with data
            // corrections. The boundary formulas assume the frame with
            // n = -perp(t) (outward normal against a counterclockwise
            // tangent); with the opposite handedness the exact field would
            // leave a rotation residue.
            let nb = [-n[0], -n[1]];
            let curl = sp.curl();
            let hk = mesh.elem_hk(elem);
            let mut j1 = 0.0;
            let mut j2 = 0.0;
            // d/ds ((A sigma) t . n) along the edge, as a polynomial
            let q_tn = {
                let mut q = sp.m11.scaled(t[0] * nb[0]);
                q.add_scaled(&sp.m12, t[0] * nb[1] + t[1] * nb[0]);
                q.add_scaled(&sp.m22, t[1] * nb[1]);
                let mut dq = sp.dx(&q).scaled(t[0]);
                dq.add_scaled(&sp.dy(&q), t[1]);
                dq
            };
            for (s, w) in edge_q.points.iter().zip(&edge_q.weights) {
                let l = geo.edge_bary(le, *s);
                let x = geo.point(l);
                let a = sp.value(l);
                let att = dot(t, a.matvec(t));
                let v1 = att - ud_t_derivative(problem, x, t);
                let curl_t = curl[0].eval(l[0], l[1]) * t[0] + curl[1].eval(l[0], l[1]) * t[1];
                let v2 = curl_t + ud_nn_derivative(problem, x, t, nb) - q_tn.eval(l[0], l[1]);
                j1 += w * len * v1 * v1;
                j2 += w * len * v2 * v2;
            }
            eta2[elem] += hk * j1 + hk.powi(3) * j2;
            continue;
        }
        // interior edge: jumps between the two neighbours
        let (ka, kb) = (edge.elems[0], edge.elems[1]);
        let geo_a = ElementGeometry::from_mesh(mesh, ka);
        let geo_b = ElementGeometry::from_mesh(mesh, kb);
        let le_a = mesh.elem_edges(ka).iter().position(|&e| e == eidx).expect("edge in element");
        let le_b = mesh.elem_edges(kb).iter().position(|&e| e == eidx).expect("edge in element");
        // K1 is the element the edge normal points out of
        let mid = [
            0.5 * (mesh.pos(edge.a)[0] + mesh.pos(edge.b)[0]),
            0.5 * (mesh.pos(edge.a)[1] + mesh.pos(edge.b)[1]),
        ];
        let a_first = dot(sub(mesh.elem_centroid(ka), mid), n) < 0.0;
        let (k1, k2, le1, le2, g1, g2) = if a_first {
            (ka, kb, le_a, le_b, &geo_a, &geo_b)
        } else {
            (kb, ka, le_b, le_a, &geo_b, &geo_a)
        };
        let sp1 = &polys[k1];
        let sp2 = &polys[k2];
        let curl1 = sp1.curl();
        let curl2 = sp2.curl();
        let mut j1 = 0.0;
        let mut j2 = 0.0;
        for (s, w) in edge_q.points.iter().zip(&edge_q.weights) {
            let l1 = g1.edge_bary(le1, *s);
            let l2 = g2.edge_bary(le2, *s);
            let a1 = sp1.value(l1);
            let a2 = sp2.value(l2);
            let v1 = dot(t, a1.matvec(t)) - dot(t, a2.matvec(t));
            let c1 = curl1[0].eval(l1[0], l1[1]) * t[0] + curl1[1].eval(l1[0], l1[1]) * t[1];
            let c2 = curl2[0].eval(l2[0], l2[1]) * t[0] + curl2[1].eval(l2[0], l2[1]) * t[1];
            let v2 = c1 - c2;
            j1 += w * len * v1 * v1;
            j2 += w * len * v2 * v2;
        }
        for &k in &[k1, k2] {
            let hk = mesh.elem_hk(k);
            eta2[k] += hk * j1 + hk.powi(3) * j2;
        }
    }

    // data oscillation of the body force: elementwise P2 projection
    let mut osc_f2 = vec![0.0f64; ne];
    if problem.has_body_force() {
        let rule = triangle_rule(quad.load_degree).expect("fixed degree");
        for elem in 0..ne {
            let geo = ElementGeometry::from_mesh(mesh, elem);
            let area2 = 2.0 * geo.area;
            // componentwise projection onto P2
            let mut gram = [0.0f64; 36];
            let mut rhs = [[0.0f64; 6]; 2];
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let psi = lagrange_p2(*p);
                let f = problem.body_force(geo.point(*p));
                let wj = w * area2;
                for i in 0..6 {
                    for j in 0..6 {
                        gram[i * 6 + j] += wj * psi[i] * psi[j];
                    }
                    rhs[0][i] += wj * psi[i] * f[0];
                    rhs[1][i] += wj * psi[i] * f[1];
                }
            }
            let mut coeff = [[0.0f64; 6]; 2];
            for c in 0..2 {
                let mut g = gram.to_vec();
                let mut b = rhs[c].to_vec();
                solve_dense(&mut g, &mut b, 6).expect("P2 Gram matrix is regular");
                coeff[c].copy_from_slice(&b);
            }
            let mut osc = 0.0;
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let psi = lagrange_p2(*p);
                let f = problem.body_force(geo.point(*p));
                let mut d = [f[0], f[1]];
                for i in 0..6 {
                    d[0] -= coeff[0][i] * psi[i];
                    d[1] -= coeff[1][i] * psi[i];
                }
                osc += w * area2 * dot(d, d);
            }
            let hk = mesh.elem_hk(elem);
            osc_f2[elem] = hk * hk * osc;
        }
    }

    let eta2_total = eta2.iter().sum();
    let osc_f2_total = osc_f2.iter().sum();
    let osc_g2_total = osc_g2.iter().sum();
    Estimate { eta2, osc_f2, osc_g2, eta2_total, osc_f2_total, osc_g2_total }
}

/// Bulk marking: the smallest element set carrying a `theta` fraction of
/// `eta^2 + osc_f^2`, built as a prefix of the descending indicator order
/// with ties broken by element id. Returns active element positions.
pub fn mark(estimate: &Estimate, theta: f64) -> Vec<usize> {
    assert!(theta > 0.0 && theta < 1.0, "bulk parameter must be in (0,1)");
    let combined: Vec<f64> = estimate.eta2.iter().zip(&estimate.osc_f2).map(|(a, b)| a + b).collect();
    let total: f64 = combined.iter().sum();
    if total <= 0.0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..combined.len()).collect();
    order.sort_by(|&a, &b| combined[b].partial_cmp(&combined[a]).unwrap().then(a.cmp(&b)));
    let mut acc = 0.0;
    let mut out = Vec::new();
    for &e in &order {
        if acc >= theta * total {
            break;
        }
        acc += combined[e];
        out.push(e);
    }
    out.sort_unstable();
    out
}

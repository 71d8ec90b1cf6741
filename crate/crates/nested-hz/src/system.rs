//! Assembly and direct solution of the discrete saddle-point system, with
//! displacement (Dirichlet) data entering the right-hand side and traction
//! (Neumann) data imposed strongly on the stress dofs.

use crate::elem::{disp_shapes_all, lagrange_p3, ElementGeometry, StressShapes, SymMatrix2, N_STRESS_SHAPES};
use crate::fields::{DisplacementField, StressField};
use crate::la::{dot, solve_least_squares};
use crate::mesh::NO_TRI;
use crate::quad::{edge_rule, triangle_rule, UnsupportedDegree};
use crate::space::{DofMap, SpaceError, VertexBasis};
use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

/// Isotropic material, stored through the Lame constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplianceTensor {
    pub lambda: f64,
    pub mu: f64,
}

impl ComplianceTensor {
    pub fn new(lambda: f64, mu: f64) -> Self {
        assert!(mu > 0.0, "shear modulus must be positive");
        assert!(lambda >= 0.0, "first Lame constant must be nonnegative");
        ComplianceTensor { lambda, mu }
    }

    /// Plane strain: `lambda = E nu / ((1+nu)(1-2nu))`, `mu = E / (2(1+nu))`.
    pub fn from_plane_strain(e: f64, nu: f64) -> Self {
        Self::new(e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
    }

    /// Plane stress: same `mu`, reduced `lambda`.
    pub fn from_plane_stress(e: f64, nu: f64) -> Self {
        Self::new(e * nu / ((1.0 + nu) * (1.0 - nu)), e / (2.0 * (1.0 + nu)))
    }

    /// Compliance application `A tau = (tau - lambda/(2 mu + 2 lambda) tr(tau) I) / (2 mu)`.
    pub fn apply(&self, tau: &SymMatrix2) -> SymMatrix2 {
        let c = self.lambda / (2.0 * self.mu + 2.0 * self.lambda);
        let tr = tau.trace();
        SymMatrix2 {
            s11: (tau.s11 - c * tr) / (2.0 * self.mu),
            s12: tau.s12 / (2.0 * self.mu),
            s22: (tau.s22 - c * tr) / (2.0 * self.mu),
        }
    }
}

/// Possibly heterogeneous material, evaluated at element centroids; the
/// bimaterial interface benchmark uses a region split, everything else a
/// single tensor.
#[derive(Clone)]
pub enum MaterialField {
    Uniform(ComplianceTensor),
    ByRegion(Arc<dyn Fn([f64; 2]) -> ComplianceTensor + Send + Sync>),
}

impl MaterialField {
    pub fn at(&self, x: [f64; 2]) -> ComplianceTensor {
        match self {
            MaterialField::Uniform(c) => *c,
            MaterialField::ByRegion(f) => f(x),
        }
    }
}

impl std::fmt::Debug for MaterialField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MaterialField::Uniform(c) => write!(f, "Uniform({c:?})"),
            MaterialField::ByRegion(_) => write!(f, "ByRegion(..)"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("mass quadrature degree {0} is below the exactness requirement 6")]
    QuadratureTooLow(usize),
    #[error(transparent)]
    Quadrature(#[from] UnsupportedDegree),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("traction data inconsistent on a straight boundary at vertex {0} (jump {1:.3e})")]
    InconsistentStraightTraction(usize, f64),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("solver residual {got:.3e} exceeds tolerance {tol:.3e}")]
    ResidualTooLarge { got: f64, tol: f64 },
}

/// Quadrature degrees used by assembly and boundary integrals.
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    /// Stiffness/mass integrals (integrands are degree 6).
    pub mass_degree: usize,
    /// Load and error integrals against smooth data.
    pub load_degree: usize,
    /// Boundary moment integrals.
    pub edge_degree: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { mass_degree: 8, load_degree: 12, edge_degree: 10 }
    }
}

/// Sparse symmetric block system `[[M, B^T], [B, 0]]` with right-hand sides
/// and the strongly imposed stress dofs.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub n_stress: usize,
    pub n_disp: usize,
    /// Stress-block mass matrix, full symmetric pattern, canonicalized.
    pub m: Vec<(usize, usize, f64)>,
    /// Divergence coupling, rows in displacement numbering.
    pub b: Vec<(usize, usize, f64)>,
    /// Dirichlet moment vector on the stress block.
    pub rhs_stress: Vec<f64>,
    /// Load vector on the displacement block.
    pub rhs_disp: Vec<f64>,
    /// Prescribed (Neumann) stress dofs, ascending by dof.
    pub constraints: Vec<(usize, f64)>,
}

impl SaddleSystem {
    /// Dumps the full block matrix as text triplets: header `coo v1`, then
    /// `i j value` lines (0-based, displacement rows offset by `n_stress`).
    pub fn write_coo(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "coo v1")?;
        for &(i, j, v) in &self.m {
            writeln!(w, "{i} {j} {v:.17e}")?;
        }
        for &(i, j, v) in &self.b {
            writeln!(w, "{} {} {v:.17e}", self.n_stress + i, j)?;
            writeln!(w, "{} {} {v:.17e}", j, self.n_stress + i)?;
        }
        Ok(())
    }
}

/// Sorts triplets by `(row, col)` keeping insertion order of duplicates,
/// then sums duplicates; fully deterministic.
fn canonicalize(mut t: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    t.sort_by_key(|&(i, j, _)| (i, j));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
    for (i, j, v) in t {
        match out.last_mut() {
            Some(last) if last.0 == i && last.1 == j => last.2 += v,
            _ => out.push((i, j, v)),
        }
    }
    out
}

/// Assembles the mass block `M_ab = (A sigma_a, sigma_b)`, the divergence
/// coupling `B_ia = (div sigma_a, v_i)` and the load `(f, v_i)`.
pub fn assemble(
    dofmap: &DofMap,
    material: &MaterialField,
    body_force: &dyn Fn([f64; 2]) -> [f64; 2],
    quad: &QuadConfig,
) -> Result<SaddleSystem, SolveError> {
    if quad.mass_degree < 6 {
        return Err(SolveError::QuadratureTooLow(quad.mass_degree));
    }
    let mesh = dofmap.mesh.as_ref();
    let mass_rule = triangle_rule(quad.mass_degree)?;
    let load_rule = triangle_rule(quad.load_degree)?;
    let mut m_upper: Vec<(usize, usize, f64)> = Vec::new();
    let mut b_trip: Vec<(usize, usize, f64)> = Vec::new();
    let mut rhs_disp = vec![0.0; dofmap.n_disp];

    for elem in 0..mesh.n_elems() {
        let shapes = StressShapes::from_mesh(mesh, elem);
        let area2 = 2.0 * shapes.geo.area;
        let mat = material.at(mesh.elem_centroid(elem));
        let mut m_loc = [[0.0f64; N_STRESS_SHAPES]; N_STRESS_SHAPES];
        let mut b_loc = [[0.0f64; N_STRESS_SHAPES]; 12];
        for (p, w) in mass_rule.points.iter().zip(&mass_rule.weights) {
            let vals = shapes.eval_all(*p);
            let divs = shapes.div_all(*p);
            let disp = disp_shapes_all(*p);
            let mut avals = [SymMatrix2::ZERO; N_STRESS_SHAPES];
            for (a, v) in avals.iter_mut().zip(vals.iter()) {
                *a = mat.apply(v);
            }
            let wj = w * area2;
            for i in 0..N_STRESS_SHAPES {
                for j in i..N_STRESS_SHAPES {
                    m_loc[i][j] += wj * avals[i].ddot(&vals[j]);
                }
            }
            for (i, d) in disp.iter().enumerate() {
                for (j, dv) in divs.iter().enumerate() {
                    b_loc[i][j] += wj * dot(*d, *dv);
                }
            }
        }
        // load vector with the higher-degree rule
        for (p, w) in load_rule.points.iter().zip(&load_rule.weights) {
            let x = shapes.geo.point(*p);
            let f = body_force(x);
            let disp = disp_shapes_all(*p);
            let wj = w * area2;
            for (i, d) in disp.iter().enumerate() {
                rhs_disp[12 * elem + i] += wj * dot(*d, f);
            }
        }
        // scatter through the local-to-global tables
        let table = dofmap.table(elem);
        for li in 0..N_STRESS_SHAPES {
            for lj in 0..N_STRESS_SHAPES {
                let v = if li <= lj { m_loc[li][lj] } else { m_loc[lj][li] };
                if v == 0.0 {
                    continue;
                }
                for &(gi, wi) in &table.stress[li] {
                    for &(gj, wj) in &table.stress[lj] {
                        if gi <= gj {
                            m_upper.push((gi, gj, wi * wj * v));
                        }
                    }
                }
            }
        }
        for (i, row) in b_loc.iter().enumerate() {
            let gi = 12 * elem + i;
            for (lj, v) in row.iter().enumerate() {
                if *v == 0.0 {
                    continue;
                }
                for &(gj, wj) in &table.stress[lj] {
                    b_trip.push((gi, gj, wj * v));
                }
            }
        }
    }
    let upper = canonicalize(m_upper);
    let mut m = Vec::with_capacity(2 * upper.len());
    for &(i, j, v) in &upper {
        m.push((i, j, v));
        if i != j {
            m.push((j, i, v));
        }
    }
    let m = canonicalize(m);
    let b = canonicalize(b_trip);
    Ok(SaddleSystem {
        n_stress: dofmap.n_stress,
        n_disp: dofmap.n_disp,
        m,
        b,
        rhs_stress: vec![0.0; dofmap.n_stress],
        rhs_disp,
        constraints: Vec::new(),
    })
}

/// Boundary moment vector `<u_D, sigma_a n>` over the Dirichlet boundary.
pub fn dirichlet_rhs(
    dofmap: &DofMap,
    u_d: &dyn Fn([f64; 2]) -> [f64; 2],
    quad: &QuadConfig,
) -> Result<Vec<f64>, SolveError> {
    let mesh = dofmap.mesh.as_ref();
    let rule = edge_rule(quad.edge_degree.max(10))?;
    let mut rhs = vec![0.0; dofmap.n_stress];
    for edge in &mesh.edges {
        if !(edge.is_boundary() && edge.is_dirichlet()) {
            continue;
        }
        let elem = edge.elems[0];
        let geo = ElementGeometry::from_mesh(mesh, elem);
        let shapes = StressShapes::new(geo.clone());
        let eid = mesh.edge_between(edge.a, edge.b).expect("edge exists");
        let le = mesh.elem_edges(elem).iter().position(|&e| e == eid).expect("edge belongs to element");
        let n_out = edge.outward_normal();
        let len = crate::la::norm(crate::la::sub(mesh.pos(edge.b), mesh.pos(edge.a)));
        let table = dofmap.table(elem);
        for (s, w) in rule.points.iter().zip(&rule.weights) {
            let l = geo.edge_bary(le, *s);
            let x = geo.point(l);
            let ud = u_d(x);
            let vals = shapes.eval_all(l);
            for (li, val) in vals.iter().enumerate() {
                let tn = val.matvec(n_out);
                let contrib = w * len * dot(ud, tn);
                if contrib == 0.0 {
                    continue;
                }
                for &(g, wg) in &table.stress[li] {
                    rhs[g] += wg * contrib;
                }
            }
        }
    }
    Ok(rhs)
}

/// Result of the strong traction imposition.
#[derive(Debug, Clone, Default)]
pub struct NeumannConstraints {
    /// Prescribed stress dofs, ascending.
    pub entries: Vec<(usize, f64)>,
    /// Per corner vertex: worst pointwise residual of the imposed traction
    /// against the data at the corner point.
    pub corner_residuals: Vec<(usize, f64)>,
    /// Per vertex where a least-squares compromise was needed: the residual
    /// of the overdetermined vertex system.
    pub least_squares_residuals: Vec<(usize, f64)>,
}

/// Computes the prescribed values of all stress dofs on the traction
/// boundary. The traction field is queried per boundary segment so data may
/// be two-valued at corners.
pub fn neumann_interpolate(
    dofmap: &DofMap,
    g: &dyn Fn(i32, [f64; 2]) -> [f64; 2],
    quad: &QuadConfig,
) -> Result<NeumannConstraints, SolveError> {
    let mesh = dofmap.mesh.as_ref();
    let mut values: HashMap<usize, f64> = HashMap::new();
    let mut out = NeumannConstraints::default();

    let neumann_edges: Vec<usize> =
        (0..mesh.edges.len()).filter(|&e| mesh.edges[e].is_boundary() && mesh.edges[e].is_neumann()).collect();
    if neumann_edges.is_empty() {
        return Ok(out);
    }

    // vertex dofs first
    let mut neumann_at: HashMap<usize, Vec<usize>> = HashMap::new();
    for &e in &neumann_edges {
        let ed = &mesh.edges[e];
        neumann_at.entry(ed.a).or_default().push(e);
        neumann_at.entry(ed.b).or_default().push(e);
    }
    let mut vertices: Vec<usize> = neumann_at.keys().copied().collect();
    vertices.sort_unstable();
    for &v in &vertices {
        let xv = mesh.pos(v);
        let edges = &neumann_at[&v];
        match &dofmap.vertex_basis[v] {
            VertexBasis::Framed { tangent, normal, dofs } => {
                let mut a_nn = 0.0;
                let mut a_nt = 0.0;
                for (k, &e) in edges.iter().enumerate() {
                    let ed = &mesh.edges[e];
                    let gv = g(ed.marker, xv);
                    let sign = dot(*normal, ed.outward_normal());
                    debug_assert!(sign.abs() > 0.99, "framed vertex uses a collinear frame");
                    let nn = dot(*normal, gv) * sign.signum();
                    let nt = dot(*tangent, gv) * sign.signum();
                    if k == 0 {
                        a_nn = nn;
                        a_nt = nt;
                    } else {
                        let jump = (a_nn - nn).hypot(a_nt - nt);
                        if jump > 1e-10 * (1.0 + nn.abs().max(nt.abs())) {
                            // discontinuous data on a straight boundary:
                            // compromise in the least-squares sense
                            a_nn = 0.5 * (a_nn + nn);
                            a_nt = 0.5 * (a_nt + nt);
                            out.least_squares_residuals.push((v, jump / 2.0f64.sqrt()));
                        }
                    }
                }
                values.insert(dofs[0], a_nn);
                values.insert(dofs[1], a_nt);
            }
            VertexBasis::Canonical(dofs) => {
                // traction corner without relaxation: the vertex value has to
                // satisfy four conditions; solve in the least-squares sense
                if edges.len() != 2 {
                    continue;
                }
                let e0 = &mesh.edges[edges[0]];
                let e1 = &mesh.edges[edges[1]];
                let n0 = e0.outward_normal();
                let n1 = e1.outward_normal();
                let g0 = g(e0.marker, xv);
                let g1 = g(e1.marker, xv);
                let row = |na: [f64; 2], nb: [f64; 2]| [na[0] * nb[0], na[0] * nb[1] + na[1] * nb[0], na[1] * nb[1]];
                let mut a = Vec::new();
                let mut rhs = Vec::new();
                a.extend_from_slice(&row(n0, n0));
                rhs.push(dot(n0, g0));
                a.extend_from_slice(&row(n1, n1));
                rhs.push(dot(n1, g1));
                a.extend_from_slice(&row(n0, n1));
                rhs.push(dot(n0, g1));
                a.extend_from_slice(&row(n1, n0));
                rhs.push(dot(n1, g0));
                let (x, res) = solve_least_squares(&a, &rhs, 4, 3)
                    .ok_or_else(|| SolveError::Factorization(format!("vertex {v} traction system singular")))?;
                if res > 1e-12 * (1.0 + rhs.iter().fold(0.0f64, |m, r| m.max(r.abs()))) {
                    out.least_squares_residuals.push((v, res));
                }
                values.insert(dofs[0], x[0]);
                values.insert(dofs[1], x[1]);
                values.insert(dofs[2], x[2]);
            }
            VertexBasis::Corner(cr) => {
                // decoupled: the perp-anchored functions have unit traces on
                // their own boundary edge and zero on the other
                let ep = &mesh.edges[cr.plus_edge.edge];
                let em = &mesh.edges[cr.minus_edge.edge];
                let gp = g(ep.marker, xv);
                let gm = g(em.marker, xv);
                let k_plus = 0usize;
                let k_minus = cr.fan.len() - 1;
                let np_out = ep.outward_normal();
                let nm_out = em.outward_normal();
                // traces of the anchored pair on their own edges
                let m1n = cr.matrices[0][k_plus].matvec(np_out);
                let m2n = cr.matrices[1][k_plus].matvec(np_out);
                let m3n = cr.matrices[2][k_minus].matvec(nm_out);
                let m4n = cr.matrices[3][k_minus].matvec(nm_out);
                // 2x2 solves per edge (the anchored traces span the plane)
                let solve2 = |c0: [f64; 2], c1: [f64; 2], r: [f64; 2]| {
                    let det = c0[0] * c1[1] - c0[1] * c1[0];
                    ([r[0] * c1[1] - r[1] * c1[0], c0[0] * r[1] - c0[1] * r[0]], det)
                };
                let ([a1n, a2n], detp) = solve2(m1n, m2n, gp);
                let ([a3n, a4n], detm) = solve2(m3n, m4n, gm);
                if detp.abs() < 1e-12 || detm.abs() < 1e-12 {
                    return Err(SolveError::Factorization(format!("corner {v} trace system singular")));
                }
                let vals = [a1n / detp, a2n / detp, a3n / detm, a4n / detm];
                for (dof, val) in cr.dofs.iter().take(4).zip(vals) {
                    values.insert(*dof, val);
                }
                // audit: residual of the imposed traction at the corner
                let mut worst = 0.0f64;
                for (k, n_out, gd) in [(k_plus, np_out, gp), (k_minus, nm_out, gm)] {
                    let mut tn = [0.0, 0.0];
                    for (i, val) in vals.iter().enumerate() {
                        let mn = cr.matrices[i][k].matvec(n_out);
                        tn[0] += val * mn[0];
                        tn[1] += val * mn[1];
                    }
                    // tau_5 contributes nothing on the boundary edges
                    worst = worst.max((tn[0] - gd[0]).hypot(tn[1] - gd[1]));
                }
                out.corner_residuals.push((v, worst));
            }
            VertexBasis::Split(_) => {
                return Err(SolveError::Factorization(format!(
                    "split vertex {v} lies on the traction boundary; splits are interior-only"
                )));
            }
        }
    }

    // edge moment dofs: match the two degree<=1 moments of the normal and
    // tangential components of sigma n against the data
    let rule = edge_rule(quad.edge_degree.max(10))?;
    for &eidx in &neumann_edges {
        let edge = &mesh.edges[eidx];
        let elem = edge.elems[0];
        debug_assert_eq!(edge.elems[1], NO_TRI);
        let geo = ElementGeometry::from_mesh(mesh, elem);
        let le = mesh.elem_edges(elem).iter().position(|&e| e == eidx).expect("edge in element");
        let n_out = edge.outward_normal();
        let sign = edge.outward_sign;
        let table = dofmap.table(elem);
        // vertex tail: already-prescribed dofs only; free vertex dofs have
        // vanishing normal trace on this edge by construction
        let tail = |s: f64| -> [f64; 2] {
            let l = geo.edge_bary(le, s);
            let phi = lagrange_p3(l);
            let mut tn = [0.0, 0.0];
            for li in 0..9 {
                let p = li / 3;
                let scalar = phi[p];
                if scalar == 0.0 {
                    continue;
                }
                for &(gdof, w) in &table.stress[li] {
                    if let Some(val) = values.get(&gdof) {
                        let mat = crate::elem::SymMatrix2::canonical(li % 3).scaled(w * val * scalar);
                        let v = mat.matvec(n_out);
                        tn[0] += v[0];
                        tn[1] += v[1];
                    }
                }
            }
            tn
        };
        // 2x2 moment system shared by both components
        let mut gram = [[0.0f64; 2]; 2];
        let mut rhs_n = [0.0f64; 2];
        let mut rhs_t = [0.0f64; 2];
        for (s, w) in rule.points.iter().zip(&rule.weights) {
            let l = geo.edge_bary(le, *s);
            let x = geo.point(l);
            let phi = lagrange_p3(l);
            let gv = g(edge.marker, x);
            let t0 = tail(*s);
            let diff = [gv[0] - t0[0], gv[1] - t0[1]];
            let dn = dot(diff, edge.normal);
            let dt = dot(diff, edge.tangent);
            // scalar functions at the two interior nodes, ordered by slot
            let mut node_vals = [0.0f64; 2];
            for j in 0..2 {
                let slot = geo.edge_node_slot(le, j);
                node_vals[slot] = phi[3 + 2 * le + j];
            }
            for (q, sq) in [(0usize, 1.0), (1usize, *s)] {
                for k in 0..2 {
                    gram[q][k] += w * sq * node_vals[k] * sign;
                }
                rhs_n[q] += w * sq * dn;
                rhs_t[q] += w * sq * dt;
            }
        }
        let det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
        if det.abs() < 1e-14 {
            return Err(SolveError::Factorization(format!("edge ({}, {}) moment system singular", edge.a, edge.b)));
        }
        let solve2 = |r: [f64; 2]| {
            [
                (r[0] * gram[1][1] - r[1] * gram[0][1]) / det,
                (gram[0][0] * r[1] - gram[1][0] * r[0]) / det,
            ]
        };
        let cn = solve2(rhs_n);
        let ct = solve2(rhs_t);
        let base = dofmap.edge_base[eidx];
        for slot in 0..2 {
            values.insert(base + 2 * slot, cn[slot]);
            values.insert(base + 2 * slot + 1, ct[slot]);
        }
    }

    let mut entries: Vec<(usize, f64)> = values.into_iter().collect();
    entries.sort_unstable_by_key(|&(d, _)| d);
    out.entries = entries;
    Ok(out)
}

/// Solves the saddle system by sparse LU after eliminating the constrained
/// stress dofs into the right-hand side. The relative residual must come
/// out below `1e-10` (after at most one step of iterative refinement).
pub fn solve(system: &SaddleSystem, dofmap: &Arc<DofMap>) -> Result<(StressField, DisplacementField), SolveError> {
    use faer::linalg::solvers::Solve;
    use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
    use faer::sparse::{SparseColMat, Triplet};

    let ns = system.n_stress;
    let nd = system.n_disp;
    let mut constrained = vec![f64::NAN; ns];
    for &(d, v) in &system.constraints {
        constrained[d] = v;
    }
    let mut reduced_index = vec![usize::MAX; ns];
    let mut nf = 0usize;
    for d in 0..ns {
        if constrained[d].is_nan() {
            reduced_index[d] = nf;
            nf += 1;
        }
    }
    let n = nf + nd;
    let mut rhs = vec![0.0f64; n];
    for d in 0..ns {
        if reduced_index[d] != usize::MAX {
            rhs[reduced_index[d]] = system.rhs_stress[d];
        }
    }
    for i in 0..nd {
        rhs[nf + i] = system.rhs_disp[i];
    }

    let mut trips: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(system.m.len() + 2 * system.b.len());
    for &(i, j, v) in &system.m {
        let (ri, rj) = (reduced_index[i], reduced_index[j]);
        match (ri != usize::MAX, rj != usize::MAX) {
            (true, true) => trips.push(Triplet::new(ri, rj, v)),
            (true, false) => rhs[ri] -= v * constrained[j],
            _ => {}
        }
    }
    for &(i, j, v) in &system.b {
        let rj = reduced_index[j];
        if rj != usize::MAX {
            trips.push(Triplet::new(nf + i, rj, v));
            trips.push(Triplet::new(rj, nf + i, v));
        } else {
            rhs[nf + i] -= v * constrained[j];
        }
    }

    // symmetric diagonal equilibration: the mass block scales like the
    // compliance (1/E) while the coupling block scales geometrically, so
    // the raw system can be badly balanced;
    let mut scale = vec![0.0f64; n];
    for t in &trips {
        scale[t.row] = scale[t.row].max(t.val.abs());
    }
    let d: Vec<f64> = scale.iter().map(|&s| 1.0 / s.max(1e-300).sqrt()).collect();
    let scaled: Vec<Triplet<usize, usize, f64>> =
        trips.iter().map(|t| Triplet::new(t.row, t.col, t.val * d[t.row] * d[t.col])).collect();

    let a = SparseColMat::try_new_from_triplets(n, n, &scaled)
        .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
    let symbolic = SymbolicLu::try_new(a.symbolic()).map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
    let lu = Lu::try_new_with_symbolic(symbolic, a.as_ref())
        .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;

    let mut y = faer::Mat::<f64>::zeros(n, 1);
    for i in 0..n {
        y[(i, 0)] = rhs[i] * d[i];
    }
    let mut sol = lu.solve(&y);
    // back to unscaled unknowns
    for i in 0..n {
        sol[(i, 0)] *= d[i];
    }

    // residual with compensated accumulation: the coupling rows cancel
    // terms that are orders of magnitude above the right-hand side for
    // stiff materials, so a plain f64 residual bottoms out above the
    // tolerance even for converged solutions
    let residual_vec = |sol: &faer::Mat<f64>| -> Vec<f64> {
        let mut hi = rhs.clone();
        let mut lo = vec![0.0f64; n];
        for t in &trips {
            let p = t.val * sol[(t.col, 0)];
            let perr = t.val.mul_add(sol[(t.col, 0)], -p);
            // Neumaier update of hi[row] -= p
            let a = hi[t.row];
            let s = a - p;
            let c = if a.abs() >= p.abs() { (a - s) - p } else { (-p - s) + a };
            hi[t.row] = s;
            lo[t.row] += c - perr;
        }
        for i in 0..n {
            hi[i] += lo[i];
        }
        hi
    };
    let rel_residual = |sol: &faer::Mat<f64>| -> f64 {
        let r = residual_vec(sol);
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let bn = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        rn / bn.max(1e-300)
    };
    let tol = 1e-10;
    let mut res = rel_residual(&sol);
    for _ in 0..3 {
        if res <= tol {
            break;
        }
        let r = residual_vec(&sol);
        let mut rm = faer::Mat::<f64>::zeros(n, 1);
        for i in 0..n {
            rm[(i, 0)] = r[i] * d[i];
        }
        let dx = lu.solve(&rm);
        for i in 0..n {
            sol[(i, 0)] += dx[(i, 0)] * d[i];
        }
        res = rel_residual(&sol);
    }
    if res > tol {
        return Err(SolveError::ResidualTooLarge { got: res, tol });
    }

    let mut stress = vec![0.0f64; ns];
    for d in 0..ns {
        stress[d] = if reduced_index[d] != usize::MAX { sol[(reduced_index[d], 0)] } else { constrained[d] };
    }
    let mut disp = vec![0.0f64; nd];
    for i in 0..nd {
        disp[i] = sol[(nf + i, 0)];
    }
    Ok((
        StressField { dofmap: dofmap.clone(), coeffs: stress },
        DisplacementField { dofmap: dofmap.clone(), coeffs: disp },
    ))
}

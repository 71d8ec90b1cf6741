//! Global degree-of-freedom enumeration for the stress and displacement
//! spaces, including the tangential-split vertices of the extended space and
//! the relaxed corner bases.
//!
//! Every global stress basis function restricted to an element is a scalar
//! cubic Lagrange function times a constant symmetric matrix, so the
//! local-to-global map is a sparse table of `(global dof, coefficient)`
//! entries per local shape: coefficients are the expansion of that matrix in
//! the canonical basis. Vertex bases vary by vertex (canonical, edge-framed,
//! split, or corner), which is the only place the table is nontrivial.

use crate::elem::{shape_role, ElementGeometry, ShapeRole, StressShapes, SymMatrix2, N_STRESS_SHAPES};
use crate::la::{cross, dot, normalize, perp, solve_dense, solve_least_squares, sub};
use crate::mesh::{Mesh, MeshError, Side};
use std::collections::HashMap;
use std::sync::Arc;

/// A manually split vertex with its frozen line frame, used by the
/// bimaterial interface benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct ManualSplit {
    pub vertex: usize,
    pub tangent: [f64; 2],
}

/// Which stress space to enumerate.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceKind {
    /// Vertex-continuous space.
    Original,
    /// Tangential component split at every interior vertex created by
    /// refinement (nested under further refinement).
    Extended,
    /// Tangential component split at the listed boundary corners.
    CornerRelaxed(Vec<usize>),
    /// Both of the above.
    ExtendedCornerRelaxed(Vec<usize>),
    /// Tangential component split at an explicit vertex list with explicit
    /// frames.
    ExtendedManual(Vec<ManualSplit>),
}

impl SpaceKind {
    pub fn corners(&self) -> &[usize] {
        match self {
            SpaceKind::CornerRelaxed(c) | SpaceKind::ExtendedCornerRelaxed(c) => c,
            _ => &[],
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SpaceError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("corner vertex {0} is not on the boundary")]
    CornerNotBoundary(usize),
    #[error("corner vertex {0} must lie between two traction (Neumann) edges")]
    CornerNotNeumann(usize),
    #[error("corner vertex {vertex} has a fan of {fan} triangles; relaxation supports 2 or 3 — pre-split the corner fan")]
    CornerFanUnsupported { vertex: usize, fan: usize },
    #[error("corner vertex {0}: adjacent boundary edges are parallel, the relaxed basis is singular")]
    ParallelCornerEdges(usize),
    #[error("corner vertex {0}: local continuity system is singular ({1})")]
    CornerSystemSingular(usize, String),
    #[error("manual split vertex {0}: an adjacent element is not strictly on one side of the split line")]
    AmbiguousSplitSide(usize),
    #[error("prolongation source is not contained in the target space (mismatch {0:.3e} at dof {1})")]
    NotNested(f64, usize),
    #[error("meshes are not nested refinements of a common initial mesh")]
    UnrelatedMeshes,
}

/// Split vertex bookkeeping: the two shared normal-component dofs and the
/// two one-sided tangential dofs, in the frozen frame of the origin edge.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitVertexRecord {
    pub vertex: usize,
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
    /// Coefficient of `n n^T`.
    pub dof_nn: usize,
    /// Coefficient of `n t^T + t n^T`.
    pub dof_nt: usize,
    /// One-sided coefficients of `t t^T`.
    pub dof_tt_plus: usize,
    pub dof_tt_minus: usize,
}

/// Frame of a boundary edge at a relaxed corner.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerEdgeFrame {
    pub edge: usize,
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
    /// `outward = outward_sign * normal`.
    pub outward_sign: f64,
}

/// Relaxed corner: the fan elements ordered from the `plus` boundary edge to
/// the `minus` one, and the constant matrix of every corner basis function
/// on every fan element.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerVertexRecord {
    pub vertex: usize,
    pub dofs: Vec<usize>,
    /// Fan elements (active positions) adjacent to the corner, ordered.
    pub fan: Vec<usize>,
    /// `matrices[i][k]` is the matrix of basis function `tau_(i+1)` on fan
    /// element `k`.
    pub matrices: Vec<Vec<SymMatrix2>>,
    pub plus_edge: CornerEdgeFrame,
    pub minus_edge: CornerEdgeFrame,
}

/// Basis layout of the stress dofs attached to one vertex.
#[derive(Debug, Clone, PartialEq)]
pub enum VertexBasis {
    /// Canonical components `(s11, s12, s22)`.
    Canonical([usize; 3]),
    /// Components in the frame of a boundary edge: `[n n^T, n t^T + t n^T,
    /// t t^T]`. Used at traction-boundary vertices so the constrained
    /// combinations are single dofs.
    Framed { tangent: [f64; 2], normal: [f64; 2], dofs: [usize; 3] },
    Split(SplitVertexRecord),
    Corner(CornerVertexRecord),
}

impl VertexBasis {
    pub fn dof_ids(&self) -> Vec<usize> {
        match self {
            VertexBasis::Canonical(d) | VertexBasis::Framed { dofs: d, .. } => d.to_vec(),
            VertexBasis::Split(s) => vec![s.dof_nn, s.dof_nt, s.dof_tt_plus, s.dof_tt_minus],
            VertexBasis::Corner(c) => c.dofs.clone(),
        }
    }
}

/// One entry of the local-to-global table: the global basis function
/// `global` contains `coeff` times the local shape this row belongs to.
pub type TableRow = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
pub struct ElemTable {
    /// One row per local stress shape (30).
    pub stress: Vec<TableRow>,
}

/// Global dof numbering: stress dofs first (vertices, then edges, then
/// element bubbles, each in id order), then the element-local displacement
/// dofs. Immutable once built.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub mesh: Arc<Mesh>,
    pub kind: SpaceKind,
    pub vertex_basis: Vec<VertexBasis>,
    /// First of the four edge dofs (`2 * slot + m`).
    pub edge_base: Vec<usize>,
    /// First of the nine element bubble dofs (six tangential then three
    /// interior).
    pub elem_base: Vec<usize>,
    pub n_stress: usize,
    pub n_disp: usize,
    tables: Vec<ElemTable>,
}

impl DofMap {
    pub fn n_total(&self) -> usize {
        self.n_stress + self.n_disp
    }

    /// Global displacement dof of local displacement shape `l` on `elem`.
    pub fn disp_dof(&self, elem: usize, l: usize) -> usize {
        self.n_stress + 12 * elem + l
    }

    pub fn table(&self, elem: usize) -> &ElemTable {
        &self.tables[elem]
    }

    /// Local stress coefficients of a global coefficient vector on `elem`.
    pub fn local_stress_coeffs(&self, elem: usize, global: &[f64]) -> [f64; N_STRESS_SHAPES] {
        let mut out = [0.0; N_STRESS_SHAPES];
        for (l, row) in self.tables[elem].stress.iter().enumerate() {
            let mut s = 0.0;
            for &(g, w) in row {
                s += w * global[g];
            }
            out[l] = s;
        }
        out
    }

    /// Number of split vertices (extra tangential dofs over the plain space).
    pub fn n_split_vertices(&self) -> usize {
        self.vertex_basis.iter().filter(|b| matches!(b, VertexBasis::Split(_))).count()
    }
}

fn neumann_boundary_edges_at(mesh: &Mesh, v: usize) -> Vec<usize> {
    (0..mesh.edges.len())
        .filter(|&e| {
            let ed = &mesh.edges[e];
            ed.is_boundary() && ed.is_neumann() && (ed.a == v || ed.b == v)
        })
        .collect()
}

fn boundary_edges_at(mesh: &Mesh, v: usize) -> Vec<usize> {
    (0..mesh.edges.len())
        .filter(|&e| {
            let ed = &mesh.edges[e];
            ed.is_boundary() && (ed.a == v || ed.b == v)
        })
        .collect()
}

/// Solves `c * (S_p n) - d * (S_m n) = rhs` for the continuity constants of
/// a corner basis function, using the closed-form inverse
/// `(1/D) [t_m^perp / (t_p . n); t_p^perp / (t_m . n)]` with
/// `D = det(t_p, t_m)`, cross-checked against a direct 2x2 solve.
fn continuity_constants(
    tp: [f64; 2],
    tm: [f64; 2],
    n: [f64; 2],
    rhs: [f64; 2],
    vertex: usize,
) -> Result<(f64, f64), SpaceError> {
    let d = cross(tp, tm);
    let tpn = dot(tp, n);
    let tmn = dot(tm, n);
    if d.abs() <= 1e-12 || tpn.abs() <= 1e-12 || tmn.abs() <= 1e-12 {
        return Err(SpaceError::ParallelCornerEdges(vertex));
    }
    // rows of the closed-form inverse
    let tm_perp = [tm[1], -tm[0]];
    let tp_perp = [tp[1], -tp[0]];
    let c = dot(tm_perp, rhs) / (d * tpn);
    let dd = dot(tp_perp, rhs) / (d * tmn);
    // cross-check with a generic solve of the same 2x2 system
    let spn = [tp[0] * tpn, tp[1] * tpn];
    let smn = [tm[0] * tmn, tm[1] * tmn];
    let mut a = vec![spn[0], -smn[0], spn[1], -smn[1]];
    let mut b = vec![rhs[0], rhs[1]];
    solve_dense(&mut a, &mut b, 2)
        .ok_or_else(|| SpaceError::CornerSystemSingular(vertex, "2x2 continuity system".into()))?;
    let scale = c.abs().max(dd.abs()).max(1.0);
    if (b[0] - c).abs() > 1e-9 * scale || (b[1] - dd).abs() > 1e-9 * scale {
        return Err(SpaceError::CornerSystemSingular(
            vertex,
            format!("closed form ({c}, {dd}) vs solver ({}, {})", b[0], b[1]),
        ));
    }
    Ok((c, dd))
}

/// Constant matrices of the relaxed corner basis on a two-triangle fan:
/// four functions, anchored by the two perp matrices of each boundary edge,
/// completed by tangential multiples chosen for normal continuity across
/// the interior spoke.
fn corner_basis_two(
    vertex: usize,
    tp: [f64; 2],
    tm: [f64; 2],
    spoke_n: [f64; 2],
) -> Result<Vec<[SymMatrix2; 2]>, SpaceError> {
    let s_p = SymMatrix2::outer(tp);
    let s_m = SymMatrix2::outer(tm);
    let np = perp(tp);
    let nm = perp(tm);
    let perp_p = [SymMatrix2::outer(np), SymMatrix2::sym_outer(np, tp)];
    let perp_m = [SymMatrix2::outer(nm), SymMatrix2::sym_outer(nm, tm)];
    let mut out = Vec::with_capacity(4);
    for pm in &perp_p {
        // (perp + c S_p) n = d S_m n
        let rhs = pm.matvec(spoke_n);
        let (c, d) = continuity_constants(tp, tm, spoke_n, [-rhs[0], -rhs[1]], vertex)?;
        out.push([pm.add(&s_p.scaled(c)), s_m.scaled(d)]);
    }
    for mm in &perp_m {
        // c S_p n = (perp + d S_m) n
        let rhs = mm.matvec(spoke_n);
        let (c, d) = continuity_constants(tp, tm, spoke_n, rhs, vertex)?;
        out.push([s_p.scaled(c), mm.add(&s_m.scaled(d))]);
    }
    Ok(out)
}

/// Relaxed corner basis on a three-triangle fan: five functions. The first
/// four mirror the two-triangle construction against the spokes of the
/// middle triangle; the fifth couples all three triangles and its four
/// constants solve the two continuity conditions, verified against a 4x4
/// solve.
fn corner_basis_three(
    vertex: usize,
    tp: [f64; 2],
    t1: [f64; 2],
    t2: [f64; 2],
    tm: [f64; 2],
    n1: [f64; 2],
    n2: [f64; 2],
) -> Result<Vec<[SymMatrix2; 3]>, SpaceError> {
    let s_p = SymMatrix2::outer(tp);
    let s_m = SymMatrix2::outer(tm);
    let s_1 = SymMatrix2::outer(t1);
    let s_2 = SymMatrix2::outer(t2);
    let np = perp(tp);
    let nm = perp(tm);
    let zero = SymMatrix2::ZERO;
    let mut out = Vec::with_capacity(5);
    // tau_1, tau_2: supported on K_plus and the middle triangle, vanish on
    // K_minus; the middle part is tangential to the second spoke so its
    // trace there vanishes automatically
    for pm in [SymMatrix2::outer(np), SymMatrix2::sym_outer(np, tp)] {
        let rhs = pm.matvec(n1);
        let (c, d) = continuity_constants(tp, t2, n1, [-rhs[0], -rhs[1]], vertex)?;
        out.push([pm.add(&s_p.scaled(c)), s_2.scaled(d), zero]);
    }
    // tau_3, tau_4: mirror image across the fan
    for mm in [SymMatrix2::outer(nm), SymMatrix2::sym_outer(nm, tm)] {
        let rhs = mm.matvec(n2);
        let (c, d) = continuity_constants(t1, tm, n2, rhs, vertex)?;
        out.push([zero, s_1.scaled(c), mm.add(&s_m.scaled(d))]);
    }
    // tau_5: S_p on K_plus, a full frame combination in the middle, S_m
    // (scaled) on K_minus; constants from continuity across both spokes
    let c5 = dot(n1, s_p.matvec(n1));
    let d5 = dot(t1, s_p.matvec(n1));
    let mid_fixed = SymMatrix2::outer(n1).scaled(c5).add(&SymMatrix2::sym_outer(n1, t1).scaled(d5));
    let rhs2 = mid_fixed.matvec(n2);
    let (g5, h5) = continuity_constants(t1, tm, n2, [-rhs2[0], -rhs2[1]], vertex)?;
    let mid = mid_fixed.add(&s_1.scaled(g5));
    let tau5 = [s_p, mid, s_m.scaled(h5)];
    // cross-check the four constants through the stacked 4x4 system
    {
        let unknown_mats = [SymMatrix2::outer(n1), SymMatrix2::sym_outer(n1, t1), s_1, s_m];
        let mut a = vec![0.0; 16];
        let mut b = vec![0.0; 4];
        // continuity across spoke 1: c5 S_perp(1,1) n1 + d5 S_perp(1,2) n1 = S_p n1
        for (col, m) in unknown_mats.iter().enumerate() {
            let v1 = if col < 2 { m.matvec(n1) } else { [0.0, 0.0] };
            a[col] = v1[0];
            a[4 + col] = v1[1];
        }
        let spn1 = s_p.matvec(n1);
        b[0] = spn1[0];
        b[1] = spn1[1];
        // continuity across spoke 2: (c5 .. + d5 .. + g5 S_1) n2 - h5 S_m n2 = 0
        for (col, m) in unknown_mats.iter().enumerate() {
            let mut v2 = m.matvec(n2);
            if col == 3 {
                v2 = [-v2[0], -v2[1]];
            }
            a[8 + col] = v2[0];
            a[12 + col] = v2[1];
        }
        b[2] = 0.0;
        b[3] = 0.0;
        solve_dense(&mut a, &mut b, 4)
            .ok_or_else(|| SpaceError::CornerSystemSingular(vertex, "4x4 tau_5 system".into()))?;
        let got = [b[0], b[1], b[2], b[3]];
        let want = [c5, d5, g5, h5];
        for (g, w) in got.iter().zip(&want) {
            if (g - w).abs() > 1e-9 * w.abs().max(1.0) {
                return Err(SpaceError::CornerSystemSingular(
                    vertex,
                    format!("tau_5 closed form {want:?} vs solver {got:?}"),
                ));
            }
        }
    }
    out.push(tau5);
    Ok(out)
}

struct CornerFan {
    fan: Vec<usize>,
    plus_edge: CornerEdgeFrame,
    minus_edge: CornerEdgeFrame,
    /// Interior spoke frames `(tangent, normal)`, in walk order.
    spokes: Vec<([f64; 2], [f64; 2])>,
    /// Unit directions from the corner along the boundary edges.
    dir_plus: [f64; 2],
    dir_minus: [f64; 2],
}

fn build_corner_fan(mesh: &Mesh, v: usize) -> Result<CornerFan, SpaceError> {
    let bedges = boundary_edges_at(mesh, v);
    if bedges.len() != 2 {
        return Err(SpaceError::CornerNotBoundary(v));
    }
    let neumann = neumann_boundary_edges_at(mesh, v);
    if neumann.len() != 2 {
        return Err(SpaceError::CornerNotNeumann(v));
    }
    let star = mesh.vertex_star(v);
    if star.len() < 2 || star.len() > 3 {
        return Err(SpaceError::CornerFanUnsupported { vertex: v, fan: star.len() });
    }
    // deterministically call the lower-id boundary edge "plus"
    let (ep, em) = (bedges[0].min(bedges[1]), bedges[0].max(bedges[1]));
    let frame = |eid: usize| {
        let e = &mesh.edges[eid];
        CornerEdgeFrame { edge: eid, tangent: e.tangent, normal: e.normal, outward_sign: e.outward_sign }
    };
    // order the fan by walking from the plus edge across interior spokes
    let mut fan = Vec::with_capacity(star.len());
    let mut spokes = Vec::new();
    let mut current_edge = ep;
    let mut remaining: Vec<usize> = star.clone();
    while !remaining.is_empty() {
        let e = &mesh.edges[current_edge];
        let next = remaining
            .iter()
            .copied()
            .find(|&el| e.elems.contains(&el))
            .ok_or(SpaceError::CornerNotBoundary(v))?;
        remaining.retain(|&x| x != next);
        fan.push(next);
        if remaining.is_empty() {
            break;
        }
        let verts = mesh.elem_vertices(next);
        let mut advanced = false;
        for &w in &verts {
            if w == v {
                continue;
            }
            if let Some(eid) = mesh.edge_between(v, w) {
                if eid != current_edge && !mesh.edges[eid].is_boundary() {
                    spokes.push((mesh.edges[eid].tangent, mesh.edges[eid].normal));
                    current_edge = eid;
                    advanced = true;
                    break;
                }
            }
        }
        if !advanced {
            return Err(SpaceError::CornerNotBoundary(v));
        }
    }
    let other = |eid: usize| {
        let e = &mesh.edges[eid];
        if e.a == v {
            e.b
        } else {
            e.a
        }
    };
    let dir_plus = normalize(sub(mesh.pos(other(ep)), mesh.pos(v)));
    let dir_minus = normalize(sub(mesh.pos(other(em)), mesh.pos(v)));
    Ok(CornerFan { fan, plus_edge: frame(ep), minus_edge: frame(em), spokes, dir_plus, dir_minus })
}

fn build_corner_record(mesh: &Mesh, v: usize, next_dof: &mut usize) -> Result<CornerVertexRecord, SpaceError> {
    let fan = build_corner_fan(mesh, v)?;
    // tangents along the boundary edges away from the corner; all matrices
    // are quadratic in the frame vectors so the sign does not matter
    let tp = fan.dir_plus;
    let tm = fan.dir_minus;
    let matrices: Vec<Vec<SymMatrix2>> = match fan.fan.len() {
        2 => corner_basis_two(v, tp, tm, fan.spokes[0].1)?.into_iter().map(|m| m.to_vec()).collect(),
        3 => {
            let t1 = fan.spokes[0].0;
            let t2 = fan.spokes[1].0;
            corner_basis_three(v, tp, t1, t2, tm, fan.spokes[0].1, fan.spokes[1].1)?
                .into_iter()
                .map(|m| m.to_vec())
                .collect()
        }
        n => return Err(SpaceError::CornerFanUnsupported { vertex: v, fan: n }),
    };
    let dofs: Vec<usize> = (0..matrices.len())
        .map(|_| {
            let d = *next_dof;
            *next_dof += 1;
            d
        })
        .collect();
    Ok(CornerVertexRecord {
        vertex: v,
        dofs,
        fan: fan.fan,
        matrices,
        plus_edge: fan.plus_edge,
        minus_edge: fan.minus_edge,
    })
}

/// Builds the dof map for `kind` on `mesh`.
///
/// Vertices on the traction (Neumann) boundary that are neither relaxed
/// corners nor split get an edge-framed basis so the traction-constrained
/// combinations are individual dofs. Requesting `Extended` on a mesh without
/// refinement-created interior vertices degrades to the plain space.
pub fn build_dof_map(mesh: &Arc<Mesh>, kind: SpaceKind) -> Result<DofMap, SpaceError> {
    let m = mesh.as_ref();
    let mut split_frame: Vec<Option<([f64; 2], [f64; 2])>> = vec![None; m.n_vertices()];
    match &kind {
        SpaceKind::Extended | SpaceKind::ExtendedCornerRelaxed(_) => {
            for v in m.interior_new_vertices() {
                let origin = m.vertices[v].origin.expect("refinement vertices carry a frame");
                split_frame[v] = Some((origin.tangent, origin.normal));
            }
        }
        SpaceKind::ExtendedManual(list) => {
            for s in list {
                let t = normalize(s.tangent);
                split_frame[s.vertex] = Some((t, perp(t)));
            }
        }
        _ => {}
    }
    let corners: Vec<usize> = kind.corners().to_vec();

    let mut next = 0usize;
    let mut vertex_basis = Vec::with_capacity(m.n_vertices());
    for v in 0..m.n_vertices() {
        if let Some((t, n)) = split_frame[v] {
            for e in m.vertex_star(v) {
                m.side_of_with_frame(v, n, e).map_err(|err| match err {
                    MeshError::DegenerateSide { .. } => SpaceError::AmbiguousSplitSide(v),
                    other => SpaceError::Mesh(other),
                })?;
            }
            vertex_basis.push(VertexBasis::Split(SplitVertexRecord {
                vertex: v,
                tangent: t,
                normal: n,
                dof_nn: next,
                dof_nt: next + 1,
                dof_tt_plus: next + 2,
                dof_tt_minus: next + 3,
            }));
            next += 4;
            continue;
        }
        if corners.contains(&v) {
            vertex_basis.push(VertexBasis::Corner(build_corner_record(m, v, &mut next)?));
            continue;
        }
        let neumann = neumann_boundary_edges_at(m, v);
        let framed = match neumann.len() {
            1 => Some(neumann[0]),
            2 => {
                let t1 = m.edges[neumann[0]].tangent;
                let t2 = m.edges[neumann[1]].tangent;
                if cross(t1, t2).abs() < 1e-12 {
                    Some(neumann[0].min(neumann[1]))
                } else {
                    None // genuine traction corner, kept canonical
                }
            }
            _ => None,
        };
        if let Some(eid) = framed {
            let e = &m.edges[eid];
            vertex_basis.push(VertexBasis::Framed {
                tangent: e.tangent,
                normal: e.normal,
                dofs: [next, next + 1, next + 2],
            });
        } else {
            vertex_basis.push(VertexBasis::Canonical([next, next + 1, next + 2]));
        }
        next += 3;
    }
    let mut edge_base = Vec::with_capacity(m.edges.len());
    for _ in 0..m.edges.len() {
        edge_base.push(next);
        next += 4;
    }
    let mut elem_base = Vec::with_capacity(m.n_elems());
    for _ in 0..m.n_elems() {
        elem_base.push(next);
        next += 9;
    }
    let n_stress = next;
    let n_disp = 12 * m.n_elems();

    let mut tables = Vec::with_capacity(m.n_elems());
    for elem in 0..m.n_elems() {
        let geo = ElementGeometry::from_mesh(m, elem);
        let verts = m.elem_vertices(elem);
        let mut stress: Vec<TableRow> = vec![Vec::new(); N_STRESS_SHAPES];
        for (l, row) in stress.iter_mut().enumerate() {
            match shape_role(l) {
                ShapeRole::Vertex { p, j } => {
                    let v = verts[p];
                    match &vertex_basis[v] {
                        VertexBasis::Canonical(d) => row.push((d[j], 1.0)),
                        VertexBasis::Framed { tangent, normal, dofs } => {
                            let mats = [
                                SymMatrix2::outer(*normal),
                                SymMatrix2::sym_outer(*normal, *tangent),
                                SymMatrix2::outer(*tangent),
                            ];
                            for (k, mat) in mats.iter().enumerate() {
                                let c = mat.components()[j];
                                if c != 0.0 {
                                    row.push((dofs[k], c));
                                }
                            }
                        }
                        VertexBasis::Split(s) => {
                            let side =
                                m.side_of_with_frame(v, s.normal, elem).expect("validated at construction");
                            let tt_dof = match side {
                                Side::Plus => s.dof_tt_plus,
                                Side::Minus => s.dof_tt_minus,
                            };
                            let mats = [
                                (s.dof_nn, SymMatrix2::outer(s.normal)),
                                (s.dof_nt, SymMatrix2::sym_outer(s.normal, s.tangent)),
                                (tt_dof, SymMatrix2::outer(s.tangent)),
                            ];
                            for (dof, mat) in mats {
                                let c = mat.components()[j];
                                if c != 0.0 {
                                    row.push((dof, c));
                                }
                            }
                        }
                        VertexBasis::Corner(cr) => {
                            let k = cr
                                .fan
                                .iter()
                                .position(|&f| f == elem)
                                .expect("corner fan covers the vertex star");
                            for (i, dof) in cr.dofs.iter().enumerate() {
                                let c = cr.matrices[i][k].components()[j];
                                if c != 0.0 {
                                    row.push((*dof, c));
                                }
                            }
                        }
                    }
                }
                ShapeRole::Interior { j } => row.push((elem_base[elem] + 6 + j, 1.0)),
                ShapeRole::EdgeTangential { e, j } => row.push((elem_base[elem] + 2 * e + j, 1.0)),
                ShapeRole::EdgeNormal { e, j, m: mm } => {
                    let eid = m.elem_edges(elem)[e];
                    let slot = geo.edge_node_slot(e, j);
                    row.push((edge_base[eid] + 2 * slot + mm, 1.0));
                }
            }
        }
        tables.push(ElemTable { stress });
    }

    Ok(DofMap { mesh: mesh.clone(), kind, vertex_basis, edge_base, elem_base, n_stress, n_disp, tables })
}

/// Represents a coarse stress field exactly on a refined mesh.
///
/// Both dof maps must belong to meshes refined from the same initial mesh,
/// with the fine space extending the coarse one. Every fine dof is read off
/// the coarse field by one-sided evaluation at the fine lattice nodes; an
/// inconsistent read means the coarse function is not in the fine space.
pub fn prolong(
    coarse: &crate::fields::StressField,
    fine_map: &Arc<DofMap>,
) -> Result<crate::fields::StressField, SpaceError> {
    let coarse_map = &coarse.dofmap;
    let coarse_mesh = coarse_map.mesh.as_ref();
    let fine_mesh = fine_map.mesh.as_ref();
    if fine_mesh.n_forest() < coarse_mesh.n_forest() {
        return Err(SpaceError::UnrelatedMeshes);
    }
    let mut coeffs = vec![0.0f64; fine_map.n_stress];
    let mut seen = vec![false; fine_map.n_stress];
    let nodes = crate::poly::lattice_nodes();
    let mut corner_mats: Vec<Vec<(usize, SymMatrix2)>> = vec![Vec::new(); fine_mesh.n_vertices()];

    let scale = coarse.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let tol = 1e-8 * scale.max(1e-300);

    fn assign(
        dof: usize,
        val: f64,
        tol: f64,
        seen: &mut [bool],
        coeffs: &mut [f64],
    ) -> Result<(), SpaceError> {
        if seen[dof] {
            if (coeffs[dof] - val).abs() > tol.max(1e-9 * val.abs()) {
                return Err(SpaceError::NotNested((coeffs[dof] - val).abs(), dof));
            }
        } else {
            seen[dof] = true;
            coeffs[dof] = val;
        }
        Ok(())
    }

    for elem in 0..fine_mesh.n_elems() {
        let fid = fine_mesh.elem_forest_id(elem);
        let anc_forest = fine_mesh.ancestor_in(coarse_mesh, fid);
        let anc = coarse_mesh.active_position(anc_forest).ok_or(SpaceError::UnrelatedMeshes)?;
        let fine_geo = ElementGeometry::from_mesh(fine_mesh, elem);
        let coarse_geo = ElementGeometry::from_mesh(coarse_mesh, anc);
        let coarse_shapes = StressShapes::new(coarse_geo.clone());
        let coarse_locals = coarse_map.local_stress_coeffs(anc, &coarse.coeffs);
        let value_at = |l: [f64; 3]| -> SymMatrix2 {
            let x = fine_geo.point(l);
            let lb = coarse_geo.bary(x);
            let vals = coarse_shapes.eval_all(lb);
            let mut s = SymMatrix2::ZERO;
            for (c, v) in coarse_locals.iter().zip(vals.iter()) {
                s = s.add(&v.scaled(*c));
            }
            s
        };
        let verts = fine_mesh.elem_vertices(elem);
        for p in 0..3 {
            let mat = value_at(nodes[p]);
            let v = verts[p];
            match &fine_map.vertex_basis[v] {
                VertexBasis::Split(s) => {
                    let side = fine_mesh.side_of_with_frame(v, s.normal, elem).map_err(SpaceError::Mesh)?;
                    let a_nn = dot(s.normal, mat.matvec(s.normal));
                    let a_nt = dot(s.tangent, mat.matvec(s.normal));
                    let a_tt = dot(s.tangent, mat.matvec(s.tangent));
                    assign(s.dof_nn, a_nn, tol, &mut seen, &mut coeffs)?;
                    assign(s.dof_nt, a_nt, tol, &mut seen, &mut coeffs)?;
                    let tt = match side {
                        Side::Plus => s.dof_tt_plus,
                        Side::Minus => s.dof_tt_minus,
                    };
                    assign(tt, a_tt, tol, &mut seen, &mut coeffs)?;
                }
                VertexBasis::Corner(_) => corner_mats[v].push((elem, mat)),
                VertexBasis::Canonical(d) => {
                    for (dof, val) in d.iter().zip(mat.components()) {
                        assign(*dof, val, tol, &mut seen, &mut coeffs)?;
                    }
                }
                VertexBasis::Framed { tangent, normal, dofs } => {
                    let a_nn = dot(*normal, mat.matvec(*normal));
                    let a_nt = dot(*tangent, mat.matvec(*normal));
                    let a_tt = dot(*tangent, mat.matvec(*tangent));
                    for (dof, val) in dofs.iter().zip([a_nn, a_nt, a_tt]) {
                        assign(*dof, val, tol, &mut seen, &mut coeffs)?;
                    }
                }
            }
        }
        // edge nodes: tangential part feeds the one-sided bubbles, perp
        // parts feed the shared edge dofs
        for e in 0..3 {
            let eid = fine_mesh.elem_edges(elem)[e];
            let t = fine_geo.edge_tangent[e];
            let n = fine_geo.edge_normal[e];
            for j in 0..2 {
                let mat = value_at(nodes[3 + 2 * e + j]);
                let slot = fine_geo.edge_node_slot(e, j);
                let a_tt = dot(t, mat.matvec(t));
                let a_nn = dot(n, mat.matvec(n));
                let a_nt = dot(t, mat.matvec(n));
                coeffs[fine_map.elem_base[elem] + 2 * e + j] = a_tt;
                seen[fine_map.elem_base[elem] + 2 * e + j] = true;
                assign(fine_map.edge_base[eid] + 2 * slot, a_nn, tol, &mut seen, &mut coeffs)?;
                assign(fine_map.edge_base[eid] + 2 * slot + 1, a_nt, tol, &mut seen, &mut coeffs)?;
            }
        }
        let mat = value_at(nodes[9]);
        for (j, c) in mat.components().iter().enumerate() {
            coeffs[fine_map.elem_base[elem] + 6 + j] = *c;
            seen[fine_map.elem_base[elem] + 6 + j] = true;
        }
    }

    for (v, mats) in corner_mats.iter().enumerate() {
        if mats.is_empty() {
            continue;
        }
        if let VertexBasis::Corner(cr) = &fine_map.vertex_basis[v] {
            let nu = cr.dofs.len();
            let mut a = Vec::with_capacity(3 * mats.len() * nu);
            let mut b = Vec::with_capacity(3 * mats.len());
            for (elem, mat) in mats {
                let k = cr.fan.iter().position(|f| f == elem).expect("fan covers star");
                for j in 0..3 {
                    for i in 0..nu {
                        a.push(cr.matrices[i][k].components()[j]);
                    }
                    b.push(mat.components()[j]);
                }
            }
            let rows = b.len();
            let (x, res) = solve_least_squares(&a, &b, rows, nu)
                .ok_or_else(|| SpaceError::CornerSystemSingular(v, "prolongation fit".into()))?;
            if res > tol.max(1e-9) * (1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
                return Err(SpaceError::NotNested(res, cr.dofs[0]));
            }
            for (dof, val) in cr.dofs.iter().zip(&x) {
                coeffs[*dof] = *val;
                seen[*dof] = true;
            }
        }
    }

    Ok(crate::fields::StressField { dofmap: fine_map.clone(), coeffs })
}

/// Largest normal-component jump of any global stress basis function over
/// any interior edge, sampled at four Gauss points per edge. A conforming
/// space yields values at rounding level.
pub fn hdiv_conformity_max_jump(dofmap: &DofMap) -> f64 {
    let mesh = dofmap.mesh.as_ref();
    let rule = crate::quad::edge_rule(7).expect("fixed degree");
    let mut worst = 0.0f64;
    for (eidx, edge) in mesh.edges.iter().enumerate() {
        if edge.is_boundary() {
            continue;
        }
        let n = edge.normal;
        // per global dof: accumulated normal trace from each side
        let mut traces: HashMap<usize, [[f64; 2]; 8]> = HashMap::new();
        for (side, &elem) in edge.elems.iter().enumerate() {
            let geo = ElementGeometry::from_mesh(mesh, elem);
            let shapes = StressShapes::new(geo.clone());
            let le = mesh.elem_edges(elem).iter().position(|&e| e == eidx).expect("edge in element");
            let table = dofmap.table(elem);
            for (q, s) in rule.points.iter().enumerate() {
                let l = geo.edge_bary(le, *s);
                let vals = shapes.eval_all(l);
                for (li, val) in vals.iter().enumerate() {
                    let tn = val.matvec(n);
                    for &(g, w) in &table.stress[li] {
                        let entry = traces.entry(g).or_insert([[0.0; 2]; 8]);
                        entry[4 * side + q][0] += w * tn[0];
                        entry[4 * side + q][1] += w * tn[1];
                    }
                }
            }
        }
        for (_, tr) in traces {
            for q in 0..4 {
                let jump = [tr[q][0] - tr[4 + q][0], tr[q][1] - tr[4 + q][1]];
                worst = worst.max(jump[0].abs()).max(jump[1].abs());
            }
        }
    }
    worst
}

/// Nodal interpolation of a smooth (single-valued) matrix field into the
/// stress space: vertex and edge dofs take nodal values in their bases,
/// bubbles take the one-sided tangential values, corner dofs are fitted in
/// the least-squares sense over their fan.
pub fn interpolate(
    map: &Arc<DofMap>,
    f: &dyn Fn([f64; 2]) -> SymMatrix2,
) -> Result<crate::fields::StressField, SpaceError> {
    let mesh = map.mesh.as_ref();
    let nodes = crate::poly::lattice_nodes();
    let mut coeffs = vec![0.0f64; map.n_stress];
    let mut corner_mats: Vec<Vec<(usize, SymMatrix2)>> = vec![Vec::new(); mesh.n_vertices()];
    for elem in 0..mesh.n_elems() {
        let geo = ElementGeometry::from_mesh(mesh, elem);
        let verts = mesh.elem_vertices(elem);
        for p in 0..3 {
            let mat = f(geo.point(nodes[p]));
            let v = verts[p];
            match &map.vertex_basis[v] {
                VertexBasis::Canonical(d) => {
                    for (dof, val) in d.iter().zip(mat.components()) {
                        coeffs[*dof] = val;
                    }
                }
                VertexBasis::Framed { tangent, normal, dofs } => {
                    coeffs[dofs[0]] = dot(*normal, mat.matvec(*normal));
                    coeffs[dofs[1]] = dot(*tangent, mat.matvec(*normal));
                    coeffs[dofs[2]] = dot(*tangent, mat.matvec(*tangent));
                }
                VertexBasis::Split(s) => {
                    coeffs[s.dof_nn] = dot(s.normal, mat.matvec(s.normal));
                    coeffs[s.dof_nt] = dot(s.tangent, mat.matvec(s.normal));
                    let tt = dot(s.tangent, mat.matvec(s.tangent));
                    coeffs[s.dof_tt_plus] = tt;
                    coeffs[s.dof_tt_minus] = tt;
                }
                VertexBasis::Corner(_) => corner_mats[v].push((elem, mat)),
            }
        }
        for e in 0..3 {
            let eid = mesh.elem_edges(elem)[e];
            let t = geo.edge_tangent[e];
            let n = geo.edge_normal[e];
            for j in 0..2 {
                let mat = f(geo.point(nodes[3 + 2 * e + j]));
                let slot = geo.edge_node_slot(e, j);
                coeffs[map.elem_base[elem] + 2 * e + j] = dot(t, mat.matvec(t));
                coeffs[map.edge_base[eid] + 2 * slot] = dot(n, mat.matvec(n));
                coeffs[map.edge_base[eid] + 2 * slot + 1] = dot(t, mat.matvec(n));
            }
        }
        let mat = f(geo.point(nodes[9]));
        for (j, c) in mat.components().iter().enumerate() {
            coeffs[map.elem_base[elem] + 6 + j] = *c;
        }
    }
    for (v, mats) in corner_mats.iter().enumerate() {
        if mats.is_empty() {
            continue;
        }
        if let VertexBasis::Corner(cr) = &map.vertex_basis[v] {
            let nu = cr.dofs.len();
            let mut a = Vec::new();
            let mut b = Vec::new();
            for (elem, mat) in mats {
                let k = cr.fan.iter().position(|f| f == elem).expect("fan covers star");
                for j in 0..3 {
                    for i in 0..nu {
                        a.push(cr.matrices[i][k].components()[j]);
                    }
                    b.push(mat.components()[j]);
                }
            }
            let rows = b.len();
            let (x, _res) = solve_least_squares(&a, &b, rows, nu)
                .ok_or_else(|| SpaceError::CornerSystemSingular(v, "interpolation fit".into()))?;
            for (dof, val) in cr.dofs.iter().zip(&x) {
                coeffs[*dof] = *val;
            }
        }
    }
    Ok(crate::fields::StressField { dofmap: map.clone(), coeffs })
}

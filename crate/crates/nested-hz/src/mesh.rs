//! Conforming triangulations under newest-vertex bisection.
//!
//! The mesh keeps the whole bisection forest: refined triangles stay in the
//! arena with links to their children, and the *active* triangles (the
//! leaves) form the current triangulation. Every triangle stores its
//! vertices in NVB order, i.e. the refinement edge is the edge opposite the
//! first vertex. New vertices remember the frame (unit tangent and normal)
//! of the edge whose midpoint they are; that frame is frozen at creation
//! time and never rederived.

use crate::la::{add, cross, dot, norm, normalize, perp, scale, sub};
use std::collections::HashMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexKind {
    /// Vertex of the initial triangulation.
    Initial,
    /// Midpoint of a boundary edge.
    BoundaryNew,
    /// Midpoint of an interior edge.
    InteriorNew,
}

/// Frame of the edge a new vertex was created on, frozen at creation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexOrigin {
    /// Unit tangent of the split edge, pointing from its lower-id endpoint
    /// to the higher-id one.
    pub tangent: [f64; 2],
    /// `tangent` rotated by +90 degrees.
    pub normal: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub pos: [f64; 2],
    pub kind: VertexKind,
    pub origin: Option<VertexOrigin>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    /// Vertex ids in NVB order: the refinement edge is `v[1]v[2]`, opposite
    /// the newest vertex `v[0]`.
    pub v: [usize; 3],
    pub generation: u32,
    pub parent: Option<usize>,
    pub children: Option<[usize; 2]>,
}

pub const NO_TRI: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints with `a < b`.
    pub a: usize,
    pub b: usize,
    /// Unit tangent from `a` to `b`.
    pub tangent: [f64; 2],
    /// `tangent` rotated by +90 degrees.
    pub normal: [f64; 2],
    /// 0 interior, positive Dirichlet segment id, negative Neumann segment id.
    pub marker: i32,
    /// Adjacent elements (active positions), ascending; `NO_TRI` when absent.
    pub elems: [usize; 2],
    /// For boundary edges: sign such that `outward_sign * normal` points out
    /// of the domain. Zero for interior edges.
    pub outward_sign: f64,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.elems[1] == NO_TRI
    }
    pub fn is_dirichlet(&self) -> bool {
        self.marker > 0
    }
    pub fn is_neumann(&self) -> bool {
        self.marker < 0
    }
    /// Outward unit normal; only meaningful on boundary edges.
    pub fn outward_normal(&self) -> [f64; 2] {
        scale(self.normal, self.outward_sign)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("triangle index {0} out of range")]
    InvalidTriangle(usize),
    #[error("triangle {0} is not active")]
    NotActive(usize),
    #[error("vertex index {0} out of range")]
    InvalidVertex(usize),
    #[error("vertex {vertex} is not a corner of triangle {tri}")]
    VertexNotInTriangle { vertex: usize, tri: usize },
    #[error("vertex {0} carries no origin frame")]
    NoOriginFrame(usize),
    #[error("degenerate side classification at vertex {vertex} for triangle {tri}")]
    DegenerateSide { vertex: usize, tri: usize },
    #[error("triangle {0} has non-positive signed area")]
    NegativeArea(usize),
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("boundary edge ({0}, {1}) has marker 0 or is missing from the segment table")]
    UnmarkedBoundary(usize, usize),
    #[error("segment table lists ({0}, {1}) which is not a boundary edge")]
    BogusSegment(usize, usize),
    #[error("refinement closure did not terminate; initial refinement edges form a cycle")]
    ClosureCycle,
    #[error("mesh format error: {0}")]
    Format(String),
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vertex>,
    tris: Vec<Triangle>,
    active: Vec<usize>,
    pub edges: Vec<Edge>,
    edge_index: HashMap<(usize, usize), usize>,
    /// Per active element: edge ids, local edge `k` opposite local vertex `k`.
    elem_edges: Vec<[usize; 3]>,
    /// Persistent boundary markers, keyed by sorted endpoint pair.
    markers: HashMap<(usize, usize), i32>,
    /// Midpoint vertex of already-split edges.
    midpoints: HashMap<(usize, usize), usize>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Outcome of a single bisection, before any conformity completion.
#[derive(Debug, Clone)]
pub struct BisectDelta {
    pub mesh: Mesh,
    pub children: [usize; 2],
    pub new_vertex: usize,
    /// Whether the resulting triangulation is still conforming.
    pub conforming: bool,
}

impl Mesh {
    /// Builds an initial triangulation. Triangle vertex triples are taken in
    /// NVB order (refinement edge opposite the first vertex) and must be
    /// positively oriented. `boundary` lists every boundary edge with a
    /// nonzero segment marker (positive Dirichlet, negative Neumann).
    pub fn new(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<(usize, usize, i32)>,
    ) -> Result<Mesh, MeshError> {
        let verts: Vec<Vertex> = vertices
            .into_iter()
            .map(|pos| Vertex { pos, kind: VertexKind::Initial, origin: None })
            .collect();
        let mut tris = Vec::with_capacity(triangles.len());
        for (i, v) in triangles.iter().enumerate() {
            for &vi in v {
                if vi >= verts.len() {
                    return Err(MeshError::InvalidVertex(vi));
                }
            }
            let area = cross(sub(verts[v[1]].pos, verts[v[0]].pos), sub(verts[v[2]].pos, verts[v[0]].pos));
            if area <= 0.0 {
                return Err(MeshError::NegativeArea(i));
            }
            tris.push(Triangle { v: *v, generation: 0, parent: None, children: None });
        }
        let mut markers = HashMap::new();
        for &(a, b, m) in &boundary {
            if a >= verts.len() {
                return Err(MeshError::InvalidVertex(a));
            }
            if b >= verts.len() {
                return Err(MeshError::InvalidVertex(b));
            }
            markers.insert(key(a, b), m);
        }
        let mut mesh = Mesh {
            vertices: verts,
            active: (0..tris.len()).collect(),
            tris,
            edges: Vec::new(),
            edge_index: HashMap::new(),
            elem_edges: Vec::new(),
            markers,
            midpoints: HashMap::new(),
        };
        mesh.rebuild_edges()?;
        // every boundary edge must carry a marker, and every listed segment
        // must be an actual boundary edge
        for e in &mesh.edges {
            if e.is_boundary() && e.marker == 0 {
                return Err(MeshError::UnmarkedBoundary(e.a, e.b));
            }
            if !e.is_boundary() && e.marker != 0 {
                return Err(MeshError::BogusSegment(e.a, e.b));
            }
        }
        for (&(a, b), _) in &mesh.markers {
            if !mesh.edge_index.contains_key(&(a, b)) {
                return Err(MeshError::BogusSegment(a, b));
            }
        }
        Ok(mesh)
    }

    /// Reorders triangle vertex triples so the refinement edge is the longest
    /// edge, ties broken by the lowest opposite-vertex id.
    pub fn nvb_longest_edge(vertices: &[[f64; 2]], tris: &[[usize; 3]]) -> Vec<[usize; 3]> {
        tris.iter()
            .map(|t| {
                let mut best = 0usize;
                let mut best_len = -1.0;
                for k in 0..3 {
                    let a = vertices[t[(k + 1) % 3]];
                    let b = vertices[t[(k + 2) % 3]];
                    let len = norm(sub(b, a));
                    if len > best_len + 1e-14 * len.max(best_len)
                        || ((len - best_len).abs() <= 1e-14 * len.max(best_len) && t[k] < t[best])
                    {
                        best = k;
                        best_len = len;
                    }
                }
                [t[best], t[(best + 1) % 3], t[(best + 2) % 3]]
            })
            .collect()
    }

    // ----- queries ---------------------------------------------------------

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Number of active triangles (elements).
    pub fn n_elems(&self) -> usize {
        self.active.len()
    }

    /// Forest ids of active triangles, ascending.
    pub fn elements(&self) -> &[usize] {
        &self.active
    }

    pub fn tri(&self, forest_id: usize) -> &Triangle {
        &self.tris[forest_id]
    }

    pub fn n_forest(&self) -> usize {
        self.tris.len()
    }

    /// Vertex ids of element `elem` (active position), NVB order.
    pub fn elem_vertices(&self, elem: usize) -> [usize; 3] {
        self.tris[self.active[elem]].v
    }

    pub fn elem_forest_id(&self, elem: usize) -> usize {
        self.active[elem]
    }

    /// Active position of a forest id, if the triangle is a leaf.
    pub fn active_position(&self, forest_id: usize) -> Option<usize> {
        self.active.binary_search(&forest_id).ok()
    }

    /// Edge ids of element `elem`; local edge `k` is opposite local vertex `k`.
    pub fn elem_edges(&self, elem: usize) -> [usize; 3] {
        self.elem_edges[elem]
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&key(a, b)).copied()
    }

    pub fn pos(&self, v: usize) -> [f64; 2] {
        self.vertices[v].pos
    }

    pub fn elem_coords(&self, elem: usize) -> [[f64; 2]; 3] {
        let v = self.elem_vertices(elem);
        [self.pos(v[0]), self.pos(v[1]), self.pos(v[2])]
    }

    pub fn elem_area(&self, elem: usize) -> f64 {
        let c = self.elem_coords(elem);
        0.5 * cross(sub(c[1], c[0]), sub(c[2], c[0]))
    }

    /// Mesh size `h_K = |K|^(1/2)`.
    pub fn elem_hk(&self, elem: usize) -> f64 {
        self.elem_area(elem).sqrt()
    }

    pub fn elem_centroid(&self, elem: usize) -> [f64; 2] {
        let c = self.elem_coords(elem);
        [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0]
    }

    /// Active elements having `v` as a corner, ascending.
    pub fn vertex_star(&self, v: usize) -> Vec<usize> {
        (0..self.n_elems()).filter(|&e| self.elem_vertices(e).contains(&v)).collect()
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_boundary()).count()
    }

    /// Interior vertices created by refinement, i.e. candidates for the
    /// extended-space tangential split.
    pub fn interior_new_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| self.vertices[v].kind == VertexKind::InteriorNew).collect()
    }

    pub fn min_angle(&self) -> f64 {
        let mut min = f64::INFINITY;
        for e in 0..self.n_elems() {
            let c = self.elem_coords(e);
            for k in 0..3 {
                let u = normalize(sub(c[(k + 1) % 3], c[k]));
                let w = normalize(sub(c[(k + 2) % 3], c[k]));
                min = min.min(dot(u, w).clamp(-1.0, 1.0).acos());
            }
        }
        min
    }

    /// Checks edge-manifoldness and the Euler identity `V - E + T = 1`.
    pub fn audit_conformity(&self) -> Result<(), MeshError> {
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        for e in 0..self.n_elems() {
            let v = self.elem_vertices(e);
            for k in 0..3 {
                *counts.entry(key(v[(k + 1) % 3], v[(k + 2) % 3])).or_insert(0) += 1;
            }
        }
        for (&(a, b), &c) in &counts {
            if c > 2 {
                return Err(MeshError::NonManifoldEdge(a, b));
            }
        }
        // a hanging node shows up as two overlapping short edges against one
        // long edge; counting via vertices-on-edges catches it because the
        // long edge then has only one adjacent triangle while being interior.
        // Euler's identity for a simply-connected domain is the cheap proxy.
        let euler = self.n_vertices() as i64 - counts.len() as i64 + self.n_elems() as i64;
        if euler != 1 {
            return Err(MeshError::Format(format!("Euler characteristic {euler} != 1")));
        }
        Ok(())
    }

    // ----- refinement ------------------------------------------------------

    fn split_edge_midpoint(&mut self, a: usize, b: usize) -> usize {
        let k = key(a, b);
        if let Some(&m) = self.midpoints.get(&k) {
            return m;
        }
        let pa = self.vertices[k.0].pos;
        let pb = self.vertices[k.1].pos;
        let pos = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
        let marker = self.markers.get(&k).copied().unwrap_or(0);
        let kind = if marker != 0 { VertexKind::BoundaryNew } else { VertexKind::InteriorNew };
        let tangent = normalize(sub(pb, pa));
        let origin = VertexOrigin { tangent, normal: perp(tangent) };
        let m = self.vertices.len();
        self.vertices.push(Vertex { pos, kind, origin: Some(origin) });
        self.midpoints.insert(k, m);
        if marker != 0 {
            self.markers.insert(key(k.0, m), marker);
            self.markers.insert(key(m, k.1), marker);
        }
        m
    }

    /// Bisects a leaf triangle in place; no conformity completion.
    fn bisect_leaf(&mut self, t: usize) -> ([usize; 2], usize) {
        debug_assert!(self.tris[t].children.is_none());
        let [v0, v1, v2] = self.tris[t].v;
        let g = self.tris[t].generation;
        let m = self.split_edge_midpoint(v1, v2);
        let c0 = self.tris.len();
        self.tris.push(Triangle { v: [m, v0, v1], generation: g + 1, parent: Some(t), children: None });
        let c1 = self.tris.len();
        self.tris.push(Triangle { v: [m, v2, v0], generation: g + 1, parent: Some(t), children: None });
        self.tris[t].children = Some([c0, c1]);
        ([c0, c1], m)
    }

    fn refinement_edge(&self, t: usize) -> (usize, usize) {
        let v = self.tris[t].v;
        key(v[1], v[2])
    }

    /// Refines all marked leaves at least once and completes to a conforming
    /// triangulation. Pure: returns a new mesh, the receiver is untouched.
    pub fn refine(&self, marked: &[usize]) -> Result<Mesh, MeshError> {
        let mut ids: Vec<usize> = marked.to_vec();
        ids.sort_unstable();
        ids.dedup();
        for &t in &ids {
            if t >= self.tris.len() {
                return Err(MeshError::InvalidTriangle(t));
            }
            if self.tris[t].children.is_some() {
                return Err(MeshError::NotActive(t));
            }
        }
        let mut out = self.clone();
        // adjacency by edge, maintained incrementally while bisecting
        let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for &t in &out.active {
            let v = out.tris[t].v;
            for k in 0..3 {
                by_edge.entry(key(v[(k + 1) % 3], v[(k + 2) % 3])).or_default().push(t);
            }
        }
        for &t in &ids {
            if out.tris[t].children.is_none() {
                out.bisect_conforming(t, &mut by_edge)?;
            }
        }
        out.active = (0..out.tris.len()).filter(|&i| out.tris[i].children.is_none()).collect();
        out.rebuild_edges()?;
        Ok(out)
    }

    fn bisect_tracked(&mut self, t: usize, by_edge: &mut HashMap<(usize, usize), Vec<usize>>) -> [usize; 2] {
        let v = self.tris[t].v;
        for k in 0..3 {
            let e = key(v[(k + 1) % 3], v[(k + 2) % 3]);
            if let Some(list) = by_edge.get_mut(&e) {
                list.retain(|&x| x != t);
            }
        }
        let (children, _) = self.bisect_leaf(t);
        for &c in &children {
            let cv = self.tris[c].v;
            for k in 0..3 {
                by_edge.entry(key(cv[(k + 1) % 3], cv[(k + 2) % 3])).or_default().push(c);
            }
        }
        children
    }

    /// Bisects `t` after recursively making its refinement-edge neighbour
    /// compatible. Iterative with an explicit stack; a stack deeper than the
    /// current leaf count means the initial refinement-edge assignment
    /// contains a cycle.
    fn bisect_conforming(
        &mut self,
        t0: usize,
        by_edge: &mut HashMap<(usize, usize), Vec<usize>>,
    ) -> Result<(), MeshError> {
        let mut stack = vec![t0];
        let limit = self.tris.len() + self.active.len() + 16;
        while let Some(&t) = stack.last() {
            if self.tris[t].children.is_some() {
                stack.pop();
                continue;
            }
            if stack.len() > limit {
                return Err(MeshError::ClosureCycle);
            }
            let e = self.refinement_edge(t);
            let neighbor = by_edge
                .get(&e)
                .and_then(|list| list.iter().copied().find(|&x| x != t && self.tris[x].children.is_none()));
            match neighbor {
                None => {
                    self.bisect_tracked(t, by_edge);
                    stack.pop();
                }
                Some(n) if self.refinement_edge(n) == e => {
                    self.bisect_tracked(t, by_edge);
                    self.bisect_tracked(n, by_edge);
                    stack.pop();
                }
                Some(n) => {
                    stack.push(n);
                }
            }
        }
        Ok(())
    }

    /// One bisection of triangle `t`, without completion. The `conforming`
    /// flag reports whether the result still has no hanging nodes.
    pub fn bisect(&self, t: usize) -> Result<BisectDelta, MeshError> {
        if t >= self.tris.len() {
            return Err(MeshError::InvalidTriangle(t));
        }
        if self.tris[t].children.is_some() {
            return Err(MeshError::NotActive(t));
        }
        let mut mesh = self.clone();
        let (children, new_vertex) = mesh.bisect_leaf(t);
        mesh.active = (0..mesh.tris.len()).filter(|&i| mesh.tris[i].children.is_none()).collect();
        let conforming = mesh.rebuild_edges().is_ok() && mesh.audit_conformity().is_ok();
        Ok(BisectDelta { mesh, children, new_vertex, conforming })
    }

    fn rebuild_edges(&mut self) -> Result<(), MeshError> {
        let mut pairs: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for e in 0..self.n_elems() {
            let v = self.elem_vertices(e);
            for k in 0..3 {
                pairs.entry(key(v[(k + 1) % 3], v[(k + 2) % 3])).or_default().push(e);
            }
        }
        let mut keys: Vec<(usize, usize)> = pairs.keys().copied().collect();
        keys.sort_unstable();
        self.edges.clear();
        self.edge_index.clear();
        for (id, k) in keys.iter().enumerate() {
            let elems = &pairs[k];
            if elems.len() > 2 {
                return Err(MeshError::NonManifoldEdge(k.0, k.1));
            }
            let tangent = normalize(sub(self.vertices[k.1].pos, self.vertices[k.0].pos));
            let normal = perp(tangent);
            let marker = self.markers.get(k).copied().unwrap_or(0);
            let (e0, e1) = (elems[0], elems.get(1).copied().unwrap_or(NO_TRI));
            let outward_sign = if e1 == NO_TRI {
                let mid = scale(add(self.vertices[k.0].pos, self.vertices[k.1].pos), 0.5);
                let d = dot(sub(self.elem_centroid(e0), mid), normal);
                if d > 0.0 {
                    -1.0
                } else {
                    1.0
                }
            } else {
                0.0
            };
            self.edges.push(Edge {
                a: k.0,
                b: k.1,
                tangent,
                normal,
                marker,
                elems: [e0.min(e1), if e1 == NO_TRI { NO_TRI } else { e0.max(e1) }],
                outward_sign,
            });
            self.edge_index.insert(*k, id);
        }
        self.elem_edges = (0..self.n_elems())
            .map(|e| {
                let v = self.elem_vertices(e);
                [
                    self.edge_index[&key(v[1], v[2])],
                    self.edge_index[&key(v[2], v[0])],
                    self.edge_index[&key(v[0], v[1])],
                ]
            })
            .collect();
        Ok(())
    }

    // ----- side classification ---------------------------------------------

    /// Which side of the frozen origin line of `vertex` the element lies on:
    /// `Plus` when `(mid(K) - x_v) . n_e > 0`.
    pub fn side_of(&self, vertex: usize, elem: usize) -> Result<Side, MeshError> {
        if vertex >= self.vertices.len() {
            return Err(MeshError::InvalidVertex(vertex));
        }
        let origin = self.vertices[vertex].origin.ok_or(MeshError::NoOriginFrame(vertex))?;
        self.side_of_with_frame(vertex, origin.normal, elem)
    }

    /// Side classification against an explicit normal, for manually split
    /// vertices whose frame does not come from refinement.
    pub fn side_of_with_frame(&self, vertex: usize, normal: [f64; 2], elem: usize) -> Result<Side, MeshError> {
        if elem >= self.n_elems() {
            return Err(MeshError::InvalidTriangle(elem));
        }
        if !self.elem_vertices(elem).contains(&vertex) {
            return Err(MeshError::VertexNotInTriangle { vertex, tri: elem });
        }
        let d = dot(sub(self.elem_centroid(elem), self.pos(vertex)), normal);
        if d.abs() <= 1e-12 * self.elem_hk(elem) {
            return Err(MeshError::DegenerateSide { vertex, tri: elem });
        }
        Ok(if d > 0.0 { Side::Plus } else { Side::Minus })
    }

    // ----- point location --------------------------------------------------

    /// Locates the active element containing `p` by descending the forest.
    /// Returns the active position and barycentric coordinates.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let bary = |t: usize| -> [f64; 3] {
            let v = self.tris[t].v;
            let (a, b, c) = (self.pos(v[0]), self.pos(v[1]), self.pos(v[2]));
            let area = cross(sub(b, a), sub(c, a));
            [
                cross(sub(c, b), sub(p, b)) / area,
                cross(sub(a, c), sub(p, c)) / area,
                cross(sub(b, a), sub(p, a)) / area,
            ]
        };
        let mut best: Option<(usize, f64)> = None;
        for (root, tri) in self.tris.iter().enumerate() {
            if tri.parent.is_some() {
                continue;
            }
            let l = bary(root);
            let m = l[0].min(l[1]).min(l[2]);
            if best.map_or(true, |(_, bm)| m > bm) {
                best = Some((root, m));
            }
        }
        let (mut t, m) = best?;
        if m < -1e-9 {
            return None;
        }
        while let Some(ch) = self.tris[t].children {
            let la = bary(ch[0]);
            let lb = bary(ch[1]);
            let ma = la[0].min(la[1]).min(la[2]);
            let mb = lb[0].min(lb[1]).min(lb[2]);
            t = if ma >= mb { ch[0] } else { ch[1] };
        }
        let pos = self.active_position(t)?;
        Some((pos, bary(t)))
    }

    /// Walks parents of `fine_forest_id` until reaching a triangle that is a
    /// leaf of `coarse`; panics if the meshes are unrelated.
    pub fn ancestor_in(&self, coarse: &Mesh, fine_forest_id: usize) -> usize {
        let mut t = fine_forest_id;
        loop {
            if t < coarse.tris.len() && coarse.tris[t].children.is_none() {
                return t;
            }
            t = self.tris[t].parent.unwrap_or_else(|| panic!("triangle {fine_forest_id} has no ancestor in the coarse mesh"));
        }
    }

    // ----- text format -----------------------------------------------------

    /// Line-oriented text format:
    /// header `mesh2d v1`, vertex count, `x y` lines, triangle count,
    /// `v0 v1 v2` lines in NVB order, boundary segment count, `a b marker`
    /// lines. Only the active triangulation is written.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mesh2d v1");
        let _ = writeln!(s, "{}", self.n_vertices());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.17e} {:.17e}", v.pos[0], v.pos[1]);
        }
        let _ = writeln!(s, "{}", self.n_elems());
        for e in 0..self.n_elems() {
            let v = self.elem_vertices(e);
            let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
        }
        let bd: Vec<&Edge> = self.edges.iter().filter(|e| e.is_boundary()).collect();
        let _ = writeln!(s, "{}", bd.len());
        for e in bd {
            let _ = writeln!(s, "{} {} {}", e.a, e.b, e.marker);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Mesh, MeshError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| MeshError::Format("empty file".into()))?;
        if header != "mesh2d v1" {
            return Err(MeshError::Format(format!("bad header {header:?}")));
        }
        let mut next = |what: &str| lines.next().ok_or_else(|| MeshError::Format(format!("missing {what}")));
        let nv: usize = next("vertex count")?
            .parse()
            .map_err(|e| MeshError::Format(format!("vertex count: {e}")))?;
        let mut vertices = Vec::with_capacity(nv);
        for i in 0..nv {
            let line = next("vertex line")?;
            let mut it = line.split_whitespace();
            let x: f64 = it
                .next()
                .ok_or_else(|| MeshError::Format(format!("vertex {i}: missing x")))?
                .parse()
                .map_err(|e| MeshError::Format(format!("vertex {i}: {e}")))?;
            let y: f64 = it
                .next()
                .ok_or_else(|| MeshError::Format(format!("vertex {i}: missing y")))?
                .parse()
                .map_err(|e| MeshError::Format(format!("vertex {i}: {e}")))?;
            vertices.push([x, y]);
        }
        let nt: usize = next("triangle count")?
            .parse()
            .map_err(|e| MeshError::Format(format!("triangle count: {e}")))?;
        let mut tris = Vec::with_capacity(nt);
        for i in 0..nt {
            let line = next("triangle line")?;
            let ids: Result<Vec<usize>, _> = line.split_whitespace().take(3).map(str::parse).collect();
            let ids = ids.map_err(|e| MeshError::Format(format!("triangle {i}: {e}")))?;
            if ids.len() != 3 {
                return Err(MeshError::Format(format!("triangle {i}: expected 3 vertex ids")));
            }
            tris.push([ids[0], ids[1], ids[2]]);
        }
        let nb: usize = next("boundary count")?
            .parse()
            .map_err(|e| MeshError::Format(format!("boundary count: {e}")))?;
        let mut boundary = Vec::with_capacity(nb);
        for i in 0..nb {
            let line = next("boundary line")?;
            let mut it = line.split_whitespace();
            let a: usize = it
                .next()
                .ok_or_else(|| MeshError::Format(format!("segment {i}: missing a")))?
                .parse()
                .map_err(|e| MeshError::Format(format!("segment {i}: {e}")))?;
            let b: usize = it
                .next()
                .ok_or_else(|| MeshError::Format(format!("segment {i}: missing b")))?
                .parse()
                .map_err(|e| MeshError::Format(format!("segment {i}: {e}")))?;
            let m: i32 = it
                .next()
                .ok_or_else(|| MeshError::Format(format!("segment {i}: missing marker")))?
                .parse()
                .map_err(|e| MeshError::Format(format!("segment {i}: {e}")))?;
            if m == 0 {
                return Err(MeshError::Format(format!("segment {i}: marker 0 is reserved for interior edges")));
            }
            boundary.push((a, b, m));
        }
        Mesh::new(vertices, tris, boundary)
    }
}

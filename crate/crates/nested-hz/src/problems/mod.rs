//! Benchmark problem definitions, exact-solution evaluation, and error
//! norms.

mod corner_mode;
pub mod exact;

pub use exact::{
    corner_omega, force_from_hess, stress_from_grad, CornerModeDisplacement, PolyDisplacement, Solution,
    TrigDisplacement, CORNER_EXPONENT,
};

use crate::elem::{disp_shapes_all, ElementGeometry, StressShapes, SymMatrix2};
use crate::fields::{DisplacementField, StressField};
use crate::la::{dot, sub};
use crate::mesh::Mesh;
use crate::quad::triangle_rule;
use crate::space::{ManualSplit, SpaceKind};
use crate::system::{ComplianceTensor, MaterialField, QuadConfig};
use std::sync::Arc;

/// How the displacement boundary data is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirichletKind {
    Zero,
    FromExact,
}

/// How the body force is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyForceKind {
    Zero,
    FromExact,
}

/// Which space variant a CLI run asks for; resolved against a concrete mesh
/// by [`ProblemSpec::space_kind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceRequest {
    Original,
    Extended,
    CornerRelaxed,
    ExtendedCornerRelaxed,
    ExtendedManual,
}

impl SpaceRequest {
    pub fn parse(s: &str) -> Option<SpaceRequest> {
        match s {
            "original" => Some(SpaceRequest::Original),
            "extended" => Some(SpaceRequest::Extended),
            "corner-relaxed" => Some(SpaceRequest::CornerRelaxed),
            "extended-corner-relaxed" => Some(SpaceRequest::ExtendedCornerRelaxed),
            "extended-manual" => Some(SpaceRequest::ExtendedManual),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SpaceRequest::Original => "original",
            SpaceRequest::Extended => "extended",
            SpaceRequest::CornerRelaxed => "corner-relaxed",
            SpaceRequest::ExtendedCornerRelaxed => "extended-corner-relaxed",
            SpaceRequest::ExtendedManual => "extended-manual",
        }
    }
}

type TractionFn = dyn Fn(i32, [f64; 2]) -> [f64; 2] + Send + Sync;
type SplitRule = dyn Fn(&Mesh) -> Vec<ManualSplit> + Send + Sync;

/// A benchmark problem: initial mesh with boundary markers, material, data
/// fields, optional exact solution, and the space features it needs.
pub struct ProblemSpec {
    pub name: &'static str,
    pub mesh: Arc<Mesh>,
    pub material: MaterialField,
    pub exact: Option<Arc<dyn Solution>>,
    pub body_force_kind: BodyForceKind,
    pub dirichlet: DirichletKind,
    pub traction: Option<Arc<TractionFn>>,
    /// Vertices whose tangential continuity may be relaxed (boundary
    /// corners between traction edges).
    pub corners: Vec<usize>,
    /// For the manual extended space: which vertices of a given mesh to
    /// split, with frames.
    pub split_rule: Option<Arc<SplitRule>>,
    /// The space the problem is designed for.
    pub recommended: SpaceRequest,
    /// Point where the exact solution is singular; error quadrature grades
    /// toward it.
    pub singular_vertex: Option<[f64; 2]>,
}

impl ProblemSpec {
    pub fn body_force(&self, x: [f64; 2]) -> [f64; 2] {
        match self.body_force_kind {
            BodyForceKind::Zero => [0.0, 0.0],
            BodyForceKind::FromExact => {
                let sol = self.exact.as_ref().expect("exact solution present");
                force_from_hess(&self.material.at(x), sol.hess(x))
            }
        }
    }

    pub fn has_body_force(&self) -> bool {
        self.body_force_kind != BodyForceKind::Zero
    }

    pub fn dirichlet_value(&self, x: [f64; 2]) -> [f64; 2] {
        match self.dirichlet {
            DirichletKind::Zero => [0.0, 0.0],
            DirichletKind::FromExact => self.exact.as_ref().expect("exact solution present").displacement(x),
        }
    }

    pub fn traction(&self, marker: i32, x: [f64; 2]) -> [f64; 2] {
        match &self.traction {
            Some(g) => g(marker, x),
            None => [0.0, 0.0],
        }
    }

    pub fn exact_stress(&self, x: [f64; 2]) -> Option<SymMatrix2> {
        self.exact.as_ref().map(|sol| stress_from_grad(&self.material.at(x), sol.grad(x)))
    }

    /// Resolves a space request against a concrete mesh (manual split lists
    /// depend on the refinement state).
    pub fn space_kind(&self, mesh: &Mesh, request: SpaceRequest) -> SpaceKind {
        match request {
            SpaceRequest::Original => SpaceKind::Original,
            SpaceRequest::Extended => SpaceKind::Extended,
            SpaceRequest::CornerRelaxed => SpaceKind::CornerRelaxed(self.corners.clone()),
            SpaceRequest::ExtendedCornerRelaxed => SpaceKind::ExtendedCornerRelaxed(self.corners.clone()),
            SpaceRequest::ExtendedManual => {
                let rule = self.split_rule.as_ref().expect("problem provides a split rule");
                SpaceKind::ExtendedManual(rule(mesh))
            }
        }
    }
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("n_elems", &self.mesh.n_elems())
            .field("recommended", &self.recommended)
            .finish()
    }
}

/// Smooth manufactured problem on the unit square with full displacement
/// boundary; verifies the cubic convergence order.
pub fn problem_smooth() -> ProblemSpec {
    let mesh = Mesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        vec![[1, 2, 0], [3, 0, 2]],
        vec![(0, 1, 1), (1, 2, 2), (2, 3, 3), (3, 0, 4)],
    )
    .expect("valid mesh");
    // one halving in: order measurements on the raw two-triangle square sit
    // outside the asymptotic regime
    let mesh = mesh.refine(&mesh.elements().to_vec()).expect("conforming");
    let mesh = mesh.refine(&mesh.elements().to_vec()).expect("conforming");
    ProblemSpec {
        name: "smooth",
        mesh: Arc::new(mesh),
        material: MaterialField::Uniform(ComplianceTensor::from_plane_strain(1.0, 0.3)),
        exact: Some(Arc::new(TrigDisplacement)),
        body_force_kind: BodyForceKind::FromExact,
        dirichlet: DirichletKind::FromExact,
        traction: None,
        corners: Vec::new(),
        split_rule: None,
        recommended: SpaceRequest::Original,
        singular_vertex: None,
    }
}

/// Polynomial patch test: a quartic displacement whose cubic stress lies in
/// the discrete space, so the discrete stress reproduces it to solver
/// accuracy on any mesh.
pub fn problem_patch() -> ProblemSpec {
    let mesh = Mesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        vec![[1, 2, 0], [3, 0, 2]],
        vec![(0, 1, 1), (1, 2, 2), (2, 3, 3), (3, 0, 4)],
    )
    .expect("valid mesh");
    let displacement = PolyDisplacement {
        comp: [
            vec![
                (4, 0, 0.3),
                (3, 1, -0.4),
                (2, 2, 0.5),
                (1, 3, 0.2),
                (0, 4, -0.1),
                (3, 0, 0.6),
                (1, 1, -0.7),
                (0, 2, 0.4),
                (1, 0, 0.9),
            ],
            vec![
                (0, 4, 0.25),
                (1, 3, 0.35),
                (2, 2, -0.45),
                (3, 1, 0.15),
                (4, 0, 0.05),
                (0, 3, -0.3),
                (2, 1, 0.8),
                (0, 1, -0.6),
                (0, 0, 0.2),
            ],
        ],
    };
    ProblemSpec {
        name: "patch",
        mesh: Arc::new(mesh),
        material: MaterialField::Uniform(ComplianceTensor::from_plane_strain(1.0, 0.3)),
        exact: Some(Arc::new(displacement)),
        body_force_kind: BodyForceKind::FromExact,
        dirichlet: DirichletKind::FromExact,
        traction: None,
        corners: Vec::new(),
        split_rule: None,
        recommended: SpaceRequest::Original,
        singular_vertex: None,
    }
}

/// Bimaterial interface on the unit square: the stiffness jumps across
/// `x2 = 0.5`, the exact stress is `diag(E(x2), 0)` for `u = (x1, 0)`. With
/// tangential splits along the interface line the discrete space contains
/// the exact stress.
pub fn problem_interface() -> ProblemSpec {
    // 2x2 grid of squares, each split along the bottom-left to top-right
    // diagonal; all edges align with the interface line
    let mut vertices = Vec::new();
    for j in 0..3 {
        for i in 0..3 {
            vertices.push([i as f64 * 0.5, j as f64 * 0.5]);
        }
    }
    let idx = |i: usize, j: usize| j * 3 + i;
    let mut tris = Vec::new();
    for j in 0..2 {
        for i in 0..2 {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            tris.push([b, c, a]);
            tris.push([d, a, c]);
        }
    }
    let mut boundary = Vec::new();
    for i in 0..2 {
        boundary.push((idx(i, 0), idx(i + 1, 0), 1));
        boundary.push((idx(i, 2), idx(i + 1, 2), 3));
        boundary.push((idx(0, i), idx(0, i + 1), 4));
        boundary.push((idx(2, i), idx(2, i + 1), 2));
    }
    let mesh = Mesh::new(vertices, tris, boundary).expect("valid mesh");
    let material = MaterialField::ByRegion(Arc::new(|x: [f64; 2]| {
        if x[1] < 0.5 {
            ComplianceTensor::new(0.0, 0.5)
        } else {
            ComplianceTensor::new(0.0, 5.0)
        }
    }));
    let displacement = PolyDisplacement { comp: [vec![(1, 0, 1.0)], vec![]] };
    let split_rule: Arc<SplitRule> = Arc::new(|mesh: &Mesh| {
        (0..mesh.n_vertices())
            .filter(|&v| (mesh.pos(v)[1] - 0.5).abs() < 1e-12)
            .map(|v| ManualSplit { vertex: v, tangent: [1.0, 0.0] })
            .collect()
    });
    ProblemSpec {
        name: "interface",
        mesh: Arc::new(mesh),
        material,
        exact: Some(Arc::new(displacement)),
        body_force_kind: BodyForceKind::Zero,
        dirichlet: DirichletKind::FromExact,
        traction: None,
        corners: Vec::new(),
        split_rule: Some(split_rule),
        recommended: SpaceRequest::ExtendedManual,
        singular_vertex: None,
    }
}

/// Rotated L-shaped domain (re-entrant corner of angle `3 pi / 2` at the
/// origin, legs at `phi = +- 3 pi / 4`): Williams corner mode as exact
/// solution, traction-free legs, displacement data on the outer boundary.
///
/// The initial refinement edges are chosen so the corner fan stays at three
/// triangles under uniform bisection, which keeps the relaxed-corner basis
/// applicable on every level. The outer vertices sit off the diagonal rays:
/// a boundary leg parallel to the far spoke of the corner fan would make
/// the relaxed corner basis singular.
pub fn problem_lshape() -> ProblemSpec {
    let vertices = vec![[0.0, 0.0], [-1.0, -1.0], [1.0, -0.5], [1.0, 0.5], [-1.0, 1.0]];
    // refinement edges: spoke 0-2 shared by the first two triangles, the
    // boundary leg 0-4 for the third
    let tris = vec![[1, 2, 0], [3, 0, 2], [3, 4, 0]];
    let boundary = vec![(0, 1, -1), (1, 2, 1), (2, 3, 2), (3, 4, 3), (4, 0, -2)];
    let mesh = Mesh::new(vertices, tris, boundary).expect("valid mesh");
    // start one uniform halving in: the first coarse step sits deep in the
    // preasymptotic regime otherwise
    let mesh = mesh.refine(&mesh.elements().to_vec()).expect("conforming");
    let mesh = mesh.refine(&mesh.elements().to_vec()).expect("conforming");
    let mat = ComplianceTensor::from_plane_strain(1e5, 0.499);
    let exact = CornerModeDisplacement::new(&mat);
    ProblemSpec {
        name: "lshape",
        mesh: Arc::new(mesh),
        material: MaterialField::Uniform(mat),
        exact: Some(Arc::new(exact)),
        body_force_kind: BodyForceKind::Zero,
        dirichlet: DirichletKind::FromExact,
        traction: Some(Arc::new(|_, _| [0.0, 0.0])),
        corners: vec![0],
        split_rule: None,
        recommended: SpaceRequest::CornerRelaxed,
        singular_vertex: Some([0.0, 0.0]),
    }
}

/// Cook's membrane: tapered panel clamped on the left, uniform upward shear
/// traction on the right edge, traction-free top and bottom. The traction
/// data is inconsistent at the two right corners.
///
/// Initial refinement edges keep the fans at those corners at two triangles
/// under uniform bisection.
pub fn problem_cook() -> ProblemSpec {
    let vertices = vec![[0.0, 0.0], [48.0, 44.0], [48.0, 60.0], [0.0, 44.0], [24.0, 37.0]];
    let tris = vec![[4, 0, 1], [4, 1, 2], [4, 2, 3], [3, 0, 4]];
    let boundary = vec![(0, 1, -1), (1, 2, -2), (2, 3, -3), (3, 0, 1)];
    let mesh = Mesh::new(vertices, tris, boundary).expect("valid mesh");
    let traction: Arc<TractionFn> = Arc::new(|marker, _x| if marker == -2 { [0.0, 1.0] } else { [0.0, 0.0] });
    ProblemSpec {
        name: "cook",
        mesh: Arc::new(mesh),
        material: MaterialField::Uniform(ComplianceTensor::from_plane_strain(1e5, 0.499)),
        exact: None,
        body_force_kind: BodyForceKind::Zero,
        dirichlet: DirichletKind::Zero,
        traction: Some(traction),
        corners: vec![1, 2],
        split_rule: None,
        recommended: SpaceRequest::CornerRelaxed,
        singular_vertex: None,
    }
}

pub fn by_name(name: &str) -> Option<ProblemSpec> {
    match name {
        "smooth" => Some(problem_smooth()),
        "patch" => Some(problem_patch()),
        "interface" => Some(problem_interface()),
        "lshape" => Some(problem_lshape()),
        "cook" => Some(problem_cook()),
        _ => None,
    }
}

pub const PROBLEM_NAMES: &[&str] = &["smooth", "patch", "interface", "lshape", "cook"];

/// Error norms of a discrete pair against the exact solution.
#[derive(Debug, Clone, Copy, Default)]
pub struct ErrorNorms {
    /// Energy norm `||sigma - sigma_h||_A`.
    pub a: f64,
    /// `H(div)` norm of the stress error.
    pub hdiv: f64,
    /// `L2` norm of the displacement error.
    pub u: f64,
}

/// Quadrature points (physical, with physical weights) for one element,
/// dyadically graded toward `corner` when that is one of its vertices.
fn element_quad_points(
    geo: &ElementGeometry,
    rule: &crate::quad::TriangleRule,
    singular: Option<[f64; 2]>,
    levels: usize,
) -> Vec<([f64; 2], f64)> {
    let base = |coords: [[f64; 2]; 3], out: &mut Vec<([f64; 2], f64)>| {
        let area2 = (coords[1][0] - coords[0][0]) * (coords[2][1] - coords[0][1])
            - (coords[1][1] - coords[0][1]) * (coords[2][0] - coords[0][0]);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let x = [
                p[0] * coords[0][0] + p[1] * coords[1][0] + p[2] * coords[2][0],
                p[0] * coords[0][1] + p[1] * coords[1][1] + p[2] * coords[2][1],
            ];
            out.push((x, w * area2));
        }
    };
    let corner = singular.and_then(|s| {
        (0..3).find(|&k| {
            let d = sub(geo.coords[k], s);
            d[0].hypot(d[1]) < 1e-12
        })
    });
    let mut out = Vec::new();
    match corner {
        None => base(geo.coords, &mut out),
        Some(k) => {
            // peel layers toward the singular vertex
            let mut tri = [geo.coords[k], geo.coords[(k + 1) % 3], geo.coords[(k + 2) % 3]];
            for _ in 0..levels {
                let m01 = [(tri[0][0] + tri[1][0]) / 2.0, (tri[0][1] + tri[1][1]) / 2.0];
                let m02 = [(tri[0][0] + tri[2][0]) / 2.0, (tri[0][1] + tri[2][1]) / 2.0];
                let m12 = [(tri[1][0] + tri[2][0]) / 2.0, (tri[1][1] + tri[2][1]) / 2.0];
                base([m01, tri[1], m12], &mut out);
                base([m02, m12, tri[2]], &mut out);
                base([m01, m12, m02], &mut out);
                tri = [tri[0], m01, m02];
            }
            base(tri, &mut out);
        }
    }
    out
}

/// Computes the error norms by elementwise quadrature; elements touching the
/// singular vertex use graded subdivision.
pub fn error_norms(
    problem: &ProblemSpec,
    stress: &StressField,
    disp: &DisplacementField,
    quad: &QuadConfig,
) -> Option<ErrorNorms> {
    let sol = problem.exact.as_ref()?;
    let mesh = stress.dofmap.mesh.as_ref();
    let rule = triangle_rule(quad.load_degree).expect("fixed degree");
    let mut a2 = 0.0;
    let mut l2 = 0.0;
    let mut div2 = 0.0;
    let mut u2 = 0.0;
    for elem in 0..mesh.n_elems() {
        let geo = ElementGeometry::from_mesh(mesh, elem);
        let shapes = StressShapes::new(geo.clone());
        let mat = problem.material.at(mesh.elem_centroid(elem));
        let pts = element_quad_points(&geo, &rule, problem.singular_vertex, 24);
        let local = stress.dofmap.local_stress_coeffs(elem, &stress.coeffs);
        for (x, w) in pts {
            let l = geo.bary(x);
            let vals = shapes.eval_all(l);
            let mut sh = SymMatrix2::ZERO;
            for (c, v) in local.iter().zip(vals.iter()) {
                sh = sh.add(&v.scaled(*c));
            }
            let diff = sh.sub(&stress_from_grad(&mat, sol.grad(x)));
            a2 += w * mat.apply(&diff).ddot(&diff);
            l2 += w * diff.ddot(&diff);
            // divergence error: div sigma_h - f (exact div sigma = f)
            let divs = shapes.div_all(l);
            let mut dh = [0.0, 0.0];
            for (c, d) in local.iter().zip(divs.iter()) {
                dh[0] += c * d[0];
                dh[1] += c * d[1];
            }
            let f = problem.body_force(x);
            let dd = [dh[0] - f[0], dh[1] - f[1]];
            div2 += w * dot(dd, dd);
            // displacement error
            let psi = disp_shapes_all(l);
            let mut uh = [0.0, 0.0];
            for (k, s) in psi.iter().enumerate() {
                let c = disp.coeffs[12 * elem + k];
                uh[0] += c * s[0];
                uh[1] += c * s[1];
            }
            let ue = sol.displacement(x);
            let du = [uh[0] - ue[0], uh[1] - ue[1]];
            u2 += w * dot(du, du);
        }
    }
    Some(ErrorNorms { a: a2.sqrt(), hdiv: (l2 + div2).sqrt(), u: u2.sqrt() })
}

/// Energy-norm distance between a discrete stress and a reference stress
/// living on a (generally different) refinement of the same initial mesh.
pub fn error_a_vs_reference(
    problem: &ProblemSpec,
    stress: &StressField,
    reference: &StressField,
    quad: &QuadConfig,
) -> f64 {
    let mesh = stress.dofmap.mesh.as_ref();
    let rule = triangle_rule(quad.load_degree).expect("fixed degree");
    let mut a2 = 0.0;
    for elem in 0..mesh.n_elems() {
        let geo = ElementGeometry::from_mesh(mesh, elem);
        let shapes = StressShapes::new(geo.clone());
        let mat = problem.material.at(mesh.elem_centroid(elem));
        let local = stress.dofmap.local_stress_coeffs(elem, &stress.coeffs);
        let area2 = 2.0 * geo.area;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let x = geo.point(*p);
            let vals = shapes.eval_all(*p);
            let mut sh = SymMatrix2::ZERO;
            for (c, v) in local.iter().zip(vals.iter()) {
                sh = sh.add(&v.scaled(*c));
            }
            let sref = reference.eval_at(x).unwrap_or(SymMatrix2::ZERO);
            let diff = sh.sub(&sref);
            a2 += w * area2 * mat.apply(&diff).ddot(&diff);
        }
    }
    a2.sqrt()
}

/// `||tau||_A` of an analytic stress field over the mesh, for relative
/// error reporting.
pub fn exact_a_norm(problem: &ProblemSpec, mesh: &Mesh, quad: &QuadConfig) -> Option<f64> {
    let sol = problem.exact.as_ref()?;
    let rule = triangle_rule(quad.load_degree).expect("fixed degree");
    let mut a2 = 0.0;
    for elem in 0..mesh.n_elems() {
        let geo = ElementGeometry::from_mesh(mesh, elem);
        let mat = problem.material.at(mesh.elem_centroid(elem));
        let pts = element_quad_points(&geo, &rule, problem.singular_vertex, 24);
        for (x, w) in pts {
            let s = stress_from_grad(&mat, sol.grad(x));
            a2 += w * mat.apply(&s).ddot(&s);
        }
    }
    Some(a2.sqrt())
}

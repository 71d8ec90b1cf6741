//! Solve/estimate/mark/refine loops for uniform and adaptive studies.

use crate::estimator::{estimate, mark, Estimate};
use crate::fields::{DisplacementField, StressField};
use crate::mesh::Mesh;
use crate::problems::{error_norms, ErrorNorms, ProblemSpec, SpaceRequest};
use crate::space::{build_dof_map, DofMap};
use crate::system::{assemble, dirichlet_rhs, neumann_interpolate, solve, NeumannConstraints, QuadConfig, SolveError};
use std::sync::Arc;

/// One discrete solve on a given mesh.
pub struct SolveOutput {
    pub dofmap: Arc<DofMap>,
    pub stress: StressField,
    pub disp: DisplacementField,
    pub neumann: NeumannConstraints,
}

/// Builds the dof map, assembles, imposes boundary data and solves.
pub fn solve_on_mesh(
    problem: &ProblemSpec,
    mesh: &Arc<Mesh>,
    request: SpaceRequest,
    quad: &QuadConfig,
) -> Result<SolveOutput, SolveError> {
    let kind = problem.space_kind(mesh, request);
    let dofmap = Arc::new(build_dof_map(mesh, kind)?);
    let mut system = assemble(&dofmap, &problem.material, &|x| problem.body_force(x), quad)?;
    system.rhs_stress = dirichlet_rhs(&dofmap, &|x| problem.dirichlet_value(x), quad)?;
    let neumann = neumann_interpolate(&dofmap, &|m, x| problem.traction(m, x), quad)?;
    system.constraints = neumann.entries.clone();
    let (stress, disp) = solve(&system, &dofmap)?;
    Ok(SolveOutput { dofmap, stress, disp, neumann })
}

/// One level of a refinement study.
pub struct LevelData {
    pub level: usize,
    pub mesh: Arc<Mesh>,
    pub output: SolveOutput,
    pub estimate: Estimate,
    pub errors: Option<ErrorNorms>,
    /// Scaled effectivity index, when an exact solution is available.
    pub effectivity: Option<f64>,
}

impl LevelData {
    pub fn stress_dofs(&self) -> usize {
        self.output.dofmap.n_stress
    }

    pub fn total_dofs(&self) -> usize {
        self.output.dofmap.n_total()
    }
}

/// Stopping rule of the adaptive loop.
#[derive(Debug, Clone, Copy)]
pub enum StopRule {
    /// Stop once the level count is reached (records `n` levels).
    Levels(usize),
    /// Stop once the stress dof count reaches the bound.
    MaxStressDofs(usize),
    /// Stop once the total estimator falls below the tolerance.
    EtaTol(f64),
}

fn make_level(
    problem: &ProblemSpec,
    mesh: &Arc<Mesh>,
    request: SpaceRequest,
    quad: &QuadConfig,
    level: usize,
) -> Result<LevelData, SolveError> {
    let output = solve_on_mesh(problem, mesh, request, quad)?;
    let est = estimate(&output.stress, problem, quad);
    let errors = error_norms(problem, &output.stress, &output.disp, quad);
    let effectivity = errors.map(|e| {
        // classical index: estimator over error, with the estimator put in
        // energy units. The residual terms measure strain-like quantities
        // while the energy norm carries 1/(2 mu), so the scaling keeps the
        // index material-independent.
        let mu = problem.material.at(mesh.elem_centroid(0)).mu;
        let energy2 = 2.0 * mu * est.eta2_total + (est.osc_f2_total + est.osc_g2_total) / (2.0 * mu);
        energy2.sqrt() / e.a.max(1e-300)
    });
    Ok(LevelData { level, mesh: mesh.clone(), output, estimate: est, errors, effectivity })
}

/// Uniform study: each level halves the mesh size (two rounds of
/// bisect-everything per level).
pub fn uniform_loop(
    problem: &ProblemSpec,
    request: SpaceRequest,
    levels: usize,
    quad: &QuadConfig,
) -> Result<Vec<LevelData>, SolveError> {
    let mut mesh = problem.mesh.clone();
    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        out.push(make_level(problem, &mesh, request, quad, level)?);
        if level + 1 < levels {
            let mut m = mesh.as_ref().clone();
            for _ in 0..2 {
                m = m.refine(&m.elements().to_vec()).map_err(crate::space::SpaceError::Mesh)?;
            }
            mesh = Arc::new(m);
        }
    }
    Ok(out)
}

/// Adaptive loop: solve, estimate, mark with bulk parameter `theta`, refine
/// by newest-vertex bisection, until the stop rule fires.
pub fn adapt_loop(
    problem: &ProblemSpec,
    request: SpaceRequest,
    theta: f64,
    stop: StopRule,
    quad: &QuadConfig,
) -> Result<Vec<LevelData>, SolveError> {
    let mut mesh = problem.mesh.clone();
    let mut out: Vec<LevelData> = Vec::new();
    loop {
        let level = out.len();
        let data = make_level(problem, &mesh, request, quad, level)?;
        let stop_now = match stop {
            StopRule::Levels(n) => level + 1 >= n,
            StopRule::MaxStressDofs(n) => data.stress_dofs() >= n,
            StopRule::EtaTol(tol) => data.estimate.total() <= tol,
        };
        // nestedness audit on the first refinements of extended runs
        #[cfg(debug_assertions)]
        if matches!(request, SpaceRequest::Extended | SpaceRequest::ExtendedCornerRelaxed) && level >= 1 && level <= 3 {
            let prev = out.last().expect("previous level exists");
            if let Ok(fine) = crate::space::prolong(&prev.output.stress, &data.output.dofmap) {
                audit_prolongation(&prev.output.stress, &fine);
            }
        }
        let marked_active = mark(&data.estimate, theta);
        let marked: Vec<usize> = marked_active.iter().map(|&e| data.mesh.elem_forest_id(e)).collect();
        out.push(data);
        if stop_now {
            break;
        }
        let refined = mesh.refine(&marked).map_err(crate::space::SpaceError::Mesh)?;
        mesh = Arc::new(refined);
    }
    Ok(out)
}

#[cfg(debug_assertions)]
fn audit_prolongation(coarse: &StressField, fine: &StressField) {
    let cm = coarse.dofmap.mesh.as_ref();
    let scale = coarse.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1e-300);
    for elem in (0..cm.n_elems()).step_by(1 + cm.n_elems() / 8) {
        let l = [0.21, 0.33, 0.46];
        let x = crate::elem::ElementGeometry::from_mesh(cm, elem).point(l);
        let a = coarse.eval(elem, l);
        if let Some(b) = fine.eval_at(x) {
            let d = a.sub(&b).norm();
            debug_assert!(d <= 1e-9 * scale, "prolongation drift {d:.3e} at level audit");
        }
    }
}

/// Per-level numbers for tables and CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord {
    pub level: usize,
    pub n_triangles: usize,
    pub stress_dofs: usize,
    pub total_dofs: usize,
    pub eta: f64,
    pub osc_f: f64,
    pub osc_g: f64,
    pub error_a: Option<f64>,
    pub error_hdiv: Option<f64>,
    pub error_u: Option<f64>,
    pub effectivity: Option<f64>,
}

impl LevelRecord {
    pub fn from_level(data: &LevelData) -> LevelRecord {
        LevelRecord {
            level: data.level,
            n_triangles: data.mesh.n_elems(),
            stress_dofs: data.stress_dofs(),
            total_dofs: data.total_dofs(),
            eta: data.estimate.eta(),
            osc_f: data.estimate.osc_f2_total.sqrt(),
            osc_g: data.estimate.osc_g2_total.sqrt(),
            error_a: data.errors.map(|e| e.a),
            error_hdiv: data.errors.map(|e| e.hdiv),
            error_u: data.errors.map(|e| e.u),
            effectivity: data.effectivity,
        }
    }
}

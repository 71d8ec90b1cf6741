//! Browser bindings: drive the solve/estimate/mark/refine loop
//! interactively and expose mesh geometry plus per-element fields for
//! canvas rendering.

use nested_hz::adapt::{solve_on_mesh, SolveOutput};
use nested_hz::estimator::{estimate, mark, Estimate};
use nested_hz::mesh::Mesh;
use nested_hz::problems::{self, ProblemSpec, SpaceRequest};
use nested_hz::system::QuadConfig;
use std::sync::Arc;
use wasm_bindgen::prelude::*;

/// One problem loaded at a fixed space choice, stepped through refinement
/// rounds from the browser.
#[wasm_bindgen]
pub struct Demo {
    problem: ProblemSpec,
    request: SpaceRequest,
    theta: f64,
    quad: QuadConfig,
    mesh: Arc<Mesh>,
    level: usize,
    output: Option<SolveOutput>,
    estimate: Option<Estimate>,
    marked: Vec<usize>,
}

fn solve_current(demo: &mut Demo) -> Result<(), JsError> {
    let output = solve_on_mesh(&demo.problem, &demo.mesh, demo.request, &demo.quad)
        .map_err(|e| JsError::new(&e.to_string()))?;
    let est = estimate(&output.stress, &demo.problem, &demo.quad);
    demo.marked = mark(&est, demo.theta);
    demo.output = Some(output);
    demo.estimate = Some(est);
    Ok(())
}

#[wasm_bindgen]
impl Demo {
    /// Problems: `smooth`, `patch`, `interface`, `lshape`, `cook`.
    /// Spaces: `original`, `extended`, `corner-relaxed`,
    /// `extended-corner-relaxed`, `extended-manual`.
    #[wasm_bindgen(constructor)]
    pub fn new(problem: &str, space: &str, theta: f64) -> Result<Demo, JsError> {
        let problem = problems::by_name(problem)
            .ok_or_else(|| JsError::new(&format!("unknown problem {problem:?}")))?;
        let request = SpaceRequest::parse(space)
            .ok_or_else(|| JsError::new(&format!("unknown space {space:?}")))?;
        if matches!(request, SpaceRequest::ExtendedManual) && problem.split_rule.is_none() {
            return Err(JsError::new("this problem has no manual split rule"));
        }
        if !(0.0 < theta && theta < 1.0) {
            return Err(JsError::new("theta must be in (0, 1)"));
        }
        let mesh = problem.mesh.clone();
        let mut demo = Demo {
            problem,
            request,
            theta,
            quad: QuadConfig::default(),
            mesh,
            level: 0,
            output: None,
            estimate: None,
            marked: Vec::new(),
        };
        solve_current(&mut demo)?;
        Ok(demo)
    }

    /// Refines the currently marked bulk set and re-solves.
    pub fn step_adaptive(&mut self) -> Result<(), JsError> {
        let marked: Vec<usize> = self.marked.iter().map(|&e| self.mesh.elem_forest_id(e)).collect();
        let refined = self.mesh.refine(&marked).map_err(|e| JsError::new(&e.to_string()))?;
        self.mesh = Arc::new(refined);
        self.level += 1;
        solve_current(self)
    }

    /// Bisects every triangle once and re-solves.
    pub fn step_uniform(&mut self) -> Result<(), JsError> {
        let refined = self
            .mesh
            .refine(&self.mesh.elements().to_vec())
            .map_err(|e| JsError::new(&e.to_string()))?;
        self.mesh = Arc::new(refined);
        self.level += 1;
        solve_current(self)
    }

    pub fn set_theta(&mut self, theta: f64) -> Result<(), JsError> {
        if !(0.0 < theta && theta < 1.0) {
            return Err(JsError::new("theta must be in (0, 1)"));
        }
        self.theta = theta;
        if let Some(est) = &self.estimate {
            self.marked = mark(est, self.theta);
        }
        Ok(())
    }

    /// Level, triangle count, stress dofs, total dofs, estimator, energy
    /// error against the exact solution when available.
    pub fn stats_json(&self) -> String {
        let est = self.estimate.as_ref();
        let output = self.output.as_ref();
        let eta = est.map(|e| e.total()).unwrap_or(f64::NAN);
        let dofs = output.map(|o| o.dofmap.n_stress).unwrap_or(0);
        let total = output.map(|o| o.dofmap.n_total()).unwrap_or(0);
        let error = output
            .and_then(|o| {
                problems::error_norms(&self.problem, &o.stress, &o.disp, &self.quad)
            })
            .map(|n| n.a)
            .unwrap_or(f64::NAN);
        format!(
            "{{\"level\":{},\"triangles\":{},\"stress_dofs\":{},\"total_dofs\":{},\"eta\":{:e},\"error_a\":{:e},\"marked\":{}}}",
            self.level,
            self.mesh.n_elems(),
            dofs,
            total,
            eta,
            error,
            self.marked.len()
        )
    }

    /// Flat vertex coordinates, six numbers per triangle.
    pub fn triangle_coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(6 * self.mesh.n_elems());
        for e in 0..self.mesh.n_elems() {
            for c in self.mesh.elem_coords(e) {
                out.push(c[0]);
                out.push(c[1]);
            }
        }
        out
    }

    /// Per-triangle scalar for coloring. Fields: `eta` (estimator
    /// indicator), `s11`, `s12`, `s22` (stress components at the centroid),
    /// `mises` (von Mises stress), `u` (displacement magnitude).
    pub fn triangle_values(&self, field: &str) -> Result<Vec<f64>, JsError> {
        let n = self.mesh.n_elems();
        let center = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        match field {
            "eta" => Ok(self
                .estimate
                .as_ref()
                .map(|e| e.eta2.iter().map(|v| v.sqrt()).collect())
                .unwrap_or_else(|| vec![0.0; n])),
            "s11" | "s12" | "s22" | "mises" => {
                let Some(out) = &self.output else { return Ok(vec![0.0; n]) };
                Ok((0..n)
                    .map(|e| {
                        let s = out.stress.eval(e, center);
                        match field {
                            "s11" => s.s11,
                            "s12" => s.s12,
                            "s22" => s.s22,
                            _ => {
                                let m = s.s11 * s.s11 - s.s11 * s.s22 + s.s22 * s.s22 + 3.0 * s.s12 * s.s12;
                                m.max(0.0).sqrt()
                            }
                        }
                    })
                    .collect())
            }
            "u" => {
                let Some(out) = &self.output else { return Ok(vec![0.0; n]) };
                Ok((0..n)
                    .map(|e| {
                        let u = out.disp.eval(e, center);
                        u[0].hypot(u[1])
                    })
                    .collect())
            }
            other => Err(JsError::new(&format!("unknown field {other:?}"))),
        }
    }

    /// Indices of the triangles the bulk criterion marks for refinement.
    pub fn marked_elements(&self) -> Vec<u32> {
        self.marked.iter().map(|&e| e as u32).collect()
    }

    pub fn n_triangles(&self) -> usize {
        self.mesh.n_elems()
    }
}

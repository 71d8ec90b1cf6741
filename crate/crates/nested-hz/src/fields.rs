//! Coefficient vectors interpreted through a dof map.

use crate::elem::{disp_shapes_all, StressShapes, SymMatrix2};
use crate::space::DofMap;
use std::sync::Arc;

/// A discrete stress: one coefficient per stress dof.
#[derive(Debug, Clone)]
pub struct StressField {
    pub dofmap: Arc<DofMap>,
    pub coeffs: Vec<f64>,
}

impl StressField {
    pub fn zeros(dofmap: Arc<DofMap>) -> Self {
        let n = dofmap.n_stress;
        StressField { dofmap, coeffs: vec![0.0; n] }
    }

    /// Value on element `elem` at barycentric `l`.
    pub fn eval(&self, elem: usize, l: [f64; 3]) -> SymMatrix2 {
        let shapes = StressShapes::from_mesh(&self.dofmap.mesh, elem);
        self.eval_with(&shapes, elem, l)
    }

    /// Value using a prebuilt shape set (for quadrature loops).
    pub fn eval_with(&self, shapes: &StressShapes, elem: usize, l: [f64; 3]) -> SymMatrix2 {
        let local = self.dofmap.local_stress_coeffs(elem, &self.coeffs);
        let vals = shapes.eval_all(l);
        let mut s = SymMatrix2::ZERO;
        for (c, v) in local.iter().zip(vals.iter()) {
            s = s.add(&v.scaled(*c));
        }
        s
    }

    /// Row-wise divergence on element `elem` at barycentric `l`.
    pub fn div(&self, elem: usize, l: [f64; 3]) -> [f64; 2] {
        let shapes = StressShapes::from_mesh(&self.dofmap.mesh, elem);
        let local = self.dofmap.local_stress_coeffs(elem, &self.coeffs);
        let divs = shapes.div_all(l);
        let mut out = [0.0; 2];
        for (c, d) in local.iter().zip(divs.iter()) {
            out[0] += c * d[0];
            out[1] += c * d[1];
        }
        out
    }

    /// Value at a physical point, located through the mesh forest.
    pub fn eval_at(&self, x: [f64; 2]) -> Option<SymMatrix2> {
        let (elem, l) = self.dofmap.mesh.locate(x)?;
        Some(self.eval(elem, l))
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }
}

/// A discrete displacement: twelve local dofs per element.
#[derive(Debug, Clone)]
pub struct DisplacementField {
    pub dofmap: Arc<DofMap>,
    /// Length `12 * n_elems`, indexed by `12 * elem + local`.
    pub coeffs: Vec<f64>,
}

impl DisplacementField {
    pub fn zeros(dofmap: Arc<DofMap>) -> Self {
        let n = dofmap.n_disp;
        DisplacementField { dofmap, coeffs: vec![0.0; n] }
    }

    pub fn eval(&self, elem: usize, l: [f64; 3]) -> [f64; 2] {
        let shapes = disp_shapes_all(l);
        let mut out = [0.0; 2];
        for (k, s) in shapes.iter().enumerate() {
            let c = self.coeffs[12 * elem + k];
            out[0] += c * s[0];
            out[1] += c * s[1];
        }
        out
    }
}

//! Cubic bivariate polynomials in the first two barycentric coordinates.
//!
//! Working in `(l1, l2)` with `l3 = 1 - l1 - l2` keeps coefficients O(1) on
//! every element regardless of its size, so differentiating the discrete
//! stress for the error estimator stays well conditioned.

use crate::la::solve_dense;
use std::sync::OnceLock;

/// Monomial order: `1, a, b, a^2, ab, b^2, a^3, a^2 b, a b^2, b^3` where
/// `a = l1`, `b = l2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poly3 {
    pub c: [f64; 10],
}

impl Poly3 {
    pub fn zero() -> Self {
        Poly3 { c: [0.0; 10] }
    }

    pub fn eval(&self, a: f64, b: f64) -> f64 {
        let c = &self.c;
        c[0] + a * (c[1] + a * (c[3] + a * c[6]))
            + b * (c[2] + b * (c[5] + b * c[9]))
            + a * b * (c[4] + a * c[7] + b * c[8])
    }

    /// Partial derivative with respect to the first barycentric coordinate.
    pub fn da(&self) -> Poly3 {
        let c = &self.c;
        let mut d = [0.0; 10];
        d[0] = c[1];
        d[1] = 2.0 * c[3];
        d[2] = c[4];
        d[3] = 3.0 * c[6];
        d[4] = 2.0 * c[7];
        d[5] = c[8];
        Poly3 { c: d }
    }

    /// Partial derivative with respect to the second barycentric coordinate.
    pub fn db(&self) -> Poly3 {
        let c = &self.c;
        let mut d = [0.0; 10];
        d[0] = c[2];
        d[1] = c[4];
        d[2] = 2.0 * c[5];
        d[3] = c[7];
        d[4] = 2.0 * c[8];
        d[5] = 3.0 * c[9];
        Poly3 { c: d }
    }

    pub fn add_scaled(&mut self, other: &Poly3, s: f64) {
        for (a, b) in self.c.iter_mut().zip(other.c.iter()) {
            *a += s * b;
        }
    }

    pub fn scaled(&self, s: f64) -> Poly3 {
        let mut out = *self;
        for v in &mut out.c {
            *v *= s;
        }
        out
    }

    /// Reconstructs the cubic from its values at the ten P3 lattice nodes
    /// (ordering from [`lattice_nodes`]).
    pub fn from_p3_nodal(values: &[f64; 10]) -> Poly3 {
        let inv = inverse_vandermonde();
        let mut c = [0.0; 10];
        for (i, ci) in c.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, v) in values.iter().enumerate() {
                s += inv[i * 10 + j] * v;
            }
            *ci = s;
        }
        Poly3 { c }
    }
}

/// Barycentric coordinates of the ten P3 lattice nodes, in the local node
/// order used throughout the crate: three vertices, two interior nodes per
/// edge (edge `i` is opposite vertex `i`; node `(i, j)` sits closer to local
/// vertex `(i+1+j) % 3`), then the center.
pub fn lattice_nodes() -> [[f64; 3]; 10] {
    let mut nodes = [[0.0; 3]; 10];
    for v in 0..3 {
        nodes[v][v] = 1.0;
    }
    for e in 0..3 {
        for j in 0..2 {
            let near = (e + 1 + j) % 3;
            let far = (e + 1 + (1 - j)) % 3;
            let mut l = [0.0; 3];
            l[near] = 2.0 / 3.0;
            l[far] = 1.0 / 3.0;
            nodes[3 + 2 * e + j] = l;
        }
    }
    nodes[9] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
    nodes
}

fn monomials(a: f64, b: f64) -> [f64; 10] {
    [1.0, a, b, a * a, a * b, b * b, a * a * a, a * a * b, a * b * b, b * b * b]
}

fn inverse_vandermonde() -> &'static [f64; 100] {
    static INV: OnceLock<[f64; 100]> = OnceLock::new();
    INV.get_or_init(|| {
        let nodes = lattice_nodes();
        let mut inv = [0.0; 100];
        // solve V^T c = e_j for each unit vector; rows of V are monomials at nodes
        for j in 0..10 {
            let mut m = [0.0; 100];
            for (r, n) in nodes.iter().enumerate() {
                let mono = monomials(n[0], n[1]);
                m[r * 10..r * 10 + 10].copy_from_slice(&mono);
            }
            let mut rhs = [0.0; 10];
            rhs[j] = 1.0;
            solve_dense(&mut m, &mut rhs, 10).expect("P3 lattice Vandermonde is regular");
            for i in 0..10 {
                inv[i * 10 + j] = rhs[i];
            }
        }
        inv
    })
}

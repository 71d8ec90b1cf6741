//! Closed-form displacement fields used by the benchmark problems, together
//! with the stress and body-force fields they induce.

use super::corner_mode;
use crate::elem::SymMatrix2;
use crate::system::ComplianceTensor;

/// A displacement field with two derivatives; everything else (stress,
/// body force, boundary data) derives from it and the material.
pub trait Solution: Send + Sync {
    fn displacement(&self, x: [f64; 2]) -> [f64; 2];
    /// `grad[i][j] = d u_i / d x_j`.
    fn grad(&self, x: [f64; 2]) -> [[f64; 2]; 2];
    /// `hess[i] = [u_i,xx, u_i,xy, u_i,yy]`.
    fn hess(&self, x: [f64; 2]) -> [[f64; 3]; 2];
}

/// Stress of a displacement gradient under an isotropic material.
pub fn stress_from_grad(mat: &ComplianceTensor, grad: [[f64; 2]; 2]) -> SymMatrix2 {
    let e11 = grad[0][0];
    let e22 = grad[1][1];
    let e12 = 0.5 * (grad[0][1] + grad[1][0]);
    let tr = e11 + e22;
    SymMatrix2 {
        s11: 2.0 * mat.mu * e11 + mat.lambda * tr,
        s12: 2.0 * mat.mu * e12,
        s22: 2.0 * mat.mu * e22 + mat.lambda * tr,
    }
}

/// Row-wise divergence of the stress induced by a displacement field,
/// i.e. the body force in the sign convention `div sigma = f`.
pub fn force_from_hess(mat: &ComplianceTensor, hess: [[f64; 3]; 2]) -> [f64; 2] {
    let [u1_xx, u1_xy, u1_yy] = hess[0];
    let [u2_xx, u2_xy, u2_yy] = hess[1];
    let lp2m = mat.lambda + 2.0 * mat.mu;
    [
        lp2m * u1_xx + mat.lambda * u2_xy + mat.mu * (u1_yy + u2_xy),
        mat.mu * (u1_xy + u2_xx) + mat.lambda * u1_xy + lp2m * u2_yy,
    ]
}

/// Polynomial displacement: each component is a list of monomials
/// `c * x^i * y^j`. Derivatives are exact.
#[derive(Debug, Clone)]
pub struct PolyDisplacement {
    pub comp: [Vec<(u32, u32, f64)>; 2],
}

impl PolyDisplacement {
    fn eval_component(terms: &[(u32, u32, f64)], dx: u32, dy: u32, x: [f64; 2]) -> f64 {
        let mut s = 0.0;
        for &(i, j, c) in terms {
            if i < dx || j < dy {
                continue;
            }
            let mut f = c;
            for k in 0..dx {
                f *= (i - k) as f64;
            }
            for k in 0..dy {
                f *= (j - k) as f64;
            }
            s += f * x[0].powi((i - dx) as i32) * x[1].powi((j - dy) as i32);
        }
        s
    }
}

impl Solution for PolyDisplacement {
    fn displacement(&self, x: [f64; 2]) -> [f64; 2] {
        [
            Self::eval_component(&self.comp[0], 0, 0, x),
            Self::eval_component(&self.comp[1], 0, 0, x),
        ]
    }

    fn grad(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        [
            [
                Self::eval_component(&self.comp[0], 1, 0, x),
                Self::eval_component(&self.comp[0], 0, 1, x),
            ],
            [
                Self::eval_component(&self.comp[1], 1, 0, x),
                Self::eval_component(&self.comp[1], 0, 1, x),
            ],
        ]
    }

    fn hess(&self, x: [f64; 2]) -> [[f64; 3]; 2] {
        let h = |c: usize| {
            [
                Self::eval_component(&self.comp[c], 2, 0, x),
                Self::eval_component(&self.comp[c], 1, 1, x),
                Self::eval_component(&self.comp[c], 0, 2, x),
            ]
        };
        [h(0), h(1)]
    }
}

/// Smooth trigonometric displacement on the unit square.
#[derive(Debug, Clone, Copy)]
pub struct TrigDisplacement;

impl Solution for TrigDisplacement {
    fn displacement(&self, [x, y]: [f64; 2]) -> [f64; 2] {
        use std::f64::consts::PI;
        [(PI * x).sin() * (PI * y).sin(), (PI * x).cos() * (PI * y).sin() * 0.5]
    }

    fn grad(&self, [x, y]: [f64; 2]) -> [[f64; 2]; 2] {
        use std::f64::consts::PI;
        let (sx, cx) = (PI * x).sin_cos();
        let (sy, cy) = (PI * y).sin_cos();
        [
            [PI * cx * sy, PI * sx * cy],
            [-0.5 * PI * sx * sy, 0.5 * PI * cx * cy],
        ]
    }

    fn hess(&self, [x, y]: [f64; 2]) -> [[f64; 3]; 2] {
        use std::f64::consts::PI;
        let p2 = PI * PI;
        let (sx, cx) = (PI * x).sin_cos();
        let (sy, cy) = (PI * y).sin_cos();
        [
            [-p2 * sx * sy, p2 * cx * cy, -p2 * sx * sy],
            [-0.5 * p2 * cx * sy, -0.5 * p2 * sx * cy, -0.5 * p2 * cx * sy],
        ]
    }
}

/// Opening-mode eigenvalue of a traction-free corner of interior angle
/// `2 omega = 3 pi / 2`: the positive root of
/// `alpha sin(2 omega) + sin(2 omega alpha) = 0`.
pub const CORNER_EXPONENT: f64 = 0.544483736782;

/// Half opening angle of the re-entrant corner.
pub fn corner_omega() -> f64 {
    0.75 * std::f64::consts::PI
}

/// Williams corner mode for the re-entrant corner, rotated so the corner
/// legs sit at `phi = +- 3 pi / 4`.
#[derive(Debug, Clone, Copy)]
pub struct CornerModeDisplacement {
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub mu: f64,
}

impl CornerModeDisplacement {
    pub fn new(mat: &ComplianceTensor) -> Self {
        let omega = corner_omega();
        let alpha = CORNER_EXPONENT;
        let c1 = -((alpha + 1.0) * omega).cos() / ((alpha - 1.0) * omega).cos();
        let c2 = 2.0 * (mat.lambda + 2.0 * mat.mu) / (mat.lambda + mat.mu);
        CornerModeDisplacement { alpha, c1, c2, mu: mat.mu }
    }
}

impl Solution for CornerModeDisplacement {
    fn displacement(&self, [x, y]: [f64; 2]) -> [f64; 2] {
        corner_mode::eval(x, y, self.alpha, self.c1, self.c2, self.mu).0
    }

    fn grad(&self, [x, y]: [f64; 2]) -> [[f64; 2]; 2] {
        corner_mode::eval(x, y, self.alpha, self.c1, self.c2, self.mu).1
    }

    fn hess(&self, [x, y]: [f64; 2]) -> [[f64; 3]; 2] {
        corner_mode::eval(x, y, self.alpha, self.c1, self.c2, self.mu).2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::la::{dot, norm};

    fn fd_check(sol: &dyn Solution, x: [f64; 2], tol: f64) {
        let h = 1e-6;
        let g = sol.grad(x);
        for i in 0..2 {
            let fx = (sol.displacement([x[0] + h, x[1]])[i] - sol.displacement([x[0] - h, x[1]])[i]) / (2.0 * h);
            let fy = (sol.displacement([x[0], x[1] + h])[i] - sol.displacement([x[0], x[1] - h])[i]) / (2.0 * h);
            assert!((g[i][0] - fx).abs() < tol, "du{i}/dx: {} vs {}", g[i][0], fx);
            assert!((g[i][1] - fy).abs() < tol, "du{i}/dy: {} vs {}", g[i][1], fy);
        }
        let hs = sol.hess(x);
        for i in 0..2 {
            let gxx = (sol.grad([x[0] + h, x[1]])[i][0] - sol.grad([x[0] - h, x[1]])[i][0]) / (2.0 * h);
            let gxy = (sol.grad([x[0], x[1] + h])[i][0] - sol.grad([x[0], x[1] - h])[i][0]) / (2.0 * h);
            let gyy = (sol.grad([x[0], x[1] + h])[i][1] - sol.grad([x[0], x[1] - h])[i][1]) / (2.0 * h);
            assert!((hs[i][0] - gxx).abs() < tol, "u{i},xx");
            assert!((hs[i][1] - gxy).abs() < tol, "u{i},xy");
            assert!((hs[i][2] - gyy).abs() < tol, "u{i},yy");
        }
    }

    #[test]
    fn polynomial_derivatives_are_exact() {
        let sol = PolyDisplacement {
            comp: [
                vec![(4, 0, 0.3), (3, 1, 0.1), (2, 2, -0.2), (1, 3, 0.4), (0, 4, 0.25), (2, 0, 0.2), (1, 1, 0.7)],
                vec![(0, 4, -0.15), (3, 1, 0.45), (1, 2, -0.6), (2, 0, 0.35), (0, 1, -0.8)],
            ],
        };
        fd_check(&sol, [0.42, -0.31], 1e-5);
    }

    #[test]
    fn trig_derivatives_match_finite_differences() {
        fd_check(&TrigDisplacement, [0.37, 0.58], 1e-6);
        fd_check(&TrigDisplacement, [0.81, 0.13], 1e-6);
    }

    #[test]
    fn characteristic_equation_residual() {
        let omega = corner_omega();
        let a = CORNER_EXPONENT;
        let res = a * (2.0 * omega).sin() + (2.0 * omega * a).sin();
        assert!(res.abs() < 1e-11, "residual {res}");
    }

    #[test]
    fn corner_mode_derivatives_match_finite_differences() {
        let mat = ComplianceTensor::from_plane_strain(1e5, 0.499);
        let sol = CornerModeDisplacement::new(&mat);
        // points away from the origin where the field is smooth
        for x in [[0.4, 0.2], [-0.3, 0.5], [0.2, -0.6], [0.7, 0.1]] {
            let h = 1e-6;
            let g = sol.grad(x);
            for i in 0..2 {
                let fx = (sol.displacement([x[0] + h, x[1]])[i] - sol.displacement([x[0] - h, x[1]])[i]) / (2.0 * h);
                let fy = (sol.displacement([x[0], x[1] + h])[i] - sol.displacement([x[0], x[1] - h])[i]) / (2.0 * h);
                let scale = norm([g[i][0], g[i][1]]).max(1e-12);
                assert!((g[i][0] - fx).abs() < 1e-5 * scale.max(1.0), "du{i}/dx at {x:?}");
                assert!((g[i][1] - fy).abs() < 1e-5 * scale.max(1.0), "du{i}/dy at {x:?}");
            }
        }
    }

    #[test]
    fn corner_mode_equilibrium_and_free_legs() {
        let mat = ComplianceTensor::from_plane_strain(1e5, 0.499);
        let sol = CornerModeDisplacement::new(&mat);
        // div sigma = 0 via finite differences of the analytic stress
        let h = 1e-5;
        for x in [[0.5, 0.3], [-0.4, 0.45], [0.3, -0.5], [0.8, 0.05]] {
            let s = |p: [f64; 2]| stress_from_grad(&mat, sol.grad(p));
            let sxp = s([x[0] + h, x[1]]);
            let sxm = s([x[0] - h, x[1]]);
            let syp = s([x[0], x[1] + h]);
            let sym = s([x[0], x[1] - h]);
            let div = [
                (sxp.s11 - sxm.s11) / (2.0 * h) + (syp.s12 - sym.s12) / (2.0 * h),
                (sxp.s12 - sxm.s12) / (2.0 * h) + (syp.s22 - sym.s22) / (2.0 * h),
            ];
            let scale = s(x).norm();
            assert!(norm(div) < 1e-4 * scale, "div {div:?} at {x:?} (scale {scale})");
        }
        // vanishing traction on the legs phi = +- 3 pi / 4
        let omega = corner_omega();
        for r in [0.2, 0.5, 0.9] {
            for sgn in [1.0, -1.0] {
                let phi = sgn * omega;
                let x = [r * phi.cos(), r * phi.sin()];
                let sigma = stress_from_grad(&mat, sol.grad(x));
                // outward normal of the leg
                let t = [phi.cos(), phi.sin()];
                let n = [sgn * t[1], -sgn * t[0]];
                let tn = sigma.matvec(n);
                assert!(dot(tn, tn).sqrt() < 1e-8 * sigma.norm().max(1.0), "traction {tn:?} at r={r}");
            }
        }
    }
}

//! Quadrature rules on the reference triangle and on edges.
//!
//! Triangle rules come from a Gauss-Legendre tensor rule on the unit square
//! collapsed onto the triangle (Duffy map `x = s(1-t), y = t`); the map
//! jacobian `1-t` is folded into the weights, so a rule of declared degree
//! `d` uses `ceil((d+2)/2)` points per direction and integrates every
//! bivariate polynomial of total degree `d` exactly. Edge rules are plain
//! Gauss-Legendre on `[0,1]`.

use std::f64::consts::PI;

/// Largest supported triangle-rule degree.
pub const MAX_TRIANGLE_DEGREE: usize = 50;
/// Largest supported edge-rule degree.
pub const MAX_EDGE_DEGREE: usize = 399;

/// Quadrature points in barycentric coordinates with reference weights.
///
/// Weights sum to the reference-triangle area `1/2`; integrals over a
/// physical triangle carry the extra factor `2 |K|`.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Gauss-Legendre rule on the parameter interval `[0,1]`; weights sum to 1.
#[derive(Debug, Clone)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnsupportedDegree(pub usize);

impl std::fmt::Display for UnsupportedDegree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "unsupported quadrature degree {}", self.0)
    }
}

impl std::error::Error for UnsupportedDegree {}

/// Gauss-Legendre nodes and weights on `[-1,1]`, by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and P_n' at t
            let mut p0 = 1.0;
            let mut p1 = t;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = pn / dp;
            t -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

/// Gauss-Legendre rule with `n` points mapped to `[0,1]`.
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let xs = x.iter().map(|t| 0.5 * (t + 1.0)).collect();
    let ws = w.iter().map(|v| 0.5 * v).collect();
    (xs, ws)
}

/// Rule on the reference triangle exact for total degree `degree`.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule, UnsupportedDegree> {
    if degree > MAX_TRIANGLE_DEGREE {
        return Err(UnsupportedDegree(degree));
    }
    let n = (degree + 2).div_ceil(2).max(1);
    let (xs, ws) = gauss_legendre_unit(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (j, (&t, &wt)) in xs.iter().zip(&ws).enumerate() {
        let _ = j;
        for (&s, &wsv) in xs.iter().zip(&ws) {
            let x = s * (1.0 - t);
            let y = t;
            points.push([1.0 - x - y, x, y]);
            weights.push(wsv * wt * (1.0 - t));
        }
    }
    Ok(TriangleRule { points, weights, degree })
}

/// Gauss rule on `[0,1]` exact for polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> Result<EdgeRule, UnsupportedDegree> {
    if degree > MAX_EDGE_DEGREE {
        return Err(UnsupportedDegree(degree));
    }
    let n = (degree + 1).div_ceil(2).max(1);
    let (points, weights) = gauss_legendre_unit(n);
    Ok(EdgeRule { points, weights, degree })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).fold(1.0, |acc, k| acc * k as f64)
    }

    /// Exact value of `int_T l1^a l2^b l3^c` over the reference triangle.
    fn bary_monomial_integral(a: usize, b: usize, c: usize) -> f64 {
        factorial(a) * factorial(b) * factorial(c) * 2.0 / factorial(a + b + c + 2) * 0.5
    }

    #[test]
    fn weights_sum_to_reference_area() {
        for d in [1, 4, 8, 12, 20] {
            let r = triangle_rule(d).unwrap();
            let s: f64 = r.weights.iter().sum();
            assert!((s - 0.5).abs() < 1e-14, "degree {d}: sum {s}");
        }
    }

    #[test]
    fn degree_one_rule_integrates_constants() {
        let r = triangle_rule(1).unwrap();
        let s: f64 = r.weights.iter().sum();
        assert!((s - 0.5).abs() < 1e-14);
    }

    #[test]
    fn triangle_rules_are_exact_to_declared_degree() {
        for d in [2usize, 5, 8, 13, 20] {
            let r = triangle_rule(d).unwrap();
            for a in 0..=d {
                for b in 0..=(d - a) {
                    let c = d - a - b;
                    let mut s = 0.0;
                    for (p, w) in r.points.iter().zip(&r.weights) {
                        s += w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32);
                    }
                    let exact = bary_monomial_integral(a, b, c);
                    assert!(
                        (s - exact).abs() <= 1e-13 * exact.abs().max(1.0),
                        "degree {d} monomial ({a},{b},{c}): {s} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn degree_eight_matches_factorial_formula() {
        let r = triangle_rule(8).unwrap();
        let mut s = 0.0;
        for (p, w) in r.points.iter().zip(&r.weights) {
            s += w * p[0].powi(4) * p[1].powi(4);
        }
        let exact = bary_monomial_integral(4, 4, 0);
        assert!((s - exact).abs() < 1e-14, "{s} vs {exact}");
    }

    #[test]
    fn edge_rule_integrates_x6() {
        let r = edge_rule(6).unwrap();
        let s: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(6)).sum();
        assert!((s - 1.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn edge_rules_exact_high_order() {
        let r = edge_rule(31).unwrap();
        for k in 0..=31usize {
            let s: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
            let exact = 1.0 / (k as f64 + 1.0);
            assert!((s - exact).abs() < 1e-13 * exact.max(1.0), "x^{k}");
        }
    }

    #[test]
    fn unsupported_degrees_error() {
        assert!(triangle_rule(MAX_TRIANGLE_DEGREE + 1).is_err());
        assert!(edge_rule(MAX_EDGE_DEGREE + 1).is_err());
    }
}

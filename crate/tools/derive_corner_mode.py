#!/usr/bin/env python3
"""Symbolic derivation of the Williams corner eigenfunction used by the
L-shaped benchmark: given the polar displacement mode

    u_r   = r^a/(2 mu) * (-(a+1) cos((a+1) phi) + (c2 - a - 1) c1 cos((a-1) phi))
    u_phi = r^a/(2 mu) * ( (a+1) sin((a+1) phi) + (c2 + a - 1) c1 sin((a-1) phi))

this script emits Rust code for the cartesian displacement together with its
first and second derivatives (needed for stresses and for the boundary-term
corrections of the error estimator). Run it to regenerate
crates/nested-hz/src/problems/corner_mode.rs.
"""

import sympy as sp
from sympy.printing.rust import RustCodePrinter


class Printer(RustCodePrinter):
    def _print_Pow(self, expr):
        base, exp = expr.as_base_exp()
        if exp == sp.S.Half:
            return f"({self._print(base)}).sqrt()"
        if exp == -sp.S.Half:
            return f"(1.0 / ({self._print(base)}).sqrt())"
        if exp.is_Integer:
            return f"({self._print(base)}).powi({int(exp)})"
        return f"({self._print(base)}).powf({self._print(exp)})"

    def _print_Rational(self, expr):
        return f"({expr.p}.0 / {expr.q}.0)"

    def _print_Integer(self, expr):
        return f"{expr.p}.0"


def main():
    x, y, a, c1, c2, mu = sp.symbols("x y a c1 c2 mu", real=True)
    r2 = x * x + y * y
    r = sp.sqrt(r2)
    phi = sp.atan2(y, x)

    ur = r**a / (2 * mu) * (-(a + 1) * sp.cos((a + 1) * phi) + (c2 - a - 1) * c1 * sp.cos((a - 1) * phi))
    uphi = r**a / (2 * mu) * ((a + 1) * sp.sin((a + 1) * phi) + (c2 + a - 1) * c1 * sp.sin((a - 1) * phi))

    u1 = ur * sp.cos(phi) - uphi * sp.sin(phi)
    u2 = ur * sp.sin(phi) + uphi * sp.cos(phi)

    exprs = [u1, u2]
    for u in (u1, u2):
        exprs += [sp.diff(u, x), sp.diff(u, y)]
    for u in (u1, u2):
        exprs += [sp.diff(u, x, x), sp.diff(u, x, y), sp.diff(u, y, y)]

    exprs = [sp.simplify(e, rational=False) if False else sp.together(e) for e in exprs]
    repl, reduced = sp.cse(exprs, symbols=sp.numbered_symbols("t"))

    p = Printer({"user_functions": {}})
    lines = []
    for sym, val in repl:
        lines.append(f"    let {sym} = {p.doprint(val)};")
    names = [
        "u1", "u2",
        "du1_dx", "du1_dy", "du2_dx", "du2_dy",
        "d2u1_dxx", "d2u1_dxy", "d2u1_dyy",
        "d2u2_dxx", "d2u2_dxy", "d2u2_dyy",
    ]
    for name, val in zip(names, reduced):
        lines.append(f"    let {name} = {p.doprint(val)};")

    body = "\n".join(lines)
    print(
        f"""// Generated by tools/derive_corner_mode.py; do not edit by hand.

//! Cartesian displacement, gradient and second derivatives of the singular
//! corner mode `u(r, phi)` for a traction-free re-entrant corner.

/// Evaluates the corner mode at `(x, y)` for exponent `a`, mode constants
/// `c1`, `c2` and shear modulus `mu`. Returns `(u, grad, hess)` with
/// `grad[i][j] = du_i/dx_j` and `hess[i] = [u_i_xx, u_i_xy, u_i_yy]`.
#[allow(clippy::many_single_char_names)]
pub fn eval(x: f64, y: f64, a: f64, c1: f64, c2: f64, mu: f64) -> ([f64; 2], [[f64; 2]; 2], [[f64; 3]; 2]) {{
{body}
    (
        [u1, u2],
        [[du1_dx, du1_dy], [du2_dx, du2_dy]],
        [[d2u1_dxx, d2u1_dxy, d2u1_dyy], [d2u2_dxx, d2u2_dxy, d2u2_dyy]],
    )
}}"""
    )


if __name__ == "__main__":
    main()

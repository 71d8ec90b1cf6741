// Generated by tools/derive_corner_mode.py; do not edit by hand.

//! Cartesian displacement, gradient and second derivatives of the singular
//! corner mode `u(r, phi)` for a traction-free re-entrant corner.

/// Evaluates the corner mode at `(x, y)` for exponent `a`, mode constants
/// `c1`, `c2` and shear modulus `mu`. Returns `(u, grad, hess)` with
/// `grad[i][j] = du_i/dx_j` and `hess[i] = [u_i_xx, u_i_xy, u_i_yy]`.
#[allow(clippy::many_single_char_names)]
pub fn eval(x: f64, y: f64, a: f64, c1: f64, c2: f64, mu: f64) -> ([f64; 2], [[f64; 2]; 2], [[f64; 3]; 2]) {
    let t0 = a + 1.0;
    let t1 = y.atan2(x);
    let t2 = t0*t1;
    let t3 = t2.sin();
    let t4 = t0*t3;
    let t5 = a - 1.0;
    let t6 = c2 + t5;
    let t7 = t1*t5;
    let t8 = c1*t7.sin();
    let t9 = t6*t8;
    let t10 = t4 + t9;
    let t11 = t10*y;
    let t12 = -t0;
    let t13 = t2.cos();
    let t14 = -c2 + t0;
    let t15 = -t14;
    let t16 = c1*t7.cos();
    let t17 = t12*t13 + t15*t16;
    let t18 = t17*x;
    let t19 = (x).powi(2);
    let t20 = (y).powi(2);
    let t21 = t19 + t20;
    let t22 = ((1.0 / 2.0))*(t21).powf(((1.0 / 2.0))*a)*(mu).powi(-1);
    let t23 = t22/(t21).sqrt();
    let t24 = t10*x;
    let t25 = t11*x;
    let t26 = a*t25;
    let t27 = t17*t19;
    let t28 = (t0).powi(2);
    let t29 = t13*t28;
    let t30 = t16*t5*t6;
    let t31 = t29 + t30;
    let t32 = -t31;
    let t33 = t17*t21;
    let t34 = t5*t8;
    let t35 = t12*t4 + t15*t34;
    let t36 = x*y;
    let t37 = t22/(t21).powf(1.5);
    let t38 = t18*y;
    let t39 = t10*t21;
    let t40 = -t35;
    let t41 = t10*t19;
    let t42 = t19*t31;
    let t43 = t17*t20;
    let t44 = 2.0*x;
    let t45 = (t0).powi(3);
    let t46 = t45*y;
    let t47 = (t5).powi(2);
    let t48 = t47*y;
    let t49 = t29*t44 - t3*t46 + t30*t44 - t48*t9;
    let t50 = (x).powi(3);
    let t51 = t14*t16;
    let t52 = t0*t13 + t51;
    let t53 = t50*t52;
    let t54 = (a).powi(2);
    let t55 = t28*t3;
    let t56 = t14*t34;
    let t57 = t13*t46 + t44*t55 + t44*t56 + t48*t51;
    let t58 = t55 + t56;
    let t59 = t19*y;
    let t60 = t58*t59;
    let t61 = 2.0*t60;
    let t62 = t20*x;
    let t63 = t31*t62;
    let t64 = 2.0*t63;
    let t65 = t21*y;
    let t66 = t58*t65;
    let t67 = a*t64;
    let t68 = a*t61;
    let t69 = t21*x;
    let t70 = t52*t69;
    let t71 = t11*t21;
    let t72 = t11*t19;
    let t73 = a*t71;
    let t74 = 4.0*a;
    let t75 = t54*t72 - t71 - t72*t74 + 3.0*t72 + t73;
    let t76 = t22/(t21).powf(2.5);
    let t77 = t36*t45;
    let t78 = 2.0*t20;
    let t79 = t36*t47;
    let t80 = t13*t77 + t21*t55 + t21*t56 + t51*t79 - t55*t78 - t56*t78;
    let t81 = -t21*t29 - t21*t30 + t29*t78 + t3*t77 + t30*t78 + t79*t9;
    let t82 = (y).powi(3);
    let t83 = t52*t59;
    let t84 = 3.0*t83;
    let t85 = t58*x;
    let t86 = t20*t85;
    let t87 = a*t86;
    let t88 = t42*y;
    let t89 = a*t88;
    let t90 = t52*t65;
    let t91 = a*t90;
    let t92 = t54*t83;
    let t93 = t21*t24;
    let t94 = t20*t24;
    let t95 = a*t93;
    let t96 = t54*t94 - t74*t94 - t93 + 3.0*t94 + t95;
    let t97 = t10*t82;
    let t98 = t52*t62;
    let t99 = 3.0*t98;
    let t100 = t54*t98;
    let t101 = a*t70;
    let t102 = t31*t69;
    let t103 = t45*x;
    let t104 = 2.0*y;
    let t105 = t47*x;
    let t106 = t103*t3 + t104*t29 + t104*t30 + t105*t9;
    let t107 = t103*t13 - t104*t55 - t104*t56 + t105*t51;
    let t108 = t10*t50;
    let t109 = 2.0*t88;
    let t110 = 2.0*t89;
    let t111 = 2.0*t86;
    let t112 = 2.0*t87;
    let t113 = t58*t82;
    let t114 = t31*t50;
    let t115 = t52*t82;
    let u1 = t23*(-t11 + t18);
    let u2 = t23*(t17*y + t24);
    let du1_dx = t37*(a*t27 - t20*t32 + t25 - t26 - t27 + t33 + t35*t36);
    let du1_dy = t37*(-a*t10*t20 + a*t17*x*y + t10*t20 + t19*t40 - t31*t36 - t38 - t39);
    let du2_dx = t37*(a*t38 + a*t41 + t20*t35 + t32*t36 - t38 + t39 - t41);
    let du2_dy = t37*(a*t43 - t25 + t26 + t33 + t36*t40 + t42 - t43);
    let d2u1_dxx = t76*(4.0*a*t50*t52 - 3.0*a*t70 - t20*t49 + 3.0*t21*t52*x - t53*t54 - 3.0*t53 + t57*x*y + t61 - t64 - 2.0*t66 + t67 - t68 - t75);
    let d2u1_dxy = t76*(4.0*a*t19*t52*y + a*t31*t82 + a*t50*t58 + t19*t31*y + t20*t58*x + t21*t31*y + t21*t52*y + t21*t58*x - t31*t82 - t50*t58 - t80*x - t81*y - t84 - t87 - t89 - t91 - t92 - t96);
    let d2u1_dyy = t76*(4.0*a*t10*t82 + 4.0*a*t20*t52*x + 3.0*t10*t21*y - t100 - t101 - 2.0*t102 + t106*x*y + t107*t19 + t21*t52*x - t54*t97 - t61 + t64 - t67 + t68 - 3.0*t73 - 3.0*t97 - t99);
    let d2u2_dxx = t76*(t108*t54 - t108*t74 + 3.0*t108 + t109 - t110 + t111 - t112 + t20*t57 - 2.0*t31*t65 + t36*t49 + t74*t83 - t84 + t90 - t91 - t92 - 3.0*t93 + 3.0*t95);
    let d2u2_dxy = t76*(-a*t113 + a*t114 + a*t60 - a*t63 - t100 - t101 + t102 + t113 - t114 - t60 + t63 - t66 + t70 + t74*t98 + t75 - t80*y + t81*x - t99);
    let d2u2_dyy = t76*(-t106*t19 + t107*t36 - t109 + t110 - t111 + t112 - t115*t54 + t115*t74 - 3.0*t115 + 2.0*t21*t85 + 3.0*t90 - 3.0*t91 + t96);
    (
        [u1, u2],
        [[du1_dx, du1_dy], [du2_dx, du2_dy]],
        [[d2u1_dxx, d2u1_dxy, d2u1_dyy], [d2u2_dxx, d2u2_dxy, d2u2_dyy]],
    )
}

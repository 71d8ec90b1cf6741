//! Assembly and solve: quadrature oracles, boundary-data imposition, and
//! Galerkin exactness.

use nested_hz::adapt::solve_on_mesh;
use nested_hz::elem::{ElementGeometry, StressShapes, SymMatrix2};
use nested_hz::la::dot;
use nested_hz::mesh::Mesh;
use nested_hz::problems::{self, error_norms, exact_a_norm, SpaceRequest};
use nested_hz::quad::{edge_rule, triangle_rule};
use nested_hz::space::{build_dof_map, SpaceKind, VertexBasis};
use nested_hz::system::{
    assemble, dirichlet_rhs, neumann_interpolate, solve, ComplianceTensor, MaterialField, QuadConfig,
};
use std::sync::Arc;

fn two_tri_square_dirichlet() -> Arc<Mesh> {
    Arc::new(
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[1, 2, 0], [3, 0, 2]],
            vec![(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)],
        )
        .unwrap(),
    )
}

// ----- compliance ----------------------------------------------------------

/// Double-double helpers for the extended-precision compliance oracle.
mod dd {
    #[derive(Clone, Copy)]
    pub struct Dd(pub f64, pub f64);

    pub fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd(s, (a - (s - bb)) + (b - bb))
    }

    pub fn two_prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        Dd(p, a.mul_add(b, -p))
    }

    pub fn add(a: Dd, b: Dd) -> Dd {
        let s = two_sum(a.0, b.0);
        let e = s.1 + a.1 + b.1;
        two_sum(s.0, e)
    }

    pub fn mul(a: Dd, b: Dd) -> Dd {
        let p = two_prod(a.0, b.0);
        let e = p.1 + a.0 * b.1 + a.1 * b.0;
        two_sum(p.0, e)
    }

    pub fn div(a: Dd, b: Dd) -> Dd {
        let q1 = a.0 / b.0;
        let r = add(a, mul(Dd(-q1, 0.0), b));
        let q2 = r.0 / b.0;
        two_sum(q1, q2)
    }

    pub fn from(a: f64) -> Dd {
        Dd(a, 0.0)
    }
}

#[test]
fn compliance_identity_example() {
    let c = ComplianceTensor::new(1.0, 1.0);
    let a = c.apply(&SymMatrix2::identity());
    assert!((a.s11 - 0.25).abs() < 1e-15);
    assert!((a.s22 - 0.25).abs() < 1e-15);
    assert!(a.s12.abs() < 1e-15);
}

#[test]
fn compliance_tracefree_is_scaled_identity_action() {
    let c = ComplianceTensor::new(3.7, 2.4);
    let tau = SymMatrix2 { s11: 1.3, s12: -0.7, s22: -1.3 };
    let a = c.apply(&tau);
    let expect = tau.scaled(1.0 / (2.0 * c.mu));
    assert!(a.sub(&expect).norm() < 1e-15);
}

#[test]
fn compliance_matches_double_double_oracle() {
    use dd::*;
    let c = ComplianceTensor::from_plane_strain(1e5, 0.499);
    let tau = SymMatrix2 { s11: 0.3712, s12: -1.4421, s22: 2.0183 };
    let got = c.apply(&tau);
    // componentwise formula in double-double arithmetic
    let lambda = from(c.lambda);
    let mu = from(c.mu);
    let denom = add(mul(from(2.0), mu), mul(from(2.0), lambda));
    let coef = div(lambda, denom);
    let tr = add(from(tau.s11), from(tau.s22));
    let two_mu = mul(from(2.0), mu);
    let s11 = div(add(from(tau.s11), mul(mul(from(-1.0), coef), tr)), two_mu);
    let s22 = div(add(from(tau.s22), mul(mul(from(-1.0), coef), tr)), two_mu);
    let s12 = div(from(tau.s12), two_mu);
    for (g, e) in [(got.s11, s11.0), (got.s12, s12.0), (got.s22, s22.0)] {
        assert!((g - e).abs() <= 1e-12 * e.abs().max(1e-300), "{g} vs {e}");
    }
}

// ----- assembly ------------------------------------------------------------

#[test]
fn zero_body_force_gives_zero_load() {
    let mesh = two_tri_square_dirichlet();
    let map = build_dof_map(&mesh, SpaceKind::Original).unwrap();
    let sys = assemble(
        &map,
        &MaterialField::Uniform(ComplianceTensor::new(1.0, 1.0)),
        &|_| [0.0, 0.0],
        &QuadConfig::default(),
    )
    .unwrap();
    assert!(sys.rhs_disp.iter().all(|&v| v == 0.0));
}

#[test]
fn mass_matrix_is_exactly_symmetric() {
    let mesh = two_tri_square_dirichlet();
    let mesh = Arc::new(mesh.refine(&mesh.elements().to_vec()).unwrap());
    let map = build_dof_map(&mesh, SpaceKind::Extended).unwrap();
    let sys = assemble(
        &map,
        &MaterialField::Uniform(ComplianceTensor::from_plane_strain(1e5, 0.3)),
        &|_| [0.0, 0.0],
        &QuadConfig::default(),
    )
    .unwrap();
    use std::collections::HashMap;
    let mut entries: HashMap<(usize, usize), f64> = HashMap::new();
    for &(i, j, v) in &sys.m {
        entries.insert((i, j), v);
    }
    for (&(i, j), &v) in &entries {
        let vt = entries.get(&(j, i)).copied().unwrap_or(0.0);
        assert!(v == vt, "M[{i},{j}] = {v} but M[{j},{i}] = {vt}");
    }
}

#[test]
fn mass_entry_matches_high_degree_quadrature_oracle() {
    // M(theta_11, theta_11) on the reference triangle with A = identity-ish
    let mesh = Arc::new(
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![(0, 1, 1), (1, 2, 1), (2, 0, 1)],
        )
        .unwrap(),
    );
    let map = build_dof_map(&mesh, SpaceKind::Original).unwrap();
    let mat = ComplianceTensor::new(1.3, 0.8);
    let sys = assemble(&map, &MaterialField::Uniform(mat), &|_| [0.0, 0.0], &QuadConfig::default()).unwrap();
    // global dof of theta_(vertex0, S_1): vertex 0 is canonical, first dof
    let VertexBasis::Canonical(d) = &map.vertex_basis[0] else { panic!() };
    let g = d[0];
    let got = sys.m.iter().find(|&&(i, j, _)| i == g && j == g).map(|&(_, _, v)| v).unwrap();
    // independent quadrature at degree 20
    let shapes = StressShapes::from_mesh(&mesh, 0);
    let rule = triangle_rule(20).unwrap();
    let mut want = 0.0;
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let v = shapes.eval(0, *p);
        want += w * 2.0 * shapes.geo.area * mat.apply(&v).ddot(&v);
    }
    assert!((got - want).abs() <= 1e-13 * want.abs(), "{got} vs {want}");
}

// ----- dirichlet rhs -------------------------------------------------------

#[test]
fn zero_dirichlet_data_gives_zero_vector() {
    let mesh = two_tri_square_dirichlet();
    let map = build_dof_map(&mesh, SpaceKind::Original).unwrap();
    let rhs = dirichlet_rhs(&map, &|_| [0.0, 0.0], &QuadConfig::default()).unwrap();
    assert!(rhs.iter().all(|&v| v == 0.0));
}

#[test]
fn rigid_translation_matches_divergence_theorem() {
    let mesh = two_tri_square_dirichlet();
    let mesh = Arc::new(mesh.refine(&mesh.elements().to_vec()).unwrap());
    let map = Arc::new(build_dof_map(&mesh, SpaceKind::Original).unwrap());
    let c = [0.73, -0.41];
    let rhs = dirichlet_rhs(&map, &|_| c, &QuadConfig::default()).unwrap();
    // oracle: <c, sigma_a n>_Gamma = int div sigma_a . c, per basis function
    let rule = triangle_rule(8).unwrap();
    let mut want = vec![0.0; map.n_stress];
    for elem in 0..mesh.n_elems() {
        let shapes = StressShapes::from_mesh(&mesh, elem);
        let table = map.table(elem);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let divs = shapes.div_all(*p);
            for (li, dv) in divs.iter().enumerate() {
                let contrib = w * 2.0 * shapes.geo.area * dot(*dv, c);
                for &(g, wg) in &table.stress[li] {
                    want[g] += wg * contrib;
                }
            }
        }
    }
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (g, (a, b)) in rhs.iter().zip(&want).enumerate() {
        assert!((a - b).abs() < 1e-12 * scale.max(1.0), "dof {g}: {a} vs {b}");
    }
}

#[test]
fn bubble_dofs_get_exactly_zero_moments() {
    let mesh = two_tri_square_dirichlet();
    let map = build_dof_map(&mesh, SpaceKind::Original).unwrap();
    let rhs = dirichlet_rhs(&map, &|x| [x[0] * x[1], x[0] - x[1]], &QuadConfig::default()).unwrap();
    for (e, base) in map.elem_base.iter().enumerate() {
        for k in 0..9 {
            assert!(rhs[base + k] == 0.0, "element {e} bubble {k}: {}", rhs[base + k]);
        }
    }
}

// ----- neumann interpolation -----------------------------------------------

#[test]
fn zero_traction_gives_zero_constraints() {
    let problem = problems::problem_cook();
    let mesh = problem.mesh.clone();
    let map = build_dof_map(&mesh, SpaceKind::Original).unwrap();
    let cons = neumann_interpolate(&map, &|_, _| [0.0, 0.0], &QuadConfig::default()).unwrap();
    assert!(!cons.entries.is_empty());
    for &(_, v) in &cons.entries {
        assert!(v.abs() < 1e-15, "nonzero constraint {v}");
    }
}

#[test]
fn cook_corner_traction_exact_after_relaxation_inexact_before() {
    let problem = problems::problem_cook();
    let mesh = problem.mesh.clone();
    // before remedy: least squares at the two right corners
    let original = build_dof_map(&mesh, SpaceKind::Original).unwrap();
    let cons = neumann_interpolate(&original, &|m, x| problem.traction(m, x), &QuadConfig::default()).unwrap();
    assert_eq!(cons.least_squares_residuals.len(), 2, "both corners are inconsistent");
    for &(v, r) in &cons.least_squares_residuals {
        assert!(r > 0.1, "vertex {v}: residual {r} unexpectedly small");
    }
    // after remedy: both segment tractions reproduced at the corner
    let relaxed = build_dof_map(&mesh, SpaceKind::CornerRelaxed(vec![1, 2])).unwrap();
    let cons = neumann_interpolate(&relaxed, &|m, x| problem.traction(m, x), &QuadConfig::default()).unwrap();
    assert_eq!(cons.corner_residuals.len(), 2);
    for &(v, r) in &cons.corner_residuals {
        assert!(r < 1e-13, "vertex {v}: corner residual {r:.3e}");
    }
    assert!(cons.least_squares_residuals.is_empty());
}

#[test]
fn linear_stress_trace_is_reproduced_on_neumann_boundary() {
    // traction of a global linear stress field imposed on Cook's boundary
    let problem = problems::problem_cook();
    let mesh = problem.mesh.clone();
    let map = Arc::new(build_dof_map(&mesh, SpaceKind::Original).unwrap());
    let sigma = |x: [f64; 2]| SymMatrix2 {
        s11: 0.3 + 0.02 * x[0] - 0.01 * x[1],
        s12: -0.1 + 0.005 * x[0] + 0.02 * x[1],
        s22: 0.7 - 0.01 * x[0] + 0.004 * x[1],
    };
    // g must be evaluated with the outward normal of each segment
    let g = |marker: i32, x: [f64; 2]| -> [f64; 2] {
        let n = match marker {
            -1 => {
                // bottom edge (0,0)-(48,44): outward normal
                let t = [48.0f64, 44.0];
                let n = [t[1], -t[0]];
                let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
                [n[0] / len, n[1] / len]
            }
            -2 => [1.0, 0.0],
            -3 => {
                let t = [48.0f64 - 0.0, 60.0 - 44.0];
                let n = [-t[1], t[0]];
                let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
                [n[0] / len, n[1] / len]
            }
            _ => [0.0, 0.0],
        };
        sigma(x).matvec(n)
    };
    let cons = neumann_interpolate(&map, &g, &QuadConfig::default()).unwrap();
    // the corner data of a global field is consistent
    for &(v, r) in &cons.least_squares_residuals {
        assert!(r < 1e-12, "vertex {v}: {r:.3e}");
    }
    // build a field with the constrained values and compare its trace to g
    let mut field = nested_hz::fields::StressField::zeros(map.clone());
    for &(d, v) in &cons.entries {
        field.coeffs[d] = v;
    }
    let rule = edge_rule(7).unwrap();
    for (eidx, edge) in mesh.edges.iter().enumerate() {
        if !edge.is_neumann() {
            continue;
        }
        let elem = edge.elems[0];
        let geo = ElementGeometry::from_mesh(&mesh, elem);
        let le = mesh.elem_edges(elem).iter().position(|&e| e == eidx).unwrap();
        let n_out = edge.outward_normal();
        for &s in &rule.points {
            let l = geo.edge_bary(le, s);
            let x = geo.point(l);
            let tn = field.eval(elem, l).matvec(n_out);
            let want = g(edge.marker, x);
            let err = (tn[0] - want[0]).hypot(tn[1] - want[1]);
            assert!(err < 1e-11, "edge ({}, {}): trace error {err:.3e}", edge.a, edge.b);
        }
    }
}

// ----- solve ---------------------------------------------------------------

#[test]
fn zero_rhs_zero_constraints_give_zero_solution() {
    let mesh = two_tri_square_dirichlet();
    let map = Arc::new(build_dof_map(&mesh, SpaceKind::Original).unwrap());
    let sys = assemble(
        &map,
        &MaterialField::Uniform(ComplianceTensor::new(1.0, 1.0)),
        &|_| [0.0, 0.0],
        &QuadConfig::default(),
    )
    .unwrap();
    let (stress, disp) = solve(&sys, &map).unwrap();
    assert!(stress.coeffs.iter().all(|&v| v == 0.0));
    assert!(disp.coeffs.iter().all(|&v| v == 0.0));
}

#[test]
fn patch_test_reproduces_cubic_stress() {
    let problem = problems::problem_patch();
    let quad = QuadConfig::default();
    // initial mesh, uniformly refined mesh, and a locally refined mesh
    let m0 = problem.mesh.clone();
    let m1 = Arc::new(m0.refine(&m0.elements().to_vec()).unwrap());
    let m2 = Arc::new(m1.refine(&[m1.elem_forest_id(1)]).unwrap());
    for (k, mesh) in [m0, m1, m2].into_iter().enumerate() {
        let out = solve_on_mesh(&problem, &mesh, SpaceRequest::Original, &quad).unwrap();
        let norms = error_norms(&problem, &out.stress, &out.disp, &quad).unwrap();
        let scale = exact_a_norm(&problem, &mesh, &quad).unwrap();
        assert!(norms.a / scale < 1e-9, "mesh {k}: relative energy error {:.3e}", norms.a / scale);
    }
}

#[test]
fn two_triangle_solve_matches_dense_oracle() {
    let mesh = two_tri_square_dirichlet();
    let map = Arc::new(build_dof_map(&mesh, SpaceKind::Original).unwrap());
    let quad = QuadConfig::default();
    let mut sys = assemble(
        &map,
        &MaterialField::Uniform(ComplianceTensor::new(1.0, 1.0)),
        &|_| [0.3, -0.2],
        &quad,
    )
    .unwrap();
    sys.rhs_stress = dirichlet_rhs(&map, &|x| [0.1 * x[1], -0.2 * x[0]], &quad).unwrap();
    let (stress, disp) = solve(&sys, &map).unwrap();
    // dense oracle with nalgebra
    let n = sys.n_stress + sys.n_disp;
    let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
    for &(i, j, v) in &sys.m {
        a[(i, j)] += v;
    }
    for &(i, j, v) in &sys.b {
        a[(sys.n_stress + i, j)] += v;
        a[(j, sys.n_stress + i)] += v;
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(n);
    for (i, v) in sys.rhs_stress.iter().enumerate() {
        rhs[i] = *v;
    }
    for (i, v) in sys.rhs_disp.iter().enumerate() {
        rhs[sys.n_stress + i] = *v;
    }
    let lu = a.lu();
    let x = lu.solve(&rhs).expect("dense solve");
    let scale = x.amax();
    for (i, v) in stress.coeffs.iter().enumerate() {
        assert!((v - x[i]).abs() < 1e-11 * scale.max(1.0), "stress dof {i}");
    }
    for (i, v) in disp.coeffs.iter().enumerate() {
        assert!((v - x[sys.n_stress + i]).abs() < 1e-11 * scale.max(1.0), "disp dof {i}");
    }
}

#[test]
fn momentum_balance_holds_elementwise() {
    let problem = problems::problem_smooth();
    let mesh = problem.mesh.clone();
    let mut m = mesh.as_ref().clone();
    for _ in 0..2 {
        m = m.refine(&m.elements().to_vec()).unwrap();
    }
    let mesh = Arc::new(m);
    let quad = QuadConfig::default();
    let out = solve_on_mesh(&problem, &mesh, SpaceRequest::Original, &quad).unwrap();
    // B sigma = F componentwise: the discrete divergence equals the L2
    // projection of f
    let map = out.dofmap.clone();
    let sys = assemble(&map, &problem.material, &|x| problem.body_force(x), &quad).unwrap();
    let mut r = sys.rhs_disp.clone();
    for &(i, j, v) in &sys.b {
        r[i] -= v * out.stress.coeffs[j];
    }
    let scale = sys.rhs_disp.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst < 1e-9 * scale.max(1.0), "momentum residual {worst:.3e}");
}

#[test]
fn solution_invariant_under_element_renumbering() {
    // same square, triangles listed in the opposite order: all element and
    // dof numberings permute
    let mesh_a = two_tri_square_dirichlet();
    let mesh_b = Arc::new(
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[3, 0, 2], [1, 2, 0]],
            vec![(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)],
        )
        .unwrap(),
    );
    let problem = problems::problem_smooth();
    let quad = QuadConfig::default();
    let mut worst = 0.0f64;
    let out_a = {
        let p = problems::ProblemSpec { mesh: mesh_a.clone(), ..problem };
        solve_on_mesh(&p, &mesh_a, SpaceRequest::Original, &quad).unwrap()
    };
    let problem = problems::problem_smooth();
    let out_b = {
        let p = problems::ProblemSpec { mesh: mesh_b.clone(), ..problem };
        solve_on_mesh(&p, &mesh_b, SpaceRequest::Original, &quad).unwrap()
    };
    // sample strictly inside elements: on edges the tangential component
    // may jump and the two meshes resolve the point to different sides
    for p in [[0.3, 0.4], [0.7, 0.2], [0.2, 0.8], [0.55, 0.4]] {
        let a = out_a.stress.eval_at(p).unwrap();
        let b = out_b.stress.eval_at(p).unwrap();
        worst = worst.max(a.sub(&b).norm());
    }
    let scale = out_a.stress.coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst < 1e-9 * scale.max(1.0), "renumbering drift {worst:.3e}");
}

#[test]
fn extended_equals_original_without_new_vertices() {
    // the patch problem's mesh is an unrefined initial triangulation, so
    // the extended space has nothing to split
    let problem = problems::problem_patch();
    let mesh = problem.mesh.clone();
    let quad = QuadConfig::default();
    let a = solve_on_mesh(&problem, &mesh, SpaceRequest::Original, &quad).unwrap();
    let b = solve_on_mesh(&problem, &mesh, SpaceRequest::Extended, &quad).unwrap();
    let scale = a.stress.coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (x, y) in a.stress.coeffs.iter().zip(&b.stress.coeffs) {
        assert!((x - y).abs() < 1e-10 * scale.max(1.0));
    }
}

#[test]
fn coo_dump_has_expected_shape() {
    let mesh = two_tri_square_dirichlet();
    let map = Arc::new(build_dof_map(&mesh, SpaceKind::Original).unwrap());
    let sys = assemble(
        &map,
        &MaterialField::Uniform(ComplianceTensor::new(1.0, 1.0)),
        &|_| [0.0, 0.0],
        &QuadConfig::default(),
    )
    .unwrap();
    let mut buf = Vec::new();
    sys.write_coo(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("coo v1"));
    let first = lines.next().unwrap();
    let cols: Vec<&str> = first.split_whitespace().collect();
    assert_eq!(cols.len(), 3);
    cols[0].parse::<usize>().unwrap();
    cols[2].parse::<f64>().unwrap();
}

//! Estimator and marking: hand-integral oracles, invariances, and the
//! brute-force minimality of bulk marking.

use nested_hz::adapt::{adapt_loop, solve_on_mesh, uniform_loop, StopRule};
use nested_hz::elem::SymMatrix2;
use nested_hz::estimator::{estimate, mark, Estimate};
use nested_hz::fields::StressField;
use nested_hz::la::dot;
use nested_hz::mesh::Mesh;
use nested_hz::problems::{
    self, stress_from_grad, BodyForceKind, DirichletKind, ProblemSpec, SpaceRequest,
};
use nested_hz::space::{build_dof_map, interpolate, SpaceKind};
use nested_hz::system::{ComplianceTensor, MaterialField, QuadConfig};
use std::sync::Arc;

/// All-Dirichlet unit square with zero boundary data and zero force.
fn plain_square_problem() -> ProblemSpec {
    let mesh = Mesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        vec![[1, 2, 0], [3, 0, 2]],
        vec![(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)],
    )
    .unwrap();
    ProblemSpec {
        name: "plain",
        mesh: Arc::new(mesh),
        material: MaterialField::Uniform(ComplianceTensor::new(1.5, 0.75)),
        exact: None,
        body_force_kind: BodyForceKind::Zero,
        dirichlet: DirichletKind::Zero,
        traction: None,
        corners: Vec::new(),
        split_rule: None,
        recommended: SpaceRequest::Original,
        singular_vertex: None,
    }
}

#[test]
fn constant_field_boundary_terms_match_hand_integral() {
    let problem = plain_square_problem();
    let mesh = problem.mesh.clone();
    let map = Arc::new(build_dof_map(&mesh, SpaceKind::Original).unwrap());
    let s = SymMatrix2 { s11: 2.0, s12: -0.5, s22: 1.0 };
    let field = interpolate(&map, &|_| s).unwrap();
    let quad = QuadConfig::default();
    let est = estimate(&field, &problem, &quad);
    // interior volume and jump terms vanish; per element only the boundary
    // J_1 terms remain: h_K * ((A s) t . t)^2 * len per boundary edge
    let mat = ComplianceTensor::new(1.5, 0.75);
    let a_s = mat.apply(&s);
    for elem in 0..mesh.n_elems() {
        let mut want = 0.0;
        for &eid in &mesh.elem_edges(elem) {
            let edge = &mesh.edges[eid];
            if !edge.is_boundary() {
                continue;
            }
            let t = edge.tangent;
            let v = dot(t, a_s.matvec(t));
            let len = if edge.a + edge.b == 1 || edge.a + edge.b == 5 { 1.0 } else { 1.0 };
            want += mesh.elem_hk(elem) * v * v * len;
        }
        let got = est.eta2[elem];
        assert!(
            (got - want).abs() < 1e-12 * want.abs().max(1.0),
            "elem {elem}: {got} vs {want}"
        );
    }
}

#[test]
fn estimator_scales_quadratically() {
    let problem = plain_square_problem();
    let mesh = Arc::new(problem.mesh.refine(&problem.mesh.elements().to_vec()).unwrap());
    let map = Arc::new(build_dof_map(&mesh, SpaceKind::Original).unwrap());
    let field = interpolate(&map, &|x| SymMatrix2 {
        s11: x[0] * x[0] - 0.3 * x[1],
        s12: x[0] * x[1],
        s22: 1.0 - x[1] * x[1],
    })
    .unwrap();
    let quad = QuadConfig::default();
    let base = estimate(&field, &problem, &quad);
    let mut scaled = field.clone();
    let c = 3.7;
    scaled.scale(c);
    let est = estimate(&scaled, &problem, &quad);
    for (a, b) in base.eta2.iter().zip(&est.eta2) {
        assert!((b - c * c * a).abs() <= 1e-12 * b.abs().max(1e-30), "{a} vs {b}");
    }
    assert!((est.eta2_total - c * c * base.eta2_total).abs() <= 1e-12 * est.eta2_total);
}

#[test]
fn jump_norms_do_not_depend_on_neighbour_labels() {
    // the same mesh with the two triangles listed in swapped order labels
    // K1/K2 oppositely on the shared edge; indicators must agree
    let problem_a = plain_square_problem();
    let mesh_b = Arc::new(
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[3, 0, 2], [1, 2, 0]],
            vec![(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)],
        )
        .unwrap(),
    );
    let f = |x: [f64; 2]| SymMatrix2 { s11: x[0], s12: x[0] * x[1], s22: -x[1] };
    let quad = QuadConfig::default();
    let map_a = Arc::new(build_dof_map(&problem_a.mesh, SpaceKind::Original).unwrap());
    let field_a = interpolate(&map_a, &f).unwrap();
    let est_a = estimate(&field_a, &problem_a, &quad);
    let problem_b = ProblemSpec { mesh: mesh_b.clone(), ..plain_square_problem() };
    let map_b = Arc::new(build_dof_map(&mesh_b, SpaceKind::Original).unwrap());
    let field_b = interpolate(&map_b, &f).unwrap();
    let est_b = estimate(&field_b, &problem_b, &quad);
    // element 0 of mesh a is element 1 of mesh b
    assert!((est_a.eta2[0] - est_b.eta2[1]).abs() < 1e-13 * est_a.eta2[0].max(1e-30));
    assert!((est_a.eta2[1] - est_b.eta2[0]).abs() < 1e-13 * est_a.eta2[1].max(1e-30));
}

#[test]
fn interpolant_estimator_decreases_under_refinement() {
    let problem = problems::problem_smooth();
    let sol = problem.exact.clone().unwrap();
    let material = problem.material.clone();
    let quad = QuadConfig::default();
    let mut mesh = problem.mesh.clone();
    let mut last = f64::INFINITY;
    for level in 0..4 {
        let map = Arc::new(build_dof_map(&mesh, SpaceKind::Original).unwrap());
        let field = interpolate(&map, &|x| stress_from_grad(&material.at(x), sol.grad(x))).unwrap();
        let est = estimate(&field, &problem, &quad);
        let eta = est.eta();
        if level > 0 {
            assert!(eta < last / 1.5, "level {level}: eta {eta} vs previous {last}");
        }
        last = eta;
        let refined = mesh.refine(&mesh.elements().to_vec()).unwrap();
        mesh = Arc::new(refined.refine(&refined.elements().to_vec()).unwrap());
    }
}

#[test]
fn divergence_vanishes_for_solutions_of_homogeneous_problems() {
    // f = 0: the discrete stress is elementwise divergence-free up to
    // solver tolerance, so the estimator needs no divergence residual
    let problem = problems::problem_lshape();
    let quad = QuadConfig::default();
    let out = solve_on_mesh(&problem, &problem.mesh, SpaceRequest::Original, &quad).unwrap();
    let mesh = &problem.mesh;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for elem in 0..mesh.n_elems() {
        for l in [[0.2, 0.3, 0.5], [0.6, 0.1, 0.3], [0.25, 0.55, 0.2]] {
            let d = out.stress.div(elem, l);
            worst = worst.max(d[0].abs()).max(d[1].abs());
            let v = out.stress.eval(elem, l);
            scale = scale.max(v.norm() / mesh.elem_hk(elem));
        }
    }
    assert!(worst <= 1e-9 * scale.max(1.0), "div {worst:.3e} (scale {scale:.3e})");
}

// ----- marking --------------------------------------------------------------

fn synthetic_estimate(eta2: Vec<f64>) -> Estimate {
    let osc = vec![0.0; eta2.len()];
    let total: f64 = eta2.iter().sum();
    Estimate {
        osc_f2: osc.clone(),
        osc_g2: Vec::new(),
        eta2_total: total,
        osc_f2_total: 0.0,
        osc_g2_total: 0.0,
        eta2,
    }
}

#[test]
fn dominant_element_is_a_singleton_for_small_theta() {
    let est = synthetic_estimate(vec![1e-6, 1.0, 1e-6, 1e-6]);
    let marked = mark(&est, 0.01);
    assert_eq!(marked, vec![1]);
}

#[test]
fn uniform_indicators_mark_half() {
    let n = 10;
    let est = synthetic_estimate(vec![1.0; n]);
    let marked = mark(&est, 0.5);
    assert_eq!(marked.len(), n / 2);
    let est = synthetic_estimate(vec![1.0; 7]);
    let marked = mark(&est, 0.5);
    assert_eq!(marked.len(), 4, "ceil(7/2)");
}

#[test]
fn marking_is_minimal_and_prefix_shaped() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let n = rng.random_range(3..=12);
        let eta2: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0f64)).collect();
        let theta = rng.random_range(0.1..0.9);
        let est = synthetic_estimate(eta2.clone());
        let marked = mark(&est, theta);
        let total: f64 = eta2.iter().sum();
        let picked: f64 = marked.iter().map(|&e| eta2[e]).sum();
        assert!(picked >= theta * total - 1e-12, "bulk criterion");
        // prefix property: every marked indicator >= every unmarked one
        let min_marked = marked.iter().map(|&e| eta2[e]).fold(f64::INFINITY, f64::min);
        for (e, v) in eta2.iter().enumerate() {
            if !marked.contains(&e) {
                assert!(*v <= min_marked + 1e-14, "prefix property violated");
            }
        }
        // brute force: no smaller subset satisfies the criterion
        let mut best = usize::MAX;
        for mask in 0u32..(1 << n) {
            let sum: f64 = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| eta2[k]).sum();
            if sum >= theta * total {
                best = best.min(mask.count_ones() as usize);
            }
        }
        assert_eq!(marked.len(), best, "not minimal: {} vs {}", marked.len(), best);
    }
}

// ----- adaptive loop ---------------------------------------------------------

#[test]
fn immediate_stop_returns_single_level() {
    let problem = problems::problem_smooth();
    let quad = QuadConfig::default();
    let initial_dofs = {
        let map = build_dof_map(&problem.mesh, SpaceKind::Original).unwrap();
        map.n_stress
    };
    let run = adapt_loop(&problem, SpaceRequest::Original, 0.5, StopRule::MaxStressDofs(initial_dofs), &quad).unwrap();
    assert_eq!(run.len(), 1);
}

#[test]
fn smooth_adaptive_estimator_mostly_decreases() {
    let problem = problems::problem_smooth();
    let quad = QuadConfig::default();
    let run = adapt_loop(&problem, SpaceRequest::Original, 0.5, StopRule::Levels(12), &quad).unwrap();
    let mut decreases = 0;
    for k in 1..run.len() {
        if run[k].estimate.total() < run[k - 1].estimate.total() {
            decreases += 1;
        }
    }
    let frac = decreases as f64 / (run.len() - 1) as f64;
    assert!(frac >= 0.9, "eta decreased on {decreases}/{} steps", run.len() - 1);
}

#[test]
fn lshape_refinement_concentrates_at_origin() {
    let problem = problems::problem_lshape();
    let quad = QuadConfig::default();
    let run = adapt_loop(&problem, SpaceRequest::Extended, 0.5, StopRule::Levels(10), &quad).unwrap();
    let last = run.last().unwrap();
    let mesh = &last.mesh;
    let mut min_h = f64::MAX;
    let mut argmin = 0;
    for e in 0..mesh.n_elems() {
        let h = mesh.elem_hk(e);
        if h < min_h {
            min_h = h;
            argmin = e;
        }
    }
    let c = mesh.elem_centroid(argmin);
    let dist = (c[0] * c[0] + c[1] * c[1]).sqrt();
    assert!(dist <= 4.0 * min_h, "smallest element at distance {dist:.3e} (h {min_h:.3e})");
    // and the corner patch itself is as fine as anything else
    let at_origin_min = mesh
        .vertex_star(0)
        .iter()
        .map(|&e| mesh.elem_hk(e))
        .fold(f64::INFINITY, f64::min);
    assert!(at_origin_min <= 2.0 * min_h);
}

#[test]
fn uniform_loop_levels_halve_mesh_size() {
    let problem = problems::problem_smooth();
    let quad = QuadConfig::default();
    let run = uniform_loop(&problem, SpaceRequest::Original, 3, &quad).unwrap();
    assert_eq!(run.len(), 3);
    for k in 1..run.len() {
        assert_eq!(run[k].mesh.n_elems(), 4 * run[k - 1].mesh.n_elems());
    }
}

// ----- estimator totals ------------------------------------------------------

#[test]
fn totals_are_sums_of_parts() {
    let problem = problems::problem_smooth();
    let quad = QuadConfig::default();
    let mesh = Arc::new(problem.mesh.refine(&problem.mesh.elements().to_vec()).unwrap());
    let out = solve_on_mesh(&problem, &mesh, SpaceRequest::Original, &quad).unwrap();
    let est = estimate(&out.stress, &problem, &quad);
    let sum: f64 = est.eta2.iter().sum();
    assert!((sum - est.eta2_total).abs() <= 1e-12 * sum.abs());
    let sum: f64 = est.osc_f2.iter().sum();
    assert!((sum - est.osc_f2_total).abs() <= 1e-12 * sum.abs().max(1e-300));
    assert!(est.eta2.iter().all(|&v| v >= 0.0));
    let _ = StressField::zeros(out.dofmap.clone());
}

//! Property tests for the structural invariants.

use nested_hz::elem::{lagrange_p3, lagrange_p3_grad, ElementGeometry, SymMatrix2};
use nested_hz::mesh::Mesh;
use nested_hz::system::ComplianceTensor;
use proptest::prelude::*;

fn square() -> Mesh {
    Mesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        vec![[1, 2, 0], [3, 0, 2]],
        vec![(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Any marking sequence keeps the mesh conforming, keeps the Euler
    /// identity, nests children inside ancestors, and is reproducible.
    #[test]
    fn refinement_invariants(seed_rounds in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 1..40), 1..4)) {
        let base = square();
        let mut mesh = base.clone();
        for round in &seed_rounds {
            let marked: Vec<usize> = mesh
                .elements()
                .iter()
                .enumerate()
                .filter(|(k, _)| round[k % round.len()])
                .map(|(_, &t)| t)
                .collect();
            mesh = mesh.refine(&marked).unwrap();
            mesh.audit_conformity().unwrap();
        }
        // nesting: every active triangle sits inside its base-mesh ancestor
        for e in 0..mesh.n_elems() {
            let anc = mesh.ancestor_in(&base, mesh.elem_forest_id(e));
            let pos = base.active_position(anc).unwrap();
            let geo = ElementGeometry::from_mesh(&base, pos);
            for v in mesh.elem_vertices(e) {
                let l = geo.bary(mesh.pos(v));
                prop_assert!(l.iter().all(|&x| x >= -1e-12));
            }
        }
        // determinism: replaying the same marking gives identical meshes
        let mut replay = square();
        for round in &seed_rounds {
            let marked: Vec<usize> = replay
                .elements()
                .iter()
                .enumerate()
                .filter(|(k, _)| round[k % round.len()])
                .map(|(_, &t)| t)
                .collect();
            replay = replay.refine(&marked).unwrap();
        }
        prop_assert_eq!(mesh.to_text(), replay.to_text());
    }

    /// Cubic basis: partition of unity and vanishing gradient sum at any
    /// admissible barycentric point.
    #[test]
    fn p3_partition_of_unity(a in 0.0f64..1.0, t in 0.0f64..1.0) {
        let b = (1.0 - a) * t;
        let l = [a, b, 1.0 - a - b];
        let s: f64 = lagrange_p3(l).iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        let geo = ElementGeometry::new([0, 1, 2], [[0.0, 0.0], [1.3, 0.1], [0.4, 1.2]]);
        let g = lagrange_p3_grad(l, &geo);
        for c in 0..2 {
            let gs: f64 = (0..10).map(|i| g[i][c]).sum();
            prop_assert!(gs.abs() < 1e-11);
        }
    }

    /// The compliance application is self-adjoint and positive definite.
    #[test]
    fn compliance_is_selfadjoint_positive(
        l in 0.0f64..1e6,
        m in 1e-3f64..1e6,
        a11 in -10.0f64..10.0, a12 in -10.0f64..10.0, a22 in -10.0f64..10.0,
        b11 in -10.0f64..10.0, b12 in -10.0f64..10.0, b22 in -10.0f64..10.0,
    ) {
        let c = ComplianceTensor::new(l, m);
        let s = SymMatrix2 { s11: a11, s12: a12, s22: a22 };
        let t = SymMatrix2 { s11: b11, s12: b12, s22: b22 };
        let left = c.apply(&s).ddot(&t);
        let right = s.ddot(&c.apply(&t));
        prop_assert!((left - right).abs() <= 1e-12 * left.abs().max(right.abs()).max(1e-12));
        if s.norm() > 1e-6 {
            prop_assert!(c.apply(&s).ddot(&s) > 0.0);
        }
    }

    /// Splitting an edge always halves measures: children of a bisected
    /// triangle have half its area each.
    #[test]
    fn bisection_halves_area(mark in any::<u8>()) {
        let mesh = square();
        let mut m = mesh.refine(&mesh.elements().to_vec()).unwrap();
        let pick = (mark as usize) % m.n_elems();
        let parent_area = m.elem_area(pick);
        let forest = m.elem_forest_id(pick);
        m = m.refine(&[forest]).unwrap();
        let children: Vec<usize> = (0..m.n_elems())
            .filter(|&e| m.tri(m.elem_forest_id(e)).parent == Some(forest))
            .collect();
        prop_assert_eq!(children.len(), 2);
        for c in children {
            prop_assert!((m.elem_area(c) - 0.5 * parent_area).abs() < 1e-14);
        }
    }
}

use proptest::prelude::*;
use xxz_core::hamiltonian::CouplingSet;
use xxz_core::quantum::{
    build_system, coherent_product_state, evolve_quantum, hamiltonian_matrix, spectrum, Propagator,
};
use xxz_core::{Error, Vec3};

fn commutator_norm(n: usize, weights: &[f64]) -> f64 {
    let sys = build_system(n, weights).unwrap();
    let c = CouplingSet { j_xy: -0.8, j_z: 0.3, h_x: 0.2, ..CouplingSet::zero() };
    let h = hamiltonian_matrix(&sys, &c).unwrap();
    let f2 = sys.total_spin_sq();
    (&h * &f2 - &f2 * &h).amax()
}

#[test]
fn total_spin_conserved_only_for_uniform_weights() {
    assert!(commutator_norm(3, &[1.0, 1.0, 1.0]) <= 1e-12);
    assert!(commutator_norm(3, &[1.0, 0.7, 1.3]) > 1e-3);
    let sys = build_system(3, &[1.0, 0.7, 1.3]).unwrap();
    let c = CouplingSet { j_xy: -0.8, ..CouplingSet::zero() };
    assert!(!spectrum(&sys, &c).unwrap().f_conserved);
}

#[test]
fn rejects_oversized_and_gradient_systems() {
    assert!(matches!(build_system::<f64>(7, &[1.0; 7]), Err(Error::DimensionGuard { .. })));
    let sys = build_system(2, &[1.0, 1.0]).unwrap();
    let c = CouplingSet { mu: 1.0, ..CouplingSet::zero() };
    assert!(hamiltonian_matrix(&sys, &c).is_err());
}

#[test]
fn manifold_sizes_for_three_atoms() {
    let sys = build_system(3, &[1.0; 3]).unwrap();
    let s = spectrum(&sys, &CouplingSet { j_xy: -1.0, j_z: 0.2, ..CouplingSet::zero() }).unwrap();
    let count = |f| (0..s.len()).filter(|&k| s.f_integer(k) == Some(f)).count();
    // 1 ⊗ 1 ⊗ 1 = 3 ⊕ 2·2 ⊕ 3·1 ⊕ 0
    assert_eq!([count(0), count(1), count(2), count(3)], [1, 9, 10, 7]);
}

#[test]
fn coherent_state_has_full_length() {
    let sys = build_system(3, &[1.0; 3]).unwrap();
    let dir = Vec3::new(0.6, 0.0, 0.8);
    let psi = coherent_product_state(&sys, dir, &[]).unwrap();
    let obs = sys.observables(&psi);
    assert!(obs.collective.max_abs_diff(dir.scale(3.0)) <= 1e-12);
    for s in &obs.sites {
        assert!(s.max_abs_diff(dir) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn algebra_holds_for_any_weights(w in prop::collection::vec(0.2..2.0f64, 1..4)) {
        let sys = build_system(w.len(), &w).unwrap();
        prop_assert!(sys.algebra_defect() <= 1e-12);
        prop_assert!(sys.hermiticity_defect() <= 1e-12);
    }

    #[test]
    fn evolution_conserves_norm_and_energy(
        w in prop::collection::vec(0.5..1.5f64, 2..4),
        jxy in -1.0..1.0f64, jz in -1.0..1.0f64, hx in 0.0..1.0f64, hz in -1.0..1.0f64,
        th in 0.0..3.0f64, ph in 0.0..6.0f64, t in 0.0..20.0f64,
    ) {
        let sys = build_system(w.len(), &w).unwrap();
        let c = CouplingSet { j_xy: jxy, j_z: jz, h_x: hx, h_z: hz, ..CouplingSet::zero() };
        let spec = spectrum(&sys, &c).unwrap();
        let h = hamiltonian_matrix(&sys, &c).unwrap();
        let dir = Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
        let psi0 = coherent_product_state(&sys, dir, &[]).unwrap();
        let psi = Propagator::new(&spec).propagate(&psi0, t).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() <= 1e-10);
        let e0 = sys.expectation(&h, &psi0);
        let e1 = sys.expectation(&h, &psi);
        prop_assert!((e1 - e0).abs() <= 1e-10 * (1.0 + e0.abs()));
        let again = evolve_quantum(&spec, &psi0, t).unwrap();
        prop_assert!((&again - &psi).norm() <= 1e-12);
    }
}

use benjamin_core::operators::{evolve_free_with, propagator_multiplier, BumpProfile, ControlOperator};
use benjamin_core::random::{derive_seed, random_state};
use benjamin_core::spectral::TorusFunction;
use benjamin_core::spectrum::{eigenvalue, eigenvalue_exact, Spectrum};
use benjamin_core::stabilization::{simulate_closed_loop, FeedbackLaw};
use benjamin_core::C64;
use num_rational::Ratio;
use proptest::prelude::*;

fn state(seed: u64, n: usize, s: f64) -> TorusFunction {
    random_state(seed, n, s, 1.0).add(&TorusFunction::constant(0.25, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenvalues_are_odd(k in -200i64..200, alpha in 0.0f64..10.0, mu in -2.0f64..2.0) {
        let a = eigenvalue(k, alpha, mu);
        let b = eigenvalue(-k, alpha, mu);
        prop_assert!((a + b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn float_eigenvalue_matches_rational(k in -100i64..100, p in 1i64..200, q in 1i64..20, m in -40i64..40) {
        let exact = eigenvalue_exact(k, Ratio::new(p as i128, q as i128), Ratio::new(m as i128, 10));
        let approx = eigenvalue(k, p as f64 / q as f64, m as f64 / 10.0);
        let e = *exact.numer() as f64 / *exact.denom() as f64;
        prop_assert!((approx - e).abs() <= 1e-9 * (1.0 + e.abs()));
    }

    #[test]
    fn clusters_partition_the_modes(p in 1i64..200, n in 4usize..40) {
        let spec = Spectrum::exact(Ratio::new(p, 20), Ratio::from_integer(0), n).unwrap();
        let mut seen: Vec<i64> = spec.clusters().iter().flatten().copied().collect();
        seen.sort_unstable();
        let all: Vec<i64> = (-(n as i64)..=(n as i64)).collect();
        prop_assert_eq!(seen, all);
        for c in spec.clusters() {
            let l = spec.lambda(c[0]);
            for &k in c {
                prop_assert_eq!(spec.lambda(k), l);
            }
        }
        prop_assert!(spec.max_cluster_size() <= 3);
    }

    #[test]
    fn synthesis_round_trips(seed in any::<u64>(), n in 1usize..24, extra in 0usize..9) {
        let f = state(seed, n, 0.5);
        let g = TorusFunction::analyze_real(&f.synthesize_real(2 * n + 1 + extra), n).unwrap();
        prop_assert!(g.sub(&f).sobolev_norm(0.0) <= 1e-12 * f.sobolev_norm(0.0));
    }

    #[test]
    fn hilbert_squares_to_minus_identity_on_mean_zero(seed in any::<u64>(), n in 1usize..32) {
        let f = state(seed, n, 0.0).project_mean_zero();
        let hh = f.hilbert_transform().hilbert_transform();
        prop_assert!(hh.add(&f).sobolev_norm(0.0) <= 1e-14 * (1.0 + f.sobolev_norm(0.0)));
        let h = f.hilbert_transform();
        prop_assert!((h.sobolev_norm(0.0) - f.sobolev_norm(0.0)).abs() <= 1e-12);
    }

    #[test]
    fn hilbert_is_antisymmetric(a in any::<u64>(), b in any::<u64>(), n in 1usize..24) {
        let f = state(a, n, 0.0);
        let g = state(b, n, 0.0);
        let lhs = f.hilbert_transform().inner(&g);
        let rhs = f.inner(&g.hilbert_transform());
        prop_assert!((lhs + rhs).norm() <= 1e-12);
    }

    #[test]
    fn propagator_is_a_group(k in -64i64..64, s in -5.0f64..5.0, t in -5.0f64..5.0, alpha in 0.0f64..5.0) {
        let lhs = propagator_multiplier(k, s + t, alpha, 0.3);
        let rhs = propagator_multiplier(k, s, alpha, 0.3) * propagator_multiplier(k, t, alpha, 0.3);
        prop_assert!((lhs - rhs).norm() <= 1e-9);
        prop_assert!((lhs.norm() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn free_flow_is_linear_and_real(a in any::<u64>(), b in any::<u64>(), c in -3.0f64..3.0, t in 0.0f64..10.0) {
        let n = 12;
        let spec = Spectrum::new(1.3, 0.2, n).unwrap();
        let f = state(a, n, 1.0);
        let g = state(b, n, 1.0);
        let lhs = evolve_free_with(&f.add(&g.scaled(c)), t, &spec);
        let rhs = evolve_free_with(&f, t, &spec).add(&evolve_free_with(&g, t, &spec).scaled(c));
        prop_assert!(lhs.sub(&rhs).sobolev_norm(0.0) <= 1e-12 * (1.0 + lhs.sobolev_norm(0.0)));
        prop_assert!(lhs.hermitian_defect() <= 1e-14);
        prop_assert!((lhs.mean() - f.add(&g.scaled(c)).mean()).norm() <= 1e-15);
    }

    #[test]
    fn control_operator_is_self_adjoint(a in any::<u64>(), b in any::<u64>()) {
        let n = 10;
        let op = ControlOperator::new(BumpProfile::default_bump(2 * n), n).unwrap();
        let u = state(a, n, 0.0).psi_coeffs();
        let v = state(b, n, 0.0).psi_coeffs();
        let dot = |x: &[C64], y: &[C64]| x.iter().zip(y).map(|(p, q)| p * q.conj()).sum::<C64>();
        let lhs = dot(&op.apply_psi(&u), &v);
        let rhs = dot(&u, &op.apply_psi(&v));
        prop_assert!((lhs - rhs).norm() <= 1e-13);
        prop_assert!(op.image_norm_sqr(&u) >= 0.0);
    }
}

#[test]
fn simple_feedback_never_increases_the_fluctuation() {
    let n = 10;
    let op = ControlOperator::new(BumpProfile::default_bump(2 * n), n).unwrap();
    let spec = Spectrum::new(7.0 / 3.0, 0.3, n).unwrap();
    let law = FeedbackLaw::simple(&op, &spec).unwrap();
    let times: Vec<f64> = (0..60).map(|i| i as f64 * 2.5).collect();
    for i in 0..5 {
        let u0 = state(derive_seed(3, i), n, 0.0);
        let traj = simulate_closed_loop(&u0, &law, &times).unwrap();
        let norms = traj.fluctuation_norms(0.0);
        assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        assert!(traj.mean_drift() <= 1e-14);
    }
}

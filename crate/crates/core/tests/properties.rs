use proptest::prelude::*;

use qmag::circuits::rotation_gate;
use qmag::encoding::{build_model_at_origin, kcopy_model};
use qmag::experiments::{probe_from_coeffs, projective_bound_with_gradient};
use qmag::fisher::{qfi_matrix, sld_crb, RANK_CUTOFF};
use qmag::hcrb::{closed_form_hcrb, sld_bound_real, RealTwoQubitState};
use qmag::qcore::{to_dynamic, unitarity_error, CMat, GeneratorSet, PauliString, C64};
use qmag::search::local::fd_gradient;
use qmag::search::{de_minimize, pso_minimize, DeConfig, PsoConfig, SearchSpace};

fn amplitudes() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.0..1.0f64).prop_filter("nonzero", |r| r.iter().map(|x| x * x).sum::<f64>() > 1e-2)
}

fn usable(r: [f64; 4]) -> Option<(RealTwoQubitState, f64)> {
    let s = RealTwoQubitState::normalized(r).ok()?;
    let v = closed_form_hcrb(&s).ok()?;
    (v < 1e3 && s.r14p().abs() > 1e-3).then_some((s, v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_ignores_global_sign_and_qubit_swap(r in amplitudes()) {
        let Some((s, v)) = usable(r) else { return Ok(()) };
        let neg = RealTwoQubitState::normalized(r.map(|x| -x)).unwrap();
        prop_assert!((closed_form_hcrb(&neg).unwrap() - v).abs() < 1e-9 * v);
        let sw = closed_form_hcrb(&s.swapped_middle()).unwrap();
        prop_assert!((sw - v).abs() < 1e-9 * v);
    }

    #[test]
    fn closed_form_lies_between_one_and_two_sld_bounds(r in amplitudes()) {
        let Some((s, v)) = usable(r) else { return Ok(()) };
        let cs = sld_bound_real(&s).unwrap();
        prop_assert!(v >= cs - 1e-9 * cs);
        prop_assert!(v <= 2.0 * cs + 1e-9 * cs);
    }

    #[test]
    fn noisy_models_are_valid_and_copies_add_information(
        c in prop::collection::vec(-2.0..2.0f64, 15),
        gamma in 0.0..0.95f64,
    ) {
        let psi = probe_from_coeffs(&c).unwrap();
        let m = build_model_at_origin(&psi, gamma).unwrap();
        let rho = m.rho().entries();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
        prop_assert!((rho - rho.adjoint()).norm() < 1e-12);
        for d in m.d_rho() {
            prop_assert!(d.trace().norm() < 1e-12);
            prop_assert!((d - d.adjoint()).norm() < 1e-12);
        }
        // Additivity is exact only while no eigenvalue pair of the two-copy
        // state drops under the SLD rank cutoff.
        let lmin = rho.clone().symmetric_eigenvalues().min();
        prop_assume!(2.0 * lmin * lmin > 100.0 * RANK_CUTOFF);
        let j1 = qfi_matrix(&m).entries;
        let j2 = qfi_matrix(&kcopy_model(&m, 2).unwrap()).entries;
        prop_assert!((j2 - j1 * 2.0).norm() < 1e-8 * (1.0 + j1.norm()));
        if let Ok(cs) = sld_crb(&m) {
            prop_assert!(cs > 0.0);
        }
    }

    #[test]
    fn rotation_gates_are_unitary(ax in -10.0..10.0f64, ay in -10.0..10.0f64, az in -10.0..10.0f64) {
        let u = rotation_gate(ax, ay, az);
        prop_assert!(unitarity_error(&to_dynamic(&u)) < 1e-12);
        prop_assert!((u.determinant().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pauli_traces_match_dense_products(idx in 0usize..256, seed in any::<u64>()) {
        let p = PauliString::from_index(4, idx);
        let mut x = seed;
        let mut next = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let b = CMat::from_fn(16, 16, |_, _| C64::new(next(), next()));
        let dense = (&b * p.to_matrix()).trace();
        prop_assert!((p.trace_with(&b) - dense).norm() < 1e-12);
    }

    #[test]
    fn projective_gradient_matches_finite_differences(
        state in prop::collection::vec(-2.0..2.0f64, 15),
        meas in prop::collection::vec(-2.0..2.0f64, 15),
        gamma in 0.0..0.9f64,
    ) {
        let model = build_model_at_origin(&probe_from_coeffs(&state).unwrap(), gamma).unwrap();
        let gens = GeneratorSet::new(2).unwrap();
        let Ok((v, g)) = projective_bound_with_gradient(&model, &gens, &meas, 1) else { return Ok(()) };
        // Stay away from nearly singular measurements where the bound blows up.
        prop_assume!(v < 1e3);
        let mut f = |x: &[f64]| projective_bound_with_gradient(&model, &gens, x, 1).map_or(f64::NAN, |r| r.0);
        let fd = fd_gradient(&mut f, &meas, 1e-6);
        let scale = 1.0 + g.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for (a, b) in fd.iter().zip(&g) {
            prop_assert!((a - b).abs() < 1e-4 * scale, "{a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn optimizers_are_deterministic_per_seed(seed in any::<u64>()) {
        let f = |x: &[f64]| x.iter().map(|v| (v - 0.3).powi(2) + (3.0 * v).sin()).sum::<f64>();
        let space = SearchSpace::uniform(4, -2.0, 2.0).unwrap();
        let pso = PsoConfig { n_particles: 10, max_iters: 30, ..Default::default() };
        let a = pso_minimize(f, &space, &pso, seed);
        let b = pso_minimize(f, &space, &pso, seed);
        prop_assert_eq!(&a, &b);

        let g = |bits: &[u8], x: &[f64]| f(x) + bits.iter().map(|&b| b as f64).sum::<f64>();
        let mixed = SearchSpace::new(vec![(-2.0, 2.0); 3], 4, qmag::search::Boundary::Clamp).unwrap();
        let de = DeConfig { np: 12, t: 20, ..Default::default() };
        let a = de_minimize(g, &mixed, &de, seed).unwrap();
        let b = de_minimize(g, &mixed, &de, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

//! Acceptance suite. Every test prints one `PASS` or `FAIL` line for its
//! criterion, with the measured numbers, and fails when the criterion does.
//!
//! Run with `cargo test --release -p qmag-cli --test acceptance -- --nocapture`.
//! The three-copy check is long-running and marked `#[ignore]`.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use nalgebra::Matrix3;
use qmag::circuits::{de_search, optimize_angles, presets, CircuitGenome, SwitchEncoding};
use qmag::encoding::{build_model_at_origin, encoded_pure_state, FieldParams};
use qmag::experiments::{channel_hcrb_search, copies_bound_search, qc_bound_search, SearchOptions};
use qmag::fisher::{classical_bound, sld_crb, Measurement};
use qmag::hcrb::{
    attainability_construction, closed_form_hcrb, hessian_check, mixed_hcrb, operator_constraint_residual,
    operators_from_vectors, pure_state_solver, pure_vector_hcrb, sld_vectors, vector_constraint_residual,
    weighted_formula, z_of_operators, MixedOptions, RealTwoQubitState, WeightMatrix,
};
use qmag::qcore::{random_unitary, Ket, PauliString};
use qmag::search::local::{bfgs, fd_gradient, LocalOptions};
use qmag::search::{perm_invariant_basis, perm_invariant_dim, DeConfig, GeneratorBasis, PsoConfig};
use qmag_cli::config::SweepConfig;
use qmag_cli::sweep::run_sweep;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Writes to the stdout handle directly, which the test harness does not
/// capture, so the line shows up for passing tests too.
fn report(id: &str, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stdout().lock(), "{verdict} criterion {id} ({name}): {detail}");
    assert!(pass, "criterion {id} failed: {detail}");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real states away from the singular set, by rejection.
fn nonsingular(r: &mut ChaCha8Rng) -> RealTwoQubitState {
    loop {
        let s = RealTwoQubitState::random(r);
        let (p, m, q) = (s.r14p(), s.r14m(), s.r23p());
        if p.abs() > 0.05 && m * m + q * q > 0.01 && closed_form_hcrb(&s).is_ok_and(|v| v < 50.0) {
            return s;
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn criterion_1_closed_form_equivalence() {
    let start = Instant::now();
    let mut r = rng(1);
    let (mut worst_vec, mut worst_mixed) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let s = nonsingular(&mut r);
        let cf = closed_form_hcrb(&s).unwrap();
        let (_, dpsi) = encoded_pure_state(&s.ket(), FieldParams::zero()).unwrap();
        let vec = pure_vector_hcrb(&s.ket(), &dpsi).unwrap().value;
        let model = build_model_at_origin(&s.ket(), 0.0).unwrap();
        let mixed = mixed_hcrb(&model, &WeightMatrix::identity(), &MixedOptions::default()).unwrap().value;
        worst_vec = worst_vec.max(rel(vec, cf));
        worst_mixed = worst_mixed.max(rel(mixed, cf));
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        "1",
        "closed-form equivalence",
        worst_vec <= 1e-6 && worst_mixed <= 1e-6 && secs <= 120.0,
        format!("200 states, worst rel. gap vector {worst_vec:.2e}, mixed {worst_mixed:.2e}, {secs:.1} s"),
    );
}

#[test]
fn criterion_2_ordering_and_factor_two() {
    let start = Instant::now();
    let mut r = rng(2);
    let mut violations = Vec::new();
    let mut max_ratio = 0.0f64;
    let mut n = 0;
    while n < 500 {
        let psi = Ket::random(4, &mut r).unwrap();
        let gamma = r.random_range(0.0..0.9);
        let meas = Measurement::projective(random_unitary(4, &mut r)).unwrap();
        let model = build_model_at_origin(&psi, gamma).unwrap();
        // Singular draws do not count towards the 500.
        let (Ok(cs), Ok(cc)) = (sld_crb(&model), classical_bound(&model, &meas)) else { continue };
        let ch = mixed_hcrb(&model, &WeightMatrix::identity(), &MixedOptions::default()).unwrap().value;
        n += 1;
        let slack = |v: f64| 1e-8 * v.abs().max(1.0);
        if cc < ch - slack(ch) || ch < cs - slack(cs) || ch > 2.0 * cs + slack(cs) {
            violations.push(format!("gamma={gamma:.3} CC={cc} CH={ch} CS={cs}"));
        }
        max_ratio = max_ratio.max(ch / cs);
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        "2",
        "C^C >= C^H >= C^S and C^H <= 2 C^S",
        violations.is_empty() && secs <= 600.0,
        format!("500 triples, {} violations {:?}, max C^H/C^S {max_ratio:.4}, {secs:.1} s", violations.len(), violations.first()),
    );
}

#[test]
fn criterion_3_attainability_construction() {
    let mut r = rng(3);
    let (mut im, mut res, mut tr) = (0.0f64, 0.0f64, 0.0f64);
    let mut done = 0;
    let mut guarded = 0;
    while done < 100 {
        let s = nonsingular(&mut r);
        let Ok(x) = attainability_construction(&s) else {
            guarded += 1;
            continue;
        };
        done += 1;
        let ket = s.ket();
        let (psi, dpsi) = encoded_pure_state(&ket, FieldParams::zero()).unwrap();
        let model = build_model_at_origin(&ket, 0.0).unwrap();
        let ops = operators_from_vectors(&psi, &x);
        let z = z_of_operators(&model, &ops);
        im = im.max(z.iter().map(|c| c.im.abs()).fold(0.0, f64::max));
        res = res.max(operator_constraint_residual(&model, &ops)).max(vector_constraint_residual(&x, &sld_vectors(&psi, &dpsi)));
        tr = tr.max((z.trace().re - closed_form_hcrb(&s).unwrap()).abs());
    }
    report(
        "3",
        "projective attainability construction",
        im <= 1e-8 && res <= 1e-8 && tr <= 1e-7,
        format!("100 states ({guarded} rejected by the guard): max |Im Z| {im:.2e}, residual {res:.2e}, |Tr Re Z - C^H| {tr:.2e}"),
    );
}

#[test]
fn criterion_4_hessian_convexity() {
    let mut r = rng(4);
    let mut min_eig = f64::INFINITY;
    let mut pairs = 0;
    let mut beaten = 0;
    let mut probes = 0;
    while pairs < 50 {
        let s = nonsingular(&mut r);
        let alpha = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        let Ok(eig) = hessian_check(&s, alpha) else { continue };
        pairs += 1;
        min_eig = min_eig.min(eig[0]);
    }
    let mut found = 0;
    while found < 10 {
        let s = nonsingular(&mut r);
        let solver = pure_state_solver(&s.ket(), &WeightMatrix::identity()).unwrap();
        let dims = solver.free_dims() * 3;
        if dims == 0 {
            continue;
        }
        found += 1;
        let f0 = solver.objective(&vec![0.0; dims]);
        for _ in 0..10 {
            let a: Vec<f64> = (0..dims).map(|_| r.random_range(-2.0..2.0)).collect();
            probes += 1;
            if solver.objective(&a) < f0 - 1e-12 {
                beaten += 1;
            }
        }
    }
    report(
        "4",
        "convexity and minimum at alpha = 0",
        min_eig >= -1e-6 && beaten == 0,
        format!("50 pairs, smallest Hessian eigenvalue {min_eig:.3e}; {beaten} of {probes} probes below alpha = 0"),
    );
}

fn random_psd_weight(r: &mut ChaCha8Rng) -> WeightMatrix {
    let a = Matrix3::from_fn(|_, _| r.random_range(-1.0..1.0));
    WeightMatrix::new(a * a.transpose() + Matrix3::identity() * 0.1).unwrap()
}

#[test]
fn criterion_5a_weighted_formula_for_diagonal_weights() {
    let mut r = rng(51);
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut example = String::new();
    for _ in 0..50 {
        let s = nonsingular(&mut r);
        let w = WeightMatrix::diagonal([r.random_range(0.1..3.0), r.random_range(0.1..3.0), r.random_range(0.1..3.0)]).unwrap();
        let model = build_model_at_origin(&s.ket(), 0.0).unwrap();
        let solver = mixed_hcrb(&model, &w, &MixedOptions::default()).unwrap().value;
        let formula = weighted_formula(&model, &w).unwrap();
        let gap = rel(formula, solver);
        if gap > 1e-6 {
            failures += 1;
            if example.is_empty() {
                example = format!("r={:?} W={:?}: solver {solver:.6} formula {formula:.6}", s.r(), w.matrix().diagonal().as_slice());
            }
        }
        worst = worst.max(gap);
    }
    report(
        "5a",
        "weighted formula equals the solver for diagonal W",
        failures == 0,
        format!("{failures} of 50 weights differ by more than 1e-6 (worst rel. gap {worst:.3e}); first: {example}"),
    );
}

#[test]
fn criterion_5b_weighted_formula_fails_for_general_weights() {
    let mut r = rng(52);
    let mut witness = None;
    let mut tried = 0;
    while witness.is_none() && tried < 200 {
        tried += 1;
        let s = nonsingular(&mut r);
        let w = random_psd_weight(&mut r);
        let model = build_model_at_origin(&s.ket(), 0.0).unwrap();
        let solver = mixed_hcrb(&model, &w, &MixedOptions::default()).unwrap().value;
        let formula = weighted_formula(&model, &w).unwrap();
        if formula - solver > 1e-6 {
            witness = Some(format!("r={:?}: formula {formula:.6} > solver {solver:.6}", s.r()));
        }
    }
    report(
        "5b",
        "a non-diagonal W where the formula exceeds the solver",
        witness.is_some(),
        format!("{tried} weights tried; {}", witness.unwrap_or_else(|| "no witness".into())),
    );
}

/// Orbits of `{I,X,Y,Z}^{⊗qk}` under permutations of the `k` blocks of `q`
/// qubits, counted by brute force.
fn enumerate_orbits(q: usize, k: usize) -> usize {
    let n = q * k;
    let mut keys = std::collections::BTreeSet::new();
    for idx in 0..(1usize << (2 * n)) {
        let digits = PauliString::from_index(n, idx).digits().to_vec();
        let mut blocks: Vec<Vec<u8>> = digits.chunks(q).map(|c| c.to_vec()).collect();
        blocks.sort();
        keys.insert(blocks);
    }
    keys.len()
}

#[test]
fn criterion_6_permutation_invariant_dimensions() {
    let mut ok = true;
    let mut parts = Vec::new();
    for (q, k, expected) in [(1, 2, 10), (2, 2, 136), (2, 3, 816)] {
        let brute = enumerate_orbits(q, k);
        let formula = perm_invariant_dim(q, k);
        let basis = perm_invariant_basis(q, k).unwrap().len() + 1;
        ok &= brute == expected && formula == expected && basis == expected;
        parts.push(format!("(q={q},k={k}) enumeration {brute}, formula {formula}, generators+identity {basis}"));
    }
    let single = (enumerate_orbits(1, 1), perm_invariant_basis(1, 1).unwrap().len());
    parts.push(format!("(1,1): {} orbits including the identity, {} generators without it", single.0, single.1));
    report("6", "permutation-invariant dimensions", ok, parts.join("; "));
}

/// Values of the noise-sweep searches, computed once and shared between
/// the criterion 7 tests.
#[derive(Clone)]
struct Point {
    channel: f64,
    state: Ket,
    secs: f64,
}

fn channel_point(gamma: f64) -> Point {
    static CACHE: OnceLock<Mutex<HashMap<u64, Point>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(gamma.to_bits())
        .or_insert_with(|| {
            let t = Instant::now();
            let o = channel_hcrb_search(gamma, &SearchOptions { seed: 7, ..SearchOptions::channel() }).unwrap();
            println!("  channel HCRB at gamma={gamma}: {} (restart spread {:.1e})", o.value, o.search.spread());
            Point { channel: o.value, state: o.state, secs: t.elapsed().as_secs_f64() }
        })
        .clone()
}

fn copies_value(gamma: f64, k: usize) -> (f64, f64) {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize), (f64, f64)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&(gamma.to_bits(), k)) {
        return *v;
    }
    let p = channel_point(gamma);
    let t = Instant::now();
    let o = copies_bound_search(&p.state, gamma, k, &SearchOptions { seed: 7, ..SearchOptions::copies() }).unwrap();
    println!("  {k}-copy bound at gamma={gamma}: {} (restart spread {:.1e})", o.value, o.search.spread());
    let v = (o.value, t.elapsed().as_secs_f64());
    cache.lock().unwrap().insert((gamma.to_bits(), k), v);
    v
}

const POINT_BUDGET: Duration = Duration::from_secs(30 * 60);

#[test]
fn criterion_7a_two_copies_attain_the_bound_at_high_noise() {
    let p = channel_point(0.9);
    let (c2, t2) = copies_value(0.9, 2);
    let gap = (c2 - p.channel) / p.channel;
    let secs = p.secs + t2;
    report(
        "7a",
        "(C2 - CH)/CH <= 0.03 at gamma = 0.9",
        gap <= 0.03 && secs <= POINT_BUDGET.as_secs_f64(),
        format!("CH {:.6}, C2 {c2:.6}, gap {gap:.4}, {secs:.0} s", p.channel),
    );
}

#[test]
#[ignore = "long-running: three-copy measurement search"]
fn criterion_7a_third_copy_adds_little_at_high_noise() {
    let (c2, _) = copies_value(0.9, 2);
    let (c3, t3) = copies_value(0.9, 3);
    let gap = (c3 - c2) / c2;
    report("7a-k3", "(C3 - C2)/C2 <= 0.02 at gamma = 0.9", gap <= 0.02, format!("C2 {c2:.6}, C3 {c3:.6}, gap {gap:.4}, {t3:.0} s"));
}

#[test]
fn criterion_7b_second_copy_adds_little_at_low_noise() {
    let p = channel_point(0.1);
    let (c1, t1) = copies_value(0.1, 1);
    let (c2, t2) = copies_value(0.1, 2);
    let copy_gain = (c1 - c2) / c2;
    let gap = (c2 - p.channel) / p.channel;
    let secs = p.secs + t1 + t2;
    report(
        "7b",
        "(C1 - C2)/C2 <= 0.02 and (C2 - CH)/CH >= 0.05 at gamma = 0.1",
        copy_gain <= 0.02 && gap >= 0.05 && secs <= POINT_BUDGET.as_secs_f64(),
        format!("CH {:.6}, C1 {c1:.6}, C2 {c2:.6}: (C1-C2)/C2 {copy_gain:.4}, (C2-CH)/CH {gap:.4}, {secs:.0} s", p.channel),
    );
}

#[test]
fn criterion_7c_entangled_inputs_versus_collective_measurements() {
    let mut parts = Vec::new();
    let mut ok = true;
    for (gamma, qc_should_win) in [(0.2, true), (0.9, false)] {
        let (c2, t2) = copies_value(gamma, 2);
        let t = Instant::now();
        let qc = qc_bound_search(gamma, false, &SearchOptions { seed: 7, ..SearchOptions::qc() }).unwrap();
        let secs = t.elapsed().as_secs_f64();
        let holds = if qc_should_win { qc.value < c2 } else { qc.value > c2 };
        ok &= holds && secs + t2 <= POINT_BUDGET.as_secs_f64();
        parts.push(format!(
            "gamma={gamma}: QC2 {:.6} (spread {:.1e}, {secs:.0} s) {} C2 {c2:.6} [{}]",
            qc.value,
            qc.search.spread(),
            if qc.value < c2 { "<" } else { ">=" },
            if holds { "as expected" } else { "reversed" }
        ));
    }
    report("7c", "QC2 < C2 at gamma = 0.2 and QC2 > C2 at gamma = 0.9", ok, parts.join("; "));
}

/// Direct minimum of the closed form over real states.
fn closed_form_minimum() -> f64 {
    let f = |a: &[f64]| {
        let r = [a[0].cos(), a[0].sin() * a[1].cos(), a[0].sin() * a[1].sin() * a[2].cos(), a[0].sin() * a[1].sin() * a[2].sin()];
        RealTwoQubitState::normalized(r).ok().and_then(|s| closed_form_hcrb(&s).ok()).unwrap_or(1e6)
    };
    let grad = |x: &[f64], g: &mut [f64]| {
        let mut ff = |y: &[f64]| f(y);
        g.copy_from_slice(&fd_gradient(&mut ff, x, 1e-7));
        f(x)
    };
    let mut r = rng(8);
    let opts = LocalOptions { max_iters: 500, grad_tol: 1e-9, f_tol: 1e-15 };
    (0..40)
        .map(|_| {
            let x0: Vec<f64> = (0..3).map(|_| r.random_range(0.0..std::f64::consts::PI)).collect();
            bfgs(grad, &x0, &opts).value
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_8_circuit_pipeline() {
    let oracle = closed_form_minimum();
    let pso = PsoConfig { n_particles: 40, max_iters: 300, ..Default::default() };
    let preset = presets::one_copy().unwrap();
    let (_, at_zero) = optimize_angles(&preset, 0.0, 1, &pso, 1).unwrap();
    let reach = rel(at_zero, oracle);

    let de = DeConfig::default();
    let (_, preset_high) = optimize_angles(&preset, 0.9, 1, &pso, 1).unwrap();
    let one = CircuitGenome::off(2, 2, SwitchEncoding::PerLayer).unwrap();
    let (_, de_one) = de_search(&one, 0.9, 1, &de, 1).unwrap();
    let best_one = preset_high.min(de_one);
    let two = CircuitGenome::off(2, 4, SwitchEncoding::PerLayer).unwrap();
    let (g, de_two) = de_search(&two, 0.9, 2, &de, 1).unwrap();
    let margin = best_one - de_two;
    report(
        "8",
        "circuit angles reach the noiseless optimum; two-copy DE beats one copy at gamma = 0.9",
        reach <= 0.01 && margin > 0.0,
        format!(
            "gamma=0: preset {at_zero:.7} vs closed-form minimum {oracle:.7} (rel. {reach:.2e}); gamma=0.9: best one-copy {best_one:.5} \
             (preset {preset_high:.5}, DE {de_one:.5}), two-copy DE {de_two:.5} with switches {:?}, margin {margin:.5}",
            g.to_flat().0
        ),
    );
}

#[test]
fn criterion_9_sweep_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let base = SweepConfig::parse(
        "gamma_grid = 0, 0.3, 0.6\ncopies = 1, 2\nrestarts = 2\nseed = 5\n\
         optimizer.pso.n_particles = 8\noptimizer.pso.max_iters = 10\noptimizer.polish.max_iters = 30\n\
         optimizer.copies.local_starts = 1\noptimizer.qc.local_starts = 0\noptimizer.agreement_tol = 1\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (name, threads) in [("serial.csv", 1), ("parallel.csv", 3), ("again.csv", 1)] {
        let cfg = SweepConfig { out: dir.path().join(name), threads, ..base.clone() };
        run_sweep(&cfg, false).unwrap();
        outputs.push(std::fs::read(&cfg.out).unwrap());
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    report(
        "9",
        "identical seeds give byte-identical CSV serially and in parallel",
        same && !outputs[0].is_empty(),
        format!("{} bytes, serial/parallel/rerun identical: {same}", outputs[0].len()),
    );
}

#[test]
fn generator_sets_cover_the_documented_sizes() {
    // Sanity check on the search spaces used by criterion 7.
    assert_eq!(perm_invariant_basis(2, 1).unwrap().len(), 15);
    assert_eq!(perm_invariant_basis(2, 2).unwrap().len(), 135);
    assert_eq!(qmag::qcore::GeneratorSet::new(2).unwrap().len(), 15);
}

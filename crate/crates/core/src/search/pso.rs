//! Particle swarm optimization over a continuous box.

use rand::Rng;
use rayon::prelude::*;

use super::{sanitize, substream, OptimResult, PsoConfig, SearchSpace};

/// One velocity and position update for a single coordinate:
/// `v' = ωv + c₁r₁(y − x) + c₂r₂(ỹ − x)`, `x' = x + v'`.
///
/// `r₁` and `r₂` are the uniform factors the swarm draws per coordinate;
/// with both equal to one this is the bare deterministic rule.
#[allow(clippy::too_many_arguments)]
pub fn pso_update(x: f64, v: f64, y: f64, y_best: f64, omega: f64, c1: f64, c2: f64, r1: f64, r2: f64) -> (f64, f64) {
    let v_new = omega * v + c1 * r1 * (y - x) + c2 * r2 * (y_best - x);
    (x + v_new, v_new)
}

/// Minimizes `f` over `space` from uniformly random particles.
pub fn pso_minimize<F>(f: F, space: &SearchSpace, cfg: &PsoConfig, seed: u64) -> OptimResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pso_minimize_from(f, space, cfg, seed, &[])
}

/// As [`pso_minimize`], with the first particles placed at `init`.
pub fn pso_minimize_from<F>(
    f: F,
    space: &SearchSpace,
    cfg: &PsoConfig,
    seed: u64,
    init: &[Vec<f64>],
) -> OptimResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dims = space.continuous_dims();
    let n = cfg.n_particles.max(1);
    let span: Vec<f64> = space.bounds().iter().map(|(lo, hi)| hi - lo).collect();

    let (mut xs, mut vs): (Vec<Vec<f64>>, Vec<Vec<f64>>) = (0..n)
        .map(|i| {
            let mut rng = substream(seed, 0, i as u64);
            let (_, mut x) = space.sample(&mut rng);
            if let Some(p) = init.get(i) {
                x = (0..dims).map(|d| space.fold(d, p[d])).collect();
            }
            let v = span.iter().map(|s| 0.1 * s * rng.random_range(-1.0..1.0)).collect();
            (x, v)
        })
        .unzip();
    let mut values: Vec<f64> = xs.par_iter().map(|x| sanitize(f(x))).collect();
    let mut evaluations = n;
    let mut ys = xs.clone();
    let mut y_vals = values.clone();
    let mut g = argmin(&y_vals);
    let mut best = ys[g].clone();
    let mut best_val = y_vals[g];
    let mut trace = vec![best_val];
    let mut since_improved = 0;

    for t in 1..=cfg.max_iters {
        xs.par_iter_mut().zip(vs.par_iter_mut()).zip(ys.par_iter()).enumerate().for_each(|(i, ((x, v), y))| {
            let mut rng = substream(seed, t as u64, i as u64);
            for d in 0..dims {
                let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                let (xn, vn) = pso_update(x[d], v[d], y[d], best[d], cfg.omega, cfg.c1, cfg.c2, r1, r2);
                v[d] = vn.clamp(-span[d], span[d]);
                x[d] = space.fold(d, xn);
            }
        });
        values = xs.par_iter().map(|x| sanitize(f(x))).collect();
        evaluations += n;
        for i in 0..n {
            if values[i] < y_vals[i] {
                y_vals[i] = values[i];
                ys[i].clone_from(&xs[i]);
            }
        }
        g = argmin(&y_vals);
        if y_vals[g] < best_val {
            best_val = y_vals[g];
            best.clone_from(&ys[g]);
            since_improved = 0;
        } else {
            since_improved += 1;
        }
        trace.push(best_val);
        if since_improved >= cfg.stagnation_window {
            break;
        }
    }
    OptimResult { best_x: best, best_bits: vec![], best_value: best_val, trace, evaluations }
}

/// First index of the smallest value.
pub(crate) fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

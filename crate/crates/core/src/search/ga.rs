//! Genetic algorithm over switch bits whose fitness evaluation runs a
//! gradient descent over the continuous genes.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use super::local::gradient_descent;
use super::{sanitize, substream, GaConfig, OptimResult, SearchSpace};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
struct Genome {
    bits: Vec<u8>,
    x: Vec<f64>,
    value: f64,
}

/// Polishes the continuous genes with the inner descent and records the
/// result in place.
fn evaluate<F>(f: &F, space: &SearchSpace, cfg: &GaConfig, bits: Vec<u8>, x: Vec<f64>) -> Genome
where
    F: Fn(&[u8], &[f64]) -> f64 + Sync,
{
    if x.is_empty() {
        let value = sanitize(f(&bits, &x));
        return Genome { bits, x, value };
    }
    let (x, _, _) = gradient_descent(|y| sanitize(f(&bits, y)), &x, &cfg.inner_gd);
    let x: Vec<f64> = x.iter().enumerate().map(|(i, v)| space.fold(i, *v)).collect();
    let value = sanitize(f(&bits, &x));
    Genome { bits, x, value }
}

/// Selection weights favouring low values; uniform when all values tie.
fn weights(pop: &[Genome]) -> Vec<f64> {
    let finite: Vec<f64> = pop.iter().map(|g| g.value).filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if finite.is_empty() || !(range > 0.0) {
        return vec![1.0; pop.len()];
    }
    pop.iter()
        .map(|g| if g.value.is_finite() { (hi - g.value) + 0.05 * range } else { 0.0 })
        .collect()
}

fn crossover_point<R: Rng>(rng: &mut R, len: usize) -> usize {
    if len < 2 { 0 } else { rng.random_range(1..len) }
}

fn sort_by_value(pop: &mut [Genome]) {
    pop.sort_by(|a, b| a.value.total_cmp(&b.value));
}

/// Minimizes `f(bits, x)` with an elitist genetic search over the bits.
///
/// Each generation draws parents in proportion to fitness, applies
/// single-point crossover to the bits and to the continuous genes, flips
/// bits with `mutation_rate` and evaluates the children after an inner
/// gradient descent over `x`. The `elitism_count` best parents survive
/// unconditionally; the remaining places go to the best of the children
/// and the other parents. Stops after `max_generations` or once the best
/// value reaches `target`.
pub fn genetic_gradient_minimize<F>(
    f: F,
    space: &SearchSpace,
    cfg: &GaConfig,
    seed: u64,
    target: Option<f64>,
) -> Result<OptimResult>
where
    F: Fn(&[u8], &[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let n = cfg.pop_size;
    let mut pop: Vec<Genome> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (b, x) = space.sample(&mut substream(seed, 0, i as u64));
            evaluate(&f, space, cfg, b, x)
        })
        .collect();
    sort_by_value(&mut pop);
    let mut evaluations = n;
    let mut trace = vec![pop[0].value];
    let reached = |v: f64| target.is_some_and(|t| v <= t);

    for gen in 1..=cfg.max_generations {
        if reached(pop[0].value) {
            break;
        }
        let mut rng = substream(seed, gen as u64, 0);
        let pick = WeightedIndex::new(weights(&pop)).expect("weights are nonnegative with positive sum");
        let mut raw: Vec<(Vec<u8>, Vec<f64>)> = Vec::with_capacity(n);
        while raw.len() < n {
            let (a, b) = (&pop[pick.sample(&mut rng)], &pop[pick.sample(&mut rng)]);
            let (mut c1, mut c2) = ((a.bits.clone(), a.x.clone()), (b.bits.clone(), b.x.clone()));
            if rng.random::<f64>() < cfg.crossover_rate {
                let pb = crossover_point(&mut rng, a.bits.len());
                let px = crossover_point(&mut rng, a.x.len());
                c1.0[pb..].swap_with_slice(&mut c2.0[pb..]);
                c1.1[px..].swap_with_slice(&mut c2.1[px..]);
            }
            for child in [&mut c1, &mut c2] {
                for bit in child.0.iter_mut() {
                    if rng.random::<f64>() < cfg.mutation_rate {
                        *bit ^= 1;
                    }
                }
            }
            raw.push(c1);
            if raw.len() < n {
                raw.push(c2);
            }
        }
        let children: Vec<Genome> =
            raw.into_par_iter().map(|(b, x)| evaluate(&f, space, cfg, b, x)).collect();
        evaluations += n;
        let mut pool: Vec<Genome> = pop.split_off(cfg.elitism_count);
        pool.extend(children);
        sort_by_value(&mut pool);
        pool.truncate(n - cfg.elitism_count);
        pop.extend(pool);
        sort_by_value(&mut pop);
        trace.push(pop[0].value);
    }
    let best = pop.swap_remove(0);
    Ok(OptimResult { best_x: best.x, best_bits: best.bits, best_value: best.value, trace, evaluations })
}

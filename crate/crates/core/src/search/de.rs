//! Differential evolution over a mixed genome of switch bits and
//! continuous genes.

use rand::Rng;
use rayon::prelude::*;

use super::pso::argmin;
use super::{sanitize, substream, DeConfig, OptimResult, SearchSpace};
use crate::error::Result;

/// Offspring gene for a continuous coordinate: `v₁ + F(v₂ − v₃)`.
pub fn de_continuous_gene(v1: f64, v2: f64, v3: f64, f_scale: f64) -> f64 {
    v1 + f_scale * (v2 - v3)
}

/// Offspring gene for a switch: `(v₁ + v₂ − v₃) mod 2`, which stays in
/// `{0, 1}`.
pub fn de_discrete_gene(v1: u8, v2: u8, v3: u8) -> u8 {
    (i16::from(v1) + i16::from(v2) - i16::from(v3)).rem_euclid(2) as u8
}

/// Three distinct indices in `0..n`, all different from `i`.
fn donors<R: Rng>(rng: &mut R, n: usize, i: usize) -> [usize; 3] {
    let mut out = [usize::MAX; 3];
    let mut k = 0;
    while k < 3 {
        let c = rng.random_range(0..n);
        if c != i && !out[..k].contains(&c) {
            out[k] = c;
            k += 1;
        }
    }
    out
}

type Candidate = (Vec<u8>, Vec<f64>);

/// Runs `cfg.t` generations of DE on `f(bits, x)`.
///
/// Crossover is decided per gene: each gene takes the donor value with
/// probability `Cr`, otherwise keeps the candidate's. An offspring replaces
/// its candidate only if it is strictly better.
pub fn de_minimize<F>(f: F, space: &SearchSpace, cfg: &DeConfig, seed: u64) -> Result<OptimResult>
where
    F: Fn(&[u8], &[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let np = cfg.np;
    let mut pop: Vec<Candidate> = (0..np).map(|i| space.sample(&mut substream(seed, 0, i as u64))).collect();
    let mut values: Vec<f64> = pop.par_iter().map(|(b, x)| sanitize(f(b, x))).collect();
    let mut evaluations = np;
    let mut trace = vec![values[argmin(&values)]];

    for t in 1..=cfg.t {
        let offspring: Vec<(Candidate, f64)> = (0..np)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, t as u64, i as u64);
                let [a, b, c] = donors(&mut rng, np, i);
                let (bits, x) = &pop[i];
                let nb: Vec<u8> = (0..bits.len())
                    .map(|j| {
                        if rng.random::<f64>() < cfg.cr {
                            de_discrete_gene(pop[a].0[j], pop[b].0[j], pop[c].0[j])
                        } else {
                            bits[j]
                        }
                    })
                    .collect();
                let nx: Vec<f64> = (0..x.len())
                    .map(|j| {
                        if rng.random::<f64>() < cfg.cr {
                            space.fold(j, de_continuous_gene(pop[a].1[j], pop[b].1[j], pop[c].1[j], cfg.f_scale))
                        } else {
                            x[j]
                        }
                    })
                    .collect();
                let v = sanitize(f(&nb, &nx));
                ((nb, nx), v)
            })
            .collect();
        evaluations += np;
        for (i, (cand, v)) in offspring.into_iter().enumerate() {
            if v < values[i] {
                pop[i] = cand;
                values[i] = v;
            }
        }
        trace.push(values[argmin(&values)]);
    }
    let g = argmin(&values);
    let (best_bits, best_x) = pop.swap_remove(g);
    Ok(OptimResult { best_x, best_bits, best_value: values[g], trace, evaluations })
}

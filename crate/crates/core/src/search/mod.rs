//! Metaheuristic and local optimizers, plus the parametrizations of states,
//! measurements and unitaries they search over.
//!
//! Every optimizer is deterministic for a given master seed. Random draws
//! for candidate `i` in generation `g` come from a dedicated ChaCha stream
//! keyed by `(seed, g, i)`, so candidates can be evaluated in parallel
//! without changing the result.

pub mod de;
pub mod ga;
pub mod local;
pub mod params;
pub mod pso;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use de::{de_continuous_gene, de_discrete_gene, de_minimize};
pub use ga::genetic_gradient_minimize;
pub use local::{GradientDescentOptions, LocalOptions};
pub use params::{
    param_projective, param_state, perm_invariant_basis, perm_invariant_dim, unitary_from_coeffs,
    GeneratorBasis, PermInvariantBasis, UnitaryCoefficients,
};
pub use pso::{pso_minimize, pso_minimize_from, pso_update};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    /// Inertia factor.
    pub omega: f64,
    /// Pull towards the particle's own best.
    pub c1: f64,
    /// Pull towards the swarm's best.
    pub c2: f64,
    pub n_particles: usize,
    pub max_iters: usize,
    /// Stop when the swarm best has not improved for this many iterations.
    pub stagnation_window: usize,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self { omega: 0.729, c1: 1.49445, c2: 1.49445, n_particles: 40, max_iters: 1000, stagnation_window: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeConfig {
    pub np: usize,
    /// Number of generations.
    pub t: usize,
    pub f_scale: f64,
    pub cr: f64,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self { np: 150, t: 600, f_scale: 0.9, cr: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub pop_size: usize,
    pub crossover_rate: f64,
    /// Per-bit flip probability.
    pub mutation_rate: f64,
    /// Parents carried over unchanged into each new generation.
    pub elitism_count: usize,
    pub max_generations: usize,
    pub inner_gd: GradientDescentOptions,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            pop_size: 50,
            crossover_rate: 0.7,
            mutation_rate: 0.02,
            elitism_count: 2,
            max_generations: 200,
            inner_gd: GradientDescentOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub pso: PsoConfig,
    pub de: DeConfig,
    pub ga: GaConfig,
    pub master_seed: u64,
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{name} = {v} is outside [0, 1]")))
    }
}

fn check_count(name: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{name} = {v} must be at least {min}")))
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        check_count("pso.n_particles", self.n_particles, 1)?;
        check_count("pso.max_iters", self.max_iters, 1)?;
        check_count("pso.stagnation_window", self.stagnation_window, 1)?;
        if ![self.omega, self.c1, self.c2].iter().all(|v| v.is_finite()) {
            return Err(Error::Unsupported("pso coefficients must be finite".into()));
        }
        Ok(())
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        check_count("de.np", self.np, 4)?;
        check_count("de.t", self.t, 1)?;
        check_rate("de.cr", self.cr)?;
        if !self.f_scale.is_finite() {
            return Err(Error::Unsupported("de.f_scale must be finite".into()));
        }
        Ok(())
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        check_count("ga.pop_size", self.pop_size, 2)?;
        check_count("ga.max_generations", self.max_generations, 1)?;
        check_count("ga.elitism_count", self.elitism_count, 1)?;
        if self.elitism_count > self.pop_size {
            return Err(Error::Unsupported("ga.elitism_count exceeds ga.pop_size".into()));
        }
        check_rate("ga.crossover_rate", self.crossover_rate)?;
        check_rate("ga.mutation_rate", self.mutation_rate)
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.pso.validate()?;
        self.de.validate()?;
        self.ga.validate()
    }
}

/// How continuous coordinates that leave their interval are brought back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Clamp,
    /// Periodic, for angles.
    Wrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    bounds: Vec<(f64, f64)>,
    discrete_bits: usize,
    boundary: Boundary,
}

impl SearchSpace {
    pub fn new(bounds: Vec<(f64, f64)>, discrete_bits: usize, boundary: Boundary) -> Result<Self> {
        if bounds.is_empty() && discrete_bits == 0 {
            return Err(Error::Unsupported("search space has no dimensions".into()));
        }
        if let Some(i) = bounds.iter().position(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
            return Err(Error::InvalidParameter(i));
        }
        Ok(Self { bounds, discrete_bits, boundary })
    }

    /// `dims` copies of `[lo, hi]` with clamping.
    pub fn uniform(dims: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi); dims], 0, Boundary::Clamp)
    }

    /// `dims` periodic angles in `[0, 2π)` plus `bits` switches.
    pub fn angles(dims: usize, bits: usize) -> Result<Self> {
        Self::new(vec![(0.0, std::f64::consts::TAU); dims], bits, Boundary::Wrap)
    }

    pub fn continuous_dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn discrete_bits(&self) -> usize {
        self.discrete_bits
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Maps coordinate `i` back into its interval.
    pub fn fold(&self, i: usize, x: f64) -> f64 {
        let (lo, hi) = self.bounds[i];
        match self.boundary {
            Boundary::Clamp => x.clamp(lo, hi),
            Boundary::Wrap => {
                let y = lo + (x - lo).rem_euclid(hi - lo);
                // rem_euclid can round up to exactly the period.
                if y >= hi { lo } else { y }
            }
        }
    }

    pub(crate) fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> (Vec<u8>, Vec<f64>) {
        let bits = (0..self.discrete_bits).map(|_| rng.random_range(0..=1u8)).collect();
        let x = self.bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
        (bits, x)
    }
}

/// Outcome of a global search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub best_x: Vec<f64>,
    pub best_bits: Vec<u8>,
    pub best_value: f64,
    /// Best value after initialization and after each iteration.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

/// Random stream for candidate `index` of generation `generation`.
pub fn substream(seed: u64, generation: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(generation.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index);
    rng
}

/// Non-finite objective values rank below every finite one.
pub(crate) fn sanitize(v: f64) -> f64 {
    if v.is_nan() { f64::INFINITY } else { v }
}

//! Optimized bounds over probe states and measurements.
//!
//! * [`channel_hcrb`]: the Holevo bound minimized over two-qubit probes.
//! * [`copies_bound`]: `k · Tr F⁻¹` minimized over projective measurements
//!   on `k` copies, restricted to copy-permutation-invariant unitaries.
//! * [`qc_bound`]: an entangled four-qubit probe read out by the same
//!   two-qubit projective measurement on each half.
//!
//! Each search runs several seeded swarm restarts, polishes every restart
//! with BFGS and reports the spread between restarts.

use nalgebra::Matrix3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::PENALTY;
use crate::encoding::{build_model_at_origin, kcopy_model, StatisticalModel};
use crate::error::{Error, Result};
use crate::fisher::{cfi_matrix, outcome_distribution, scalar_crb, FisherKind, FisherMatrix, Measurement, PROB_CUTOFF};
use crate::hcrb::{mixed_hcrb, MixedOptions, WeightMatrix};
use crate::qcore::{hermitian_eigen, CMat, CVec, GeneratorSet, Ket, C64};
use crate::search::local::{bfgs, fd_gradient, LocalOptions};
use crate::search::{
    param_state, perm_invariant_basis, pso_minimize, substream, GeneratorBasis, PsoConfig, SearchSpace,
    UnitaryCoefficients,
};

/// Settings shared by the optimized-bound searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchOptions {
    pub pso: PsoConfig,
    pub restarts: usize,
    pub seed: u64,
    /// Largest tolerated relative spread between restart values.
    pub agreement_tol: f64,
    pub polish: LocalOptions,
    /// Extra BFGS runs from uniform random points in each restart.
    pub local_starts: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            pso: PsoConfig { n_particles: 30, max_iters: 300, ..Default::default() },
            restarts: 5,
            seed: 0,
            agreement_tol: 1e-3,
            polish: LocalOptions { max_iters: 500, grad_tol: 1e-8, f_tol: 1e-13 },
            local_starts: 0,
        }
    }
}

impl SearchOptions {
    /// Budget for the probe-state search, whose objective has no analytic
    /// gradient.
    pub fn channel() -> Self {
        Self::default()
    }

    /// Budget for the measurement search on copies. The landscape is rugged
    /// but the analytic gradient is cheap, so most of the effort goes into
    /// random BFGS starts.
    pub fn copies() -> Self {
        Self {
            pso: PsoConfig { n_particles: 30, max_iters: 200, ..Default::default() },
            polish: LocalOptions { max_iters: 3000, grad_tol: 1e-9, f_tol: 1e-14 },
            local_starts: 24,
            ..Self::default()
        }
    }

    pub fn qc() -> Self {
        Self {
            pso: PsoConfig { n_particles: 40, max_iters: 300, ..Default::default() },
            polish: LocalOptions { max_iters: 1000, grad_tol: 1e-8, f_tol: 1e-13 },
            local_starts: 2,
            ..Self::default()
        }
    }
}

/// Best point of a multi-start search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub value: f64,
    pub x: Vec<f64>,
    /// Polished value reached by each restart.
    pub restart_values: Vec<f64>,
    /// Swarm iterations plus polishing iterations over all restarts.
    pub iterations: usize,
}

impl SearchOutcome {
    /// Relative gap between the two best restarts, zero for a single
    /// restart. A small spread means the optimum was found independently at
    /// least twice.
    pub fn spread(&self) -> f64 {
        let mut v = self.restart_values.clone();
        v.sort_by(f64::total_cmp);
        match v.as_slice() {
            [a, b, ..] => (b - a) / a.abs().max(1e-300),
            _ => 0.0,
        }
    }

    pub fn require_agreement(self, tol: f64) -> Result<Self> {
        let spread = self.spread();
        if spread > tol {
            Err(Error::NonConvergence { spread })
        } else {
            Ok(self)
        }
    }
}

/// Seed of restart `r`.
pub fn restart_seed(seed: u64, r: usize) -> u64 {
    substream(seed, u64::MAX - r as u64, 0).random()
}

fn multi_start<F, G>(f: F, grad: G, space: &SearchSpace, opts: &SearchOptions) -> SearchOutcome
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64], &mut [f64]) -> f64,
{
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut restart_values = Vec::with_capacity(opts.restarts);
    let mut iterations = 0;
    for r in 0..opts.restarts.max(1) {
        let seed = restart_seed(opts.seed, r);
        let swarm = pso_minimize(&f, space, &opts.pso, seed);
        iterations += swarm.trace.len() - 1;
        let mut starts = vec![swarm.best_x.clone()];
        let mut rng = substream(seed, 1, 0);
        starts.extend((0..opts.local_starts).map(|_| space.sample(&mut rng).1));
        let (mut v, mut x) = (swarm.best_value, swarm.best_x);
        for x0 in starts {
            let local = bfgs(&grad, &x0, &opts.polish);
            iterations += local.iterations;
            // Re-evaluate so the stored value is exactly reproducible from x.
            let lv = f(&local.x);
            if lv < v {
                (v, x) = (lv, local.x);
            }
        }
        restart_values.push(v);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, x));
        }
    }
    let (value, x) = best.expect("at least one restart");
    SearchOutcome { value, x, restart_values, iterations }
}

fn central_gradient<F: Fn(&[f64]) -> f64>(f: &F, h: f64) -> impl Fn(&[f64], &mut [f64]) -> f64 + '_ {
    move |x: &[f64], g: &mut [f64]| {
        let mut ff = |y: &[f64]| f(y);
        g.copy_from_slice(&fd_gradient(&mut ff, x, h));
        f(x)
    }
}

/// Two-qubit probe `exp(i Σ cᵢλᵢ)|00⟩` over the 15 Pauli generators.
pub fn probe_from_coeffs(coeffs: &[f64]) -> Result<Ket> {
    param_state(&UnitaryCoefficients::new(coeffs.to_vec())?, &GeneratorSet::new(2)?)
}

/// Holevo bound of the dephased, encoded probe at the origin.
pub fn probe_hcrb(psi: &Ket, gamma: f64) -> Result<f64> {
    let model = build_model_at_origin(psi, gamma)?;
    Ok(mixed_hcrb(&model, &WeightMatrix::identity(), &MixedOptions { restarts: 1, ..Default::default() })?.value)
}

fn penalized(v: Result<f64>) -> f64 {
    match v {
        Ok(v) if v.is_finite() && v < PENALTY => v,
        _ => PENALTY,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOptimum {
    pub value: f64,
    pub state: Ket,
    pub search: SearchOutcome,
}

/// Minimum of the Holevo bound over two-qubit probes, without enforcing
/// restart agreement.
pub fn channel_hcrb_search(gamma: f64, opts: &SearchOptions) -> Result<ChannelOptimum> {
    crate::encoding::NoiseLevel::new(gamma)?;
    let f = |c: &[f64]| penalized(probe_from_coeffs(c).and_then(|psi| probe_hcrb(&psi, gamma)));
    let space = SearchSpace::uniform(15, -std::f64::consts::PI, std::f64::consts::PI)?;
    let search = multi_start(f, central_gradient(&f, 1e-5), &space, opts);
    let state = probe_from_coeffs(&search.x)?;
    Ok(ChannelOptimum { value: search.value, state, search })
}

/// Minimum of the Holevo bound over two-qubit probes; fails with
/// [`Error::NonConvergence`] when restarts disagree by more than
/// `opts.agreement_tol`.
pub fn channel_hcrb(gamma: f64, opts: &SearchOptions) -> Result<ChannelOptimum> {
    let o = channel_hcrb_search(gamma, opts)?;
    o.search.clone().require_agreement(opts.agreement_tol)?;
    Ok(o)
}

/// `k · Tr F⁻¹` for the projective measurement onto the columns of
/// `exp(i Σ cᵢλᵢ)`, with its gradient in the coefficients.
///
/// The derivative of the unitary uses the divided differences of `e^{ix}`
/// on the spectrum of the generator, so the gradient costs one
/// eigendecomposition plus one `O(dim)` trace per generator.
pub fn projective_bound_with_gradient<B: GeneratorBasis + ?Sized>(
    model: &StatisticalModel,
    gens: &B,
    coeffs: &[f64],
    k: usize,
) -> Result<(f64, Vec<f64>)> {
    let h = gens.hamiltonian(coeffs)?;
    let d = h.nrows();
    if d != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: d });
    }
    let (vals, v) = hermitian_eigen(&h);
    let phases = CVec::from_iterator(d, vals.iter().map(|&x| C64::from_polar(1.0, x)));
    let u = &v * CMat::from_diagonal(&phases) * v.adjoint();
    let rho = model.rho().entries();
    let drho = model.d_rho();
    let rho_u = rho * &u;
    let drho_u: [CMat; 3] = std::array::from_fn(|j| &drho[j] * &u);

    let mut probs = vec![0.0; d];
    let mut q = vec![[0.0; 3]; d];
    let mut f = Matrix3::<f64>::zeros();
    for x in 0..d {
        let ux = u.column(x);
        probs[x] = ux.dotc(&rho_u.column(x)).re;
        for j in 0..3 {
            q[x][j] = ux.dotc(&drho_u[j].column(x)).re;
        }
        if probs[x] > PROB_CUTOFF {
            for a in 0..3 {
                for b in 0..3 {
                    f[(a, b)] += q[x][a] * q[x][b] / probs[x];
                }
            }
        }
    }
    let fi = FisherMatrix { entries: f, kind: FisherKind::Classical }.inverse()?;
    let kf = k as f64;
    let value = kf * fi.trace();
    let s = fi * fi;

    // Γ with dL = Re Tr[Γ† dU].
    let mut gamma = CMat::zeros(d, d);
    for x in 0..d {
        let p = probs[x];
        if p <= PROB_CUTOFF {
            continue;
        }
        let qv = nalgebra::Vector3::from(q[x]);
        let sq = s * qv;
        let quad = qv.dot(&sq);
        let mut col = rho_u.column(x) * C64::new(quad / (p * p), 0.0);
        for j in 0..3 {
            col -= drho_u[j].column(x) * C64::new(2.0 * sq[j] / p, 0.0);
        }
        gamma.set_column(x, &(col * C64::new(2.0 * kf, 0.0)));
    }
    // Divided differences of e^{ix}: i e^{i(a+b)/2} sinc((a−b)/2).
    let p = v.adjoint() * &gamma * &v;
    let r = CMat::from_fn(d, d, |m, n| {
        let half = 0.5 * (vals[m] - vals[n]);
        let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
        let phi = C64::new(0.0, 1.0) * C64::from_polar(sinc, 0.5 * (vals[m] + vals[n]));
        p[(m, n)] * phi.conj()
    });
    let b = &v * r.adjoint() * v.adjoint();
    Ok((value, gens.real_traces(&b)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CopiesOptimum {
    pub value: f64,
    pub k: usize,
    /// Coefficients over the permutation-invariant generators.
    pub coeffs: Vec<f64>,
    pub search: SearchOutcome,
}

/// `k · Tr F⁻¹` of `exp(i Σ cᵢλᵢ)` over the symmetric generators on `k`
/// copies of the probe.
pub fn copies_bound_value(psi: &Ket, gamma: f64, k: usize, coeffs: &[f64]) -> Result<f64> {
    let model = kcopy_model(&build_model_at_origin(psi, gamma)?, k)?;
    let basis = perm_invariant_basis(2, k)?;
    let u = crate::search::unitary_from_coeffs(&UnitaryCoefficients::new(coeffs.to_vec())?, &basis)?;
    let f = cfi_matrix(&outcome_distribution(&model, &Measurement::projective(u)?)?);
    scalar_crb(&f, k)
}

/// Best projective measurement on `k` copies of `psi`, without enforcing
/// restart agreement.
pub fn copies_bound_search(psi: &Ket, gamma: f64, k: usize, opts: &SearchOptions) -> Result<CopiesOptimum> {
    if !(1..=3).contains(&k) {
        return Err(Error::Unsupported(format!("{k} copies")));
    }
    let model = kcopy_model(&build_model_at_origin(psi, gamma)?, k)?;
    let basis = perm_invariant_basis(2, k)?;
    let eval = |c: &[f64], g: &mut [f64]| match projective_bound_with_gradient(&model, &basis, c, k) {
        Ok((v, gr)) if v.is_finite() && v < PENALTY => {
            g.copy_from_slice(&gr);
            v
        }
        _ => {
            g.iter_mut().for_each(|x| *x = 0.0);
            PENALTY
        }
    };
    let f = |c: &[f64]| eval(c, &mut vec![0.0; c.len()]);
    let space = SearchSpace::uniform(basis.len(), -std::f64::consts::PI, std::f64::consts::PI)?;
    let search = multi_start(f, eval, &space, opts);
    Ok(CopiesOptimum { value: search.value, k, coeffs: search.x.clone(), search })
}

pub fn copies_bound(psi: &Ket, gamma: f64, k: usize, opts: &SearchOptions) -> Result<CopiesOptimum> {
    let o = copies_bound_search(psi, gamma, k, opts)?;
    o.search.clone().require_agreement(opts.agreement_tol)?;
    Ok(o)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcOptimum {
    pub value: f64,
    /// Four-qubit probe.
    pub state: Ket,
    /// Measurement coefficients for the first pair, then (when independent)
    /// the second.
    pub meas_coeffs: Vec<f64>,
    pub independent: bool,
    pub search: SearchOutcome,
}

/// Normalized four-qubit probe from 16 real and 16 imaginary parts.
pub fn qc_state(x: &[f64]) -> Result<Ket> {
    if x.len() != 32 {
        return Err(Error::LengthMismatch { expected: 32, found: x.len() });
    }
    Ket::normalized(CVec::from_fn(16, |i, _| C64::new(x[i], x[16 + i])))
}

/// `2 · Tr F⁻¹` with the pair measurement `U₁ ⊗ U₂` (`U₂ = U₁` unless
/// `independent`).
pub fn qc_value(psi: &Ket, gamma: f64, meas_coeffs: &[f64], independent: bool) -> Result<f64> {
    let expected = if independent { 30 } else { 15 };
    if meas_coeffs.len() != expected {
        return Err(Error::LengthMismatch { expected, found: meas_coeffs.len() });
    }
    let gens = GeneratorSet::new(2)?;
    let u1 = crate::search::unitary_from_coeffs(&UnitaryCoefficients::new(meas_coeffs[..15].to_vec())?, &gens)?;
    let u2 = if independent {
        crate::search::unitary_from_coeffs(&UnitaryCoefficients::new(meas_coeffs[15..].to_vec())?, &gens)?
    } else {
        u1.clone()
    };
    let model = build_model_at_origin(psi, gamma)?;
    let f = cfi_matrix(&outcome_distribution(&model, &Measurement::projective(u1.kronecker(&u2))?)?);
    scalar_crb(&f, 2)
}

pub fn qc_bound_search(gamma: f64, independent: bool, opts: &SearchOptions) -> Result<QcOptimum> {
    crate::encoding::NoiseLevel::new(gamma)?;
    let n_meas = if independent { 30 } else { 15 };
    let f = |x: &[f64]| penalized(qc_state(&x[..32]).and_then(|psi| qc_value(&psi, gamma, &x[32..], independent)));
    let mut bounds = vec![(-1.0, 1.0); 32];
    bounds.extend(std::iter::repeat_n((-std::f64::consts::PI, std::f64::consts::PI), n_meas));
    let space = SearchSpace::new(bounds, 0, crate::search::Boundary::Clamp)?;
    let search = multi_start(f, central_gradient(&f, 1e-6), &space, opts);
    let state = qc_state(&search.x[..32])?;
    Ok(QcOptimum { value: search.value, state, meas_coeffs: search.x[32..].to_vec(), independent, search })
}

pub fn qc_bound(gamma: f64, independent: bool, opts: &SearchOptions) -> Result<QcOptimum> {
    let o = qc_bound_search(gamma, independent, opts)?;
    o.search.clone().require_agreement(opts.agreement_tol)?;
    Ok(o)
}

//! Parametrizations searched by the optimizers: `U = exp(i Σ cᵢλᵢ)` over a
//! generator basis, probe states `U|0⟩` and projective measurements
//! `{U|x⟩⟨x|U†}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::Measurement;
use crate::qcore::{exp_i_hermitian, CMat, GeneratorSet, Ket, PauliString};

/// Real coefficients of a Hermitian generator in some basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitaryCoefficients(Vec<f64>);

impl UnitaryCoefficients {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if let Some(i) = c.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(i));
        }
        Ok(Self(c))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A real-linear family of traceless Hermitian operators.
pub trait GeneratorBasis {
    fn n_qubits(&self) -> usize;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// `Σ cᵢ λᵢ`.
    fn hamiltonian(&self, coeffs: &[f64]) -> Result<CMat>;
    /// `Re Tr[B λᵢ]` for every generator.
    fn real_traces(&self, b: &CMat) -> Vec<f64>;
}

impl GeneratorBasis for GeneratorSet {
    fn n_qubits(&self) -> usize {
        GeneratorSet::n_qubits(self)
    }

    fn len(&self) -> usize {
        GeneratorSet::len(self)
    }

    fn hamiltonian(&self, coeffs: &[f64]) -> Result<CMat> {
        self.combine(coeffs)
    }

    fn real_traces(&self, b: &CMat) -> Vec<f64> {
        self.elements().iter().map(|p| p.trace_with(b).re).collect()
    }
}

/// Pauli strings on `k` blocks of `q` qubits, grouped into orbits under
/// permutations of the blocks.
///
/// Each orbit contributes the normalized sum of its members as one
/// generator. The all-identity orbit is counted by [`Self::dim`] but is not
/// a generator, since it only adds a global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PermInvariantBasis {
    q: usize,
    k: usize,
    orbits: Vec<Vec<PauliString>>,
}

impl PermInvariantBasis {
    pub fn block_qubits(&self) -> usize {
        self.q
    }

    pub fn copies(&self) -> usize {
        self.k
    }

    /// Number of orbits including the identity.
    pub fn dim(&self) -> usize {
        self.orbits.len() + 1
    }

    pub fn orbits(&self) -> &[Vec<PauliString>] {
        &self.orbits
    }

    /// Coefficients over the full generator set equivalent to `coeffs`.
    pub fn expand(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.orbits.len() {
            return Err(Error::LengthMismatch { expected: self.orbits.len(), found: coeffs.len() });
        }
        let mut full = vec![0.0; (1usize << (2 * self.q * self.k)) - 1];
        for (orbit, &c) in self.orbits.iter().zip(coeffs) {
            let w = c / (orbit.len() as f64).sqrt();
            for p in orbit {
                full[p.index() - 1] = w;
            }
        }
        Ok(full)
    }
}

impl GeneratorBasis for PermInvariantBasis {
    fn n_qubits(&self) -> usize {
        self.q * self.k
    }

    fn len(&self) -> usize {
        self.orbits.len()
    }

    fn hamiltonian(&self, coeffs: &[f64]) -> Result<CMat> {
        if coeffs.len() != self.orbits.len() {
            return Err(Error::LengthMismatch { expected: self.orbits.len(), found: coeffs.len() });
        }
        let d = 1usize << self.n_qubits();
        let mut h = CMat::zeros(d, d);
        for (orbit, &c) in self.orbits.iter().zip(coeffs) {
            if c != 0.0 {
                let w = c / (orbit.len() as f64).sqrt();
                for p in orbit {
                    p.add_to(&mut h, w);
                }
            }
        }
        Ok(h)
    }

    fn real_traces(&self, b: &CMat) -> Vec<f64> {
        self.orbits
            .iter()
            .map(|orbit| orbit.iter().map(|p| p.trace_with(b).re).sum::<f64>() / (orbit.len() as f64).sqrt())
            .collect()
    }
}

/// `C(k + 4^q − 1, k)`, the number of multisets of `k` block labels drawn
/// from the `4^q` Pauli strings on one block.
pub fn perm_invariant_dim(q: usize, k: usize) -> usize {
    let m = 1usize << (2 * q);
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 1..m {
        num *= (k + i) as u128;
        den *= i as u128;
    }
    (num / den) as usize
}

/// Block labels of a Pauli index, block 0 first.
fn block_labels(index: usize, q: usize, k: usize) -> Vec<usize> {
    let m = 1usize << (2 * q);
    (0..k).map(|b| (index >> (2 * q * (k - 1 - b))) & (m - 1)).collect()
}

/// Generator orbits for `k` copies of a `q`-qubit block.
pub fn perm_invariant_basis(q: usize, k: usize) -> Result<PermInvariantBasis> {
    if !(1..=2).contains(&q) || !(1..=3).contains(&k) {
        return Err(Error::Unsupported(format!("permutation-invariant basis for q = {q}, k = {k}")));
    }
    let n = q * k;
    let mut groups: BTreeMap<Vec<usize>, Vec<PauliString>> = BTreeMap::new();
    for index in 1..1usize << (2 * n) {
        let mut key = block_labels(index, q, k);
        key.sort_unstable();
        groups.entry(key).or_default().push(PauliString::from_index(n, index));
    }
    Ok(PermInvariantBasis { q, k, orbits: groups.into_values().collect() })
}

/// Coefficients over the full generator set of `q·k` qubits with the copy
/// blocks permuted: block `b` of the result carries block `perm[b]` of the
/// input.
pub fn permute_blocks(coeffs: &[f64], q: usize, k: usize, perm: &[usize]) -> Result<Vec<f64>> {
    let len = (1usize << (2 * q * k)) - 1;
    if coeffs.len() != len {
        return Err(Error::LengthMismatch { expected: len, found: coeffs.len() });
    }
    let mut out = vec![0.0; len];
    for index in 1..=len {
        let labels = block_labels(index, q, k);
        let target = (0..k).fold(0usize, |acc, b| (acc << (2 * q)) | labels[perm[b]]);
        out[target - 1] = coeffs[index - 1];
    }
    Ok(out)
}

/// `exp(i Σ cᵢλᵢ)`.
pub fn unitary_from_coeffs<B: GeneratorBasis + ?Sized>(c: &UnitaryCoefficients, gens: &B) -> Result<CMat> {
    Ok(exp_i_hermitian(&gens.hamiltonian(c.as_slice())?, 1.0))
}

/// `U|0…0⟩`.
pub fn param_state<B: GeneratorBasis + ?Sized>(c: &UnitaryCoefficients, gens: &B) -> Result<Ket> {
    let u = unitary_from_coeffs(c, gens)?;
    Ket::normalized(u.column(0).into_owned())
}

/// Rank-one projective measurement onto the columns of `U`.
pub fn param_projective<B: GeneratorBasis + ?Sized>(c: &UnitaryCoefficients, gens: &B) -> Result<Measurement> {
    Measurement::projective(unitary_from_coeffs(c, gens)?)
}

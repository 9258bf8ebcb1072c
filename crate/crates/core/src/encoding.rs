//! The noisy three-parameter field-sensing model.
//!
//! A field `φ` imprints `U = exp(−iH)` with `H = Σᵢ φᵢ Σ_m σᵢ⁽ᵐ⁾` on every
//! qubit of the probe, after which each qubit independently dephases. The
//! resulting [`StatisticalModel`] carries `ρ_φ` and its three derivatives,
//! which is all any bound needs.

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::qcore::{
    apply_local_left, apply_local_right_adjoint, exp_i_hermitian, hermiticity_error, hermitize,
    hermitian_eigen, paulis, qubits_for_dim, tensor_product, CMat, CVec,
    DensityMatrix, HermitianOperator, Ket, C64, CONSTRUCT_TOL, I, MAX_QUBITS, ONE, VERIFY_TOL,
    ZERO,
};

/// Field components at which the model is linearized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldParams(pub [f64; 3]);

impl FieldParams {
    pub fn new(phi: [f64; 3]) -> Result<Self> {
        if phi.iter().any(|x| !x.is_finite()) {
            return Err(Error::Unsupported("non-finite field component".into()));
        }
        Ok(Self(phi))
    }

    pub fn zero() -> Self {
        Self([0.0; 3])
    }
}

/// Dephasing strength `γ ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NoiseLevel(f64);

impl NoiseLevel {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidNoise(gamma));
        }
        Ok(Self(gamma))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Completely positive trace-preserving map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    kraus: Vec<CMat>,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<CMat>) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(Error::IncompleteMeasurement(1.0));
        };
        let d = first.nrows();
        let mut sum = CMat::zeros(d, d);
        for k in &kraus {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: k.nrows() });
            }
            sum += k.adjoint() * k;
        }
        let dev = (sum - CMat::identity(d, d)).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if dev > CONSTRUCT_TOL {
            return Err(Error::IncompleteMeasurement(dev));
        }
        Ok(Self { kraus })
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    /// `Σ E ρ E†` for an operator of the channel's dimension.
    pub fn apply(&self, m: &CMat) -> Result<CMat> {
        if m.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: m.nrows() });
        }
        Ok(self.kraus.iter().map(|e| e * m * e.adjoint()).sum())
    }

    /// Channel on `n` qubits made of every product of single-qubit Kraus
    /// operators.
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::DimensionTooLarge { n, max: MAX_QUBITS });
        }
        let mut ops = self.kraus.clone();
        for _ in 1..n {
            ops = ops
                .iter()
                .flat_map(|a| self.kraus.iter().map(move |b| tensor_product(a, b)))
                .collect();
        }
        Ok(Self { kraus: ops })
    }

    /// Applies a single-qubit channel independently to each of the `n`
    /// qubits of the operator `m`, without forming the `2ⁿ`-fold product.
    pub fn apply_each_qubit(&self, m: &CMat) -> Result<CMat> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: self.dim() });
        }
        let n = qubits_for_dim(m.nrows())?;
        let ops: Vec<Matrix2<C64>> = self
            .kraus
            .iter()
            .map(|k| Matrix2::new(k[(0, 0)], k[(0, 1)], k[(1, 0)], k[(1, 1)]))
            .collect();
        let mut cur = m.clone();
        for q in 0..n {
            let mut next = CMat::zeros(m.nrows(), m.ncols());
            for e in &ops {
                let left = apply_local_left(e, q, n, &cur);
                next += apply_local_right_adjoint(e, q, n, &left);
            }
            cur = next;
        }
        Ok(cur)
    }
}

/// Single-qubit dephasing with `E₀ = diag(1, √(1−γ))`, `E₁ = diag(0, √γ)`.
pub fn dephasing_channel(gamma: NoiseLevel) -> QuantumChannel {
    let g = gamma.value();
    let e0 = CMat::from_diagonal(&CVec::from_vec(vec![ONE, C64::new((1.0 - g).sqrt(), 0.0)]));
    let e1 = CMat::from_diagonal(&CVec::from_vec(vec![ZERO, C64::new(g.sqrt(), 0.0)]));
    QuantumChannel { kraus: vec![e0, e1] }
}

/// A density matrix together with its derivatives along the three field
/// components.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticalModel {
    rho: DensityMatrix,
    d_rho: [CMat; 3],
}

impl StatisticalModel {
    /// Validates that each derivative is Hermitian, traceless and of the
    /// right size.
    pub fn new(rho: DensityMatrix, d_rho: [CMat; 3]) -> Result<Self> {
        for d in &d_rho {
            if d.nrows() != rho.dim() || d.ncols() != rho.dim() {
                return Err(Error::DimensionMismatch { expected: rho.dim(), found: d.nrows() });
            }
            let h = hermiticity_error(d);
            if h > VERIFY_TOL {
                return Err(Error::NotHermitian(h));
            }
            let tr = d.trace().norm();
            if tr > VERIFY_TOL {
                return Err(Error::NotDensityMatrix(format!("derivative trace {tr:e}")));
            }
        }
        Ok(Self::from_trusted(rho, d_rho))
    }

    pub(crate) fn from_trusted(rho: DensityMatrix, d_rho: [CMat; 3]) -> Self {
        let d_rho = d_rho.map(|d| hermitize(&d));
        Self { rho, d_rho }
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn d_rho(&self) -> &[CMat; 3] {
        &self.d_rho
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn n_qubits(&self) -> usize {
        self.rho.n_qubits()
    }

    /// The same model seen through a fixed unitary `ρ ↦ VρV†`.
    pub fn conjugated(&self, v: &CMat) -> Result<Self> {
        if v.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.nrows() });
        }
        let t = |m: &CMat| v * m * v.adjoint();
        Ok(Self::from_trusted(
            DensityMatrix::from_trusted(t(self.rho.entries())),
            [t(&self.d_rho[0]), t(&self.d_rho[1]), t(&self.d_rho[2])],
        ))
    }
}

/// Collective spin operators `Hᵢ = Σ_m σᵢ⁽ᵐ⁾` for i = x, y, z.
pub fn generators(n_qubits: usize) -> Result<[CMat; 3]> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::DimensionTooLarge { n: n_qubits, max: MAX_QUBITS });
    }
    let d = 1 << n_qubits;
    let p = paulis();
    let build = |s: &Matrix2<C64>| {
        let mut acc = CMat::zeros(d, d);
        for q in 0..n_qubits {
            acc += apply_local_left(s, q, n_qubits, &CMat::identity(d, d));
        }
        acc
    };
    Ok([build(&p[0]), build(&p[1]), build(&p[2])])
}

/// `H(φ) = Σᵢ φᵢ Hᵢ`.
pub fn hamiltonian(phi: FieldParams, n_qubits: usize) -> Result<HermitianOperator> {
    let g = generators(n_qubits)?;
    let h = &g[0] * C64::new(phi.0[0], 0.0)
        + &g[1] * C64::new(phi.0[1], 0.0)
        + &g[2] * C64::new(phi.0[2], 0.0);
    Ok(HermitianOperator::from_trusted(h))
}

/// `(e^{ix} − 1)/(ix)`, expanded as a series near zero.
fn derivative_kernel(x: f64) -> C64 {
    if x.abs() < 1e-6 {
        C64::new(1.0 - x * x / 6.0, x / 2.0 - x * x * x / 24.0)
    } else {
        (C64::from_polar(1.0, x) - ONE) / (I * x)
    }
}

/// `Aᵢ = ∫₀¹ e^{isH} Hᵢ e^{−isH} ds`, the operator for which
/// `∂ᵢ e^{−iH} = −i e^{−iH} Aᵢ`.
///
/// Built exactly in the eigenbasis of `H(φ)`: the element between
/// eigenvectors `a`, `b` is `⟨a|Hᵢ|b⟩ (e^{ix} − 1)/(ix)` with `x = λ_a − λ_b`.
pub fn encode_derivative_operator(
    phi: FieldParams,
    i: usize,
    n_qubits: usize,
) -> Result<HermitianOperator> {
    if i >= 3 {
        return Err(Error::InvalidParameter(i));
    }
    let gens = generators(n_qubits)?;
    if phi.0 == [0.0; 3] {
        return Ok(HermitianOperator::from_trusted(gens[i].clone()));
    }
    let h = hamiltonian(phi, n_qubits)?;
    let (vals, vecs) = hermitian_eigen(h.entries());
    let mut a = vecs.adjoint() * &gens[i] * &vecs;
    for r in 0..a.nrows() {
        for c in 0..a.ncols() {
            a[(r, c)] *= derivative_kernel(vals[r] - vals[c]);
        }
    }
    Ok(HermitianOperator::from_trusted(&vecs * a * vecs.adjoint()))
}

/// Encoded pure state `e^{−iH}|ψ₀⟩` and its three derivatives.
pub fn encoded_pure_state(psi0: &Ket, phi: FieldParams) -> Result<(CVec, [CVec; 3])> {
    let n = psi0.n_qubits();
    let h = hamiltonian(phi, n)?;
    let u = exp_i_hermitian(h.entries(), -1.0);
    let psi = &u * psi0.amplitudes();
    let mut ds: [CVec; 3] = std::array::from_fn(|_| CVec::zeros(psi0.dim()));
    for (i, d) in ds.iter_mut().enumerate() {
        let a = encode_derivative_operator(phi, i, n)?;
        *d = (&u * (a.entries() * psi0.amplitudes())) * (-I);
    }
    Ok((psi, ds))
}

/// `ρ = Λ_γ^{⊗N}[UρU†]` with derivatives pushed through the channel.
pub fn build_model(psi0: &Ket, gamma: NoiseLevel, phi: FieldParams) -> Result<StatisticalModel> {
    let (psi, ds) = encoded_pure_state(psi0, phi)?;
    let chan = dephasing_channel(gamma);
    let pure = &psi * psi.adjoint();
    let rho = chan.apply_each_qubit(&pure)?;
    let d_rho = ds.map(|d| {
        let dp = &d * psi.adjoint();
        let dp = &dp + dp.adjoint();
        chan.apply_each_qubit(&dp).expect("dimension already validated")
    });
    Ok(StatisticalModel::from_trusted(DensityMatrix::from_trusted(rho), d_rho))
}

/// Model at the working point `φ = 0` for a given noise level.
pub fn build_model_at_origin(psi0: &Ket, gamma: f64) -> Result<StatisticalModel> {
    build_model(psi0, NoiseLevel::new(gamma)?, FieldParams::zero())
}

/// `ρ^{⊗k}` with Leibniz-rule derivatives.
pub fn kcopy_model(m: &StatisticalModel, k: usize) -> Result<StatisticalModel> {
    if k == 0 {
        return Err(Error::Unsupported("k must be at least 1".into()));
    }
    let n = m.n_qubits() * k;
    if n > MAX_QUBITS {
        return Err(Error::DimensionTooLarge { n, max: MAX_QUBITS });
    }
    let rho1 = m.rho.entries();
    let mut rho = rho1.clone();
    let mut d = m.d_rho.clone();
    for _ in 1..k {
        for (i, di) in d.iter_mut().enumerate() {
            *di = tensor_product(di, rho1) + tensor_product(&rho, &m.d_rho[i]);
        }
        rho = tensor_product(&rho, rho1);
    }
    Ok(StatisticalModel::from_trusted(DensityMatrix::from_trusted(rho), d))
}

/// Single-qubit dephasing Kraus operators as fixed-size matrices, used by
/// the circuit simulator.
pub fn dephasing_kraus2(gamma: NoiseLevel) -> [Matrix2<C64>; 2] {
    let ch = dephasing_channel(gamma);
    let k = ch.kraus();
    [
        Matrix2::new(k[0][(0, 0)], k[0][(0, 1)], k[0][(1, 0)], k[0][(1, 1)]),
        Matrix2::new(k[1][(0, 0)], k[1][(0, 1)], k[1][(1, 0)], k[1][(1, 1)]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{max_abs, random_unitary, to_dynamic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_dense(i: usize) -> CMat {
        to_dynamic(&paulis()[i])
    }

    fn random_ket(dim: usize, seed: u64) -> Ket {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ket::random(dim, &mut rng).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        let h0 = hamiltonian(FieldParams::zero(), 2).unwrap();
        assert_eq!(max_abs(h0.entries()), 0.0);
        let hz = hamiltonian(FieldParams([0.0, 0.0, 1.0]), 1).unwrap();
        assert!(max_abs(&(hz.entries() - pauli_dense(2))) < 1e-15);
        let hx = hamiltonian(FieldParams([1.0, 0.0, 0.0]), 2).unwrap();
        let (mut vals, _) = hermitian_eigen(hx.entries());
        vals.as_mut_slice().sort_by(f64::total_cmp);
        let expect = [-2.0, 0.0, 0.0, 2.0];
        for (v, e) in vals.iter().zip(expect) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn dephasing_examples() {
        let plus = Ket::from_real(&[1.0, 1.0]).unwrap().projector();
        let id = dephasing_channel(NoiseLevel::new(0.0).unwrap());
        assert!(max_abs(&(id.apply(&plus).unwrap() - &plus)) < 1e-15);
        let full = dephasing_channel(NoiseLevel::new(1.0).unwrap());
        let out = full.apply(&plus).unwrap();
        assert!(max_abs(&(out - CMat::identity(2, 2) * C64::new(0.5, 0.0))) < 1e-15);
        let half = dephasing_channel(NoiseLevel::new(0.5).unwrap());
        let out = half.apply(&plus).unwrap();
        assert!((out[(0, 1)] - plus[(0, 1)] * 0.5f64.sqrt()).norm() < 1e-15);
        assert!(matches!(NoiseLevel::new(1.5), Err(Error::InvalidNoise(_))));
        assert!(QuantumChannel::new(dephasing_channel(NoiseLevel::new(0.3).unwrap()).kraus).is_ok());
    }

    #[test]
    fn per_qubit_channel_matches_tensor_power() {
        let ch = dephasing_channel(NoiseLevel::new(0.37).unwrap());
        let psi = random_ket(8, 4).projector();
        let fast = ch.apply_each_qubit(&psi).unwrap();
        let slow = ch.tensor_power(3).unwrap().apply(&psi).unwrap();
        assert!(max_abs(&(fast - slow)) < 1e-14);
    }

    #[test]
    fn dephasing_commutes_with_z_rotation() {
        let ch = dephasing_channel(NoiseLevel::new(0.4).unwrap());
        let rho = random_ket(2, 9).projector();
        let rz = exp_i_hermitian(&pauli_dense(2), -0.83);
        let a = ch.apply(&(&rz * &rho * rz.adjoint())).unwrap();
        let b = &rz * ch.apply(&rho).unwrap() * rz.adjoint();
        assert!(max_abs(&(a - b)) < 1e-12);
    }

    #[test]
    fn derivative_operator_at_origin_is_generator() {
        let g = generators(2).unwrap();
        for (i, gi) in g.iter().enumerate() {
            let a = encode_derivative_operator(FieldParams::zero(), i, 2).unwrap();
            assert!(max_abs(&(a.entries() - gi)) < 1e-15);
        }
        assert!(encode_derivative_operator(FieldParams::zero(), 3, 2).is_err());
    }

    #[test]
    fn derivative_operator_matches_finite_differences() {
        let phi = FieldParams([0.3, 0.1, 0.2]);
        let psi0 = random_ket(4, 11);
        let h = 1e-5;
        for i in 0..3 {
            let a = encode_derivative_operator(phi, i, 2).unwrap();
            assert!(hermiticity_error(a.entries()) < 1e-10);
            let u = exp_i_hermitian(hamiltonian(phi, 2).unwrap().entries(), -1.0);
            let analytic = (&u * (a.entries() * psi0.amplitudes())) * (-I);
            let shifted = |s: f64| {
                let mut p = phi.0;
                p[i] += s;
                exp_i_hermitian(hamiltonian(FieldParams(p), 2).unwrap().entries(), -1.0)
                    * psi0.amplitudes()
            };
            let fd = (shifted(h) - shifted(-h)) / C64::new(2.0 * h, 0.0);
            let err = (analytic - fd).iter().fold(0.0f64, |m, z| m.max(z.norm()));
            assert!(err < 1e-8, "component {i}: {err:e}");
        }
    }

    #[test]
    fn kernel_series_is_continuous() {
        let below = derivative_kernel(0.999e-6);
        let above = derivative_kernel(1.001e-6);
        assert!((below - above).norm() < 1e-8);
        assert_eq!(derivative_kernel(0.0), ONE);
    }

    #[test]
    fn noiseless_model_is_pure_and_traceless() {
        let psi = random_ket(4, 2);
        let m = build_model(&psi, NoiseLevel::new(0.0).unwrap(), FieldParams::zero()).unwrap();
        assert!((m.rho().purity() - 1.0).abs() < 1e-10);
        for d in m.d_rho() {
            assert!(d.trace().norm() < 1e-12);
        }
        let p = m.rho().entries();
        assert!(max_abs(&(p * p - p)) < 1e-10);
    }

    #[test]
    fn model_at_origin_uses_commutator() {
        let psi = random_ket(4, 5);
        let gam = NoiseLevel::new(0.25).unwrap();
        let m = build_model(&psi, gam, FieldParams::zero()).unwrap();
        let g = generators(2).unwrap();
        let ch = dephasing_channel(gam);
        let rho0 = psi.projector();
        for i in 0..3 {
            let comm = (&g[i] * &rho0 - &rho0 * &g[i]) * (-I);
            let expect = ch.apply_each_qubit(&comm).unwrap();
            assert!(max_abs(&(&m.d_rho()[i] - expect)) < 1e-13);
        }
    }

    #[test]
    fn noisy_model_matches_finite_differences() {
        let psi = random_ket(4, 8);
        let gam = NoiseLevel::new(0.3).unwrap();
        let base = [0.05, -0.02, 0.04];
        let m = build_model(&psi, gam, FieldParams(base)).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            let eval = |s: f64| {
                let mut p = base;
                p[i] += s;
                build_model(&psi, gam, FieldParams(p)).unwrap().rho().entries().clone()
            };
            let fd = (eval(h) - eval(-h)) / C64::new(2.0 * h, 0.0);
            assert!(max_abs(&(&m.d_rho()[i] - fd)) < 1e-8);
        }
    }

    #[test]
    fn build_model_rejects_bad_dimension_via_ket() {
        assert!(Ket::from_real(&[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn kcopy_examples() {
        let psi = random_ket(4, 21);
        let gam = NoiseLevel::new(0.2).unwrap();
        let m = build_model(&psi, gam, FieldParams::zero()).unwrap();
        let same = kcopy_model(&m, 1).unwrap();
        assert_eq!(same, m);
        let two = kcopy_model(&m, 2).unwrap();
        let r = m.rho().entries();
        for i in 0..3 {
            let d = &m.d_rho()[i];
            let expect = tensor_product(d, r) + tensor_product(r, d);
            assert!(max_abs(&(&two.d_rho()[i] - expect)) < 1e-15);
        }
        assert!(matches!(kcopy_model(&m, 4), Err(Error::DimensionTooLarge { .. })));
    }

    #[test]
    fn kcopy_matches_finite_differences() {
        let psi = random_ket(4, 31);
        let gam = NoiseLevel::new(0.15).unwrap();
        let base = [0.01, 0.02, -0.03];
        let two = kcopy_model(&build_model(&psi, gam, FieldParams(base)).unwrap(), 2).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            let eval = |s: f64| {
                let mut p = base;
                p[i] += s;
                let r = build_model(&psi, gam, FieldParams(p)).unwrap().rho().entries().clone();
                tensor_product(&r, &r)
            };
            let fd = (eval(h) - eval(-h)) / C64::new(2.0 * h, 0.0);
            assert!(max_abs(&(&two.d_rho()[i] - fd)) < 1e-8);
        }
    }

    #[test]
    fn conjugation_preserves_structure() {
        let psi = random_ket(4, 41);
        let m = build_model_at_origin(&psi, 0.3).unwrap();
        let v = random_unitary(4, &mut ChaCha8Rng::seed_from_u64(1));
        let c = m.conjugated(&v).unwrap();
        assert!((c.rho().entries().trace() - ONE).norm() < 1e-12);
    }
}

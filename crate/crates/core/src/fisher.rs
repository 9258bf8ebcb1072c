//! Classical and quantum Fisher information, symmetric logarithmic
//! derivatives and the antisymmetric `D` matrix.

use nalgebra::Matrix3;

use crate::encoding::StatisticalModel;
use crate::error::{Error, Result};
use crate::qcore::{
    hermitian_eigen, hermiticity_error, hermitize, tensor_product, unitarity_error, CMat, HermitianOperator, C64, VERIFY_TOL,
};

/// Outcomes with probability at or below this are left out of the CFI sum.
pub const PROB_CUTOFF: f64 = 1e-12;
/// Pairs of eigenvalues whose sum is at or below this get a zero SLD entry.
pub const RANK_CUTOFF: f64 = 1e-10;
/// Fisher matrices whose smallest eigenvalue is at or below this are singular.
pub const SINGULAR_CUTOFF: f64 = 1e-9;

/// A general POVM or a rank-one projective measurement in the basis
/// `{U|x⟩}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    Povm(Vec<CMat>),
    Projective(CMat),
}

impl Measurement {
    /// Checks positivity of each element and `Σ Πₓ = I` within 1e-10.
    pub fn povm(elements: Vec<CMat>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::IncompleteMeasurement(1.0));
        };
        let d = first.nrows();
        let mut sum = CMat::zeros(d, d);
        for e in &elements {
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: e.nrows() });
            }
            let herm = hermiticity_error(e);
            if herm > VERIFY_TOL {
                return Err(Error::NotHermitian(herm));
            }
            let (vals, _) = hermitian_eigen(&hermitize(e));
            if vals.min() < -VERIFY_TOL {
                return Err(Error::IncompleteMeasurement(-vals.min()));
            }
            sum += e;
        }
        let dev = max_dev_from_identity(&sum);
        if dev > VERIFY_TOL {
            return Err(Error::IncompleteMeasurement(dev));
        }
        Ok(Measurement::Povm(elements))
    }

    /// Projective measurement onto the columns of a unitary.
    pub fn projective(u: CMat) -> Result<Self> {
        if u.nrows() != u.ncols() {
            return Err(Error::DimensionMismatch { expected: u.nrows(), found: u.ncols() });
        }
        let dev = unitarity_error(&u);
        if dev > VERIFY_TOL {
            return Err(Error::IncompleteMeasurement(dev));
        }
        Ok(Measurement::Projective(u))
    }

    /// Measurement in the computational basis.
    pub fn computational(dim: usize) -> Self {
        Measurement::Projective(CMat::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        match self {
            Measurement::Povm(e) => e[0].nrows(),
            Measurement::Projective(u) => u.nrows(),
        }
    }

    pub fn n_outcomes(&self) -> usize {
        match self {
            Measurement::Povm(e) => e.len(),
            Measurement::Projective(u) => u.ncols(),
        }
    }

    /// Explicit list of POVM elements.
    pub fn elements(&self) -> Vec<CMat> {
        match self {
            Measurement::Povm(e) => e.clone(),
            Measurement::Projective(u) => (0..u.ncols())
                .map(|x| {
                    let col = u.column(x);
                    &col * col.adjoint()
                })
                .collect(),
        }
    }

    /// Product measurement `Π ⊗ Π'` on two registers.
    pub fn tensor(&self, other: &Measurement) -> Measurement {
        match (self, other) {
            (Measurement::Projective(a), Measurement::Projective(b)) => {
                Measurement::Projective(tensor_product(a, b))
            }
            _ => {
                let (a, b) = (self.elements(), other.elements());
                Measurement::Povm(
                    a.iter().flat_map(|x| b.iter().map(move |y| tensor_product(x, y))).collect(),
                )
            }
        }
    }
}

fn max_dev_from_identity(m: &CMat) -> f64 {
    let d = m.nrows();
    (m - CMat::identity(d, d)).iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

/// Born-rule probabilities and their derivatives along the three
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub probs: Vec<f64>,
    pub derivs: Vec<[f64; 3]>,
}

/// `p(x) = Tr[ρΠₓ]` (tiny negative values clamped to zero) and
/// `∂ᵢp(x) = Tr[∂ᵢρ Πₓ]`.
pub fn outcome_distribution(
    model: &StatisticalModel,
    meas: &Measurement,
) -> Result<OutcomeDistribution> {
    if meas.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: meas.dim() });
    }
    let rho = model.rho().entries();
    let d = model.d_rho();
    let clamp = |p: f64| if p < 0.0 { 0.0 } else { p };
    match meas {
        Measurement::Projective(u) => {
            let diag = |m: &CMat| -> Vec<f64> {
                let mu = m * u;
                (0..u.ncols()).map(|x| u.column(x).dotc(&mu.column(x)).re).collect()
            };
            let probs = diag(rho).into_iter().map(clamp).collect();
            let (d0, d1, d2) = (diag(&d[0]), diag(&d[1]), diag(&d[2]));
            let derivs = (0..u.ncols()).map(|x| [d0[x], d1[x], d2[x]]).collect();
            Ok(OutcomeDistribution { probs, derivs })
        }
        Measurement::Povm(elements) => {
            let tr = |a: &CMat, b: &CMat| -> f64 { a.component_mul(&b.transpose()).sum().re };
            let probs = elements.iter().map(|e| clamp(tr(rho, e))).collect();
            let derivs =
                elements.iter().map(|e| [tr(&d[0], e), tr(&d[1], e), tr(&d[2], e)]).collect();
            Ok(OutcomeDistribution { probs, derivs })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FisherKind {
    Classical,
    Quantum,
}

/// Symmetric positive semidefinite 3×3 information matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherMatrix {
    pub entries: Matrix3<f64>,
    pub kind: FisherKind,
}

impl FisherMatrix {
    pub fn min_eigenvalue(&self) -> f64 {
        self.entries.symmetric_eigenvalues().min()
    }

    /// `Tr F⁻¹`, or [`Error::SingularModel`] when F is not invertible.
    pub fn inverse_trace(&self) -> Result<f64> {
        Ok(self.inverse()?.trace())
    }

    pub fn inverse(&self) -> Result<Matrix3<f64>> {
        let min = self.min_eigenvalue();
        if !(min > SINGULAR_CUTOFF) {
            return Err(Error::SingularModel { min_eigenvalue: min });
        }
        self.entries.try_inverse().ok_or(Error::SingularModel { min_eigenvalue: min })
    }
}

/// `F_ij = Σₓ ∂ᵢp ∂ⱼp / p` over outcomes with `p > 1e-12`.
pub fn cfi_matrix(dist: &OutcomeDistribution) -> FisherMatrix {
    let mut f = Matrix3::zeros();
    for (p, dp) in dist.probs.iter().zip(&dist.derivs) {
        if *p <= PROB_CUTOFF {
            continue;
        }
        for i in 0..3 {
            for j in i..3 {
                f[(i, j)] += dp[i] * dp[j] / p;
            }
        }
    }
    for i in 0..3 {
        for j in 0..i {
            f[(i, j)] = f[(j, i)];
        }
    }
    FisherMatrix { entries: f, kind: FisherKind::Classical }
}

/// `k · Tr F⁻¹`, the per-copy bound for a measurement on `k` copies.
pub fn scalar_crb(f: &FisherMatrix, k_copies: usize) -> Result<f64> {
    Ok(k_copies as f64 * f.inverse_trace()?)
}

/// Classical bound of a measurement on a model, `Tr F⁻¹`.
pub fn classical_bound(model: &StatisticalModel, meas: &Measurement) -> Result<f64> {
    scalar_crb(&cfi_matrix(&outcome_distribution(model, meas)?), 1)
}

/// Symmetric logarithmic derivatives, built in the eigenbasis of ρ.
pub fn sld_set(model: &StatisticalModel) -> [HermitianOperator; 3] {
    let (vals, vecs) = hermitian_eigen(model.rho().entries());
    let vh = vecs.adjoint();
    model.d_rho().clone().map(|d| {
        let mut l = &vh * d * &vecs;
        for a in 0..l.nrows() {
            for b in 0..l.ncols() {
                let s = vals[a] + vals[b];
                l[(a, b)] = if s > RANK_CUTOFF { l[(a, b)] * (2.0 / s) } else { C64::new(0.0, 0.0) };
            }
        }
        HermitianOperator::from_trusted(&vecs * l * &vh)
    })
}

/// `Tr[LᵢLⱼρ]` for all pairs; its real part is the QFI and its imaginary
/// part the `D` matrix.
fn sld_gram(model: &StatisticalModel, l: &[HermitianOperator; 3]) -> [[C64; 3]; 3] {
    let rho = model.rho().entries();
    let lr: Vec<CMat> = l.iter().map(|li| li.entries() * rho).collect();
    let mut g = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            // Tr[Lᵢ (Lⱼ ρ)] as an elementwise sum.
            g[i][j] = l[i].entries().component_mul(&lr[j].transpose()).sum();
        }
    }
    g
}

/// Quantum Fisher information `J_ij = Tr[(LᵢLⱼ + LⱼLᵢ)ρ]/2`.
pub fn qfi_matrix(model: &StatisticalModel) -> FisherMatrix {
    let g = sld_gram(model, &sld_set(model));
    let j = Matrix3::from_fn(|a, b| 0.5 * (g[a][b].re + g[b][a].re));
    FisherMatrix { entries: j, kind: FisherKind::Quantum }
}

/// SLD bound `Tr J⁻¹`.
pub fn sld_crb(model: &StatisticalModel) -> Result<f64> {
    scalar_crb(&qfi_matrix(model), 1)
}

/// Antisymmetric matrix `D_ij = Im Tr[LᵢLⱼρ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DMatrix {
    pub entries: Matrix3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classicality {
    pub d_matrix: DMatrix,
    /// Every single-qubit marginal equals `I/2` within 1e-10.
    pub marginal_condition: bool,
}

impl Classicality {
    /// `D = 0`, the condition under which the SLD and Holevo bounds meet.
    pub fn asymptotically_classical(&self, tol: f64) -> bool {
        self.d_matrix.entries.amax() <= tol
    }
}

pub fn d_matrix(model: &StatisticalModel) -> DMatrix {
    let g = sld_gram(model, &sld_set(model));
    let d = Matrix3::from_fn(|a, b| 0.5 * (g[a][b].im - g[b][a].im));
    DMatrix { entries: d }
}

pub fn classicality_check(model: &StatisticalModel) -> Classicality {
    let rho = model.rho();
    let half = C64::new(0.5, 0.0);
    let marginal_condition = (0..rho.n_qubits()).all(|q| {
        let r = rho.reduced_qubit(q).expect("qubit index in range");
        (r[(0, 0)] - half).norm() <= VERIFY_TOL
            && (r[(1, 1)] - half).norm() <= VERIFY_TOL
            && r[(0, 1)].norm() <= VERIFY_TOL
    });
    Classicality { d_matrix: d_matrix(model), marginal_condition }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{build_model_at_origin, encoded_pure_state, kcopy_model, FieldParams};
    use crate::qcore::{max_abs, random_unitary, CVec, DensityMatrix, Ket};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_model(seed: u64, gamma: f64) -> StatisticalModel {
        let psi = Ket::random(4, &mut rng(seed)).unwrap();
        build_model_at_origin(&psi, gamma).unwrap()
    }

    #[test]
    fn maximally_mixed_gives_uniform() {
        let rho = DensityMatrix::new(CMat::identity(4, 4) * C64::new(0.25, 0.0)).unwrap();
        let zero = CMat::zeros(4, 4);
        let m = StatisticalModel::new(rho, [zero.clone(), zero.clone(), zero]).unwrap();
        let u = random_unitary(4, &mut rng(1));
        let d = outcome_distribution(&m, &Measurement::projective(u).unwrap()).unwrap();
        for p in d.probs {
            assert_abs_diff_eq!(p, 0.25, epsilon = 1e-14);
        }
    }

    #[test]
    fn distribution_sums_and_trace_oracle() {
        let m = random_model(3, 0.4);
        let u = random_unitary(4, &mut rng(2));
        let meas = Measurement::projective(u.clone()).unwrap();
        let d = outcome_distribution(&m, &meas).unwrap();
        assert_abs_diff_eq!(d.probs.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
        for i in 0..3 {
            assert!(d.derivs.iter().map(|x| x[i]).sum::<f64>().abs() < 1e-10);
        }
        let povm = Measurement::povm(meas.elements()).unwrap();
        let dp = outcome_distribution(&m, &povm).unwrap();
        for x in 0..4 {
            let proj = meas.elements()[x].clone();
            let direct = (m.rho().entries() * &proj).trace().re;
            assert_abs_diff_eq!(d.probs[x], direct, epsilon = 1e-13);
            assert_abs_diff_eq!(dp.probs[x], direct, epsilon = 1e-13);
            for i in 0..3 {
                let di = (&m.d_rho()[i] * &proj).trace().re;
                assert_abs_diff_eq!(d.derivs[x][i], di, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn incomplete_povm_is_rejected() {
        let half = CMat::identity(2, 2) * C64::new(0.5, 0.0);
        assert!(matches!(
            Measurement::povm(vec![half.clone()]),
            Err(Error::IncompleteMeasurement(_))
        ));
        assert!(Measurement::povm(vec![half.clone(), half]).is_ok());
        let m = random_model(1, 0.1);
        assert!(outcome_distribution(&m, &Measurement::computational(2)).is_err());
    }

    #[test]
    fn cfi_examples() {
        let zero = OutcomeDistribution { probs: vec![0.5, 0.5], derivs: vec![[0.0; 3]; 2] };
        assert_eq!(cfi_matrix(&zero).entries, Matrix3::zeros());
        let (q, a) = (0.3, 0.2);
        let d = OutcomeDistribution {
            probs: vec![q, 1.0 - q],
            derivs: vec![[a, 0.0, 0.0], [-a, 0.0, 0.0]],
        };
        assert_abs_diff_eq!(cfi_matrix(&d).entries[(0, 0)], a * a / q + a * a / (1.0 - q), epsilon = 1e-15);
    }

    #[test]
    fn cfi_matches_compensated_sum() {
        let mut r = rng(5);
        let mut p: Vec<f64> = (0..4).map(|_| r.random::<f64>() + 0.1).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        let mut derivs: Vec<[f64; 3]> = (0..4).map(|_| [r.random(), r.random(), r.random()]).collect();
        for i in 0..3 {
            let m: f64 = derivs.iter().map(|d| d[i]).sum::<f64>() / 4.0;
            derivs.iter_mut().for_each(|d| d[i] -= m);
        }
        let f = cfi_matrix(&OutcomeDistribution { probs: p.clone(), derivs: derivs.clone() });
        for i in 0..3 {
            for j in 0..3 {
                // Neumaier-compensated definitional sum as the reference.
                let (mut sum, mut comp) = (0.0f64, 0.0f64);
                for x in 0..4 {
                    let t = derivs[x][i] * derivs[x][j] / p[x];
                    let s2 = sum + t;
                    comp += if sum.abs() >= t.abs() { (sum - s2) + t } else { (t - s2) + sum };
                    sum = s2;
                }
                assert_abs_diff_eq!(f.entries[(i, j)], sum + comp, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn scalar_crb_examples() {
        let f = |d: [f64; 3]| FisherMatrix {
            entries: Matrix3::from_diagonal(&nalgebra::Vector3::from(d)),
            kind: FisherKind::Classical,
        };
        assert_abs_diff_eq!(scalar_crb(&f([1.0; 3]), 1).unwrap(), 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(scalar_crb(&f([1.0, 2.0, 4.0]), 1).unwrap(), 1.75, epsilon = 1e-15);
        assert!(matches!(scalar_crb(&f([1.0, 0.0, 4.0]), 1), Err(Error::SingularModel { .. })));
    }

    #[test]
    fn sld_examples() {
        let rho = DensityMatrix::new(CMat::identity(2, 2) * C64::new(0.5, 0.0)).unwrap();
        let sx = crate::qcore::to_dynamic(&crate::qcore::pauli_x());
        let half = &sx * C64::new(0.5, 0.0);
        let m = StatisticalModel::new(rho, [half.clone(), half.clone(), half]).unwrap();
        let l = sld_set(&m);
        assert!(max_abs(&(l[0].entries() - &sx)) < 1e-14);
    }

    #[test]
    fn sld_pure_state_action() {
        let psi0 = Ket::random(4, &mut rng(8)).unwrap();
        let m = build_model_at_origin(&psi0, 0.0).unwrap();
        let (psi, dpsi) = encoded_pure_state(&psi0, FieldParams::zero()).unwrap();
        let l = sld_set(&m);
        for i in 0..3 {
            let overlap = psi.dotc(&dpsi[i]);
            let expect: CVec = (&dpsi[i] - &psi * overlap) * C64::new(2.0, 0.0);
            let got = l[i].entries() * &psi;
            assert!(max_abs(&(got - expect)) < 1e-8);
        }
    }

    #[test]
    fn sld_residual_full_rank() {
        let m = random_model(12, 0.5);
        let l = sld_set(&m);
        let rho = m.rho().entries();
        for i in 0..3 {
            let li = l[i].entries();
            let r = (li * rho + rho * li) * C64::new(0.5, 0.0) - &m.d_rho()[i];
            assert!(max_abs(&r) < 1e-10);
        }
    }

    #[test]
    fn qfi_matches_pure_overlap_formula() {
        let psi0 = Ket::random(4, &mut rng(13)).unwrap();
        let m = build_model_at_origin(&psi0, 0.0).unwrap();
        let (psi, d) = encoded_pure_state(&psi0, FieldParams::zero()).unwrap();
        let j = qfi_matrix(&m);
        for a in 0..3 {
            for b in 0..3 {
                let v = 4.0 * (d[a].dotc(&d[b]) - d[a].dotc(&psi) * psi.dotc(&d[b])).re;
                assert_abs_diff_eq!(j.entries[(a, b)], v, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn separable_and_bell_are_singular() {
        let plus = Ket::from_real(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let m = build_model_at_origin(&plus, 0.0).unwrap();
        assert!(matches!(sld_crb(&m), Err(Error::SingularModel { .. })));
        let bell = Ket::from_real(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        let m = build_model_at_origin(&bell, 0.0).unwrap();
        assert!(matches!(sld_crb(&m), Err(Error::SingularModel { .. })));
        assert!(classicality_check(&m).marginal_condition);
    }

    #[test]
    fn d_matrix_is_antisymmetric_and_nonzero_for_generic_states() {
        let psi = Ket::from_real(&[0.8, 0.42426407, 0.42426407, 0.0]).unwrap();
        let m = build_model_at_origin(&psi, 0.0).unwrap();
        let c = classicality_check(&m);
        let d = c.d_matrix.entries;
        assert!((d + d.transpose()).amax() < 1e-10);
        assert!(d.amax() > 1e-6);
        assert!(!c.marginal_condition);
        assert!(!c.asymptotically_classical(1e-6));
    }

    #[test]
    fn cfi_below_qfi_and_additive() {
        for seed in 0..5 {
            let m = random_model(100 + seed, 0.3);
            let u = random_unitary(4, &mut rng(seed));
            let meas = Measurement::projective(u).unwrap();
            let f = cfi_matrix(&outcome_distribution(&m, &meas).unwrap());
            let j = qfi_matrix(&m);
            assert!((j.entries - f.entries).symmetric_eigenvalues().min() > -1e-8);
            let two = kcopy_model(&m, 2).unwrap();
            let f2 = cfi_matrix(&outcome_distribution(&two, &meas.tensor(&meas)).unwrap());
            assert!((f2.entries - f.entries * 2.0).amax() < 1e-9);
        }
    }

    #[test]
    fn insensitive_outcome_leaves_bound_unchanged() {
        let d = OutcomeDistribution {
            probs: vec![0.2, 0.3, 0.1, 0.4],
            derivs: vec![[0.1, 0.2, -0.1], [-0.3, 0.1, 0.2], [0.2, -0.3, 0.3], [0.0, 0.0, -0.4]],
        };
        let base = scalar_crb(&cfi_matrix(&d), 1).unwrap();
        for extra in [0.0, 0.25] {
            let mut ext = d.clone();
            ext.probs.push(extra);
            ext.derivs.push([0.0; 3]);
            assert_eq!(scalar_crb(&cfi_matrix(&ext), 1).unwrap(), base);
        }
    }
}

//! Holevo Cramér-Rao bound.
//!
//! Three routes are provided and cross-checked against each other:
//!
//! * a closed form for real two-qubit pure states probed at the origin,
//! * a vector solver for pure states that eliminates the unbiasedness
//!   constraints and minimizes over the remaining free directions,
//! * a general solver for mixed states that expands each `Xᵢ` in an
//!   orthonormal Hermitian operator basis.
//!
//! Both numerical solvers reduce to the same affine problem: stacked vectors
//! `yᵢ = y⁰ᵢ + B sᵢ` with free real coefficients `sᵢ`, from which
//! `Z_ij = ⟨yᵢ|yⱼ⟩`. For three parameters the trace norm of the
//! antisymmetric matrix `√W Im Z √W` equals `√2` times its Frobenius norm,
//! which gives a cheap smoothing `√2·sqrt(‖·‖²_F + μ²)`.

use nalgebra::{DVector, Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::encoding::{build_model_at_origin, encoded_pure_state, FieldParams, StatisticalModel};
use crate::error::{Error, Result};
use crate::fisher::{d_matrix, qfi_matrix, sld_crb, FisherMatrix, FisherKind, Measurement};
use crate::qcore::{
    concurrence, hermitian_eigen, trace_norm3, CMat, CVec, Ket, C64, CONSTRUCT_TOL, I, ONE, ZERO,
};
use crate::search::local::{bfgs, LocalOptions};

/// Smoothing levels visited by the numerical solvers, each warm-started
/// from the previous optimum.
pub const MU_SCHEDULE: [f64; 7] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];
/// Guard for the denominators of the closed form.
pub const CLOSED_FORM_GUARD: f64 = 1e-9;
/// Guard for the denominators of the attainability construction.
pub const CONSTRUCTION_GUARD: f64 = 1e-6;

/// Real amplitudes of `r₁|00⟩ + r₂|01⟩ + r₃|10⟩ + r₄|11⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealTwoQubitState {
    r: [f64; 4],
}

impl RealTwoQubitState {
    pub fn new(r: [f64; 4]) -> Result<Self> {
        let n2: f64 = r.iter().map(|x| x * x).sum();
        if (n2 - 1.0).abs() > CONSTRUCT_TOL {
            return Err(Error::NotNormalized((n2 - 1.0).abs()));
        }
        Ok(Self { r })
    }

    /// Rescales any nonzero real vector.
    pub fn normalized(r: [f64; 4]) -> Result<Self> {
        let n: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(n > 1e-300) || !n.is_finite() {
            return Err(Error::NotNormalized(1.0));
        }
        Ok(Self { r: r.map(|x| x / n) })
    }

    /// Uniformly distributed on the unit sphere.
    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let r: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
            if let Ok(s) = Self::normalized(r) {
                return s;
            }
        }
    }

    pub fn r(&self) -> [f64; 4] {
        self.r
    }

    pub fn r14p(&self) -> f64 {
        self.r[0] + self.r[3]
    }

    pub fn r14m(&self) -> f64 {
        self.r[0] - self.r[3]
    }

    pub fn r23p(&self) -> f64 {
        self.r[1] + self.r[2]
    }

    pub fn r23m(&self) -> f64 {
        self.r[1] - self.r[2]
    }

    /// `1 − 2(r₁r₄ − r₂r₃)`, which lies in `[0, 2]`.
    pub fn delta(&self) -> f64 {
        1.0 - 2.0 * (self.r[0] * self.r[3] - self.r[1] * self.r[2])
    }

    pub fn concurrence(&self) -> f64 {
        concurrence(&self.r)
    }

    pub fn ket(&self) -> Ket {
        Ket::from_real(&self.r).expect("normalized by construction")
    }

    /// Exchanges the roles of `r₂` and `r₃`.
    pub fn swapped_middle(&self) -> Self {
        Self { r: [self.r[0], self.r[2], self.r[1], self.r[3]] }
    }
}

/// Symmetric positive semidefinite weight on the three estimation errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightMatrix(Matrix3<f64>);

impl WeightMatrix {
    pub fn new(w: Matrix3<f64>) -> Result<Self> {
        if (w - w.transpose()).amax() > CONSTRUCT_TOL * w.amax().max(1.0) {
            return Err(Error::NotHermitian((w - w.transpose()).amax()));
        }
        let w = (w + w.transpose()) * 0.5;
        let min = w.symmetric_eigenvalues().min();
        if min < -CONSTRUCT_TOL {
            return Err(Error::Unsupported(format!("weight eigenvalue {min:e} < 0")));
        }
        Ok(Self(w))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn diagonal(w: [f64; 3]) -> Result<Self> {
        Self::new(Matrix3::from_diagonal(&Vector3::from(w)))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Matrix3<f64> {
        let e = self.0.symmetric_eigen();
        let d = e.eigenvalues.map(|v| v.max(0.0).sqrt());
        e.eigenvectors * Matrix3::from_diagonal(&d) * e.eigenvectors.transpose()
    }
}

/// Optimal operators in whichever representation the solver used.
#[derive(Debug, Clone, PartialEq)]
pub enum XRepr {
    /// Columns `|xᵢ⟩ = Xᵢ|ψ⟩` for a pure model.
    Vectors(CMat),
    /// Hermitian `Xᵢ` for a general model.
    Operators([CMat; 3]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolevoSolution {
    pub value: f64,
    pub x: XRepr,
    /// Free coefficients left after eliminating the constraints.
    pub alpha: Vec<f64>,
    pub z_matrix: Matrix3<C64>,
    /// Largest deviation of the unbiasedness conditions from `δᵢⱼ`.
    pub constraint_residual: f64,
}

/// Closed-form bound for a real two-qubit state at the origin.
///
/// `r₁ + r₄` enters through its modulus: the global sign of a state is
/// unobservable, and the bound must agree for `r` and `−r`.
pub fn closed_form_hcrb(s: &RealTwoQubitState) -> Result<f64> {
    let (p, m, q) = (s.r14p(), s.r14m(), s.r23p());
    let den = p * p + m * m - 2.0 * (m * p).powi(2) + q * q * (1.0 - 2.0 * p * p);
    let mq = m * m + q * q;
    let worst = den.min(p.abs()).min(mq);
    if !(worst > CLOSED_FORM_GUARD) {
        return Err(Error::SingularModel { min_eigenvalue: worst });
    }
    Ok((1.0 / den + (1.0 / mq.sqrt() + 1.0 / p.abs()).powi(2)) / 8.0)
}

/// `|lᵢ⟩ = 2(|∂ᵢψ⟩ − ⟨ψ|∂ᵢψ⟩|ψ⟩)`, so that `Lᵢ|ψ⟩ = |lᵢ⟩`.
pub fn sld_vectors(psi: &CVec, dpsi: &[CVec; 3]) -> CMat {
    let mut l = CMat::zeros(psi.len(), 3);
    for i in 0..3 {
        let ov = psi.dotc(&dpsi[i]);
        l.set_column(i, &((&dpsi[i] - psi * ov) * C64::new(2.0, 0.0)));
    }
    l
}

/// `⟨lᵢ|lⱼ⟩`, whose real part is the QFI and imaginary part `D`.
fn gram(l: &CMat) -> Matrix3<C64> {
    let g = l.adjoint() * l;
    Matrix3::from_fn(|i, j| g[(i, j)])
}

/// Affine parametrization `Y(s) = Y⁰ + B S` of the candidate vectors with
/// the constraints already eliminated, plus the weight.
#[derive(Debug, Clone)]
pub(crate) struct HolevoProblem {
    m: usize,
    p: CMat,
    q0: CMat,
    z0: Matrix3<C64>,
    w: Matrix3<f64>,
    sw: Matrix3<f64>,
}

impl HolevoProblem {
    fn new(y0: &CMat, b: &CMat, w: &WeightMatrix) -> Self {
        let bh = b.adjoint();
        let z0 = y0.adjoint() * y0;
        Self {
            m: b.ncols(),
            p: &bh * b,
            q0: &bh * y0,
            z0: Matrix3::from_fn(|i, j| z0[(i, j)]),
            w: *w.matrix(),
            sw: w.sqrt(),
        }
    }

    fn n_vars(&self) -> usize {
        3 * self.m
    }

    fn coeffs(&self, s: &[f64]) -> CMat {
        CMat::from_fn(self.m, 3, |a, i| C64::new(s[i * self.m + a], 0.0))
    }

    /// `Z(s)` and the intermediate `U = q⁰ + P S`.
    fn z_and_u(&self, s: &[f64]) -> (Matrix3<C64>, CMat) {
        if self.m == 0 {
            return (self.z0, CMat::zeros(0, 3));
        }
        let sm = self.coeffs(s);
        let u = &self.q0 + &self.p * &sm;
        let lin = self.q0.adjoint() * &sm + sm.transpose() * &u;
        let mut z = self.z0 + Matrix3::from_fn(|i, j| lin[(i, j)]);
        z = (z + z.adjoint()) * C64::new(0.5, 0.0);
        (z, u)
    }

    fn z(&self, s: &[f64]) -> Matrix3<C64> {
        self.z_and_u(s).0
    }

    fn exact(&self, z: &Matrix3<C64>) -> f64 {
        let re = z.map(|c| c.re);
        let im = z.map(|c| c.im);
        (self.w * re).trace() + trace_norm3(&(self.sw * im * self.sw))
    }

    fn value(&self, s: &[f64]) -> f64 {
        self.exact(&self.z(s))
    }

    fn smoothed(&self, s: &[f64], mu: f64, grad: &mut [f64]) -> f64 {
        let (z, u) = self.z_and_u(s);
        let re = z.map(|c| c.re);
        let im = z.map(|c| c.im);
        let k = self.sw * im * self.sw;
        let norm = (k.norm_squared() + mu * mu).sqrt();
        let f = (self.w * re).trace() + std::f64::consts::SQRT_2 * norm;
        let c = std::f64::consts::SQRT_2 / norm;
        let g = self.w * im * self.w * c;
        // grad_k = 2 Re Σⱼ conj(Ωₖⱼ) uⱼ with Ω = W + i c W M W.
        for kk in 0..3 {
            for a in 0..self.m {
                let mut acc = 0.0;
                for j in 0..3 {
                    let om = C64::new(self.w[(kk, j)], g[(kk, j)]);
                    acc += (om.conj() * u[(a, j)]).re;
                }
                grad[kk * self.m + a] = 2.0 * acc;
            }
        }
        f
    }

    /// Warm-started smoothed minimizations, returning the final point and
    /// the exact objective there.
    fn minimize(&self, s0: &[f64]) -> (Vec<f64>, f64) {
        let opts = LocalOptions { max_iters: 3000, grad_tol: 1e-11, f_tol: 1e-16 };
        let mut s = s0.to_vec();
        if self.m == 0 {
            return (s, self.value(&[]));
        }
        for &mu in &MU_SCHEDULE {
            let r = bfgs(|x, g| self.smoothed(x, mu, g), &s, &opts);
            s = r.x;
        }
        let v = self.value(&s);
        (s, v)
    }
}

/// Vector solver for a pure model `|ψ⟩` with derivatives `|∂ᵢψ⟩`.
#[derive(Debug, Clone)]
pub struct PureHolevo {
    psi: CVec,
    l: CMat,
    x0: CMat,
    v: CMat,
    j: Matrix3<f64>,
    d: Matrix3<f64>,
    problem: HolevoProblem,
}

impl PureHolevo {
    pub fn new(psi: &CVec, dpsi: &[CVec; 3], w: &WeightMatrix) -> Result<Self> {
        let l = sld_vectors(psi, dpsi);
        let g = gram(&l);
        let j = g.map(|c| c.re);
        let d = g.map(|c| c.im);
        let jf = FisherMatrix { entries: j, kind: FisherKind::Quantum };
        let ji = jf.inverse()?;
        let ji_c = CMat::from_fn(3, 3, |a, b| C64::new(ji[(a, b)], 0.0));
        // x⁰ᵢ = Σⱼ (J⁻¹)ⱼᵢ lⱼ, i.e. X⁰ = L J⁻¹ with J⁻¹ symmetric.
        let x0 = &l * ji_c;
        let v = real_complement(&l);
        let problem = HolevoProblem::new(&x0, &v, w);
        Ok(Self { psi: psi.clone(), l, x0, v, j, d, problem })
    }

    /// Number of free directions per `xᵢ` (1 for real two-qubit states).
    pub fn free_dims(&self) -> usize {
        self.v.ncols()
    }

    pub fn qfi(&self) -> Matrix3<f64> {
        self.j
    }

    pub fn d_matrix(&self) -> Matrix3<f64> {
        self.d
    }

    pub fn sld_vectors(&self) -> &CMat {
        &self.l
    }

    /// `|xᵢ(α)⟩` as columns.
    pub fn vectors(&self, alpha: &[f64]) -> CMat {
        if self.v.ncols() == 0 {
            return self.x0.clone();
        }
        &self.x0 + &self.v * self.problem.coeffs(alpha)
    }

    pub fn z(&self, alpha: &[f64]) -> Matrix3<C64> {
        self.problem.z(alpha)
    }

    /// `Tr W Re Z(α) + ‖√W Im Z(α) √W‖₁`.
    pub fn objective(&self, alpha: &[f64]) -> f64 {
        self.problem.value(alpha)
    }

    /// `‖Im Z(α)‖₁`.
    pub fn imag_trace_norm(&self, alpha: &[f64]) -> f64 {
        trace_norm3(&self.z(alpha).map(|c| c.im))
    }

    pub fn solve(&self) -> HolevoSolution {
        let (alpha, value) = self.problem.minimize(&vec![0.0; self.problem.n_vars()]);
        let x = self.vectors(&alpha);
        let residual = vector_constraint_residual(&x, &self.l);
        HolevoSolution {
            value,
            z_matrix: self.z(&alpha),
            x: XRepr::Vectors(x),
            alpha,
            constraint_residual: residual,
        }
    }

    pub fn psi(&self) -> &CVec {
        &self.psi
    }
}

/// `max |Re⟨xᵢ|lⱼ⟩ − δᵢⱼ|`, equal to the residual of `Tr[Xᵢ∂ⱼρ] = δᵢⱼ`
/// for `Xᵢ = |xᵢ⟩⟨ψ| + |ψ⟩⟨xᵢ|` when every `|xᵢ⟩ ⟂ |ψ⟩`.
pub fn vector_constraint_residual(x: &CMat, l: &CMat) -> f64 {
    let c = x.adjoint() * l;
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((c[(i, j)].re - target).abs());
        }
    }
    worst
}

/// Orthonormal (in the real sense) basis of the directions in
/// `span_ℝ{lᵢ, i·lᵢ}` that are real-orthogonal to every `lᵢ`.
fn real_complement(l: &CMat) -> CMat {
    let d = l.nrows();
    let embed = |v: CVec| -> DVector<f64> {
        DVector::from_fn(2 * d, |r, _| if r < d { v[r].re } else { v[r - d].im })
    };
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let scale = (0..3).map(|i| l.column(i).norm()).fold(0.0f64, f64::max).max(1e-300);
    let push = |mut v: DVector<f64>, basis: &mut Vec<DVector<f64>>| -> bool {
        for _ in 0..2 {
            for b in basis.iter() {
                let c = b.dot(&v);
                v -= b * c;
            }
        }
        let n = v.norm();
        if n > 1e-9 * scale {
            basis.push(v / n);
            true
        } else {
            false
        }
    };
    for i in 0..3 {
        push(embed(l.column(i).into_owned()), &mut basis);
    }
    let base_len = basis.len();
    for i in 0..3 {
        push(embed(l.column(i) * I), &mut basis);
    }
    let extra = &basis[base_len..];
    CMat::from_fn(d, extra.len(), |r, c| C64::new(extra[c][r], extra[c][r + d]))
}

/// Pure-state bound with unit weight.
pub fn pure_vector_hcrb(psi: &Ket, dpsi: &[CVec; 3]) -> Result<HolevoSolution> {
    Ok(PureHolevo::new(psi.amplitudes(), dpsi, &WeightMatrix::identity())?.solve())
}

/// Pure-state solver for the encoded probe `ψ₀` at the origin.
pub fn pure_state_solver(psi0: &Ket, w: &WeightMatrix) -> Result<PureHolevo> {
    let (psi, d) = encoded_pure_state(psi0, FieldParams::zero())?;
    PureHolevo::new(&psi, &d, w)
}

/// `C^S + ‖J⁻¹DJ⁻¹‖₁` evaluated from the pure-state vectors.
pub fn sld_plus_incompatibility(psi0: &Ket) -> Result<f64> {
    let s = pure_state_solver(psi0, &WeightMatrix::identity())?;
    let ji = FisherMatrix { entries: s.j, kind: FisherKind::Quantum }.inverse()?;
    Ok(ji.trace() + trace_norm3(&(ji * s.d * ji)))
}

/// Eigenvalues (ascending) of the central-difference Hessian of
/// `‖Im Z(α)‖₁` for a real two-qubit state, with step 1e-4.
pub fn hessian_check(s: &RealTwoQubitState, alpha: [f64; 3]) -> Result<[f64; 3]> {
    let solver = pure_state_solver(&s.ket(), &WeightMatrix::identity())?;
    if solver.free_dims() != 1 {
        return Err(Error::DegenerateState("free direction is not one-dimensional"));
    }
    let h = 1e-4;
    let f = |a: [f64; 3]| solver.imag_trace_norm(&a);
    let shift = |di: [(usize, f64); 2]| {
        let mut a = alpha;
        for (i, v) in di {
            a[i] += v;
        }
        f(a)
    };
    let f0 = f(alpha);
    let mut hm = Matrix3::zeros();
    for i in 0..3 {
        hm[(i, i)] = (shift([(i, h), (i, 0.0)]) - 2.0 * f0 + shift([(i, -h), (i, 0.0)])) / (h * h);
        for j in 0..i {
            let v = (shift([(i, h), (j, h)]) - shift([(i, h), (j, -h)]) - shift([(i, -h), (j, h)])
                + shift([(i, -h), (j, -h)]))
                / (4.0 * h * h);
            hm[(i, j)] = v;
            hm[(j, i)] = v;
        }
    }
    let mut ev: Vec<f64> = hm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok([ev[0], ev[1], ev[2]])
}

/// Orthonormal Hermitian basis of `d×d` matrices: diagonal units, then
/// symmetric and antisymmetric pairs for each `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum HermElem {
    Diag(usize),
    Sym(usize, usize),
    Anti(usize, usize),
}

fn herm_basis(d: usize) -> Vec<HermElem> {
    let mut out: Vec<HermElem> = (0..d).map(HermElem::Diag).collect();
    for a in 0..d {
        for b in a + 1..d {
            out.push(HermElem::Sym(a, b));
            out.push(HermElem::Anti(a, b));
        }
    }
    out
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

impl HermElem {
    /// `Tr[G m]` for Hermitian `m`.
    fn trace_with(&self, m: &CMat) -> f64 {
        match *self {
            HermElem::Diag(a) => m[(a, a)].re,
            HermElem::Sym(a, b) => std::f64::consts::SQRT_2 * m[(a, b)].re,
            HermElem::Anti(a, b) => -std::f64::consts::SQRT_2 * m[(a, b)].im,
        }
    }

    /// Adds `c·G` to `target`.
    fn add_to(&self, target: &mut CMat, c: f64) {
        match *self {
            HermElem::Diag(a) => target[(a, a)] += c,
            HermElem::Sym(a, b) => {
                target[(a, b)] += c * FRAC_1_SQRT_2;
                target[(b, a)] += c * FRAC_1_SQRT_2;
            }
            HermElem::Anti(a, b) => {
                target[(a, b)] += C64::new(0.0, -c * FRAC_1_SQRT_2);
                target[(b, a)] += C64::new(0.0, c * FRAC_1_SQRT_2);
            }
        }
    }

    /// Column-major `vec(G·m)`.
    fn vec_left_product(&self, m: &CMat, out: &mut [C64]) {
        let d = m.nrows();
        out.iter_mut().for_each(|z| *z = ZERO);
        let mut put = |row: usize, src: usize, coeff: C64| {
            for c in 0..d {
                out[c * d + row] += coeff * m[(src, c)];
            }
        };
        match *self {
            HermElem::Diag(a) => put(a, a, ONE),
            HermElem::Sym(a, b) => {
                put(a, b, C64::new(FRAC_1_SQRT_2, 0.0));
                put(b, a, C64::new(FRAC_1_SQRT_2, 0.0));
            }
            HermElem::Anti(a, b) => {
                put(a, b, C64::new(0.0, -FRAC_1_SQRT_2));
                put(b, a, C64::new(0.0, FRAC_1_SQRT_2));
            }
        }
    }
}

/// Settings for [`mixed_hcrb`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedOptions {
    /// Independent starts; the first is the minimum-norm feasible point.
    pub restarts: usize,
    pub seed: u64,
    /// Largest tolerated relative spread between restart values.
    pub agreement_tol: f64,
}

impl Default for MixedOptions {
    fn default() -> Self {
        Self { restarts: 5, seed: 0, agreement_tol: 1e-5 }
    }
}

/// Mixed-state problem with the constraints eliminated.
struct MixedSetup {
    basis: Vec<HermElem>,
    t0: nalgebra::DMatrix<f64>,
    null: nalgebra::DMatrix<f64>,
    problem: HolevoProblem,
}

fn mixed_setup(model: &StatisticalModel, w: &WeightMatrix) -> Result<MixedSetup> {
    let q = qfi_matrix(model);
    q.inverse()?;
    let d = model.dim();
    let basis = herm_basis(d);
    let n = basis.len();
    let c = nalgebra::DMatrix::<f64>::from_fn(3, n, |j, a| basis[a].trace_with(&model.d_rho()[j]));
    let svd = c.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let sv = svd.singular_values;
    if sv.min() <= 1e-12 * sv.max().max(1.0) {
        return Err(Error::SingularModel { min_eigenvalue: sv.min() });
    }
    // Particular solutions t⁰ᵢ = C⁺eᵢ.
    let sinv = nalgebra::Matrix3::from_diagonal(&Vector3::new(1.0 / sv[0], 1.0 / sv[1], 1.0 / sv[2]));
    let pinv = vt.transpose() * nalgebra::DMatrix::from_fn(3, 3, |a, b| sinv[(a, b)]) * u.transpose();
    let t0 = pinv;
    // Orthonormal completion of the row space of C.
    let mut rows: Vec<DVector<f64>> = (0..3).map(|k| vt.row(k).transpose().into_owned()).collect();
    let mut null_cols: Vec<DVector<f64>> = Vec::with_capacity(n - 3);
    for e in 0..n {
        let mut v = DVector::<f64>::zeros(n);
        v[e] = 1.0;
        for _ in 0..2 {
            for r in rows.iter().chain(null_cols.iter()) {
                let cf = r.dot(&v);
                v -= r * cf;
            }
        }
        let nv = v.norm();
        if nv > 1e-8 {
            null_cols.push(v / nv);
        }
        if null_cols.len() == n - 3 {
            break;
        }
    }
    rows.truncate(3);
    let null = nalgebra::DMatrix::from_columns(&null_cols);
    // g_a = vec(G_a √ρ).
    let (vals, vecs) = hermitian_eigen(model.rho().entries());
    let sq_d = CVec::from_iterator(d, vals.iter().map(|&v| C64::new(v.max(0.0).sqrt(), 0.0)));
    let sqrt_rho = &vecs * CMat::from_diagonal(&sq_d) * vecs.adjoint();
    let mut g = CMat::zeros(d * d, n);
    let mut buf = vec![ZERO; d * d];
    for (a, el) in basis.iter().enumerate() {
        el.vec_left_product(&sqrt_rho, &mut buf);
        for (r, z) in buf.iter().enumerate() {
            g[(r, a)] = *z;
        }
    }
    let to_c = |m: &nalgebra::DMatrix<f64>| m.map(|x| C64::new(x, 0.0));
    let y0 = &g * to_c(&t0);
    let b = &g * to_c(&null);
    let problem = HolevoProblem::new(&y0, &b, w);
    Ok(MixedSetup { basis, t0, null, problem })
}

impl MixedSetup {
    fn operators(&self, s: &[f64], d: usize) -> [CMat; 3] {
        let m = self.null.ncols();
        std::array::from_fn(|i| {
            let si = DVector::from_column_slice(&s[i * m..(i + 1) * m]);
            let t = self.t0.column(i) + &self.null * si;
            let mut x = CMat::zeros(d, d);
            for (a, el) in self.basis.iter().enumerate() {
                el.add_to(&mut x, t[a]);
            }
            x
        })
    }
}

/// Residual of `Tr[Xᵢ ∂ⱼρ] = δᵢⱼ`.
pub fn operator_constraint_residual(model: &StatisticalModel, x: &[CMat; 3]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let v = (&x[i] * &model.d_rho()[j]).trace().re;
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

/// `Z_ij = Tr[ρ Xᵢ Xⱼ]`.
pub fn z_of_operators(model: &StatisticalModel, x: &[CMat; 3]) -> Matrix3<C64> {
    let rho = model.rho().entries();
    Matrix3::from_fn(|i, j| (rho * &x[i] * &x[j]).trace())
}

/// Holevo bound of a general model, `min Tr[W Re Z] + ‖√W Im Z √W‖₁`.
///
/// Runs `opts.restarts` independent descents and reports
/// [`Error::NonConvergence`] when their values spread by more than
/// `opts.agreement_tol` relative to the best.
pub fn mixed_hcrb(
    model: &StatisticalModel,
    w: &WeightMatrix,
    opts: &MixedOptions,
) -> Result<HolevoSolution> {
    let setup = mixed_setup(model, w)?;
    let nv = setup.problem.n_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut worst_v = f64::NEG_INFINITY;
    for k in 0..opts.restarts.max(1) {
        let start: Vec<f64> = if k == 0 {
            vec![0.0; nv]
        } else {
            (0..nv).map(|_| StandardNormal.sample(&mut rng)).collect()
        };
        let (s, v) = setup.problem.minimize(&start);
        worst_v = worst_v.max(v);
        if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
            best = Some((s, v));
        }
    }
    let (s, value) = best.expect("at least one restart");
    let spread = (worst_v - value) / value.abs().max(1e-300);
    if spread > opts.agreement_tol {
        return Err(Error::NonConvergence { spread });
    }
    let x = setup.operators(&s, model.dim());
    Ok(HolevoSolution {
        value,
        z_matrix: setup.problem.z(&s),
        constraint_residual: operator_constraint_residual(model, &x),
        x: XRepr::Operators(x),
        alpha: s,
    })
}

/// `Tr[WJ⁻¹] + ‖√W J⁻¹DJ⁻¹ √W‖₁`, the candidate expression for a
/// weighted bound.
pub fn weighted_formula(model: &StatisticalModel, w: &WeightMatrix) -> Result<f64> {
    let ji = qfi_matrix(model).inverse()?;
    let d = d_matrix(model).entries;
    let sw = w.sqrt();
    Ok((w.matrix() * ji).trace() + trace_norm3(&(sw * ji * d * ji * sw)))
}

/// `C^S` for a real two-qubit state at the origin without noise.
pub fn sld_bound_real(s: &RealTwoQubitState) -> Result<f64> {
    sld_crb(&build_model_at_origin(&s.ket(), 0.0)?)
}

/// Explicit optimal vectors for a real two-qubit state whose Gram matrix
/// is real, returned as the columns of a 4×3 matrix.
///
/// Starting from the minimum-norm solution `x⁰ᵢ = Σⱼ(J⁻¹)ⱼᵢ|lⱼ⟩`, whose
/// Gram matrix has imaginary part `N = J⁻¹DJ⁻¹`, each vector is shifted
/// along a unit `|w⟩` orthogonal to `|ψ⟩` and every `|lᵢ⟩`:
/// `|xᵢ⟩ = |x⁰ᵢ⟩ + βᵢ|w⟩`. With `β = a + ib` the imaginary part gains
/// `a bᵀ − b aᵀ`, which cancels `N` when `a × b` is the axial vector of
/// `−N`, and the real trace grows by `|a|² + |b|² = ‖N‖₁`.
pub fn attainability_construction(s: &RealTwoQubitState) -> Result<CMat> {
    guard_construction(s)?;
    let psi0 = s.ket();
    let (psi, dpsi) = encoded_pure_state(&psi0, FieldParams::zero())?;
    let solver = PureHolevo::new(&psi, &dpsi, &WeightMatrix::identity())?;
    let ji = FisherMatrix { entries: solver.j, kind: FisherKind::Quantum }.inverse()?;
    let n = -(ji * solver.d * ji);
    let c = Vector3::new(n[(1, 2)], n[(2, 0)], n[(0, 1)]);
    let w = orthogonal_direction(&psi, solver.sld_vectors())?;
    let nc = c.norm();
    let beta: Vec<C64> = if nc < 1e-300 {
        vec![ZERO; 3]
    } else {
        let e = c / nc;
        let t = if e[0].abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let a = e.cross(&t).normalize();
        let b = e.cross(&a);
        let (a, b) = (a * nc.sqrt(), b * nc.sqrt());
        (0..3).map(|i| C64::new(a[i], b[i])).collect()
    };
    let mut x = solver.x0.clone();
    for i in 0..3 {
        let col = x.column(i) + &w * beta[i];
        x.set_column(i, &col);
    }
    Ok(x)
}

fn guard_construction(s: &RealTwoQubitState) -> Result<()> {
    let r = s.r();
    if r[3].abs() <= CONSTRUCTION_GUARD {
        return Err(Error::DegenerateState("r4 vanishes"));
    }
    if s.r14p().abs() <= CONSTRUCTION_GUARD {
        return Err(Error::DegenerateState("r1 + r4 vanishes"));
    }
    if s.r23p().abs() <= CONSTRUCTION_GUARD {
        return Err(Error::DegenerateState("r2 + r3 vanishes"));
    }
    match closed_form_hcrb(s) {
        Ok(_) => Ok(()),
        Err(_) => Err(Error::DegenerateState("model is singular")),
    }
}

/// Unit vector orthogonal to `|ψ⟩` and to every column of `l`.
fn orthogonal_direction(psi: &CVec, l: &CMat) -> Result<CVec> {
    let d = psi.len();
    let mut span: Vec<CVec> = Vec::new();
    let push = |mut v: CVec, span: &mut Vec<CVec>| {
        for _ in 0..2 {
            for b in span.iter() {
                let c = b.dotc(&v);
                v -= b * c;
            }
        }
        let n = v.norm();
        if n > 1e-9 {
            span.push(v.unscale(n));
            true
        } else {
            false
        }
    };
    push(psi.clone(), &mut span);
    for i in 0..3 {
        push(l.column(i).into_owned(), &mut span);
    }
    for e in 0..d {
        let mut v = CVec::zeros(d);
        v[e] = ONE;
        if push(v, &mut span) {
            return Ok(span.pop().expect("just pushed"));
        }
    }
    Err(Error::DegenerateState("no direction orthogonal to the state and its derivatives"))
}

/// Hermitian operators `Xᵢ = |xᵢ⟩⟨ψ| + |ψ⟩⟨xᵢ|` for vectors orthogonal to
/// `|ψ⟩`.
pub fn operators_from_vectors(psi: &CVec, x: &CMat) -> [CMat; 3] {
    std::array::from_fn(|i| {
        let xi = x.column(i);
        &xi * psi.adjoint() + psi * xi.adjoint()
    })
}

/// Projective measurement attaining the bound for vectors whose mutual
/// inner products, and overlaps with `|ψ⟩`, are all real.
///
/// The set `{ψ, x₁, x₂, x₃}` is orthonormalized with real coefficients,
/// completed to a basis of the full space, and rotated by a fixed generic
/// real orthogonal matrix so that no basis vector is orthogonal to `|ψ⟩`.
pub fn attaining_measurement(psi: &CVec, x: &CMat, seed: u64) -> Result<Measurement> {
    let d = psi.len();
    let mut frame: Vec<CVec> = Vec::new();
    let push = |mut v: CVec, frame: &mut Vec<CVec>| {
        for _ in 0..2 {
            for b in frame.iter() {
                let c = b.dotc(&v);
                v -= b * c;
            }
        }
        let n = v.norm();
        if n > 1e-9 {
            frame.push(v.unscale(n));
        }
    };
    push(psi.clone(), &mut frame);
    for i in 0..x.ncols() {
        push(x.column(i).into_owned(), &mut frame);
    }
    for e in 0..d {
        if frame.len() == d {
            break;
        }
        let mut v = CVec::zeros(d);
        v[e] = ONE;
        push(v, &mut frame);
    }
    let f = CMat::from_columns(&frame);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let g = nalgebra::DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
        let o = g.qr().q();
        let u = &f * o.map(|v| C64::new(v, 0.0));
        let min_overlap = (0..d).map(|k| u.column(k).dotc(psi).norm()).fold(f64::INFINITY, f64::min);
        if min_overlap > 1e-3 {
            return Measurement::projective(u);
        }
    }
    Err(Error::DegenerateState("no generic rotation found"))
}

/// Entries of the explicit back-substitution family for the optimal
/// vectors of a real state, with the free entries fixed to 0 or 1 and the
/// single remaining real entry `x₂₂ʳ` left as an argument.
///
/// Every member satisfies `Re⟨xᵢ| −Hⱼ|ψ⟩⟩ = δᵢⱼ` and has a real Gram
/// matrix. No member is orthogonal to `|ψ⟩`, and the norm condition that
/// would fix `x₂₂ʳ` has a negative square-root argument for most states, so
/// [`attainability_construction`] is used for the optimal vectors.
pub fn printed_construction_family(s: &RealTwoQubitState, x22r: f64) -> Result<CMat> {
    guard_construction(s)?;
    let [r1, _r2, _r3, r4] = s.r();
    let (p, m, q) = (s.r14p(), s.r14m(), s.r23p());
    let (x12i, x12r, x13i, x21r, x22i, x23i, x31r, x32r) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let (x33i, x31i, x32i) = (1.0, 1.0, 1.0);
    let x21i = 1.0 / q;
    let x11i = -(2.0 * r4) / p;
    let num = q
        * r4
        * (x11i * x31r
            + ((q * x11i - m * (x12i + x13i)) * (1.0 + 2.0 * r1 * x31r)) / (2.0 * q * r4)
            - (q * x13i * (1.0 + 2.0 * p * x31r)) / (2.0 * r4 * p)
            - x12r * x32i
            + x12i * x32r
            - x13i * x32r
            + x33i / p
            + x12r * x33i);
    let den = -r1 * r1 * (x32i + x33i) + q * (r4 * x31i - q * x33i) + r1 * (q * x31i + r4 * (x32i + x33i));
    if den.abs() <= CONSTRUCTION_GUARD {
        return Err(Error::DegenerateState("x11 denominator vanishes"));
    }
    let x11r = num / den;
    let x13r = -(1.0 / p) - (q * x11r) / r4 - x12r;
    let x14r = (r1 * x11r) / r4;
    let x14i = x11i - (m * x12i) / q - (m * x13i) / q;
    let x33r = -(q / (2.0 * r4 * p)) - (q * x31r) / r4 - x32r;
    let x34r = 1.0 / (2.0 * r4) + (r1 * x31r) / r4;
    let x34i = x31i - (m * x32i) / q - (m * x33i) / q;
    let x24i = -(1.0 / q) + x21i - (m * x22i) / q - (m * x23i) / q;
    let x24r = (r1 * x21r) / r4;
    let x23r = -q * x21r / r4 - x22r;
    let c = C64::new;
    Ok(CMat::from_row_slice(
        4,
        3,
        &[
            c(x11r, x11i),
            c(x21r, x21i),
            c(x31r, x31i),
            c(x12r, x12i),
            c(x22r, x22i),
            c(x32r, x32i),
            c(x13r, x13i),
            c(x23r, x23i),
            c(x33r, x33i),
            c(x14r, x14i),
            c(x24r, x24i),
            c(x34r, x34i),
        ],
    ))
}

/// One sampled point of the entanglement-versus-bound relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// `|r₁r₄ − r₂r₃|`, half the concurrence.
    pub half_concurrence: f64,
    pub sld: f64,
    pub holevo: f64,
    pub state: RealTwoQubitState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementCurve {
    /// Points sorted by concurrence; singular samples are skipped.
    pub points: Vec<CurvePoint>,
    pub argmin_holevo: Option<CurvePoint>,
    pub argmin_sld: Option<CurvePoint>,
}

pub fn entanglement_curve(samples: &[RealTwoQubitState]) -> EntanglementCurve {
    let mut points: Vec<CurvePoint> = samples
        .iter()
        .filter_map(|s| {
            let holevo = closed_form_hcrb(s).ok()?;
            let sld = sld_bound_real(s).ok()?;
            Some(CurvePoint { half_concurrence: s.concurrence() / 2.0, sld, holevo, state: *s })
        })
        .collect();
    points.sort_by(|a, b| a.half_concurrence.total_cmp(&b.half_concurrence));
    let pick = |key: fn(&CurvePoint) -> f64| {
        points.iter().copied().min_by(|a, b| key(a).total_cmp(&key(b)))
    };
    let argmin_holevo = pick(|p| p.holevo);
    let argmin_sld = pick(|p| p.sld);
    EntanglementCurve { points, argmin_holevo, argmin_sld }
}

//! Dense complex linear algebra and quantum primitives for registers of one
//! to six qubits.
//!
//! Qubit 0 is the most significant bit of a basis index, so a Kronecker
//! product `a ⊗ b` places `a` on the leading qubits.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Largest register handled anywhere in the crate.
pub const MAX_QUBITS: usize = 6;
/// Tolerance applied when validating constructor inputs.
pub const CONSTRUCT_TOL: f64 = 1e-12;
/// Tolerance applied when verifying computed outputs.
pub const VERIFY_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Number of qubits behind a dimension, or an error if `dim` is not a
/// supported power of two.
pub fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() || dim > 1 << MAX_QUBITS {
        return Err(Error::BadDimension { dim });
    }
    Ok(dim.trailing_zeros() as usize)
}

pub fn pauli_x() -> Matrix2<C64> {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Matrix2<C64> {
    Matrix2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Matrix2<C64> {
    Matrix2::new(ONE, ZERO, ZERO, -ONE)
}

/// The three Pauli matrices in x, y, z order.
pub fn paulis() -> [Matrix2<C64>; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

/// Copies a fixed 2×2 matrix into a dynamic one.
pub fn to_dynamic(m: &Matrix2<C64>) -> CMat {
    CMat::from_fn(2, 2, |r, c| m[(r, c)])
}

/// Largest entrywise deviation of `m` from its conjugate transpose.
pub fn hermiticity_error(m: &CMat) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// Largest entry modulus of a complex matrix or vector.
pub fn max_abs<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::RawStorage<C64, R, C>>(
    m: &nalgebra::Matrix<C64, R, C, S>,
) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Projects onto the Hermitian part, `(m + m†) / 2`.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Largest entrywise deviation of `u†u` from the identity.
pub fn unitarity_error(u: &CMat) -> f64 {
    let p = u.adjoint() * u;
    let n = p.nrows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { ONE } else { ZERO };
            worst = worst.max((p[(r, c)] - target).norm());
        }
    }
    worst
}

/// Pure state of a register of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amplitudes: CVec,
}

impl Ket {
    /// Wraps amplitudes that are already normalized.
    pub fn new(amplitudes: CVec) -> Result<Self> {
        qubits_for_dim(amplitudes.len())?;
        let dev = (amplitudes.norm_squared() - 1.0).abs();
        if dev > CONSTRUCT_TOL {
            return Err(Error::NotNormalized(dev));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: CVec) -> Result<Self> {
        qubits_for_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::NotNormalized(1.0));
        }
        Ok(Self { amplitudes: amplitudes.unscale(norm) })
    }

    pub fn from_real(r: &[f64]) -> Result<Self> {
        Self::normalized(CVec::from_iterator(r.len(), r.iter().map(|&x| C64::new(x, 0.0))))
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::DimensionTooLarge { n: n_qubits, max: MAX_QUBITS });
        }
        let dim = 1 << n_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: index });
        }
        let mut v = CVec::zeros(dim);
        v[index] = ONE;
        Ok(Self { amplitudes: v })
    }

    /// Haar-random state.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        let v = CVec::from_fn(dim, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        Self::normalized(v)
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> CMat {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix { entries: hermitize(&self.projector()) }
    }

    pub fn tensor(&self, other: &Ket) -> Result<Ket> {
        let v = self.amplitudes.kronecker(&other.amplitudes);
        qubits_for_dim(v.len())?;
        Ok(Ket { amplitudes: v })
    }
}

/// Positive semidefinite unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMat,
}

impl DensityMatrix {
    pub fn new(entries: CMat) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotDensityMatrix("not square".into()));
        }
        qubits_for_dim(entries.nrows())?;
        let herm = hermiticity_error(&entries);
        if herm > CONSTRUCT_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = entries.trace();
        if (tr - ONE).norm() > CONSTRUCT_TOL {
            return Err(Error::NotDensityMatrix(format!("trace {tr}")));
        }
        let entries = hermitize(&entries);
        let min = entries.clone().symmetric_eigenvalues().min();
        if min < -VERIFY_TOL {
            return Err(Error::NotDensityMatrix(format!("eigenvalue {min:e}")));
        }
        Ok(Self { entries })
    }

    /// Internal constructor for matrices produced by trusted arithmetic.
    pub(crate) fn from_trusted(entries: CMat) -> Self {
        Self { entries: hermitize(&entries) }
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let m = tensor_product(&self.entries, &other.entries);
        qubits_for_dim(m.nrows())?;
        Ok(DensityMatrix { entries: m })
    }

    /// Reduced state of a single qubit.
    pub fn reduced_qubit(&self, qubit: usize) -> Result<Matrix2<C64>> {
        let n = self.n_qubits();
        if qubit >= n {
            return Err(Error::DimensionMismatch { expected: n, found: qubit });
        }
        let bit = 1usize << (n - 1 - qubit);
        let mut out = Matrix2::zeros();
        for r in 0..self.dim() {
            if r & bit != 0 {
                continue;
            }
            let r1 = r | bit;
            out[(0, 0)] += self.entries[(r, r)];
            out[(0, 1)] += self.entries[(r, r1)];
            out[(1, 0)] += self.entries[(r1, r)];
            out[(1, 1)] += self.entries[(r1, r1)];
        }
        Ok(out)
    }
}

/// Matrix equal to its own conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    entries: CMat,
}

impl HermitianOperator {
    pub fn new(entries: CMat) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotHermitian(f64::INFINITY));
        }
        let scale = entries.iter().fold(1.0f64, |a, z| a.max(z.norm()));
        let herm = hermiticity_error(&entries);
        if herm > CONSTRUCT_TOL * scale {
            return Err(Error::NotHermitian(herm));
        }
        Ok(Self { entries: hermitize(&entries) })
    }

    pub(crate) fn from_trusted(entries: CMat) -> Self {
        Self { entries: hermitize(&entries) }
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Real eigenvalues and the unitary of column eigenvectors.
    pub fn eigen(&self) -> (DVector<f64>, CMat) {
        hermitian_eigen(&self.entries)
    }
}

/// Spectral decomposition of a matrix assumed Hermitian.
pub fn hermitian_eigen(m: &CMat) -> (DVector<f64>, CMat) {
    let e = m.clone().symmetric_eigen();
    (e.eigenvalues, e.eigenvectors)
}

/// A tensor product of Pauli matrices stored as bit masks.
///
/// Column `c` of the dense matrix has a single nonzero entry in row
/// `c ^ x_mask`, with value `i^{n_y} (-1)^{popcount(c & z_mask)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x_mask: usize,
    z_mask: usize,
    n_y: u32,
    index: usize,
}

impl PauliString {
    /// Builds the string whose base-4 digits (I=0, X=1, Y=2, Z=3, qubit 0
    /// most significant) spell `index`.
    pub fn from_index(n_qubits: usize, index: usize) -> Self {
        let mut x_mask = 0;
        let mut z_mask = 0;
        let mut n_y = 0;
        for q in 0..n_qubits {
            let digit = (index >> (2 * (n_qubits - 1 - q))) & 3;
            let bit = 1usize << (n_qubits - 1 - q);
            match digit {
                1 => x_mask |= bit,
                2 => {
                    x_mask |= bit;
                    z_mask |= bit;
                    n_y += 1;
                }
                3 => z_mask |= bit,
                _ => {}
            }
        }
        Self { n_qubits, x_mask, z_mask, n_y, index }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Base-4 digit of each qubit.
    pub fn digits(&self) -> Vec<u8> {
        (0..self.n_qubits)
            .map(|q| ((self.index >> (2 * (self.n_qubits - 1 - q))) & 3) as u8)
            .collect()
    }

    /// Base-4 label such as `"03"` for `I ⊗ Z`.
    pub fn label(&self) -> String {
        self.digits().iter().map(|d| char::from(b'0' + d)).collect()
    }

    fn phase(&self) -> C64 {
        match self.n_y % 4 {
            0 => ONE,
            1 => I,
            2 => -ONE,
            _ => -I,
        }
    }

    /// Adds `coeff · P` to a dense matrix of matching dimension.
    pub fn add_to(&self, target: &mut CMat, coeff: f64) {
        let base = self.phase() * coeff;
        for c in 0..(1usize << self.n_qubits) {
            let sign = if (c & self.z_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            target[(c ^ self.x_mask, c)] += base * sign;
        }
    }

    /// `Tr[B P]` in `O(dim)` operations.
    pub fn trace_with(&self, b: &CMat) -> C64 {
        let ph = self.phase();
        (0..(1usize << self.n_qubits))
            .map(|c| {
                let sign = if (c & self.z_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                b[(c, c ^ self.x_mask)] * sign
            })
            .sum::<C64>()
            * ph
    }

    pub fn to_matrix(&self) -> CMat {
        let d = 1 << self.n_qubits;
        let mut m = CMat::zeros(d, d);
        self.add_to(&mut m, 1.0);
        m
    }
}

/// All Pauli tensor products on `n` qubits except the identity, ordered by
/// base-4 index.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    n_qubits: usize,
    elements: Vec<PauliString>,
}

impl GeneratorSet {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::DimensionTooLarge { n: n_qubits, max: MAX_QUBITS });
        }
        let elements = (1..1usize << (2 * n_qubits))
            .map(|i| PauliString::from_index(n_qubits, i))
            .collect();
        Ok(Self { n_qubits, elements })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[PauliString] {
        &self.elements
    }

    pub fn labels(&self) -> Vec<String> {
        self.elements.iter().map(PauliString::label).collect()
    }

    /// Dense matrix of element `i`.
    pub fn matrix(&self, i: usize) -> CMat {
        self.elements[i].to_matrix()
    }

    /// `Σ cᵢ λᵢ` as a dense Hermitian matrix.
    pub fn combine(&self, coeffs: &[f64]) -> Result<CMat> {
        if coeffs.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: coeffs.len() });
        }
        let d = 1 << self.n_qubits;
        let mut m = CMat::zeros(d, d);
        for (p, &c) in self.elements.iter().zip(coeffs) {
            if c != 0.0 {
                p.add_to(&mut m, c);
            }
        }
        Ok(m)
    }
}

/// Convenience constructor mirroring [`GeneratorSet::new`].
pub fn generator_set(n_qubits: usize) -> Result<GeneratorSet> {
    GeneratorSet::new(n_qubits)
}

/// Kronecker product, first factor on the most significant qubits.
pub fn tensor_product(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `exp(i·scale·H)` computed from the spectrum of `H`.
pub fn herm_exp(h: &HermitianOperator, scale: f64) -> CMat {
    exp_i_hermitian(h.entries(), scale)
}

/// Same as [`herm_exp`] for a matrix the caller knows to be Hermitian.
pub fn exp_i_hermitian(h: &CMat, scale: f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(h);
    let mut scaled = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        let ph = C64::from_polar(1.0, scale * l);
        for r in 0..scaled.nrows() {
            scaled[(r, j)] *= ph;
        }
    }
    scaled * vecs.adjoint()
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.sum()
}

/// Sum of singular values of a real 3×3 matrix.
pub fn trace_norm3(m: &Matrix3<f64>) -> f64 {
    m.svd(false, false).singular_values.sum()
}

/// `2|r₁r₄ − r₂r₃|` for real amplitudes of a two-qubit pure state.
pub fn concurrence(r: &[f64; 4]) -> f64 {
    2.0 * (r[0] * r[3] - r[1] * r[2]).abs()
}

/// Applies a single-qubit operator from the left on `qubit` of an
/// `n`-qubit register: returns `(op on qubit) · m`. Works for any number of
/// columns, so kets are handled as one-column matrices.
pub fn apply_local_left(op: &Matrix2<C64>, qubit: usize, n: usize, m: &CMat) -> CMat {
    let bit = 1usize << (n - 1 - qubit);
    let mut out = m.clone();
    for r0 in 0..m.nrows() {
        if r0 & bit != 0 {
            continue;
        }
        let r1 = r0 | bit;
        for c in 0..m.ncols() {
            let a = m[(r0, c)];
            let b = m[(r1, c)];
            out[(r0, c)] = op[(0, 0)] * a + op[(0, 1)] * b;
            out[(r1, c)] = op[(1, 0)] * a + op[(1, 1)] * b;
        }
    }
    out
}

/// Returns `m · (op on qubit)†`.
pub fn apply_local_right_adjoint(op: &Matrix2<C64>, qubit: usize, n: usize, m: &CMat) -> CMat {
    let bit = 1usize << (n - 1 - qubit);
    let mut out = m.clone();
    for c0 in 0..m.ncols() {
        if c0 & bit != 0 {
            continue;
        }
        let c1 = c0 | bit;
        for r in 0..m.nrows() {
            let a = m[(r, c0)];
            let b = m[(r, c1)];
            out[(r, c0)] = a * op[(0, 0)].conj() + b * op[(0, 1)].conj();
            out[(r, c1)] = a * op[(1, 0)].conj() + b * op[(1, 1)].conj();
        }
    }
    out
}

/// Dense matrix of a single-qubit operator embedded on `qubit`.
pub fn embed_local(op: &Matrix2<C64>, qubit: usize, n: usize) -> CMat {
    apply_local_left(op, qubit, n, &CMat::identity(1 << n, 1 << n))
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre
/// matrix with the phase correction on the diagonal of R.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    q
}

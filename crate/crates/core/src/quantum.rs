//! Complex linear algebra for three-qubit pure and mixed states.
//!
//! Basis convention shared by every module: `|q_A q_B q_C>` is index
//! `4*q_A + 2*q_B + q_C`, so qubit A is the most significant bit.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dimension of the three-qubit Hilbert space.
pub const DIM: usize = 8;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A dense, row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimension(format!("{rows}x{cols} matrix")));
        }
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        if self.cols != ket.dim() {
            return Err(Error::Shape(format!(
                "cannot apply {}x{} matrix to a ket of dimension {}",
                self.rows,
                self.cols,
                ket.dim()
            )));
        }
        let amps = (0..self.rows)
            .map(|r| {
                (0..self.cols)
                    .map(|c| self[(r, c)] * ket.amplitudes[c])
                    .sum()
            })
            .collect();
        Ok(Ket { amplitudes: amps })
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let rows = self.rows * rhs.rows;
        let cols = self.cols * rhs.cols;
        let mut out = Self::zeros(rows, cols);
        for ar in 0..self.rows {
            for ac in 0..self.cols {
                let a = self[(ar, ac)];
                for br in 0..rhs.rows {
                    for bc in 0..rhs.cols {
                        out[(ar * rhs.rows + br, ac * rhs.cols + bc)] = a * rhs[(br, bc)];
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest elementwise modulus of `self - rhs`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> Result<C64> {
        if !self.is_square() {
            return Err(Error::Shape(format!(
                "determinant of a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut a = self.entries.clone();
        let mut det = ONE;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
                .unwrap_or(col);
            if a[pivot * n + col] == ZERO {
                return Ok(ZERO);
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(pivot * n + k, col * n + k);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in col + 1..n {
                let factor = a[r * n + col] / p;
                for k in col..n {
                    let v = a[col * n + k];
                    a[r * n + k] -= factor * v;
                }
            }
        }
        Ok(det)
    }

    /// Eigenvalues of a Hermitian matrix (only the lower triangle is read), ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::Shape(format!(
                "eigenvalues of a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let m = DMatrix::from_fn(self.rows, self.cols, |r, c| self[(r, c)]);
        let mut evs: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        evs.sort_by(f64::total_cmp);
        Ok(evs)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r}, {c}) out of bounds"
        );
        &self.entries[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r}, {c}) out of bounds"
        );
        &mut self.entries[r * self.cols + c]
    }
}

/// A state vector in the computational basis.
///
/// Generators always return unit-norm kets. Raw kets built with [`Ket::new`]
/// are not normalized; operations that need a physical state check the norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amplitudes: Vec<C64>,
}

impl Ket {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension("ket of dimension 0".into()));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let mut ket = Self::new(amplitudes)?;
        let norm = ket.norm_sqr().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidState(format!(
                "cannot normalize a ket of norm {norm}"
            )));
        }
        for a in &mut ket.amplitudes {
            *a /= norm;
        }
        Ok(ket)
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::OutOfRange(format!(
                "basis index {index} in dimension {dim}"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn kron(&self, rhs: &Ket) -> Ket {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|&a| rhs.amplitudes.iter().map(move |&b| a * b))
            .collect();
        Ket { amplitudes }
    }

    pub(crate) fn ensure_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::InvalidDimension(format!(
                "expected a ket of dimension {dim}, got {}",
                self.dim()
            )));
        }
        Ok(())
    }

    pub(crate) fn ensure_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("ket has squared norm {n}")));
        }
        Ok(())
    }
}

/// Which property [`validate_density`] found violated first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DensityViolation {
    NotSquare,
    NotHermitian { max_deviation: f64 },
    Trace { trace: C64 },
    NotPositive { min_eigenvalue: f64 },
}

impl fmt::Display for DensityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityViolation::NotSquare => write!(f, "matrix is not square"),
            DensityViolation::NotHermitian { max_deviation } => {
                write!(f, "not Hermitian (max |ρ - ρ†| = {max_deviation:e})")
            }
            DensityViolation::Trace { trace } => write!(f, "trace is {trace}, not 1"),
            DensityViolation::NotPositive { min_eigenvalue } => {
                write!(
                    f,
                    "not positive semidefinite (min eigenvalue {min_eigenvalue:e})"
                )
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityValidation {
    pub violation: Option<DensityViolation>,
}

impl DensityValidation {
    pub fn is_valid(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks Hermiticity, unit trace and positivity (in that order) within `tol`.
pub fn validate_density(m: &ComplexMatrix, tol: f64) -> DensityValidation {
    let fail = |v| DensityValidation { violation: Some(v) };
    if !m.is_square() {
        return fail(DensityViolation::NotSquare);
    }
    let n = m.rows();
    let mut max_deviation: f64 = 0.0;
    for r in 0..n {
        for c in 0..=r {
            let d = (m[(r, c)] - m[(c, r)].conj()).norm();
            // NaN must not slip through a max().
            if d.is_nan() || d > max_deviation {
                max_deviation = d;
            }
        }
    }
    if max_deviation.is_nan() || max_deviation > tol {
        return fail(DensityViolation::NotHermitian { max_deviation });
    }
    let trace = m.trace();
    let trace_error = (trace - ONE).norm();
    if trace_error.is_nan() || trace_error > tol {
        return fail(DensityViolation::Trace { trace });
    }
    let min_eigenvalue = match m.hermitian_eigenvalues() {
        Ok(evs) => evs.first().copied().unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    };
    if min_eigenvalue.is_nan() || min_eigenvalue < -tol {
        return fail(DensityViolation::NotPositive { min_eigenvalue });
    }
    DensityValidation { violation: None }
}

/// An 8x8 three-qubit density matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct DensityMatrix {
    entries: [C64; DIM * DIM],
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityMatrix")
            .field("diagonal", &self.diagonal())
            .finish_non_exhaustive()
    }
}

/// Tolerance used when a density matrix enters the library from outside.
pub const DENSITY_TOL: f64 = 1e-9;

impl DensityMatrix {
    /// Validates `m` at `tol` before accepting it.
    pub fn from_matrix(m: &ComplexMatrix, tol: f64) -> Result<Self> {
        if m.rows() != DIM || m.cols() != DIM {
            return Err(Error::InvalidDimension(format!(
                "density matrix must be 8x8, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if let Some(v) = validate_density(m, tol).violation {
            return Err(Error::InvalidState(v.to_string()));
        }
        Ok(Self::from_entries_unchecked(m.entries()))
    }

    /// Builds a density matrix without validation; `entries` must hold 64 values.
    pub(crate) fn from_entries_unchecked(entries: &[C64]) -> Self {
        let mut arr = [ZERO; DIM * DIM];
        arr.copy_from_slice(entries);
        Self { entries: arr }
    }

    pub fn maximally_mixed() -> Self {
        let mut arr = [ZERO; DIM * DIM];
        for i in 0..DIM {
            arr[i * DIM + i] = C64::new(1.0 / DIM as f64, 0.0);
        }
        Self { entries: arr }
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.entries[r * DIM + c]
    }

    pub fn entries(&self) -> &[C64; DIM * DIM] {
        &self.entries
    }

    pub fn diagonal(&self) -> [f64; DIM] {
        std::array::from_fn(|i| self.entries[i * DIM + i].re)
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: DIM,
            cols: DIM,
            entries: self.entries.to_vec(),
        }
    }

    pub fn validate(&self, tol: f64) -> DensityValidation {
        validate_density(&self.to_matrix(), tol)
    }

    /// `(1 - p) * self + p * other`; convex mixtures of valid states stay valid.
    pub fn mix(&self, other: &DensityMatrix, p: f64) -> DensityMatrix {
        let mut entries = [ZERO; DIM * DIM];
        for (out, (a, b)) in entries
            .iter_mut()
            .zip(self.entries.iter().zip(&other.entries))
        {
            *out = a * (1.0 - p) + b * p;
        }
        DensityMatrix { entries }
    }
}

/// `|k><k|` for a normalized 8-dimensional ket.
pub fn ket_to_density(k: &Ket) -> Result<DensityMatrix> {
    k.ensure_dim(DIM)?;
    k.ensure_normalized(1e-9)?;
    let a = k.amplitudes();
    let mut entries = [ZERO; DIM * DIM];
    for r in 0..DIM {
        for c in 0..DIM {
            entries[r * DIM + c] = a[r] * a[c].conj();
        }
    }
    Ok(DensityMatrix { entries })
}

/// A relabeling of the eight basis states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QubitPermutation {
    mapping: [usize; DIM],
}

impl QubitPermutation {
    pub fn new(mapping: [usize; DIM]) -> Result<Self> {
        let mut seen = [false; DIM];
        for &m in &mapping {
            if m >= DIM || seen[m] {
                return Err(Error::InvalidState(format!(
                    "{mapping:?} is not a permutation of 0..8"
                )));
            }
            seen[m] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity() -> Self {
        Self {
            mapping: std::array::from_fn(|i| i),
        }
    }

    /// Exchanges qubits B and C: `4a + 2b + c -> 4a + 2c + b`.
    pub fn swap_bc() -> Self {
        Self {
            mapping: std::array::from_fn(|i| (i & 4) | ((i & 1) << 1) | ((i >> 1) & 1)),
        }
    }

    pub fn mapping(&self) -> &[usize; DIM] {
        &self.mapping
    }

    /// Moves the amplitude at index `i` to index `mapping[i]`.
    pub fn apply(&self, k: &Ket) -> Result<Ket> {
        k.ensure_dim(DIM)?;
        let mut out = vec![ZERO; DIM];
        for (i, &a) in k.amplitudes().iter().enumerate() {
            out[self.mapping[i]] = a;
        }
        Ket::new(out)
    }
}

pub fn swap_bc(k: &Ket) -> Result<Ket> {
    QubitPermutation::swap_bc().apply(k)
}

fn ensure_positive_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidDimension(
            "dimension must be at least 1".into(),
        ));
    }
    Ok(())
}

fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// `d x d` matrix of i.i.d. standard complex normals (real and imaginary parts N(0, 1/2)).
pub fn ginibre_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<ComplexMatrix> {
    ensure_positive_dim(d)?;
    let entries = (0..d * d).map(|_| standard_complex_normal(rng)).collect();
    ComplexMatrix::from_row_major(d, d, entries)
}

/// Haar-distributed unitary from the QR factorization of a Ginibre matrix.
///
/// Gram–Schmidt produces the factorization whose R has a real positive
/// diagonal, which is the phase convention that makes Q exactly Haar.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<ComplexMatrix> {
    let z = ginibre_matrix(d, rng)?;
    let mut cols: Vec<Vec<C64>> = (0..d)
        .map(|c| (0..d).map(|r| z[(r, c)]).collect())
        .collect();
    for j in 0..d {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        // Two passes keep Q orthonormal to machine precision even for ill-conditioned draws.
        for _ in 0..2 {
            for q in done.iter() {
                let proj: C64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("rank-deficient Ginibre draw".into()));
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
    }
    let mut u = ComplexMatrix::zeros(d, d);
    for (c, col) in cols.iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            u[(r, c)] = v;
        }
    }
    Ok(u)
}

/// Ket drawn uniformly from the unit sphere in `C^d`.
pub fn random_ket<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Ket> {
    ensure_positive_dim(d)?;
    let amps = (0..d).map(|_| standard_complex_normal(rng)).collect();
    Ket::normalized(amps)
}

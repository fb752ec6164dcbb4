//! Dense complex matrices, unitaries, rank-one projectors and Haar sampling.
//!
//! Storage is an `nalgebra::DMatrix<Complex64>`; the wrappers here only add
//! the validated invariants each role needs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::tol;

/// Dense complex matrix with finite entries.
///
/// Serializes as a list of rows, each entry a two-element `[re, im]` array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Complex64>>", into = "Vec<Vec<Complex64>>")]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn new(inner: DMatrix<Complex64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::validation("matrix must have at least one row and column"));
        }
        if let Some(k) = inner.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            let (i, j) = (k % inner.nrows(), k / inner.nrows());
            return Err(Error::validation(format!("entry ({i}, {j}) is not finite")));
        }
        Ok(Self(inner))
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_cols) {
            return Err(Error::validation(format!(
                "row {i} has {} entries, expected {n_cols}",
                r.len()
            )));
        }
        Self::new(DMatrix::from_fn(n_rows, n_cols, |i, j| rows[i][j]))
    }

    /// Real matrix promoted to complex.
    pub fn from_real(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        Self(DMatrix::from_fn(rows, cols, |i, j| Complex64::new(f(i, j), 0.0)))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub(crate) fn from_inner_unchecked(inner: DMatrix<Complex64>) -> Self {
        Self(inner)
    }

    pub fn inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Matrix product. Panics on inner-dimension mismatch, like `nalgebra`.
    pub fn mul(&self, rhs: &Self) -> Self {
        Self(&self.0 * &rhs.0)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.0.shape(), other.0.shape(), "shape mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// `‖M†M − I‖_max`.
    pub fn unitarity_residual(&self) -> f64 {
        let gram = self.0.adjoint() * &self.0;
        max_abs_from_identity(&gram)
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.nrows())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    pub fn column(&self, j: usize) -> DVector<Complex64> {
        self.0.column(j).into_owned()
    }
}

impl TryFrom<Vec<Vec<Complex64>>> for ComplexMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<ComplexMatrix> for Vec<Vec<Complex64>> {
    fn from(m: ComplexMatrix) -> Self {
        m.rows()
    }
}

pub(crate) fn max_abs_from_identity(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for ((i, j), z) in m.iter().enumerate().map(|(k, z)| ((k % m.nrows(), k / m.nrows()), z)) {
        let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        worst = worst.max((z - target).norm());
    }
    worst
}

/// Square matrix with `‖M†M − I‖_max ≤ 1e-10`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct UnitaryMatrix(ComplexMatrix);

impl UnitaryMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::validation(format!(
                "unitary must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let residual = m.unitarity_residual();
        if residual > tol::UNITARITY {
            return Err(Error::validation(format!(
                "matrix is not unitary: ‖M†M − I‖_max = {residual:e}"
            )));
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }
}

impl<'de> Deserialize<'de> for UnitaryMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        UnitaryMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Hermitian, idempotent, rank-one projector.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Projector(ComplexMatrix);

impl Projector {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::validation("projector must be square"));
        }
        let herm = m.hermiticity_residual();
        if herm > tol::HERMITICITY {
            return Err(Error::validation(format!("projector is not Hermitian ({herm:e})")));
        }
        let idem = m.mul(&m).max_abs_diff(&m);
        if idem > tol::IDEMPOTENCY {
            return Err(Error::validation(format!("projector is not idempotent ({idem:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(Error::validation(format!("projector trace is {tr}, expected 1")));
        }
        Ok(Self(m))
    }

    /// `|v⟩⟨v|` for the normalized `v`.
    pub fn from_ray(v: &[Complex64]) -> Result<Self> {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::validation("ray must be a finite nonzero vector"));
        }
        let u: Vec<Complex64> = v.iter().map(|z| z / norm).collect();
        let n = u.len();
        Self::new(ComplexMatrix(DMatrix::from_fn(n, n, |i, j| u[i] * u[j].conj())))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    /// Unit vector spanning the projector's range.
    ///
    /// Taken from the column of largest norm, then rephased so that the first
    /// component with modulus above 1e-12 is real positive.
    pub fn ray(&self) -> DVector<Complex64> {
        let m = self.0.inner();
        let (best, _) = (0..m.ncols())
            .map(|j| (j, m.column(j).norm_squared()))
            .fold((0, f64::NEG_INFINITY), |acc, (j, v)| if v > acc.1 { (j, v) } else { acc });
        let mut v = m.column(best).into_owned();
        let norm = v.norm();
        v /= Complex64::new(norm, 0.0);
        if let Some(z) = v.iter().find(|z| z.norm() > 1e-12).copied() {
            let phase = z / z.norm();
            v /= phase;
        }
        v
    }
}

impl<'de> Deserialize<'de> for Projector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        Projector::new(m).map_err(serde::de::Error::custom)
    }
}

/// Nonnegative diagonal, stored as its diagonal entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiagNonneg(Vec<f64>);

impl DiagNonneg {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::validation(format!("diagonal entry {v} is not a finite nonnegative number")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn trace_squared(&self) -> f64 {
        self.0.iter().map(|r| r * r).sum()
    }

    /// `max_i |r_i − 1|`, i.e. `‖R − I‖_max`.
    pub fn distance_from_identity(&self) -> f64 {
        self.0.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let n = self.0.len();
        ComplexMatrix(DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(if i == j { self.0[i] } else { 0.0 }, 0.0)
        }))
    }
}

impl TryFrom<Vec<f64>> for DiagNonneg {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiagNonneg> for Vec<f64> {
    fn from(d: DiagNonneg) -> Self {
        d.0
    }
}

/// The projector onto the `i`-th standard basis vector of dimension `n`.
pub fn basis_projector(n: usize, i: usize) -> Result<Projector> {
    if i >= n {
        return Err(Error::validation(format!("index {i} out of range for dimension {n}")));
    }
    Ok(Projector(ComplexMatrix::from_real(n, n, |a, b| {
        if a == i && b == i {
            1.0
        } else {
            0.0
        }
    })))
}

/// Haar-distributed unitary drawn from `rng`.
///
/// Complex Ginibre matrix, QR factorization, then each column of `Q` is
/// multiplied by the unit phase of the matching diagonal entry of `R`.
pub fn sample_haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<UnitaryMatrix> {
    if n == 0 {
        return Err(Error::validation("dimension must be at least 1"));
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix::new(ComplexMatrix::new(q)?)
        .map_err(|e| Error::numerical(format!("Haar sampling produced a non-unitary: {e}")))
}

/// Haar-distributed unitary, reproducible for a fixed `seed`.
pub fn haar_random_unitary(n: usize, seed: u64) -> Result<UnitaryMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_haar_unitary(n, &mut rng)
}

/// `U†·P·U`.
pub fn conjugate_by(p: &Projector, u: &UnitaryMatrix) -> Result<Projector> {
    check_dim(p.dim(), u.dim())?;
    let m = u.matrix().adjoint().mul(p.matrix()).mul(u.matrix());
    // Symmetrize: the product is Hermitian only up to rounding.
    let sym = (m.inner() + m.inner().adjoint()) * Complex64::new(0.5, 0.0);
    Projector::new(ComplexMatrix(sym))
}

//! Stochastic matrices and the stochastic ⊃ bistochastic ⊃ unistochastic ⊃
//! orthostochastic taxonomy.
//!
//! Convention: entry `(i, j)` is the probability of the final modality `j`
//! given the initial modality `i`, so rows sum to one.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::certification::{certify_orthostochastic, certify_unistochastic, CertOptions, Certificate, Verdict};
use crate::error::{Error, Result, Violation};
use crate::linalg::UnitaryMatrix;
use crate::tol;

/// Validated square row-stochastic matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ProbMatrix(DMatrix<f64>);

impl ProbMatrix {
    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn inner(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.0.row(i).iter().copied().collect()).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.0.row_iter().map(|r| r.sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.0.column_iter().map(|c| c.sum()).collect()
    }

    /// The transpose, valid only when `self` is bistochastic.
    pub fn transpose(&self) -> Result<Self> {
        validate_matrix(self.0.transpose())
    }

    pub fn max_abs_diff(&self, other: &ProbMatrix) -> f64 {
        assert_eq!(self.n(), other.n(), "dimension mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Rescales each row to sum to one, then validates.
    ///
    /// Validation never renormalizes on its own; this is the explicit opt-in.
    pub fn renormalized(raw: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = raw
            .iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                if s > 0.0 {
                    r.iter().map(|x| x / s).collect()
                } else {
                    r.clone()
                }
            })
            .collect();
        validate_stochastic(&rows)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// The permutation matrix sending row `i` to column `perm[i]`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::validation(format!("{perm:?} is not a permutation")));
            }
        }
        Ok(Self(DMatrix::from_fn(n, n, |i, j| if perm[i] == j { 1.0 } else { 0.0 })))
    }
}

impl TryFrom<Vec<Vec<f64>>> for ProbMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        validate_stochastic(&rows)
    }
}

impl From<ProbMatrix> for Vec<Vec<f64>> {
    fn from(m: ProbMatrix) -> Self {
        m.rows()
    }
}

/// Checks that `raw` is a square row-stochastic matrix, reporting every
/// violated constraint.
pub fn validate_stochastic(raw: &[Vec<f64>]) -> Result<ProbMatrix> {
    let n = raw.len();
    if n == 0 {
        return Err(Error::NotStochastic(vec![Violation::Empty]));
    }
    let shape: Vec<Violation> = raw
        .iter()
        .enumerate()
        .filter(|(_, r)| r.len() != n)
        .map(|(row, r)| Violation::NonSquare { rows: n, row, len: r.len() })
        .collect();
    if !shape.is_empty() {
        return Err(Error::NotStochastic(shape));
    }
    validate_matrix(DMatrix::from_fn(n, n, |i, j| raw[i][j]))
}

fn validate_matrix(m: DMatrix<f64>) -> Result<ProbMatrix> {
    let n = m.nrows();
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let x = m[(i, j)];
            if !x.is_finite() {
                violations.push(Violation::NonFinite { row: i, col: j });
            } else if x < -tol::PROB_ENTRY {
                violations.push(Violation::Negative { row: i, col: j, value: x });
            } else if x > 1.0 + tol::PROB_ENTRY {
                violations.push(Violation::AboveOne { row: i, col: j, value: x });
            }
        }
        let sum: f64 = m.row(i).sum();
        if sum.is_finite() && (sum - 1.0).abs() > tol::PROB_SUM {
            violations.push(Violation::RowSum { row: i, sum });
        }
    }
    if violations.is_empty() {
        Ok(ProbMatrix(m))
    } else {
        Err(Error::NotStochastic(violations))
    }
}

/// `true` iff every column also sums to one within 1e-10.
pub fn is_bistochastic(m: &ProbMatrix) -> bool {
    m.column_sums().iter().all(|s| (s - 1.0).abs() <= tol::PROB_SUM)
}

/// Entrywise squared moduli `|U_ij|²` of a unitary.
pub fn squared_moduli(u: &UnitaryMatrix) -> ProbMatrix {
    let m = u.matrix().inner();
    ProbMatrix(m.map(|z| z.norm_sqr()))
}

/// Deepest certified class in the nesting chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixClass {
    Stochastic,
    Bistochastic,
    Unistochastic,
    Orthostochastic,
}

impl MatrixClass {
    /// `true` if a matrix of class `self` also belongs to `other`.
    pub fn implies(self, other: MatrixClass) -> bool {
        self >= other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub class: MatrixClass,
    /// Certificate for the reported class (or the refutation that stopped
    /// the descent at `Bistochastic`).
    pub certificate: Option<Certificate>,
    /// Set when the unistochastic search neither certified nor refuted.
    pub inconclusive: bool,
}

/// Classifies `m` as deep in the nesting chain as can be certified.
pub fn classify(m: &ProbMatrix, opts: &CertOptions) -> Result<Classification> {
    opts.validate()?;
    if !is_bistochastic(m) {
        return Ok(Classification { class: MatrixClass::Stochastic, certificate: None, inconclusive: false });
    }
    let ortho = certify_orthostochastic(m, opts)?;
    if ortho.verdict == Verdict::Certified {
        return Ok(Classification {
            class: MatrixClass::Orthostochastic,
            certificate: Some(ortho),
            inconclusive: false,
        });
    }
    let uni = certify_unistochastic(m, opts)?;
    let (class, inconclusive) = match uni.verdict {
        Verdict::Certified => (MatrixClass::Unistochastic, false),
        Verdict::Inconclusive => (MatrixClass::Bistochastic, true),
        Verdict::RefutedExact | Verdict::RefutedHeuristic => (MatrixClass::Bistochastic, false),
    };
    Ok(Classification { class, certificate: Some(uni), inconclusive })
}

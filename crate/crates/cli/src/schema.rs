//! JSON documents read and written by the command-line tool.
//!
//! Real numbers are written in the shortest form that parses back to the
//! same double, and complex numbers as `[re, im]` pairs.

use serde::{Deserialize, Serialize};
use unistochastic::{
    validate_stochastic, ComplexMatrix, Complex64, Context, Error, PhaseMatrix, ProbMatrix, Result,
};

/// Entries of a matrix document: real probabilities or complex amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rows {
    Real(Vec<Vec<f64>>),
    Complex(Vec<Vec<Complex64>>),
}

/// `{"n": int, "rows": [[...]], "phases": [[...]]}`.
///
/// Complex rows are read as amplitudes: the probabilities are their squared
/// moduli and the phases their arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub n: usize,
    pub rows: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<Vec<f64>>>,
}

impl MatrixDoc {
    pub fn real(p: &ProbMatrix) -> Self {
        Self { n: p.n(), rows: Rows::Real(p.rows()), phases: None }
    }

    pub fn complex(m: &ComplexMatrix) -> Self {
        Self { n: m.nrows(), rows: Rows::Complex(m.rows()), phases: None }
    }

    fn check_shape(&self, rows: usize, lens: impl Iterator<Item = usize>) -> Result<()> {
        if rows != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: rows });
        }
        for len in lens {
            if len != self.n {
                return Err(Error::DimensionMismatch { expected: self.n, found: len });
            }
        }
        Ok(())
    }

    /// The probability matrix and phase matrix described by the document.
    pub fn resolve(&self) -> Result<(ProbMatrix, PhaseMatrix)> {
        let (p, phases) = match &self.rows {
            Rows::Real(rows) => {
                self.check_shape(rows.len(), rows.iter().map(Vec::len))?;
                (validate_stochastic(rows)?, None)
            }
            Rows::Complex(rows) => {
                self.check_shape(rows.len(), rows.iter().map(Vec::len))?;
                let m = ComplexMatrix::from_rows(rows)?;
                let squared: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|z| z.norm_sqr()).collect()).collect();
                (validate_stochastic(&squared)?, Some(PhaseMatrix::of_matrix(&m)?))
            }
        };
        let phases = match (&self.phases, phases) {
            (Some(_), Some(_)) => {
                return Err(Error::Validation("complex rows already carry phases".into()));
            }
            (Some(rows), None) => {
                self.check_shape(rows.len(), rows.iter().map(Vec::len))?;
                PhaseMatrix::from_rows(rows)?
            }
            (None, Some(phases)) => phases,
            (None, None) => PhaseMatrix::zeros(self.n),
        };
        Ok((p, phases))
    }
}

/// `{"id": str, "n": int, "rays": [[[re, im], ...], ...], "labels": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub n: usize,
    pub rays: Vec<Vec<Complex64>>,
    #[serde(default)]
    pub labels: Vec<String>,
}

impl ContextDoc {
    pub fn from_rays(id: &str, rays: Vec<Vec<Complex64>>, labels: Vec<String>) -> Self {
        Self { id: Some(id.to_string()), n: rays.len(), rays, labels }
    }

    pub fn of_context(c: &Context) -> Self {
        let rays = c.rays().iter().map(|r| r.iter().copied().collect()).collect();
        Self::from_rays(c.id(), rays, c.labels().to_vec())
    }

    /// Builds the context, defaulting the id to `fallback_id`.
    pub fn resolve(&self, fallback_id: &str) -> Result<Context> {
        if self.rays.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: self.rays.len() });
        }
        if let Some(r) = self.rays.iter().find(|r| r.len() != self.n) {
            return Err(Error::DimensionMismatch { expected: self.n, found: r.len() });
        }
        let id = self.id.clone().unwrap_or_else(|| fallback_id.to_string());
        Context::from_rays(id, &self.rays, self.labels.clone())
    }
}

/// `{"contexts": [...], "initial_index": int}`.
///
/// `born` uses the first two contexts. `simulate` prepares the system in
/// modality `initial_index` of the first context and measures the remaining
/// contexts in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextsDoc {
    pub contexts: Vec<ContextDoc>,
    #[serde(default)]
    pub initial_index: usize,
}

impl ContextsDoc {
    pub fn resolve(&self) -> Result<Vec<Context>> {
        self.contexts.iter().enumerate().map(|(k, c)| c.resolve(&format!("c{k}"))).collect()
    }
}

//! Contexts, modalities and Born-rule probability matrices.
//!
//! A context is an ordered family of `N` mutually orthogonal rank-one
//! projectors resolving the identity; a modality is one member of that
//! family. Two modalities from different contexts are the same modality
//! when their projectors coincide, regardless of labels.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{basis_projector, ComplexMatrix, Projector, UnitaryMatrix};
use crate::stochastic::{validate_stochastic, ProbMatrix};
use crate::tol;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Context {
    id: String,
    projectors: Vec<Projector>,
    labels: Vec<String>,
    #[serde(skip)]
    rays: Vec<DVector<Complex64>>,
}

impl Context {
    /// Validates orthogonality (`P_iP_j = δ_ij·P_i`) and completeness
    /// (`Σ_i P_i = I`) within 1e-10.
    ///
    /// An empty `labels` list is replaced by `"<id>:<index>"`.
    pub fn from_projectors(id: impl Into<String>, projectors: Vec<Projector>, labels: Vec<String>) -> Result<Self> {
        let id = id.into();
        let n = projectors.first().map(Projector::dim).ok_or_else(|| Error::validation("a context needs at least one projector"))?;
        if projectors.len() != n {
            return Err(Error::validation(format!(
                "a context of dimension {n} needs exactly {n} projectors, got {}",
                projectors.len()
            )));
        }
        for p in &projectors {
            check_dim(n, p.dim())?;
        }
        let labels = if labels.is_empty() {
            (0..n).map(|i| format!("{id}:{i}")).collect()
        } else if labels.len() == n {
            labels
        } else {
            return Err(Error::validation(format!("expected {n} labels, got {}", labels.len())));
        };

        let mut sum = ComplexMatrix::from_real(n, n, |_, _| 0.0).into_inner();
        for (i, pi) in projectors.iter().enumerate() {
            sum += pi.matrix().inner();
            for (j, pj) in projectors.iter().enumerate().skip(i + 1) {
                let overlap = pi.matrix().mul(pj.matrix()).inner().iter().map(|z| z.norm()).fold(0.0, f64::max);
                if overlap > tol::CONTEXT {
                    return Err(Error::validation(format!(
                        "projectors {i} and {j} are not orthogonal (‖P_iP_j‖_max = {overlap:e})"
                    )));
                }
            }
        }
        let completeness = ComplexMatrix::from_inner_unchecked(sum).max_abs_diff(&ComplexMatrix::identity(n));
        if completeness > tol::CONTEXT {
            return Err(Error::validation(format!(
                "projectors do not sum to the identity (residual {completeness:e})"
            )));
        }
        let rays = projectors.iter().map(Projector::ray).collect();
        Ok(Self { id, projectors, labels, rays })
    }

    /// Context whose projector `i` is `|v_i⟩⟨v_i|` for the normalized ray `v_i`.
    pub fn from_rays(id: impl Into<String>, rays: &[Vec<Complex64>], labels: Vec<String>) -> Result<Self> {
        let projectors = rays.iter().map(|r| Projector::from_ray(r)).collect::<Result<Vec<_>>>()?;
        Self::from_projectors(id, projectors, labels)
    }

    /// Context spanned by the columns of `u`.
    pub fn from_unitary(id: impl Into<String>, u: &UnitaryMatrix, labels: Vec<String>) -> Result<Self> {
        let rays: Vec<Vec<Complex64>> = (0..u.dim()).map(|j| u.matrix().column(j).iter().copied().collect()).collect();
        Self::from_rays(id, &rays, labels)
    }

    /// The standard basis.
    pub fn computational(id: impl Into<String>, n: usize) -> Result<Self> {
        let projectors = (0..n).map(|i| basis_projector(n, i)).collect::<Result<Vec<_>>>()?;
        Self::from_projectors(id, projectors, Vec::new())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.projectors.len()
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Unit rays of the projectors, gauged so the first nonzero component is
    /// real positive.
    pub fn rays(&self) -> &[DVector<Complex64>] {
        &self.rays
    }

    pub fn modality(&self, index: usize) -> Result<Modality> {
        let projector = self
            .projectors
            .get(index)
            .cloned()
            .ok_or_else(|| Error::validation(format!("modality index {index} out of range for dimension {}", self.dim())))?;
        Ok(Modality { context_id: self.id.clone(), index, projector })
    }

    /// Same projectors in a new order: entry `k` of the result is projector
    /// `order[k]` of `self`.
    pub fn permuted(&self, id: impl Into<String>, order: &[usize]) -> Result<Self> {
        let projectors = order
            .iter()
            .map(|&k| self.projectors.get(k).cloned().ok_or_else(|| Error::validation(format!("index {k} out of range"))))
            .collect::<Result<Vec<_>>>()?;
        let labels = order.iter().map(|&k| self.labels[k].clone()).collect();
        Self::from_projectors(id, projectors, labels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Modality {
    pub context_id: String,
    pub index: usize,
    pub projector: Projector,
}

/// `Tr(P_u·P_v)`, clipped to `[0, 1]`.
pub fn born_probability(pu: &Projector, pv: &Projector) -> Result<f64> {
    check_dim(pu.dim(), pv.dim())?;
    let (a, b) = (pu.matrix(), pv.matrix());
    let n = pu.dim();
    let mut tr = Complex64::new(0.0, 0.0);
    for x in 0..n {
        for y in 0..n {
            tr += a.get(x, y) * b.get(y, x);
        }
    }
    if tr.im.abs() > tol::BORN_IMAG_RESIDUE {
        return Err(Error::numerical(format!("Born trace has imaginary residue {:e}", tr.im)));
    }
    Ok(tr.re.clamp(0.0, 1.0))
}

/// Entry `(i, j)` is the Born probability of modality `j` of `cv` given
/// modality `i` of `cu`.
pub fn probability_matrix(cu: &Context, cv: &Context) -> Result<ProbMatrix> {
    check_dim(cu.dim(), cv.dim())?;
    let rows = cu
        .projectors
        .iter()
        .map(|pu| cv.projectors.iter().map(|pv| born_probability(pu, pv)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    validate_stochastic(&rows).map_err(|e| Error::numerical(format!("Born matrix failed validation: {e}")))
}

/// The matrix read in the opposite direction, `probability_matrix(cv, cu)`.
pub fn reverse_matrix(cu: &Context, cv: &Context) -> Result<ProbMatrix> {
    probability_matrix(cv, cu)
}

/// Ray overlaps `⟨u_i|v_j⟩` in each context's own ray gauge.
///
/// Overlap matrices compose exactly: `overlap(a, c) = overlap(a, b)·overlap(b, c)`.
pub fn overlap_matrix(cu: &Context, cv: &Context) -> Result<ComplexMatrix> {
    check_dim(cu.dim(), cv.dim())?;
    let n = cu.dim();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| cu.rays[i].dotc(&cv.rays[j]));
    ComplexMatrix::new(m)
}

/// Unitary relating two contexts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextTransform {
    pub s: UnitaryMatrix,
    pub from_context: String,
    pub to_context: String,
}

/// `S_ij = ⟨u_i|v_j⟩·exp(−i(θ_i + θ_j)/2)` with `θ_k = arg⟨u_k|v_k⟩`.
///
/// The split gauge leaves every diagonal entry real nonnegative and makes
/// the transform in the opposite direction exactly `S†`. `|S_ij|²` is the
/// Born matrix, and `S†·P_i·S` is the projector of `u_i` written in the
/// basis of `cv`.
pub fn context_transform(cu: &Context, cv: &Context) -> Result<ContextTransform> {
    let overlap = overlap_matrix(cu, cv)?;
    let n = cu.dim();
    let half: Vec<Complex64> = (0..n)
        .map(|k| {
            let d = overlap.get(k, k);
            let theta = if d.norm() > 0.0 { d.arg() } else { 0.0 };
            Complex64::from_polar(1.0, -0.5 * theta)
        })
        .collect();
    let s = nalgebra::DMatrix::from_fn(n, n, |i, j| overlap.get(i, j) * half[i] * half[j]);
    let s = UnitaryMatrix::new(ComplexMatrix::new(s)?)
        .map_err(|e| Error::numerical(format!("context transform is not unitary: {e}")))?;
    Ok(ContextTransform { s, from_context: cu.id.clone(), to_context: cv.id.clone() })
}

/// Index pairs `(i, j)` whose Born probability is at least `1 − tol`.
pub fn shared_modalities(cu: &Context, cv: &Context, tol: f64) -> Result<Vec<(usize, usize)>> {
    check_dim(cu.dim(), cv.dim())?;
    let mut pairs = Vec::new();
    for (i, pu) in cu.projectors.iter().enumerate() {
        for (j, pv) in cv.projectors.iter().enumerate() {
            if born_probability(pu, pv)? >= 1.0 - tol {
                pairs.push((i, j));
            }
        }
    }
    Ok(pairs)
}

/// `Σ_i a_i·P_i`.
pub fn build_observable(c: &Context, values: &[f64]) -> Result<ComplexMatrix> {
    check_dim(c.dim(), values.len())?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("observable values must be finite"));
    }
    let n = c.dim();
    let mut m = nalgebra::DMatrix::<Complex64>::zeros(n, n);
    for (p, &a) in c.projectors.iter().zip(values) {
        m += p.matrix().inner() * Complex64::new(a, 0.0);
    }
    ComplexMatrix::new(m)
}

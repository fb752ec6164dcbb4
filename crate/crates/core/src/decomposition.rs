//! Square-root parametrization of a stochastic matrix.
//!
//! Any stochastic `p` with phases `φ` gives `Σ_ij = exp(iφ_ij)·√p_ij`. With
//! the singular value decomposition `Σ = U·R·V†` and the basis projectors
//! `P_i`, the families `P_i' = U†P_iU` and `P_j'' = V†P_jV` satisfy
//!
//! ```text
//! p_ij = Tr(P_i'·R·P_j''·R),   Tr(R²) = N,   Tr(P_i'·R²) = 1.
//! ```
//!
//! `Σ` is unitary exactly when `R = I`. When `R ≠ I`, the matrix of squared
//! moduli of `U` is singular.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{basis_projector, conjugate_by, ComplexMatrix, DiagNonneg, Projector, UnitaryMatrix};
use crate::stochastic::{squared_moduli, ProbMatrix};
use crate::tol;

/// Angles in radians, reduced to `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct PhaseMatrix {
    n: usize,
    phi: Vec<f64>,
}

impl PhaseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, phi: vec![0.0; n * n] }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut phi = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let a = f(i, j);
                if !a.is_finite() {
                    return Err(Error::validation(format!("phase ({i}, {j}) is not finite")));
                }
                phi.push(reduce_angle(a));
            }
        }
        Ok(Self { n, phi })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::validation(format!("phase row {i} has {} entries, expected {n}", r.len())));
        }
        Self::from_fn(n, |i, j| rows[i][j])
    }

    /// Phases of the entries of a complex matrix (zero for zero entries).
    pub fn of_matrix(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::validation("phase source must be square"));
        }
        Self::from_fn(m.nrows(), |i, j| {
            let z = m.get(i, j);
            if z.norm() == 0.0 {
                0.0
            } else {
                z.arg()
            }
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.phi[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.phi.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for PhaseMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<PhaseMatrix> for Vec<Vec<f64>> {
    fn from(p: PhaseMatrix) -> Self {
        p.rows()
    }
}

pub(crate) fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `Σ_ij = exp(iφ_ij)·√p_ij` together with the inputs it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaMatrix {
    inner: ComplexMatrix,
    probs: ProbMatrix,
    phases: PhaseMatrix,
}

impl SigmaMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.inner
    }

    pub fn probs(&self) -> &ProbMatrix {
        &self.probs
    }

    pub fn phases(&self) -> &PhaseMatrix {
        &self.phases
    }

    pub fn n(&self) -> usize {
        self.probs.n()
    }
}

pub fn build_sigma(p: &ProbMatrix, phi: &PhaseMatrix) -> Result<SigmaMatrix> {
    check_dim(p.n(), phi.n())?;
    let n = p.n();
    let m = DMatrix::from_fn(n, n, |i, j| {
        Complex64::from_polar(p.get(i, j).max(0.0).sqrt(), phi.get(i, j))
    });
    Ok(SigmaMatrix {
        inner: ComplexMatrix::new(m)?,
        probs: p.clone(),
        phases: phi.clone(),
    })
}

/// `Σ = U·diag(r)·V†` with singular values in descending order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvdTriple {
    pub u: UnitaryMatrix,
    pub r: DiagNonneg,
    pub v: UnitaryMatrix,
}

impl SvdTriple {
    pub fn reconstruct_sigma(&self) -> ComplexMatrix {
        self.u.matrix().mul(&self.r.to_matrix()).mul(&self.v.matrix().adjoint())
    }
}

/// Singular value decomposition of `Σ`, verified against the input.
pub fn svd(sigma: &SigmaMatrix) -> Result<SvdTriple> {
    let a = sigma.matrix().inner();
    let n = a.nrows();
    let decomposition = faer::Mat::from_fn(n, n, |i, j| a[(i, j)])
        .svd()
        .map_err(|e| Error::numerical(format!("SVD did not converge: {e:?}")))?;
    let u = DMatrix::from_fn(n, n, |i, k| decomposition.U()[(i, k)]);
    let v = DMatrix::from_fn(n, n, |i, k| decomposition.V()[(i, k)]);
    let s: Vec<f64> = (0..n).map(|k| decomposition.S().column_vector()[k].re).collect();

    // Descending, ties broken by original index (sort_by is stable).
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));

    let u_sorted = DMatrix::from_fn(n, n, |i, k| u[(i, order[k])]);
    let v_sorted = DMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    let r = DiagNonneg::new(order.iter().map(|&k| s[k].max(0.0)).collect())?;

    let as_unitary = |m: DMatrix<Complex64>, name: &str| {
        UnitaryMatrix::new(ComplexMatrix::new(m)?)
            .map_err(|e| Error::numerical(format!("SVD factor {name} is not unitary: {e}")))
    };
    let triple = SvdTriple {
        u: as_unitary(u_sorted, "U")?,
        r,
        v: as_unitary(v_sorted, "V")?,
    };
    let residual = triple.reconstruct_sigma().max_abs_diff(sigma.matrix());
    if residual > tol::SVD_RECONSTRUCTION {
        return Err(Error::numerical(format!("SVD reconstruction residual {residual:e}")));
    }
    Ok(triple)
}

/// The two conjugated basis-projector families `U†P_iU` and `V†P_jV`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectorFrame {
    pub primed: Vec<Projector>,
    pub double_primed: Vec<Projector>,
}

impl ProjectorFrame {
    pub fn n(&self) -> usize {
        self.primed.len()
    }

    /// `Tr(P_i'·R²) − 1` for each `i`.
    pub fn normalization_residuals(&self, r: &DiagNonneg) -> Vec<f64> {
        self.primed
            .iter()
            .map(|p| {
                let m = p.matrix();
                let tr: f64 = (0..m.nrows()).map(|a| m.get(a, a).re * r.values()[a].powi(2)).sum();
                tr - 1.0
            })
            .collect()
    }
}

pub fn projector_frame(triple: &SvdTriple) -> Result<ProjectorFrame> {
    let n = triple.u.dim();
    let family = |w: &UnitaryMatrix| -> Result<Vec<Projector>> {
        (0..n).map(|i| conjugate_by(&basis_projector(n, i)?, w)).collect()
    };
    Ok(ProjectorFrame {
        primed: family(&triple.u)?,
        double_primed: family(&triple.v)?,
    })
}

/// `Tr(P_i'·R·P_j''·R)`.
pub fn reconstruct(frame: &ProjectorFrame, r: &DiagNonneg, i: usize, j: usize) -> Result<f64> {
    let n = frame.n();
    check_dim(n, r.len())?;
    if i >= n || j >= n {
        return Err(Error::validation(format!("index ({i}, {j}) out of range for dimension {n}")));
    }
    let a = frame.primed[i].matrix();
    let b = frame.double_primed[j].matrix();
    let rv = r.values();
    let mut tr = Complex64::new(0.0, 0.0);
    for x in 0..n {
        for y in 0..n {
            tr += a.get(x, y) * rv[y] * b.get(y, x) * rv[x];
        }
    }
    if tr.im.abs() > tol::IMAG_RESIDUE {
        return Err(Error::numerical(format!("trace has imaginary residue {:e}", tr.im)));
    }
    Ok(tr.re)
}

/// All `N²` reconstructed probabilities, row-major by `(i, j)`.
pub fn reconstruct_all(frame: &ProjectorFrame, r: &DiagNonneg) -> Result<Vec<Vec<f64>>> {
    let n = frame.n();
    (0..n)
        .map(|i| (0..n).map(|j| reconstruct(frame, r, i, j)).collect())
        .collect()
}

/// Determinant of the matrix of squared moduli of `u`.
pub fn gleason_determinant(u: &UnitaryMatrix) -> f64 {
    squared_moduli(u).inner().determinant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::haar_random_unitary;
    use crate::stochastic::validate_stochastic;

    fn circulant() -> ProbMatrix {
        validate_stochastic(&[vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]]).unwrap()
    }

    #[test]
    fn svd_is_accurate_on_hard_inputs() {
        let u = haar_random_unitary(6, 454).unwrap();
        let hard = build_sigma(&squared_moduli(&u), &PhaseMatrix::zeros(6)).unwrap();
        let rank_one = build_sigma(&validate_stochastic(&vec![vec![1.0 / 3.0; 3]; 3]).unwrap(), &PhaseMatrix::zeros(3)).unwrap();
        for sigma in [hard, rank_one] {
            let t = svd(&sigma).unwrap();
            assert!(t.reconstruct_sigma().max_abs_diff(sigma.matrix()) < 1e-12);
        }
    }


    #[test]
    fn phases_reduce_modulo_tau() {
        let p = PhaseMatrix::from_rows(&[vec![-0.5, TAU], vec![7.0, 3.0 * TAU + 1.0]]).unwrap();
        assert!((p.get(0, 0) - (TAU - 0.5)).abs() < 1e-15);
        assert_eq!(p.get(0, 1), 0.0);
        assert!((p.get(1, 0) - (7.0 - TAU)).abs() < 1e-15);
        assert!((p.get(1, 1) - 1.0).abs() < 1e-12);
        for row in p.rows() {
            assert!(row.iter().all(|a| (0.0..TAU).contains(a)));
        }
        assert!(PhaseMatrix::from_rows(&[vec![f64::INFINITY]]).is_err());
    }

    #[test]
    fn sigma_examples() {
        let s = build_sigma(&ProbMatrix::identity(3), &PhaseMatrix::zeros(3)).unwrap();
        assert_eq!(s.matrix(), &ComplexMatrix::identity(3));

        let s = build_sigma(&circulant(), &PhaseMatrix::zeros(3)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..3 {
            for j in 0..3 {
                let expected = if circulant().get(i, j) > 0.0 { h } else { 0.0 };
                assert!((s.matrix().get(i, j) - Complex64::new(expected, 0.0)).norm() < 1e-15);
            }
        }
        assert!(build_sigma(&circulant(), &PhaseMatrix::zeros(2)).is_err());
    }

    #[test]
    fn svd_of_unitary_sigma_has_unit_singular_values() {
        let u = haar_random_unitary(4, 5).unwrap();
        let p = squared_moduli(&u);
        let phi = PhaseMatrix::of_matrix(u.matrix()).unwrap();
        let t = svd(&build_sigma(&p, &phi).unwrap()).unwrap();
        assert!(t.r.distance_from_identity() < 1e-12);
    }

    #[test]
    fn singular_values_descend() {
        let t = svd(&build_sigma(&circulant(), &PhaseMatrix::zeros(3)).unwrap()).unwrap();
        let r = t.r.values();
        assert!(r.windows(2).all(|w| w[0] >= w[1]));
        assert!((t.r.trace_squared() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn frame_of_identity_is_the_basis() {
        let t = svd(&build_sigma(&ProbMatrix::identity(3), &PhaseMatrix::zeros(3)).unwrap()).unwrap();
        let f = projector_frame(&t).unwrap();
        // Σ = I gives U = V, so both families coincide with each other; with
        // three equal singular values nalgebra may still return U = V ≠ I.
        for i in 0..3 {
            assert!(f.primed[i].matrix().max_abs_diff(f.double_primed[i].matrix()) < 1e-12);
            for j in 0..3 {
                let p = reconstruct(&f, &t.r, i, j).unwrap();
                assert!((p - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reconstruct_rejects_bad_index() {
        let t = svd(&build_sigma(&circulant(), &PhaseMatrix::zeros(3)).unwrap()).unwrap();
        let f = projector_frame(&t).unwrap();
        assert!(reconstruct(&f, &t.r, 3, 0).is_err());
    }

    #[test]
    fn gleason_determinant_examples() {
        assert!((gleason_determinant(&UnitaryMatrix::identity(3)) - 1.0).abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rot = UnitaryMatrix::new(ComplexMatrix::from_real(2, 2, |i, j| if i == 0 && j == 1 { -h } else { h })).unwrap();
        assert!(gleason_determinant(&rot).abs() < 1e-15);
    }
}

//! Random test objects: stochastic and bistochastic matrices, phases and
//! contexts.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Exp1;

use crate::csm::Context;
use crate::decomposition::PhaseMatrix;
use crate::error::{Error, Result};
use crate::linalg::sample_haar_unitary;
use crate::stochastic::{validate_stochastic, ProbMatrix};

/// Flat Dirichlet weights (normalized unit exponentials).
fn dirichlet<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Each row drawn uniformly from the probability simplex.
pub fn random_stochastic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ProbMatrix> {
    if n == 0 {
        return Err(Error::validation("dimension must be at least 1"));
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|_| dirichlet(n, rng)).collect();
    validate_stochastic(&rows)
}

/// Dirichlet-weighted average of `2N` uniformly random permutation matrices.
pub fn random_bistochastic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ProbMatrix> {
    if n == 0 {
        return Err(Error::validation("dimension must be at least 1"));
    }
    let k = 2 * n;
    let weights = dirichlet(k, rng);
    let mut rows = vec![vec![0.0; n]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for w in weights {
        perm.shuffle(rng);
        for (i, &j) in perm.iter().enumerate() {
            rows[i][j] += w;
        }
    }
    validate_stochastic(&rows)
}

/// Independent uniform phases in `[0, 2π)`.
pub fn random_phases<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PhaseMatrix> {
    let values: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    PhaseMatrix::from_fn(n, |i, j| values[i * n + j])
}

/// Context spanned by the columns of a Haar unitary.
pub fn random_context<R: Rng + ?Sized>(id: &str, n: usize, rng: &mut R) -> Result<Context> {
    Context::from_unitary(id, &sample_haar_unitary(n, rng)?, Vec::new())
}

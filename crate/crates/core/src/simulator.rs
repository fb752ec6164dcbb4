//! Monte-Carlo measurement sequences.
//!
//! A system is always in exactly one modality. Measuring in a context picks
//! outcome `j` with the Born probability against that context's projector
//! `j`, and the system is then in modality `j` of the measuring context, so
//! an immediate repetition returns the same outcome.
//!
//! Trial `t` draws from its own ChaCha stream `(seed, t)`; counts are merged
//! by addition, so reports do not depend on thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::csm::{born_probability, Context, Modality};
use crate::error::{check_dim, Error, Result};
use crate::exec::Execution;
use crate::linalg::Projector;
use crate::tol;
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemState {
    pub current: Modality,
}

impl SystemState {
    pub fn new(current: Modality) -> Self {
        Self { current }
    }
}

/// Born probabilities of each projector of `c` given `p`, with dust below
/// 1e-12 set to zero and the row renormalized.
fn born_row(p: &Projector, c: &Context) -> Result<Vec<f64>> {
    check_dim(c.dim(), p.dim())?;
    let mut row = c
        .projectors()
        .iter()
        .map(|q| born_probability(p, q).map(|x| if x < tol::SAMPLING_ZERO { 0.0 } else { x }))
        .collect::<Result<Vec<_>>>()?;
    let sum: f64 = row.iter().sum();
    if sum < tol::SAMPLING_ZERO {
        return Err(Error::numerical("every Born probability of the row vanishes"));
    }
    if (sum - 1.0).abs() > tol::SAMPLING_RENORMALIZE {
        return Err(Error::numerical(format!("Born row sums to {sum}")));
    }
    row.iter_mut().for_each(|x| *x /= sum);
    Ok(row)
}

/// Inverse-CDF sampler over one Born row.
#[derive(Debug, Clone)]
struct RowSampler {
    cumulative: Vec<f64>,
    last_nonzero: usize,
}

impl RowSampler {
    fn new(row: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = row
            .iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect();
        let last_nonzero = row.iter().rposition(|&x| x > 0.0).expect("row has mass");
        Self { cumulative, last_nonzero }
    }

    fn sample(&self, u: f64) -> usize {
        // Zero-probability outcomes have cumulative equal to their
        // predecessor and can never satisfy u < cumulative first.
        self.cumulative.iter().position(|&c| u < c).unwrap_or(self.last_nonzero)
    }
}

/// One measurement of `state` in context `c`.
pub fn measure<R: Rng + ?Sized>(state: &SystemState, c: &Context, rng: &mut R) -> Result<(SystemState, usize)> {
    let row = born_row(&state.current.projector, c)?;
    let j = RowSampler::new(&row).sample(rng.random::<f64>());
    Ok((SystemState::new(c.modality(j)?), j))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub context_id: String,
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    /// Born-chain prediction for this step's outcome distribution.
    pub predicted: Vec<f64>,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub trials: u64,
    pub initial_context: String,
    pub initial_index: usize,
    pub steps: Vec<StepReport>,
    /// Row `k` holds the empirical outcome frequencies of step `k`.
    pub empirical: Vec<Vec<f64>>,
    /// Largest `|frequency − prediction|` over all steps and outcomes.
    pub max_deviation: f64,
    /// Trials in which a measurement repeated in the same context changed
    /// the outcome.
    pub repeat_violations: u64,
}

const TRIAL_BLOCK: usize = 4096;

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Measures the context sequence `contexts` `trials` times, each time
/// starting from `initial`.
pub fn run_sequence(
    initial: &Modality,
    contexts: &[Context],
    trials: u64,
    seed: u64,
    execution: Execution,
) -> Result<RunReport> {
    if contexts.is_empty() {
        return Err(Error::validation("context sequence is empty"));
    }
    if trials == 0 {
        return Err(Error::validation("at least one trial is required"));
    }
    let n = initial.projector.dim();
    for c in contexts {
        check_dim(n, c.dim())?;
    }

    // tables[0] has the single row for the initial modality; tables[k] is
    // indexed by the outcome of step k − 1.
    let mut tables: Vec<Vec<RowSampler>> = Vec::with_capacity(contexts.len());
    let mut rows: Vec<Vec<Vec<f64>>> = Vec::with_capacity(contexts.len());
    let first = vec![born_row(&initial.projector, &contexts[0])?];
    rows.push(first);
    for k in 1..contexts.len() {
        let step = contexts[k - 1]
            .projectors()
            .iter()
            .map(|p| born_row(p, &contexts[k]))
            .collect::<Result<Vec<_>>>()?;
        rows.push(step);
    }
    for step in &rows {
        tables.push(step.iter().map(|r| RowSampler::new(r)).collect());
    }

    let repeats: Vec<bool> = (0..contexts.len())
        .map(|k| {
            if k == 0 {
                contexts[0].id() == initial.context_id
                    && contexts[0].projectors().get(initial.index) == Some(&initial.projector)
            } else {
                contexts[k] == contexts[k - 1]
            }
        })
        .collect();

    let n_blocks = trials.div_ceil(TRIAL_BLOCK as u64) as usize;
    let blocks = execution.map_range(0..n_blocks, |b| {
        let mut counts = vec![vec![0u64; n]; contexts.len()];
        let mut violations = 0u64;
        let start = b as u64 * TRIAL_BLOCK as u64;
        let end = (start + TRIAL_BLOCK as u64).min(trials);
        for t in start..end {
            let mut rng = trial_rng(seed, t);
            let mut prev = initial.index;
            let mut violated = false;
            for (k, table) in tables.iter().enumerate() {
                let row = if k == 0 { &table[0] } else { &table[prev] };
                let j = row.sample(rng.random::<f64>());
                if repeats[k] && j != prev {
                    violated = true;
                }
                counts[k][j] += 1;
                prev = j;
            }
            violations += u64::from(violated);
        }
        (counts, violations)
    });

    let mut counts = vec![vec![0u64; n]; contexts.len()];
    let mut repeat_violations = 0;
    for (block, v) in blocks {
        for (acc, step) in counts.iter_mut().zip(block) {
            for (a, c) in acc.iter_mut().zip(step) {
                *a += c;
            }
        }
        repeat_violations += v;
    }

    let mut predicted = rows[0][0].clone();
    let mut steps = Vec::with_capacity(contexts.len());
    for (k, c) in contexts.iter().enumerate() {
        if k > 0 {
            predicted = (0..n).map(|j| (0..n).map(|i| predicted[i] * rows[k][i][j]).sum()).collect();
        }
        let frequencies: Vec<f64> = counts[k].iter().map(|&x| x as f64 / trials as f64).collect();
        let max_deviation = frequencies
            .iter()
            .zip(&predicted)
            .map(|(f, p)| (f - p).abs())
            .fold(0.0, f64::max);
        steps.push(StepReport {
            context_id: c.id().to_string(),
            counts: counts[k].clone(),
            frequencies,
            predicted: predicted.clone(),
            max_deviation,
        });
    }
    let max_deviation = steps.iter().map(|s| s.max_deviation).fold(0.0, f64::max);
    Ok(RunReport {
        trials,
        initial_context: initial.context_id.clone(),
        initial_index: initial.index,
        empirical: steps.iter().map(|s| s.frequencies.clone()).collect(),
        steps,
        max_deviation,
        repeat_violations,
    })
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Spin-½ `S_z` and `S_x` contexts: `{|↑⟩, |↓⟩}` and `{|+⟩, |−⟩}`.
pub fn spin_half_contexts() -> (Context, Context) {
    let h = FRAC_1_SQRT_2;
    let z = Context::from_rays("Sz", &[vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]], vec!["up".into(), "down".into()])
        .expect("valid z context");
    let x = Context::from_rays("Sx", &[vec![c(h), c(h)], vec![c(h), c(-h)]], vec!["plus".into(), "minus".into()])
        .expect("valid x context");
    (z, x)
}

/// Two spin-½ particles: the uncoupled `{S_z1, S_z2}` context
/// `{|++⟩, |+−⟩, |−+⟩, |−−⟩}` and the coupled `{S², S_z}` context
/// `{|1,1⟩, |1,0⟩, |0,0⟩, |1,−1⟩}`.
pub fn spin_coupling_contexts() -> (Context, Context) {
    let h = FRAC_1_SQRT_2;
    let e = |k: usize| (0..4).map(|i| c(if i == k { 1.0 } else { 0.0 })).collect::<Vec<_>>();
    let uncoupled = Context::from_rays(
        "Sz1,Sz2",
        &[e(0), e(1), e(2), e(3)],
        ["|+,+>", "|+,->", "|-,+>", "|-,->"].map(String::from).to_vec(),
    )
    .expect("valid uncoupled context");
    let coupled = Context::from_rays(
        "S2,Sz",
        &[
            e(0),
            vec![c(0.0), c(h), c(h), c(0.0)],
            vec![c(0.0), c(h), c(-h), c(0.0)],
            e(3),
        ],
        ["|1,1>", "|1,0>", "|0,0>", "|1,-1>"].map(String::from).to_vec(),
    )
    .expect("valid coupled context");
    (uncoupled, coupled)
}

use std::time::Duration;

use rand::Rng;
use rayon::prelude::*;

use super::{random_bits, stream_rng, Deadline, FlipState, QuboSolution};
use crate::error::{Error, Result};
use crate::qubo::QuadraticModel;

/// Reads run in parallel in fixed batches of this size. The deadline is only
/// checked between batches, so every completed read is the same whatever
/// the time limit.
const BATCH: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealSchedule {
    pub reads: usize,
    pub sweeps: usize,
    /// Inverse temperatures at the first and last sweep. Derived from the
    /// coefficients when unset.
    pub beta_range: Option<(f64, f64)>,
    pub seed: u64,
    pub time_limit: Option<Duration>,
}

impl AnnealSchedule {
    pub fn new(reads: usize, sweeps: usize, seed: u64) -> Self {
        Self {
            reads,
            sweeps,
            beta_range: None,
            seed,
            time_limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadResult {
    pub read: usize,
    pub bits: Vec<bool>,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct SampleSet {
    pub best: QuboSolution,
    /// Completed reads in read order.
    pub reads: Vec<ReadResult>,
}

/// Hot end `0.1 / mean|coef|`, cold end `10 / min|coef|`.
pub fn default_beta_range(qubo: &QuadraticModel) -> (f64, f64) {
    match qubo.coefficient_scales() {
        Some((mean, min)) => (0.1 / mean, (10.0 / min).max(0.1 / mean)),
        None => (0.1, 10.0),
    }
}

/// `steps` inverse temperatures spaced geometrically from `start` to `end`.
pub fn geometric_ladder(start: f64, end: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![end],
        _ => {
            let ratio = (end / start).powf(1.0 / (steps - 1) as f64);
            (0..steps).map(|s| start * ratio.powi(s as i32)).collect()
        }
    }
}

/// One Metropolis pass over all variables in index order.
pub(crate) fn metropolis_sweep(qubo: &QuadraticModel, state: &mut FlipState, beta: f64, rng: &mut impl Rng) {
    for i in 0..state.x.len() {
        let d = state.delta(qubo, i);
        if d <= 0.0 || rng.gen::<f64>() < (-beta * d).exp() {
            state.flip(qubo, i);
        }
    }
}

fn anneal_read(qubo: &QuadraticModel, ladder: &[f64], seed: u64, read: usize) -> ReadResult {
    let mut rng = stream_rng(seed, read as u64);
    let mut state = FlipState::new(qubo, random_bits(&mut rng, qubo.num_variables()));
    for &beta in ladder {
        metropolis_sweep(qubo, &mut state, beta, &mut rng);
    }
    ReadResult {
        read,
        energy: qubo.energy(&state.x),
        bits: state.x,
    }
}

/// Simulated annealing with a geometric schedule. Read `r` uses its own
/// random stream, so the reads, and hence the best sample, are reproducible
/// for a fixed seed regardless of thread count.
pub fn simulated_annealing(qubo: &QuadraticModel, schedule: &AnnealSchedule) -> Result<SampleSet> {
    if schedule.reads == 0 || schedule.sweeps == 0 {
        return Err(Error::Parameter("annealing needs at least one read and one sweep".into()));
    }
    let (b0, b1) = schedule.beta_range.unwrap_or_else(|| default_beta_range(qubo));
    if !(b0 > 0.0 && b1 >= b0 && b1.is_finite()) {
        return Err(Error::Parameter(format!("invalid inverse temperature range ({b0}, {b1})")));
    }
    let ladder = geometric_ladder(b0, b1, schedule.sweeps);
    let deadline = Deadline::after(schedule.time_limit);

    let mut reads: Vec<ReadResult> = Vec::new();
    let mut best: Option<usize> = None;
    let mut trace = Vec::new();
    let mut next = 0usize;
    let mut stopped_early = false;
    while next < schedule.reads {
        if next > 0 && deadline.expired() {
            stopped_early = true;
            break;
        }
        let end = next.saturating_add(BATCH).min(schedule.reads);
        let batch: Vec<ReadResult> = (next..end)
            .into_par_iter()
            .map(|r| anneal_read(qubo, &ladder, schedule.seed, r))
            .collect();
        for result in batch {
            if best.map_or(true, |b| result.energy < reads[b].energy) {
                best = Some(reads.len());
            }
            reads.push(result);
            trace.push(reads[best.unwrap()].energy);
        }
        next = end;
    }

    let top = &reads[best.expect("at least one read")];
    Ok(SampleSet {
        best: QuboSolution {
            bits: top.bits.clone(),
            energy: top.energy,
            truncated: stopped_early && schedule.reads != usize::MAX,
            trace,
        },
        reads,
    })
}

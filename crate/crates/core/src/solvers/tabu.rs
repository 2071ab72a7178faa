use std::time::Duration;

use super::{random_bits, stream_rng, Deadline, FlipState, QuboSolution};
use crate::error::{Error, Result};
use crate::qubo::QuadraticModel;

const CHECK_INTERVAL: u64 = 64;
const REFRESH_INTERVAL: u64 = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct TabuParams {
    pub iterations: u64,
    /// Iterations a flipped variable stays tabu. Zero turns the search into
    /// plain steepest descent that stops at the first local minimum.
    pub tenure: usize,
    /// Restart from a fresh random state after this many iterations without
    /// improving the incumbent.
    pub stall_limit: u64,
    pub seed: u64,
    pub time_limit: Option<Duration>,
}

impl TabuParams {
    pub fn new(iterations: u64, seed: u64) -> Self {
        Self {
            iterations,
            tenure: 0,
            stall_limit: 0,
            seed,
            time_limit: None,
        }
    }

    pub fn default_tenure(n: usize) -> usize {
        (n / 4).clamp(1, 20)
    }

    fn stall(&self, n: usize) -> u64 {
        if self.stall_limit > 0 {
            self.stall_limit
        } else {
            (10 * n as u64).max(500)
        }
    }
}

/// Steepest-descent tabu search with a recency list and aspiration: a tabu
/// move is allowed when it would beat the incumbent.
pub fn tabu_search(qubo: &QuadraticModel, params: &TabuParams) -> Result<QuboSolution> {
    let n = qubo.num_variables();
    if params.iterations == 0 {
        return Err(Error::Parameter("tabu search needs at least one iteration".into()));
    }
    let mut rng = stream_rng(params.seed, 0);
    let mut state = FlipState::new(qubo, random_bits(&mut rng, n));
    let mut best_bits = state.x.clone();
    let mut best_energy = state.energy;
    let mut trace = vec![best_energy];
    if n == 0 {
        return Ok(QuboSolution {
            bits: best_bits,
            energy: best_energy,
            truncated: false,
            trace,
        });
    }

    let deadline = Deadline::after(params.time_limit);
    let stall_limit = params.stall(n);
    let block = n as u64;
    let mut tabu_until = vec![0u64; n];
    let mut since_improvement = 0u64;
    let mut stopped_early = false;
    let mut it = 0u64;
    while it < params.iterations {
        if it > 0 && it % CHECK_INTERVAL == 0 && deadline.expired() {
            stopped_early = true;
            break;
        }
        it += 1;

        let mut chosen: Option<(usize, f64)> = None;
        let mut fallback: Option<(usize, f64)> = None;
        for i in 0..n {
            let d = state.delta(qubo, i);
            let allowed = tabu_until[i] < it || state.energy + d < best_energy - 1e-12;
            let slot = if allowed { &mut chosen } else { &mut fallback };
            if slot.map_or(true, |(_, bd)| d < bd) {
                *slot = Some((i, d));
            }
        }

        if params.tenure == 0 {
            match chosen {
                Some((i, d)) if d < 0.0 => state.flip(qubo, i),
                _ => break,
            }
        } else {
            let (i, _) = chosen.or(fallback).expect("n > 0");
            state.flip(qubo, i);
            tabu_until[i] = it + params.tenure as u64;
        }

        if it % REFRESH_INTERVAL == 0 {
            state.refresh(qubo);
        }
        if state.energy < best_energy - 1e-12 {
            best_bits.clone_from(&state.x);
            best_energy = qubo.energy(&best_bits);
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if it % block == 0 {
            trace.push(best_energy);
        }
        if params.tenure > 0 && since_improvement >= stall_limit {
            state = FlipState::new(qubo, random_bits(&mut rng, n));
            tabu_until.iter_mut().for_each(|t| *t = 0);
            since_improvement = 0;
        }
    }

    trace.push(best_energy);
    Ok(QuboSolution {
        bits: best_bits,
        energy: best_energy,
        truncated: stopped_early && params.iterations != u64::MAX,
        trace,
    })
}

use std::time::Duration;

use rand::Rng;
use rayon::prelude::*;

use super::anneal::{default_beta_range, geometric_ladder, metropolis_sweep};
use super::{random_bits, stream_rng, Deadline, FlipState, QuboSolution};
use crate::error::{Error, Result};
use crate::qubo::QuadraticModel;

#[derive(Debug, Clone, PartialEq)]
pub struct TemperingParams {
    /// Inverse temperatures, one replica each, ascending.
    pub betas: Vec<f64>,
    pub sweeps: usize,
    pub seed: u64,
    pub time_limit: Option<Duration>,
}

impl TemperingParams {
    /// Replicas on a geometric ladder spanning the default annealing range.
    pub fn geometric(qubo: &QuadraticModel, replicas: usize, sweeps: usize, seed: u64) -> Result<Self> {
        if replicas == 0 {
            return Err(Error::Parameter("parallel tempering needs at least one replica".into()));
        }
        let (b0, b1) = default_beta_range(qubo);
        Ok(Self {
            betas: geometric_ladder(b0, b1, replicas),
            sweeps,
            seed,
            time_limit: None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TemperingResult {
    pub best: QuboSolution,
    pub rounds: usize,
    /// Fraction of accepted exchanges per adjacent pair of temperatures.
    pub swap_rates: Vec<f64>,
}

/// Acceptance probability for exchanging configurations between replicas at
/// `beta_i` and `beta_j` holding energies `e_i` and `e_j`.
pub fn swap_acceptance(beta_i: f64, beta_j: f64, e_i: f64, e_j: f64) -> f64 {
    ((beta_i - beta_j) * (e_i - e_j)).exp().min(1.0)
}

struct Replica {
    state: FlipState,
    rng: rand_chacha::ChaCha8Rng,
}

/// Replica-exchange Monte Carlo. Each round sweeps every replica once at its
/// own temperature, then proposes exchanges between neighbouring
/// temperatures, alternating even and odd pairs.
pub fn parallel_tempering(qubo: &QuadraticModel, params: &TemperingParams) -> Result<TemperingResult> {
    let r = params.betas.len();
    if r == 0 || params.sweeps == 0 {
        return Err(Error::Parameter("parallel tempering needs replicas and sweeps".into()));
    }
    if params.betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(Error::Parameter("inverse temperatures must be positive and finite".into()));
    }
    let n = qubo.num_variables();
    let mut replicas: Vec<Replica> = (0..r)
        .map(|k| {
            let mut rng = stream_rng(params.seed, k as u64);
            let x = random_bits(&mut rng, n);
            Replica {
                state: FlipState::new(qubo, x),
                rng,
            }
        })
        .collect();
    // Slot k holds the configuration currently at temperature k.
    let mut exchange_rng = stream_rng(params.seed, r as u64);
    let mut accepted = vec![0usize; r.saturating_sub(1)];
    let mut proposed = vec![0usize; r.saturating_sub(1)];

    let (mut best_bits, mut best_energy) = replicas
        .iter()
        .map(|rep| (rep.state.x.clone(), rep.state.energy))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("r > 0");
    let mut trace = vec![best_energy];
    let deadline = Deadline::after(params.time_limit);
    let mut stopped_early = false;
    let mut rounds = 0usize;

    while rounds < params.sweeps {
        if rounds > 0 && deadline.expired() {
            stopped_early = true;
            break;
        }
        replicas
            .par_iter_mut()
            .zip(params.betas.par_iter())
            .for_each(|(rep, &beta)| {
                metropolis_sweep(qubo, &mut rep.state, beta, &mut rep.rng);
                rep.state.refresh(qubo);
            });
        for rep in &replicas {
            if rep.state.energy < best_energy {
                best_energy = rep.state.energy;
                best_bits.clone_from(&rep.state.x);
            }
        }
        for k in (rounds % 2..r.saturating_sub(1)).step_by(2) {
            proposed[k] += 1;
            let a = swap_acceptance(
                params.betas[k],
                params.betas[k + 1],
                replicas[k].state.energy,
                replicas[k + 1].state.energy,
            );
            if exchange_rng.gen::<f64>() < a {
                accepted[k] += 1;
                let (lo, hi) = replicas.split_at_mut(k + 1);
                std::mem::swap(&mut lo[k].state, &mut hi[0].state);
            }
        }
        rounds += 1;
        trace.push(best_energy);
    }

    let swap_rates = accepted
        .iter()
        .zip(&proposed)
        .map(|(&a, &p)| if p == 0 { 0.0 } else { a as f64 / p as f64 })
        .collect();
    Ok(TemperingResult {
        best: QuboSolution {
            energy: qubo.energy(&best_bits),
            bits: best_bits,
            truncated: stopped_early && params.sweeps != usize::MAX,
            trace,
        },
        rounds,
        swap_rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acceptance_rule() {
        assert_eq!(swap_acceptance(1.0, 2.0, 3.0, 5.0), 1.0);
        assert!((swap_acceptance(1.0, 2.0, 5.0, 3.0) - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(swap_acceptance(1.0, 1.0, 5.0, 3.0), 1.0);
    }

    #[test]
    fn finds_ground_state_reproducibly() {
        let q = QuadraticModel::from_parts(
            vec![-1.0, -1.0, -1.0, 0.5],
            vec![(0, 1, 2.0), (1, 2, 2.0), (0, 2, 2.0), (2, 3, -1.5)],
            0.0,
        )
        .unwrap();
        let p = TemperingParams::geometric(&q, 4, 200, 11).unwrap();
        let a = parallel_tempering(&q, &p).unwrap();
        let b = parallel_tempering(&q, &p).unwrap();
        assert_eq!(a.best, b.best);
        assert!((a.best.energy + 2.0).abs() < 1e-12);
        assert_eq!(a.rounds, 200);
        assert_eq!(a.swap_rates.len(), 3);
    }
}

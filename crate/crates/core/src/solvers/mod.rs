//! Exact oracles and single-bit-flip metaheuristics.
//!
//! Every stochastic solver derives one independent ChaCha stream per read
//! or replica from the master seed, so results do not depend on how work is
//! scheduled across threads.

mod anneal;
mod exhaustive;
mod tabu;
mod tempering;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use anneal::{default_beta_range, geometric_ladder, simulated_annealing, AnnealSchedule, ReadResult, SampleSet};
pub use exhaustive::{solve_exhaustive_cqm, solve_exhaustive_qubo, exhaustive_minimum, ENUMERATION_BOUND};
pub use tabu::{tabu_search, TabuParams};
pub use tempering::{parallel_tempering, swap_acceptance, TemperingParams, TemperingResult};

use crate::error::{Error, Result};
use crate::partition::{compile_qubo_plain, compile_qubo_sharing, CompiledQubo, Formulation, PartitionModel, PenaltyWeights, SolveReport};
use crate::qubo::QuadraticModel;

/// Best assignment found by a QUBO solver.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboSolution {
    pub bits: Vec<bool>,
    pub energy: f64,
    pub truncated: bool,
    /// Incumbent energy after each checkpoint (read, iteration block or
    /// sweep), non-increasing.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Deadline(Option<Instant>);

impl Deadline {
    pub(crate) fn after(limit: Option<Duration>) -> Self {
        Deadline(limit.map(|d| Instant::now() + d))
    }

    pub(crate) fn expired(&self) -> bool {
        self.0.is_some_and(|t| Instant::now() >= t)
    }
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn random_bits(rng: &mut impl Rng, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.gen::<bool>()).collect()
}

/// Single-flip search state: bits, local fields and running energy.
#[derive(Debug, Clone)]
pub(crate) struct FlipState {
    pub x: Vec<bool>,
    pub fields: Vec<f64>,
    pub energy: f64,
}

impl FlipState {
    pub(crate) fn new(qubo: &QuadraticModel, x: Vec<bool>) -> Self {
        let fields = qubo.local_fields(&x);
        let energy = qubo.energy(&x);
        Self { x, fields, energy }
    }

    #[inline]
    pub(crate) fn delta(&self, qubo: &QuadraticModel, i: usize) -> f64 {
        qubo.flip_delta(&self.x, &self.fields, i)
    }

    #[inline]
    pub(crate) fn flip(&mut self, qubo: &QuadraticModel, i: usize) {
        self.energy += qubo.apply_flip(&mut self.x, &mut self.fields, i);
    }

    /// Recomputes fields and energy from scratch to shed rounding drift.
    pub(crate) fn refresh(&mut self, qubo: &QuadraticModel) {
        self.fields = qubo.local_fields(&self.x);
        self.energy = qubo.energy(&self.x);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    ExhaustiveCqm,
    ExhaustiveQubo,
    Sa,
    Tabu,
    Pt,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::ExhaustiveCqm,
        SolverKind::ExhaustiveQubo,
        SolverKind::Sa,
        SolverKind::Tabu,
        SolverKind::Pt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::ExhaustiveCqm => "exhaustive-cqm",
            SolverKind::ExhaustiveQubo => "exhaustive-qubo",
            SolverKind::Sa => "sa",
            SolverKind::Tabu => "tabu",
            SolverKind::Pt => "pt",
        }
    }

    /// Whether the solver works on the compiled QUBO.
    pub fn needs_qubo(self) -> bool {
        !matches!(self, SolverKind::ExhaustiveCqm)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown solver {s:?}")))
    }
}

/// Run parameters shared by the solver front ends. Unset fields fall back
/// to each solver's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub kind: SolverKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub time_limit_s: Option<f64>,
    #[serde(default)]
    pub reads: Option<usize>,
    #[serde(default)]
    pub sweeps: Option<usize>,
    #[serde(default)]
    pub iterations: Option<u64>,
    #[serde(default)]
    pub tenure: Option<usize>,
    #[serde(default)]
    pub replicas: Option<usize>,
    /// Enumerate slack registers in closed form (exhaustive QUBO only).
    #[serde(default = "default_true")]
    pub closed_form_slack: bool,
}

fn default_true() -> bool {
    true
}

impl SolverSettings {
    pub fn new(kind: SolverKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            time_limit_s: None,
            reads: None,
            sweeps: None,
            iterations: None,
            tenure: None,
            replicas: None,
            closed_form_slack: true,
        }
    }

    pub fn with_time_limit(mut self, seconds: f64) -> Self {
        self.time_limit_s = Some(seconds);
        self
    }

    fn time_limit(&self) -> Result<Option<Duration>> {
        match self.time_limit_s {
            None => Ok(None),
            Some(s) if s > 0.0 && s.is_finite() => Ok(Some(Duration::from_secs_f64(s))),
            Some(s) => Err(Error::Parameter(format!("time limit {s} must be positive"))),
        }
    }

    /// Runs a QUBO solver. With a time limit and no explicit read, iteration
    /// or sweep count, the run continues until the limit.
    pub fn run_qubo(&self, qubo: &QuadraticModel, compiled: Option<&CompiledQubo>) -> Result<QuboSolution> {
        let limit = self.time_limit()?;
        let open_ended = limit.is_some();
        match self.kind {
            SolverKind::ExhaustiveCqm => Err(Error::Usage(
                "exhaustive-cqm works on the constrained model, not a QUBO".into(),
            )),
            SolverKind::ExhaustiveQubo => {
                let blocks = match (compiled, self.closed_form_slack) {
                    (Some(c), true) => c.slack_blocks.as_slice(),
                    _ => &[],
                };
                exhaustive_minimum(qubo, blocks)
            }
            SolverKind::Sa => {
                let mut schedule = AnnealSchedule::new(
                    self.reads.unwrap_or(if open_ended { usize::MAX } else { 100 }),
                    self.sweeps.unwrap_or(1000),
                    self.seed,
                );
                schedule.time_limit = limit;
                Ok(simulated_annealing(qubo, &schedule)?.best)
            }
            SolverKind::Tabu => {
                let mut params = TabuParams::new(
                    self.iterations
                        .unwrap_or(if open_ended { u64::MAX } else { 100_000 }),
                    self.seed,
                );
                if let Some(t) = self.tenure {
                    params.tenure = t;
                } else {
                    params.tenure = TabuParams::default_tenure(qubo.num_variables());
                }
                params.time_limit = limit;
                tabu_search(qubo, &params)
            }
            SolverKind::Pt => {
                let replicas = self.replicas.unwrap_or(32);
                let mut params = TemperingParams::geometric(
                    qubo,
                    replicas,
                    self.sweeps.unwrap_or(if open_ended { usize::MAX } else { 1000 }),
                    self.seed,
                )?;
                params.time_limit = limit;
                Ok(parallel_tempering(qubo, &params)?.best)
            }
        }
    }
}

/// Compiles (when needed), solves and evaluates one partition model.
pub fn solve_partition(
    model: &PartitionModel,
    formulation: Formulation,
    weights: &PenaltyWeights,
    settings: &SolverSettings,
) -> Result<SolveReport> {
    let start = Instant::now();
    if settings.kind == SolverKind::ExhaustiveCqm {
        let mut report = solve_exhaustive_cqm(model)?;
        report.wall_time_s = start.elapsed().as_secs_f64();
        return Ok(report);
    }
    let compiled = match formulation {
        Formulation::Plain => compile_qubo_plain(model, weights)?,
        Formulation::Sharing => compile_qubo_sharing(model, weights)?,
    };
    let solution = settings.run_qubo(&compiled.qubo, Some(&compiled))?;
    compiled.report(
        model,
        &solution.bits,
        settings.kind.name(),
        start.elapsed().as_secs_f64(),
        solution.truncated,
    )
}

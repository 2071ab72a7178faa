//! Two-stage grid search for the Lagrange multipliers of a compiled model.
//!
//! Stage 1 scans a logarithmic grid over every multiplier jointly and picks
//! the order of magnitude of each. Stage 2 scans a linear grid inside the
//! winning decade. A grid point is judged by the original objective and the
//! number of violated constraints of the best sample a short solver run
//! finds; the tuner returns the zero-violation point with the lowest
//! objective, breaking ties towards the lexicographically smaller
//! multiplier vector.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{compile_qubo_plain, compile_qubo_sharing, CompiledQubo, Formulation, PartitionModel, PenaltyWeights};
use crate::solvers::{exhaustive_minimum, simulated_annealing, AnnealSchedule};

/// How a grid point is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluator {
    /// Best read of a short simulated annealing run.
    Annealing { reads: usize, sweeps: usize },
    /// Exact QUBO minimum, for instances small enough to enumerate.
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub min_exponent: i32,
    pub max_exponent: i32,
    pub points_per_decade: usize,
    pub linear_points: usize,
    pub evaluator: Evaluator,
    pub seed: u64,
    pub formulation: Formulation,
    pub slack_bits: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            min_exponent: -3,
            max_exponent: 3,
            points_per_decade: 1,
            linear_points: 10,
            evaluator: Evaluator::Annealing { reads: 20, sweeps: 500 },
            seed: 0,
            formulation: Formulation::Plain,
            slack_bits: 10,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.max_exponent < self.min_exponent || self.points_per_decade == 0 || self.linear_points == 0 {
            return Err(Error::Parameter("grid ranges must be non-empty".into()));
        }
        if let Evaluator::Annealing { reads, sweeps } = self.evaluator {
            if reads == 0 || sweeps == 0 {
                return Err(Error::Parameter("grid budget needs at least one read and one sweep".into()));
            }
        }
        Ok(())
    }

    /// Number of tuned multipliers: two, or three with electricity sharing.
    pub fn dimensions(&self) -> usize {
        match self.formulation {
            Formulation::Plain => 2,
            Formulation::Sharing => 3,
        }
    }

    /// Candidate values of one multiplier on the logarithmic grid.
    pub fn log_axis(&self) -> Vec<f64> {
        let ppd = self.points_per_decade as i32;
        (self.min_exponent * ppd..=self.max_exponent * ppd)
            .map(|s| 10f64.powf(s as f64 / ppd as f64))
            .collect()
    }

    /// Linear grid from `low` up to the next logarithmic grid step.
    pub fn linear_axis(&self, low: f64) -> Vec<f64> {
        let high = low * 10f64.powf(1.0 / self.points_per_decade as f64);
        let n = self.linear_points;
        if n == 1 {
            return vec![low];
        }
        (0..n).map(|i| low + (high - low) * i as f64 / (n - 1) as f64).collect()
    }

    fn weights(&self, lambdas: &[f64]) -> PenaltyWeights {
        let w = PenaltyWeights::new(lambdas[0], lambdas[1], self.slack_bits);
        match lambdas.get(2) {
            Some(&aux) => w.with_aux(aux),
            None => w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Logarithmic,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub stage: Stage,
    pub lambdas: Vec<f64>,
    pub objective: f64,
    pub violations: usize,
}

#[derive(Debug, Clone)]
pub struct TuningOutcome {
    pub weights: PenaltyWeights,
    pub objective: f64,
    pub trace: Vec<GridPoint>,
}

impl TuningOutcome {
    /// One row per evaluated point: multipliers, objective, violations, stage.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        write_trace_csv(&self.trace, out)
    }
}

pub fn write_trace_csv<W: Write>(trace: &[GridPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda_oh", "lambda_bc", "lambda_aux", "objective", "violations", "stage"])?;
    for p in trace {
        let aux = p.lambdas.get(2).map(|a| a.to_string()).unwrap_or_default();
        let stage = match p.stage {
            Stage::Logarithmic => "log",
            Stage::Linear => "linear",
        };
        w.write_record([
            p.lambdas[0].to_string(),
            p.lambdas[1].to_string(),
            aux,
            p.objective.to_string(),
            p.violations.to_string(),
            stage.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}

fn compile(model: &PartitionModel, formulation: Formulation, weights: &PenaltyWeights) -> Result<CompiledQubo> {
    match formulation {
        Formulation::Plain => compile_qubo_plain(model, weights),
        Formulation::Sharing => compile_qubo_sharing(model, weights),
    }
}

/// Compiles, solves with the evaluator and scores the decoded best sample:
/// original objective and total violated constraints. For the sharing
/// formulation, auxiliary variables that disagree with their product count
/// as violations too.
pub fn evaluate_grid_point(
    model: &PartitionModel,
    formulation: Formulation,
    weights: &PenaltyWeights,
    evaluator: Evaluator,
    seed: u64,
) -> Result<(f64, usize)> {
    let compiled = compile(model, formulation, weights)?;
    let bits = match evaluator {
        Evaluator::Annealing { reads, sweeps } => {
            simulated_annealing(&compiled.qubo, &AnnealSchedule::new(reads, sweeps, seed))?
                .best
                .bits
        }
        Evaluator::Exhaustive => exhaustive_minimum(&compiled.qubo, &compiled.slack_blocks)?.bits,
    };
    let report = compiled.report(model, &bits, "tuner", 0.0, false)?;
    Ok((
        report.objective,
        report.violations() + compiled.aux_inconsistencies(model, &bits),
    ))
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Selection order among zero-violation points.
fn better_feasible(a: &GridPoint, b: &GridPoint) -> Ordering {
    a.objective
        .total_cmp(&b.objective)
        .then_with(|| lex(&a.lambdas, &b.lambdas))
}

/// Selection order when no point is feasible: fewest violations first.
fn better_any(a: &GridPoint, b: &GridPoint) -> Ordering {
    a.violations.cmp(&b.violations).then_with(|| better_feasible(a, b))
}

fn scan(model: &PartitionModel, spec: &GridSpec, stage: Stage, points: Vec<Vec<f64>>) -> Result<Vec<GridPoint>> {
    points
        .into_par_iter()
        .map(|lambdas| {
            let (objective, violations) =
                evaluate_grid_point(model, spec.formulation, &spec.weights(&lambdas), spec.evaluator, spec.seed)?;
            Ok(GridPoint {
                stage,
                lambdas,
                objective,
                violations,
            })
        })
        .collect()
}

fn pick(points: &[GridPoint]) -> (&GridPoint, bool) {
    match points.iter().filter(|p| p.violations == 0).min_by(|a, b| better_feasible(a, b)) {
        Some(p) => (p, true),
        None => (points.iter().min_by(|a, b| better_any(a, b)).expect("non-empty grid"), false),
    }
}

/// Runs both stages and returns the selected multipliers with the full
/// trace. Fails with [`Error::TuningFailure`] when no evaluated point is
/// free of violations.
pub fn grid_search_two_stage(model: &PartitionModel, spec: &GridSpec) -> Result<TuningOutcome> {
    spec.validate()?;
    let dims = spec.dimensions();
    let log_axis = spec.log_axis();
    let mut trace = scan(model, spec, Stage::Logarithmic, cartesian(&vec![log_axis; dims]))?;

    let (anchor, _) = pick(&trace);
    let axes: Vec<Vec<f64>> = anchor.lambdas.iter().map(|&l| spec.linear_axis(l)).collect();
    let stage2 = scan(model, spec, Stage::Linear, cartesian(&axes))?;
    trace.extend(stage2);

    let (best, feasible) = pick(&trace);
    if !feasible {
        return Err(Error::TuningFailure {
            lambdas: best.lambdas.clone(),
            violations: best.violations,
        });
    }
    let weights = spec.weights(&best.lambdas);
    let objective = best.objective;
    Ok(TuningOutcome {
        weights,
        objective,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{PowerGraph, Vertex};

    fn path(weights: &[f64]) -> PartitionModel {
        let vertices = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| Vertex {
                id: format!("n{i}"),
                surplus: w,
                position: None,
            })
            .collect();
        let edges = (1..weights.len()).map(|i| (i - 1, i, 1.0)).collect();
        PartitionModel::new(PowerGraph::new(vertices, edges).unwrap(), 2, 1.0, 10.0, 0.5).unwrap()
    }

    #[test]
    fn axes() {
        let spec = GridSpec::default();
        let log = spec.log_axis();
        assert_eq!(log.len(), 7);
        assert!((log[0] - 1e-3).abs() < 1e-15 && (log[6] - 1e3).abs() < 1e-9);
        let lin = spec.linear_axis(10.0);
        assert_eq!(lin.len(), 10);
        assert_eq!(lin[0], 10.0);
        assert!((lin[9] - 100.0).abs() < 1e-9);
        assert_eq!(cartesian(&[vec![1.0, 2.0], vec![3.0, 4.0, 5.0]]).len(), 6);
    }

    #[test]
    fn zero_one_hot_weight_leaves_vertices_unassigned() {
        let m = path(&[0.2, 0.8, 0.1, 0.6]);
        let w = PenaltyWeights::new(0.0, 1.0, 4);
        let (_, violations) = evaluate_grid_point(&m, Formulation::Plain, &w, Evaluator::Exhaustive, 0).unwrap();
        assert!(violations > 0);
    }

    #[test]
    fn tie_break_prefers_smaller_lambdas() {
        let a = GridPoint {
            stage: Stage::Linear,
            lambdas: vec![1.0, 5.0],
            objective: 3.0,
            violations: 0,
        };
        let b = GridPoint {
            lambdas: vec![1.0, 2.0],
            ..a.clone()
        };
        assert_eq!(pick(&[a, b.clone()]).0, &b);
    }

    #[test]
    fn failure_carries_best_point() {
        // Multipliers this small never enforce one-hot assignment.
        let m = path(&[0.2, 0.8, 0.1]);
        let spec = GridSpec {
            min_exponent: -3,
            max_exponent: -3,
            linear_points: 1,
            evaluator: Evaluator::Exhaustive,
            slack_bits: 3,
            ..GridSpec::default()
        };
        match grid_search_two_stage(&m, &spec) {
            Err(Error::TuningFailure { lambdas, violations }) => {
                assert_eq!(lambdas.len(), 2);
                assert!(violations > 0);
            }
            other => panic!("expected tuning failure, got {other:?}"),
        }
    }
}

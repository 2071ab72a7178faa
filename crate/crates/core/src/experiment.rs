//! Batch experiments: for every partition count and solver, tune (when
//! asked), compile, solve within the budget, re-evaluate the decoded
//! assignment against the constrained model and record the result.
//!
//! A run writes these files to the output directory:
//!
//! * `results.csv` with columns `P,solver,objective,violations,wall_time_s,status`
//! * `plot.csv` with columns `P,solver,objective`, sorted by `P`
//! * `summary.txt`, an objective table with one row per `P` and one column per solver
//! * `records.json` holding every record with its decoded partition
//! * `tuning_P<p>.csv` for each tuned partition count
//! * `metadata.json` with the configuration and wall-clock timestamps
//!
//! Everything except `metadata.json` and the timing column is a pure
//! function of the configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    generate_clique_pair, generate_random_graph, load_network_files, CliquePairSpec, PowerGraph, WeightPolicy,
};
use crate::partition::{Formulation, PartitionModel, PenaltyWeights, SolutionExport};
use crate::solvers::{solve_partition, SolverKind, SolverSettings};
use crate::tuner::{grid_search_two_stage, GridSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSource {
    Files {
        vertices: PathBuf,
        links: PathBuf,
        #[serde(default)]
        weights: WeightPolicy,
    },
    CliquePair {
        size: usize,
    },
    Random {
        vertices: usize,
        edge_probability: f64,
    },
}

impl InstanceSource {
    /// Builds the graph. Generated instances draw from `seed`.
    pub fn load(&self, seed: u64) -> Result<PowerGraph> {
        match self {
            InstanceSource::Files {
                vertices,
                links,
                weights,
            } => load_network_files(vertices, links, weights),
            InstanceSource::CliquePair { size } => generate_clique_pair(&CliquePairSpec::new(*size, seed)),
            InstanceSource::Random {
                vertices,
                edge_probability,
            } => generate_random_graph(*vertices, *edge_probability, seed),
        }
    }
}

/// Penalty settings. Multipliers left unset are tuned when `tune` is on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySettings {
    #[serde(default = "default_slack_bits")]
    pub slack_bits: u32,
    #[serde(default)]
    pub lambda_oh: Option<f64>,
    #[serde(default)]
    pub lambda_bc: Option<f64>,
    #[serde(default)]
    pub lambda_aux: Option<f64>,
    #[serde(default)]
    pub tune: bool,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

fn default_slack_bits() -> u32 {
    10
}

impl Default for PenaltySettings {
    fn default() -> Self {
        Self {
            slack_bits: default_slack_bits(),
            lambda_oh: None,
            lambda_bc: None,
            lambda_aux: None,
            tune: false,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    pub partitions: Vec<usize>,
    #[serde(default = "default_formulation")]
    pub formulation: Formulation,
    #[serde(default)]
    pub penalty: PenaltySettings,
    pub solvers: Vec<SolverSettings>,
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_alpha() -> f64 {
    1.0
}

fn default_beta() -> f64 {
    10.0
}

fn default_threshold() -> f64 {
    0.5
}

fn default_formulation() -> Formulation {
    Formulation::Plain
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        // Instance tables named relative to the configuration file.
        if let (InstanceSource::Files { vertices, links, .. }, Some(base)) = (&mut config.instance, path.parent()) {
            for table in [vertices, links] {
                if table.is_relative() && base.join(&*table).exists() {
                    *table = base.join(&*table);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::Config("at least one solver is required".into()));
        }
        if self.partitions.is_empty() || self.partitions.contains(&0) {
            return Err(Error::Config("partition counts must be at least 1".into()));
        }
        for s in &self.solvers {
            if let Some(t) = s.time_limit_s {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Error::Config(format!("{}: time limit must be positive", s.kind)));
                }
            }
            if s.reads == Some(0) || s.sweeps == Some(0) || s.iterations == Some(0) || s.replicas == Some(0) {
                return Err(Error::Config(format!("{}: budgets must be positive", s.kind)));
            }
        }
        let needs_qubo = self.solvers.iter().any(|s| s.kind.needs_qubo());
        let p = &self.penalty;
        let missing = p.lambda_oh.is_none()
            || p.lambda_bc.is_none()
            || (self.formulation == Formulation::Sharing && p.lambda_aux.is_none());
        if needs_qubo && missing && !p.tune {
            return Err(Error::Config(
                "QUBO solvers need lambda_oh and lambda_bc (and lambda_aux with sharing) or tune = true".into(),
            ));
        }
        Ok(())
    }

    fn fixed_weights(&self) -> Option<PenaltyWeights> {
        let p = &self.penalty;
        let w = PenaltyWeights::new(p.lambda_oh?, p.lambda_bc?, p.slack_bits);
        match self.formulation {
            Formulation::Plain => Some(w.with_aux(p.lambda_aux.unwrap_or(0.0))),
            Formulation::Sharing => Some(w.with_aux(p.lambda_aux?)),
        }
    }

    fn grid(&self) -> GridSpec {
        let mut grid = self.penalty.grid.clone().unwrap_or_default();
        grid.formulation = self.formulation;
        grid.slack_bits = self.penalty.slack_bits;
        grid.seed = self.seed;
        grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Decoded solution satisfies every constraint.
    Ok,
    /// Decoded solution violates constraints; counts are still reported.
    Infeasible,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Infeasible => "infeasible",
            Status::Failed => "failed",
        }
    }
}

/// Model parameters copied into every record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMetadata {
    pub alpha: f64,
    pub beta: f64,
    pub threshold: f64,
    pub slack_bits: u32,
    pub formulation: Formulation,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub parts: usize,
    pub solver: String,
    pub objective: Option<f64>,
    pub violations: Option<usize>,
    pub wall_time_s: f64,
    pub status: Status,
    #[serde(default)]
    pub truncated: bool,
    pub weights: Option<PenaltyWeights>,
    pub error: Option<String>,
    pub solution: Option<SolutionExport>,
    pub metadata: RecordMetadata,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentBundle {
    /// Solver column order for the summary table.
    pub solvers: Vec<String>,
    pub records: Vec<ResultRecord>,
}

impl ExperimentBundle {
    pub fn has_failures(&self) -> bool {
        self.records.iter().any(|r| r.status == Status::Failed)
    }
}

fn failed(parts: usize, solver: &str, err: &Error, meta: &RecordMetadata) -> ResultRecord {
    ResultRecord {
        parts,
        solver: solver.to_string(),
        objective: None,
        violations: None,
        wall_time_s: 0.0,
        status: Status::Failed,
        truncated: false,
        weights: None,
        error: Some(err.to_string()),
        solution: None,
        metadata: meta.clone(),
    }
}

/// Runs every (P, solver) cell in order. Per-cell problems (tuning
/// failure, size guard, degenerate instance) become failed records; only an
/// unusable configuration or instance aborts the run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentBundle> {
    config.validate()?;
    let graph = config.instance.load(config.seed)?;
    let base = PartitionModel::new(graph, 1, config.alpha, config.beta, config.threshold)?;
    let meta = RecordMetadata {
        alpha: config.alpha,
        beta: config.beta,
        threshold: config.threshold,
        slack_bits: config.penalty.slack_bits,
        formulation: config.formulation,
        seed: config.seed,
    };
    let mut bundle = ExperimentBundle {
        solvers: config.solvers.iter().map(|s| s.kind.name().to_string()).collect(),
        records: Vec::new(),
    };
    let needs_qubo = config.solvers.iter().any(|s| s.kind.needs_qubo());

    for &parts in &config.partitions {
        let model = base.with_parts(parts)?;
        let weights: std::result::Result<Option<PenaltyWeights>, Error> = if !needs_qubo {
            Ok(None)
        } else if let Some(w) = config.fixed_weights() {
            Ok(Some(w))
        } else {
            info!("tuning multipliers for P={parts}");
            match grid_search_two_stage(&model, &config.grid()) {
                Ok(outcome) => {
                    let path = config.output.join(format!("tuning_P{parts}.csv"));
                    fs::create_dir_all(&config.output).map_err(|e| Error::io(&config.output, e))?;
                    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                    outcome.write_trace_csv(file)?;
                    Ok(Some(outcome.weights))
                }
                Err(e) => {
                    warn!("tuning failed for P={parts}: {e}");
                    Err(e)
                }
            }
        };

        for settings in &config.solvers {
            let mut settings = settings.clone();
            settings.seed = config.seed;
            let name = settings.kind.name();
            let cell_weights = match (&weights, settings.kind) {
                (_, SolverKind::ExhaustiveCqm) => PenaltyWeights::new(0.0, 0.0, config.penalty.slack_bits),
                (Ok(Some(w)), _) => *w,
                (Err(e), _) => {
                    bundle.records.push(failed(parts, name, e, &meta));
                    continue;
                }
                (Ok(None), _) => unreachable!("QUBO solvers always receive weights"),
            };
            info!("solving P={parts} with {name}");
            match solve_partition(&model, config.formulation, &cell_weights, &settings) {
                Ok(report) => {
                    let violations = report.violations();
                    bundle.records.push(ResultRecord {
                        parts,
                        solver: name.to_string(),
                        objective: Some(report.objective),
                        violations: Some(violations),
                        wall_time_s: report.wall_time_s,
                        status: if violations == 0 { Status::Ok } else { Status::Infeasible },
                        truncated: report.truncated,
                        weights: settings.kind.needs_qubo().then_some(cell_weights),
                        error: None,
                        solution: Some(report.export(model.graph())),
                        metadata: meta.clone(),
                    });
                }
                Err(e) => {
                    warn!("P={parts} {name}: {e}");
                    bundle.records.push(failed(parts, name, &e, &meta));
                }
            }
        }
    }
    Ok(bundle)
}

fn fmt_objective(o: Option<f64>) -> String {
    o.map(|v| v.to_string()).unwrap_or_default()
}

pub fn results_csv(bundle: &ExperimentBundle) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["P", "solver", "objective", "violations", "wall_time_s", "status"])?;
    for r in &bundle.records {
        w.write_record([
            r.parts.to_string(),
            r.solver.clone(),
            fmt_objective(r.objective),
            r.violations.map(|v| v.to_string()).unwrap_or_default(),
            format!("{:.6}", r.wall_time_s),
            r.status.as_str().to_string(),
        ])?;
    }
    finish_csv(w)
}

pub fn plot_csv(bundle: &ExperimentBundle) -> Result<String> {
    let mut rows: Vec<&ResultRecord> = bundle.records.iter().collect();
    rows.sort_by_key(|r| r.parts);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["P", "solver", "objective"])?;
    for r in rows {
        w.write_record([r.parts.to_string(), r.solver.clone(), fmt_objective(r.objective)])?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Plain-text table: one row per P, one column per solver. Failed cells show
/// `failed`, infeasible ones carry a `*`.
pub fn summary_table(bundle: &ExperimentBundle) -> String {
    let mut cells: BTreeMap<usize, BTreeMap<&str, String>> = BTreeMap::new();
    for r in &bundle.records {
        let text = match (r.status, r.objective) {
            (Status::Failed, _) | (_, None) => "failed".to_string(),
            (Status::Infeasible, Some(o)) => format!("{o}*"),
            (Status::Ok, Some(o)) => o.to_string(),
        };
        cells.entry(r.parts).or_default().insert(r.solver.as_str(), text);
    }
    let mut header = vec!["P".to_string()];
    header.extend(bundle.solvers.iter().cloned());
    let mut rows = vec![header];
    for (p, row) in &cells {
        let mut line = vec![p.to_string()];
        line.extend(bundle.solvers.iter().map(|s| row.get(s.as_str()).cloned().unwrap_or_default()));
        rows.push(line);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
    }
    if bundle.records.iter().any(|r| r.status == Status::Infeasible) {
        out.push_str("* solution violates constraints\n");
    }
    out
}

fn write(path: PathBuf, contents: &[u8]) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the CSV, table and JSON artifacts of a bundle into `dir`.
pub fn emit_report(bundle: &ExperimentBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir.join("results.csv"), results_csv(bundle)?.as_bytes())?;
    write(dir.join("plot.csv"), plot_csv(bundle)?.as_bytes())?;
    write(dir.join("summary.txt"), summary_table(bundle).as_bytes())?;
    write(dir.join("records.json"), &serde_json::to_vec_pretty(&bundle.records)?)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct RunMetadata<'a> {
    started_unix_s: f64,
    finished_unix_s: f64,
    config: &'a ExperimentConfig,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Runs the experiment, writes the report and metadata, and returns the
/// bundle.
pub fn run_and_report(config: &ExperimentConfig) -> Result<ExperimentBundle> {
    let started = unix_now();
    let bundle = run_experiment(config)?;
    emit_report(&bundle, &config.output)?;
    let meta = RunMetadata {
        started_unix_s: started,
        finished_unix_s: unix_now(),
        config,
    };
    write(config.output.join("metadata.json"), &serde_json::to_vec_pretty(&meta)?)?;
    Ok(bundle)
}

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gridpart::experiment::{run_and_report, summary_table, ExperimentConfig, InstanceSource, PenaltySettings};
use gridpart::graph::{write_network_files, WeightPolicy};
use gridpart::partition::{Formulation, PartitionModel, PenaltyWeights};
use gridpart::solvers::{solve_partition, SolverKind, SolverSettings};
use gridpart::tuner::{grid_search_two_stage, Evaluator, GridSpec};
use gridpart::Error;

/// Power-grid partitioning: generate instances, tune penalties, solve and
/// compare solvers.
#[derive(Parser)]
#[command(name = "gridpart", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic instance as vertices.csv and links.csv.
    Generate(GenerateArgs),
    /// Grid-search the penalty multipliers for one partition count.
    Tune(TuneArgs),
    /// Solve one partition count with one solver.
    Solve(SolveArgs),
    /// Run every solver over a range of partition counts and write a report.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Two cliques of N vertices joined by one bridge.
    #[arg(long, value_name = "N", conflicts_with = "random")]
    clique_pair: Option<usize>,
    /// Connected random graph with N vertices and edge probability P_EDGE.
    #[arg(long, num_args = 2, value_names = ["N", "P_EDGE"])]
    random: Option<Vec<String>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct InstanceArgs {
    #[arg(long, requires = "links")]
    vertices: Option<PathBuf>,
    #[arg(long, requires = "vertices")]
    links: Option<PathBuf>,
    /// Draw vertex surpluses uniformly from this seed instead of reading the
    /// surplus column.
    #[arg(long)]
    uniform_weights: Option<u64>,
    #[arg(long, value_name = "N")]
    clique_pair: Option<usize>,
    #[arg(long, num_args = 2, value_names = ["N", "P_EDGE"])]
    random: Option<Vec<String>>,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 10.0)]
    beta: f64,
    /// Surplus threshold.
    #[arg(long = "k", default_value_t = 0.5)]
    threshold: f64,
    /// Slack bits per balancing constraint.
    #[arg(long = "K", default_value_t = 10)]
    slack_bits: u32,
    /// Model electricity sharing between partitions.
    #[arg(long)]
    sharing: bool,
    #[arg(long)]
    lambda_oh: Option<f64>,
    #[arg(long)]
    lambda_bc: Option<f64>,
    #[arg(long)]
    lambda_aux: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ModelArgs {
    fn formulation(&self) -> Formulation {
        if self.sharing {
            Formulation::Sharing
        } else {
            Formulation::Plain
        }
    }
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 2)]
    partitions: usize,
    /// Annealing reads per grid point.
    #[arg(long, default_value_t = 20)]
    reads: usize,
    /// Score grid points by exact enumeration instead of annealing.
    #[arg(long)]
    exact: bool,
    /// Write the tuning trace CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 2)]
    partitions: usize,
    #[arg(long, default_value = "sa")]
    solver: String,
    /// Budget in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    reads: Option<usize>,
    /// Write the solution JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// TOML experiment configuration; other flags are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Partition counts: `4`, `2..6` or `2,3,5`.
    #[arg(long, default_value = "2")]
    partitions: String,
    /// Comma-separated solver list.
    #[arg(long, default_value = "sa,tabu,pt")]
    solver: String,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    reads: Option<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

fn parse_random(values: &[String]) -> Result<(usize, f64), Error> {
    let n = values[0]
        .parse()
        .map_err(|_| Error::Config(format!("invalid vertex count {:?}", values[0])))?;
    let p = values[1]
        .parse()
        .map_err(|_| Error::Config(format!("invalid edge probability {:?}", values[1])))?;
    Ok((n, p))
}

fn instance_source(args: &InstanceArgs) -> Result<InstanceSource, Error> {
    match (&args.vertices, &args.links, args.clique_pair, &args.random) {
        (Some(v), Some(l), None, None) => Ok(InstanceSource::Files {
            vertices: v.clone(),
            links: l.clone(),
            weights: args
                .uniform_weights
                .map_or_else(WeightPolicy::default, |seed| WeightPolicy::Uniform { seed }),
        }),
        (None, None, Some(size), None) => Ok(InstanceSource::CliquePair { size }),
        (None, None, None, Some(r)) => {
            let (vertices, edge_probability) = parse_random(r)?;
            Ok(InstanceSource::Random {
                vertices,
                edge_probability,
            })
        }
        _ => Err(Error::Config(
            "choose exactly one instance: --vertices/--links, --clique-pair or --random".into(),
        )),
    }
}

fn build_model(instance: &InstanceArgs, model: &ModelArgs, parts: usize) -> Result<PartitionModel, Error> {
    let graph = instance_source(instance)?.load(model.seed)?;
    PartitionModel::new(graph, parts, model.alpha, model.beta, model.threshold)
}

fn grid_spec(model: &ModelArgs, reads: usize, exact: bool) -> GridSpec {
    GridSpec {
        evaluator: if exact {
            Evaluator::Exhaustive
        } else {
            Evaluator::Annealing { reads, sweeps: 500 }
        },
        seed: model.seed,
        formulation: model.formulation(),
        slack_bits: model.slack_bits,
        ..GridSpec::default()
    }
}

fn fixed_weights(model: &ModelArgs) -> Option<PenaltyWeights> {
    let w = PenaltyWeights::new(model.lambda_oh?, model.lambda_bc?, model.slack_bits);
    match model.formulation() {
        Formulation::Plain => Some(w),
        Formulation::Sharing => Some(w.with_aux(model.lambda_aux?)),
    }
}

fn parse_partitions(text: &str) -> Result<Vec<usize>, Error> {
    let bad = || Error::Config(format!("invalid partition list {text:?}"));
    if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn generate(args: GenerateArgs) -> Result<ExitCode, Error> {
    let source = match (args.clique_pair, &args.random) {
        (Some(size), None) => InstanceSource::CliquePair { size },
        (None, Some(r)) => {
            let (vertices, edge_probability) = parse_random(r)?;
            InstanceSource::Random {
                vertices,
                edge_probability,
            }
        }
        _ => return Err(Error::Config("generate needs --clique-pair N or --random N P_EDGE".into())),
    };
    let graph = source.load(args.seed)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::Config(format!("{}: {e}", args.out.display())))?;
    let (v, l) = (args.out.join("vertices.csv"), args.out.join("links.csv"));
    write_network_files(&graph, &v, &l)?;
    println!(
        "wrote {} vertices to {} and {} links to {}",
        graph.vertex_count(),
        v.display(),
        graph.edge_count(),
        l.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn tune(args: TuneArgs) -> Result<ExitCode, Error> {
    let model = build_model(&args.instance, &args.model, args.partitions)?;
    let outcome = grid_search_two_stage(&model, &grid_spec(&args.model, args.reads, args.exact))?;
    if let Some(path) = &args.out {
        let file = fs::File::create(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        outcome.write_trace_csv(file)?;
    }
    let w = outcome.weights;
    println!("lambda_oh = {}", w.one_hot);
    println!("lambda_bc = {}", w.balancing);
    if args.model.sharing {
        println!("lambda_aux = {}", w.aux);
    }
    println!("objective = {}", outcome.objective);
    Ok(ExitCode::SUCCESS)
}

fn solve(args: SolveArgs) -> Result<ExitCode, Error> {
    let kind: SolverKind = args.solver.parse()?;
    let model = build_model(&args.instance, &args.model, args.partitions)?;
    let weights = match fixed_weights(&args.model) {
        Some(w) => w,
        None if kind.needs_qubo() => {
            grid_search_two_stage(&model, &grid_spec(&args.model, 20, false))?.weights
        }
        None => PenaltyWeights::new(0.0, 0.0, args.model.slack_bits),
    };
    let mut settings = SolverSettings::new(kind, args.model.seed);
    settings.time_limit_s = args.time_limit;
    settings.reads = args.reads;
    let report = solve_partition(&model, args.model.formulation(), &weights, &settings)?;
    match &args.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            report.write_json(model.graph(), file)?;
        }
        None => {
            report.write_json(model.graph(), std::io::stdout())?;
            println!();
        }
    }
    eprintln!(
        "objective {} with {} violations in {:.3}s",
        report.objective,
        report.violations(),
        report.wall_time_s
    );
    Ok(if report.is_feasible() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn compare(args: CompareArgs) -> Result<ExitCode, Error> {
    let config = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => {
            let solvers = args
                .solver
                .split(',')
                .map(|name| {
                    let mut s = SolverSettings::new(name.trim().parse()?, args.model.seed);
                    s.time_limit_s = args.time_limit;
                    s.reads = args.reads;
                    Ok(s)
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let m = &args.model;
            let config = ExperimentConfig {
                instance: instance_source(&args.instance)?,
                alpha: m.alpha,
                beta: m.beta,
                threshold: m.threshold,
                partitions: parse_partitions(&args.partitions)?,
                formulation: m.formulation(),
                penalty: PenaltySettings {
                    slack_bits: m.slack_bits,
                    lambda_oh: m.lambda_oh,
                    lambda_bc: m.lambda_bc,
                    lambda_aux: m.lambda_aux,
                    tune: true,
                    grid: None,
                },
                solvers,
                output: args.out.clone(),
                seed: m.seed,
            };
            config.validate()?;
            config
        }
    };
    let bundle = run_and_report(&config)?;
    print!("{}", summary_table(&bundle));
    println!("report written to {}", config.output.display());
    Ok(if bundle.has_failures() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Tune(a) => tune(a),
        Command::Solve(a) => solve(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(code) => code,
        Err(e @ Error::TuningFailure { .. }) | Err(e @ Error::SizeGuard { .. }) | Err(e @ Error::Infeasible) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

//! Runs the two-stage multiplier search and writes its trace as CSV.

use gridpart::graph::generate_random_graph;
use gridpart::partition::PartitionModel;
use gridpart::tuner::{grid_search_two_stage, GridSpec, Stage};

fn main() -> gridpart::Result<()> {
    let model = PartitionModel::new(generate_random_graph(8, 0.4, 11)?, 2, 1.0, 10.0, 0.5)?;
    let outcome = grid_search_two_stage(&model, &GridSpec::default())?;
    let feasible = |stage| outcome.trace.iter().filter(|p| p.stage == stage && p.violations == 0).count();
    println!("log stage:    {} feasible points", feasible(Stage::Logarithmic));
    println!("linear stage: {} feasible points", feasible(Stage::Linear));
    println!(
        "chosen lambda_oh = {}, lambda_bc = {}, objective {}",
        outcome.weights.one_hot, outcome.weights.balancing, outcome.objective
    );
    let path = std::env::temp_dir().join("gridpart_tuning_trace.csv");
    outcome.write_trace_csv(std::fs::File::create(&path).map_err(|e| gridpart::Error::io(&path, e))?)?;
    println!("trace written to {}", path.display());
    Ok(())
}

//! Tunes the multipliers on small random instances and checks that the
//! exhaustive constrained optimum equals the exhaustive QUBO optimum.

use gridpart::graph::generate_random_graph;
use gridpart::partition::{compile_qubo_plain, PartitionModel};
use gridpart::solvers::{solve_exhaustive_cqm, solve_exhaustive_qubo};
use gridpart::tuner::{grid_search_two_stage, Evaluator, GridSpec};

fn main() -> gridpart::Result<()> {
    let spec = GridSpec {
        evaluator: Evaluator::Exhaustive,
        slack_bits: 6,
        ..GridSpec::default()
    };
    for (n, seed) in [(4, 1), (5, 2), (6, 3), (7, 4)] {
        let model = PartitionModel::new(generate_random_graph(n, 0.5, seed)?, 2, 1.0, 10.0, 0.5)?;
        let cqm = match solve_exhaustive_cqm(&model) {
            Ok(r) => r,
            Err(e) => {
                println!("N = {n}: {e}");
                continue;
            }
        };
        let tuned = grid_search_two_stage(&model, &spec)?;
        let compiled = compile_qubo_plain(&model, &tuned.weights)?;
        let qubo = solve_exhaustive_qubo(&model, &compiled, true)?;
        println!(
            "N = {n}: lambda = ({}, {}), constrained {} vs QUBO {} -> {}",
            tuned.weights.one_hot,
            tuned.weights.balancing,
            cqm.objective,
            qubo.objective,
            if qubo.objective == cqm.objective { "equal" } else { "different" }
        );
    }
    Ok(())
}

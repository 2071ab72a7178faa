//! Runs simulated annealing on two-clique graphs and counts how many reads
//! recover the split between the cliques.

use gridpart::graph::{generate_clique_pair, CliquePairSpec};
use gridpart::partition::{compile_qubo_plain, decode_assignment, PartitionModel};
use gridpart::solvers::{simulated_annealing, AnnealSchedule};
use gridpart::tuner::{grid_search_two_stage, GridSpec};

fn main() -> gridpart::Result<()> {
    let reads = 100;
    for n in [3, 5, 8] {
        let model = PartitionModel::new(generate_clique_pair(&CliquePairSpec::new(n, 0))?, 2, 1.0, 10.0, 0.5)?;
        let weights = grid_search_two_stage(&model, &GridSpec::default())?.weights;
        let compiled = compile_qubo_plain(&model, &weights)?;
        let samples = simulated_annealing(&compiled.qubo, &AnnealSchedule::new(reads, 1000, 1))?;
        let hits = samples
            .reads
            .iter()
            .filter(|r| {
                let labels = decode_assignment(&compiled.registry, &r.bits).ok().and_then(|d| d.labels());
                labels.is_some_and(|l| (1..2 * n).all(|i| (l[i] == l[0]) == (i < n)))
            })
            .count();
        println!("clique size {n:>2}: {hits}/{reads} reads found the two-clique split");
    }
    Ok(())
}

//! Compiles a random instance into both QUBO formulations and reports the
//! variable counts and coefficient scales.

use gridpart::graph::generate_random_graph;
use gridpart::partition::{compile_qubo_plain, compile_qubo_sharing, PartitionModel, PenaltyWeights};

fn main() -> gridpart::Result<()> {
    let graph = generate_random_graph(6, 0.5, 4)?;
    let weights = PenaltyWeights::new(100.0, 1.0, 6).with_aux(50.0);
    println!("{} vertices, {} edges", graph.vertex_count(), graph.edge_count());
    for parts in 2..=4 {
        let model = PartitionModel::new(graph.clone(), parts, 1.0, 10.0, 0.5)?;
        let plain = compile_qubo_plain(&model, &weights)?;
        let sharing = compile_qubo_sharing(&model, &weights)?;
        println!(
            "P = {parts}: plain {} vars, {} couplings; sharing {} vars, {} couplings",
            plain.num_variables(),
            plain.qubo.quadratic().len(),
            sharing.num_variables(),
            sharing.qubo.quadratic().len()
        );
        if let Some((mean, smallest)) = plain.qubo.coefficient_scales() {
            println!("        plain |coefficient| mean {mean:.3e}, smallest {smallest:.3e}");
        }
    }
    Ok(())
}

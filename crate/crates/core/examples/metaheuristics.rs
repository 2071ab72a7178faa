//! Solves one instance with each solver under the same time budget.

use gridpart::graph::generate_geometric_network;
use gridpart::partition::{Formulation, PartitionModel, PenaltyWeights};
use gridpart::solvers::{solve_partition, SolverKind, SolverSettings};

fn main() -> gridpart::Result<()> {
    let model = PartitionModel::new(generate_geometric_network(40, 2, 9)?, 3, 1.0, 10.0, 0.5)?;
    let weights = PenaltyWeights::new(500.0, 0.1, 10);
    for kind in [SolverKind::Sa, SolverKind::Tabu, SolverKind::Pt] {
        let settings = SolverSettings::new(kind, 1).with_time_limit(1.0);
        let report = solve_partition(&model, Formulation::Plain, &weights, &settings)?;
        println!(
            "{:<5} objective {:>8} violations {} energy {:>12.3} time {:.2}s",
            kind.name(),
            report.objective,
            report.violations(),
            report.energy.unwrap_or(f64::NAN),
            report.wall_time_s
        );
    }
    Ok(())
}

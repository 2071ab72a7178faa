//! Runs a solver comparison from a TOML configuration (defaults to the
//! bundled one) and prints the summary table.

use gridpart::experiment::{run_and_report, summary_table, ExperimentConfig};

fn main() -> gridpart::Result<()> {
    let default = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/german_style.toml");
    let path = std::env::args().nth(1).map_or(default, Into::into);
    let config = ExperimentConfig::from_file(&path)?;
    let bundle = run_and_report(&config)?;
    print!("{}", summary_table(&bundle));
    println!("report written to {}", config.output.display());
    Ok(())
}

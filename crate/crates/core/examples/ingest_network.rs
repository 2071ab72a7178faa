//! Loads the bundled German-style network with uniform random surpluses and
//! prints basic statistics.

use gridpart::graph::{load_network_files, WeightPolicy};

fn main() -> gridpart::Result<()> {
    let data = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let graph = load_network_files(
        data.join("german_style_vertices.csv"),
        data.join("german_style_links.csv"),
        &WeightPolicy::Uniform { seed: 2 },
    )?;
    let surpluses = graph.surpluses();
    let mean = surpluses.iter().sum::<f64>() / surpluses.len() as f64;
    let degrees: Vec<usize> = graph.adjacency().iter().map(Vec::len).collect();
    println!("vertices       {}", graph.vertex_count());
    println!("links          {}", graph.edge_count());
    println!("connected      {}", graph.is_connected());
    println!("mean surplus   {mean:.4}");
    println!("max degree     {}", degrees.iter().max().unwrap_or(&0));
    Ok(())
}

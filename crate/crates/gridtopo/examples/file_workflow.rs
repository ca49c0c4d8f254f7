//! The file-based workflow the CLI wraps: write a topology edge list and a
//! measurements CSV, read them back, identify, and save the recovered
//! edges — all through the library API.
//!
//! Run with: cargo run --release --example file_workflow

use gridtopo::grid::Topology;
use gridtopo::hssp::{identify_topology, HsspOptions};
use gridtopo::measure::{
    aggregate_readings, inject_noise, read_csv, sample_loads, write_csv, AggregationMode,
    NoiseMode, NoiseModel,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("gridtopo_example");
    std::fs::create_dir_all(&dir)?;
    let topo_path = dir.join("grid.edges");
    let meas_path = dir.join("readings.csv");

    // write
    let topo = Topology::random(13, 4, 5);
    let loads = sample_loads(&topo, 10, 25.0, 50.0, 6);
    let aggregated = aggregate_readings(&topo, &loads, AggregationMode::PureSum)?;
    let noisy = inject_noise(
        &aggregated,
        &NoiseModel {
            sigma: 0.02,
            mode: NoiseMode::Additive,
            seed: 7,
        },
    );
    std::fs::write(&topo_path, topo.to_edge_list())?;
    std::fs::write(&meas_path, write_csv(&noisy))?;
    println!("wrote {} and {}", topo_path.display(), meas_path.display());

    // read back and identify
    let truth = Topology::from_edge_list(&std::fs::read_to_string(&topo_path)?)?;
    let x = read_csv(&std::fs::read_to_string(&meas_path)?)?;
    let opts = HsspOptions::hierarchical(truth.layers().to_vec());
    let estimate = identify_topology(&x, 0.02, &opts)?;

    let est_path = dir.join("estimate.edges");
    let mut text = String::from("# parent child\n");
    for e in &estimate.edges {
        text.push_str(&format!("{} {}\n", e.parent, e.child));
    }
    std::fs::write(&est_path, text)?;
    println!(
        "recovered {} edges -> {} (exact match: {})",
        estimate.edges.len(),
        est_path.display(),
        estimate.adjacency == truth.adjacency()
    );
    Ok(())
}

//! End-to-end walkthrough: grow a random radial grid, simulate noisy
//! smart-meter readings, identify the topology back and score it.
//!
//! Run with: cargo run --release --example generate_and_identify

use gridtopo::grid::Topology;
use gridtopo::hssp::{identify_topology, HsspOptions};
use gridtopo::measure::{
    aggregate_readings, inject_noise, sample_loads, AggregationMode, NoiseMode, NoiseModel,
};
use gridtopo::metrics::compare;

fn main() {
    let nodes = 33;
    let timesteps = 10;
    let sigma = 0.02;

    let topo = Topology::random(nodes, 4, 7);
    println!(
        "true grid: {} nodes, {} edges",
        topo.len(),
        topo.edges().len()
    );

    let loads = sample_loads(&topo, timesteps, 25.0, 50.0, 8);
    let aggregated = aggregate_readings(&topo, &loads, AggregationMode::PureSum).unwrap();
    let noisy = inject_noise(
        &aggregated,
        &NoiseModel {
            sigma,
            mode: NoiseMode::Additive,
            seed: 9,
        },
    );

    let opts = HsspOptions::hierarchical(topo.layers().to_vec());
    let estimate = identify_topology(&noisy, sigma, &opts).unwrap();

    println!("recovered edges (parent child votes):");
    for edge in &estimate.edges {
        println!(
            "  {} {}  [{} of {} timesteps]",
            edge.parent, edge.child, edge.votes, timesteps
        );
    }

    let report = compare(&estimate.adjacency, &topo.adjacency()).unwrap();
    println!(
        "edge accuracy {:.4}, precision {:.4}, f1 {:.4}",
        report.edge_accuracy, report.precision, report.f1
    );
}

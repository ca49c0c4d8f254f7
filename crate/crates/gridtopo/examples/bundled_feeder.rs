//! Identify the bundled 13-node feeder from simulated readings and print
//! the adjacency matrix next to the truth.
//!
//! Run with: cargo run --release --example bundled_feeder

use gridtopo::grid::feeder13;
use gridtopo::hssp::{identify_topology, HsspOptions};
use gridtopo::measure::{
    aggregate_readings, inject_noise, sample_loads, AggregationMode, NoiseMode, NoiseModel,
};
use gridtopo::metrics::compare;

fn main() {
    let topo = feeder13();
    let sigma = 0.01;

    let loads = sample_loads(&topo, 10, 25.0, 50.0, 1);
    let aggregated = aggregate_readings(&topo, &loads, AggregationMode::PureSum).unwrap();
    let noisy = inject_noise(
        &aggregated,
        &NoiseModel {
            sigma,
            mode: NoiseMode::Additive,
            seed: 2,
        },
    );

    let opts = HsspOptions::hierarchical(topo.layers().to_vec());
    let estimate = identify_topology(&noisy, sigma, &opts).unwrap();

    let truth = topo.adjacency();
    println!("estimated | true adjacency ({} nodes)", topo.len());
    for i in 0..topo.len() {
        let left: String = (0..topo.len())
            .map(|j| {
                if estimate.adjacency.entry(i, j) {
                    '1'
                } else {
                    '.'
                }
            })
            .collect();
        let right: String = (0..topo.len())
            .map(|j| if truth.entry(i, j) { '1' } else { '.' })
            .collect();
        println!("{left} | {right}");
    }

    let report = compare(&estimate.adjacency, &truth).unwrap();
    println!("edge accuracy {:.4}", report.edge_accuracy);
}

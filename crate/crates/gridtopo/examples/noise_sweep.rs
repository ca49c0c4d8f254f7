//! Accuracy under increasing meter noise, a compact version of the full
//! `table1` preset: five network sizes, four noise levels, a few seeds.
//!
//! Run with: cargo run --release --example noise_sweep

use gridtopo::experiment::{run_sweep, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig {
        sizes: vec![13, 33, 63, 93, 123],
        sigmas: vec![0.01, 0.02, 0.05, 2.0],
        seeds: (1..=10).collect(),
        max_children: 4,
        vote_limit: 1024,
        ..ExperimentConfig::default()
    };
    let result = run_sweep(&cfg).expect("sweep runs");

    println!(
        "{:<6} {:>8} {:>10} {:>10} {:>12}",
        "size", "sigma", "mean acc", "min acc", "mean s/run"
    );
    for cell in &result.cells {
        println!(
            "{:<6} {:>8} {:>10.4} {:>10.4} {:>12.5}",
            cell.size,
            cell.sigma,
            cell.mean_edge_accuracy,
            cell.min_edge_accuracy,
            cell.mean_identify_seconds
        );
    }
}

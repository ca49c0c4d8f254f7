//! Validate the subset-sum identifier against brute force on a grid small
//! enough to enumerate every labeled tree (n^(n-2) of them).
//!
//! Instances are conditioned so every internal node has at least two
//! children: a single-child node reads exactly like its child at every
//! timestep, which makes several trees fit the data perfectly and turns
//! the brute-force winner into a coin flip under noise. With that
//! degeneracy excluded the two methods should almost always agree.
//!
//! Run with: cargo run --release --example oracle_crosscheck

use gridtopo::grid::Topology;
use gridtopo::hssp::{identify_topology, HsspOptions};
use gridtopo::measure::{
    aggregate_readings, inject_noise, sample_loads, AggregationMode, NoiseMode, NoiseModel,
};
use gridtopo::oracle::exhaustive_identify;

fn bushy_topology(n: usize, seed: u64) -> Topology {
    let mut attempt = seed;
    loop {
        let topo = Topology::random(n, 3, attempt);
        if (0..n).all(|node| topo.children(node).len() != 1) {
            return topo;
        }
        attempt = attempt.wrapping_add(0x9E37_79B9);
    }
}

fn main() {
    let mut agreements = 0;
    let trials = 25;
    for seed in 0..trials {
        let topo = bushy_topology(7, seed);
        let loads = sample_loads(&topo, 10, 25.0, 50.0, seed + 100);
        let aggregated = aggregate_readings(&topo, &loads, AggregationMode::PureSum).unwrap();
        let noisy = inject_noise(
            &aggregated,
            &NoiseModel {
                sigma: 0.01,
                mode: NoiseMode::Additive,
                seed: seed + 200,
            },
        );

        let oracle = exhaustive_identify(&noisy, 0).unwrap();
        let opts = HsspOptions::hierarchical(topo.layers().to_vec());
        let estimate = identify_topology(&noisy, 0.01, &opts).unwrap();

        let same = oracle.best_tree.adjacency().edge_set() == estimate.adjacency.edge_set();
        if same {
            agreements += 1;
        }
        println!(
            "seed {seed}: oracle residual {:.4e}, methods {}",
            oracle.residual,
            if same { "agree" } else { "differ" }
        );
    }
    println!("agreement: {agreements}/{trials}");
}

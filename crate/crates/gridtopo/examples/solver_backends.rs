//! The subset-sum engine on its own: three backends, one canonical answer.
//!
//! Run with: cargo run --release --example solver_backends

use std::time::Instant;

use gridtopo::solver::{enumerate_exhaustive, solve_branch_bound, solve_meet_middle, SubsetQuery};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pool: Vec<(usize, f64)> = (0..22).map(|i| (i, rng.gen_range(25.0..50.0))).collect();
    // target the sum of a planted subset
    let planted = [2usize, 5, 11, 19];
    let target: f64 = planted.iter().map(|&i| pool[i].1).sum();
    let query = SubsetQuery::new(pool, target, 0.05, 5, 1000);

    println!("pool of 22 values, target {target:.3} +/- 0.05, subsets up to 5 members");

    let t = Instant::now();
    let oracle = enumerate_exhaustive(&query).unwrap();
    println!(
        "exhaustive:       {:>7} hits in {:?}",
        oracle.len(),
        t.elapsed()
    );

    let t = Instant::now();
    let bb = solve_branch_bound(&query).unwrap();
    println!(
        "branch-and-bound: {:>7} hits in {:?}",
        bb.len(),
        t.elapsed()
    );

    let t = Instant::now();
    let mm = solve_meet_middle(&query).unwrap();
    println!(
        "meet-in-middle:   {:>7} hits in {:?}",
        mm.len(),
        t.elapsed()
    );

    assert_eq!(oracle, bb);
    assert_eq!(oracle, mm);
    println!("all three backends returned the identical canonical hit list");
    println!(
        "best hit: {:?} (deviation {:.2e})",
        oracle[0].members, oracle[0].deviation
    );
}

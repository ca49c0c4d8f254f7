//! Hierarchical subset-sum identification: partition candidate parents and
//! child pools, vote tolerance-window subset matches across timesteps, and
//! reduce conflicting claims into an estimated adjacency matrix.
//!
//! With layer labels ("ordered" mode) a parent at layer l searches only
//! the pool of layer l+1 nodes. Without them every node is a candidate
//! parent over every other node, trimmed by dominance pruning: under
//! nonnegative loads a child's aggregate can never exceed its parent's.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::Error;
use crate::grid::AdjacencyMatrix;
use crate::measure::{AggregationMode, MeasurementMatrix};
use crate::solver::{solve, SubsetQuery};

#[derive(Debug, Clone)]
pub struct HsspOptions {
    /// Layer labels per node; present = hierarchical ("ordered") mode.
    pub hierarchy: Option<Vec<usize>>,
    /// Tolerance multiplier on the residual standard deviation.
    pub z: f64,
    /// Tolerance floor in kW; covers float round-off when sigma = 0.
    pub tolerance_floor: f64,
    /// Largest child set searched per parent.
    pub max_children: usize,
    /// Most hits per (parent, timestep) query admitted into the tally.
    pub vote_limit: usize,
    pub aggregation: AggregationMode,
    /// Flat-mode pool trimming; disabled automatically when any reading
    /// is negative.
    pub dominance_pruning: bool,
}

impl Default for HsspOptions {
    fn default() -> Self {
        HsspOptions {
            hierarchy: None,
            z: 3.0,
            tolerance_floor: 1e-9,
            max_children: 8,
            vote_limit: 64,
            aggregation: AggregationMode::PureSum,
            dominance_pruning: true,
        }
    }
}

impl HsspOptions {
    pub fn hierarchical(layers: Vec<usize>) -> Self {
        HsspOptions {
            hierarchy: Some(layers),
            ..HsspOptions::default()
        }
    }
}

/// Matching tolerance for a candidate subset of `subset_size` children:
/// `z * sigma * sqrt(subset_size + 1)`, the standard deviation of the
/// residual when the parent and each child reading carry independent
/// additive errors of scale sigma, floored by `tolerance_floor`.
pub fn tolerance_for(subset_size: usize, sigma: f64, opts: &HsspOptions) -> f64 {
    let spread = opts.z * sigma * ((subset_size + 1) as f64).sqrt();
    spread.max(opts.tolerance_floor)
}

/// Candidate parents with their child pools, ascending by parent index.
pub fn partition_nodes(
    x: &MeasurementMatrix,
    sigma: f64,
    opts: &HsspOptions,
) -> Result<Vec<(usize, Vec<usize>)>, Error> {
    let n = x.nodes();
    if let Some(layers) = &opts.hierarchy {
        if layers.len() != n {
            return Err(Error::LayerCount {
                expected: n,
                found: layers.len(),
            });
        }
        Ok((0..n)
            .map(|parent| {
                let pool: Vec<usize> = (0..n)
                    .filter(|&c| layers[c] == layers[parent] + 1)
                    .collect();
                (parent, pool)
            })
            .collect())
    } else {
        let prune = opts.dominance_pruning && x.min_reading() >= 0.0;
        let slack = tolerance_for(1, sigma, opts);
        Ok((0..n)
            .map(|parent| {
                let pool: Vec<usize> = (0..n)
                    .filter(|&c| {
                        c != parent
                            && (!prune
                                || (0..x.timesteps())
                                    .all(|k| x.reading(c, k) <= x.reading(parent, k) + slack))
                    })
                    .collect();
                (parent, pool)
            })
            .collect())
    }
}

/// Vote tally for one candidate parent: how many timesteps each candidate
/// child set matched the parent's reading within tolerance.
#[derive(Debug, Clone)]
pub struct VoteTable {
    pub parent: usize,
    pub tallies: BTreeMap<Vec<usize>, usize>,
}

fn query_target(
    x: &MeasurementMatrix,
    parent: usize,
    k: usize,
    opts: &HsspOptions,
) -> Result<f64, Error> {
    match opts.aggregation {
        AggregationMode::PureSum => Ok(x.reading(parent, k)),
        AggregationMode::OwnLoad => {
            let own = x
                .individual(parent, k)
                .ok_or(Error::MissingIndividualChannel)?;
            Ok(x.reading(parent, k) - own)
        }
    }
}

/// Run the per-timestep subset queries for one parent and tally votes.
/// Each hit within its size-specific tolerance earns one vote per timestep.
pub fn vote_subsets(
    parent: usize,
    pool: &[usize],
    x: &MeasurementMatrix,
    sigma: f64,
    opts: &HsspOptions,
) -> Result<VoteTable, Error> {
    let mut tallies: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    if pool.is_empty() {
        return Ok(VoteTable { parent, tallies });
    }
    let widest = tolerance_for(opts.max_children, sigma, opts);
    for k in 0..x.timesteps() {
        let target = query_target(x, parent, k, opts)?;
        let values: Vec<(usize, f64)> = pool.iter().map(|&c| (c, x.reading(c, k))).collect();
        let query = SubsetQuery::new(values, target, widest, opts.max_children, opts.vote_limit);
        for hit in solve(&query)? {
            if hit.deviation <= tolerance_for(hit.members.len(), sigma, opts) {
                *tallies.entry(hit.members).or_insert(0) += 1;
            }
        }
    }
    Ok(VoteTable { parent, tallies })
}

/// Estimated grid connectivity with the vote count that won each edge.
#[derive(Debug, Clone)]
pub struct EstimatedTopology {
    pub adjacency: AdjacencyMatrix,
    pub edges: Vec<ClaimedEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ClaimedEdge {
    pub parent: usize,
    pub child: usize,
    pub votes: usize,
}

/// Pick each parent's winning child set (most votes, then smallest, then
/// lexicographic), drop layer-inconsistent claims in hierarchical mode,
/// and give each multiply-claimed child to the claimant with the highest
/// tally (ties to the lower parent index).
pub fn reduce_redundant(tables: &[VoteTable], opts: &HsspOptions, n: usize) -> EstimatedTopology {
    struct Claim {
        parent: usize,
        child: usize,
        votes: usize,
    }
    let mut claims: Vec<Claim> = Vec::new();
    for table in tables {
        let mut best: Option<(&Vec<usize>, usize)> = None;
        for (set, &votes) in &table.tallies {
            let better = match best {
                None => true,
                Some((bset, bvotes)) => {
                    // on equal votes and length the first-seen set stays,
                    // which is the lexicographic winner: BTreeMap iterates
                    // in member order
                    votes > bvotes || (votes == bvotes && set.len() < bset.len())
                }
            };
            if better {
                best = Some((set, votes));
            }
        }
        if let Some((set, votes)) = best {
            for &child in set {
                claims.push(Claim {
                    parent: table.parent,
                    child,
                    votes,
                });
            }
        }
    }

    if let Some(layers) = &opts.hierarchy {
        claims.retain(|c| layers[c.child] == layers[c.parent] + 1);
    }

    let mut winner: Vec<Option<(usize, usize)>> = vec![None; n]; // child -> (votes, parent)
    for claim in &claims {
        let replace = match winner[claim.child] {
            None => true,
            Some((votes, parent)) => {
                claim.votes > votes || (claim.votes == votes && claim.parent < parent)
            }
        };
        if replace {
            winner[claim.child] = Some((claim.votes, claim.parent));
        }
    }

    // Mutual claims (a wins b as child while b wins a: equal-reading
    // chains in flat mode) describe the same undirected link; keep the
    // stronger orientation so the edge list carries each link once.
    let mut kept: BTreeMap<(usize, usize), ClaimedEdge> = BTreeMap::new();
    for (child, slot) in winner.iter().enumerate() {
        if let Some((votes, parent)) = slot {
            let key = (child.min(*parent), child.max(*parent));
            let edge = ClaimedEdge {
                parent: *parent,
                child,
                votes: *votes,
            };
            let better = match kept.get(&key) {
                None => true,
                Some(prev) => {
                    edge.votes > prev.votes
                        || (edge.votes == prev.votes && edge.parent < prev.parent)
                }
            };
            if better {
                kept.insert(key, edge);
            }
        }
    }

    let mut adjacency = AdjacencyMatrix::zeros(n);
    let mut edges: Vec<ClaimedEdge> = kept.into_values().collect();
    for edge in &edges {
        adjacency.set_link(edge.parent, edge.child);
    }
    edges.sort_by_key(|e| (e.parent, e.child));
    EstimatedTopology { adjacency, edges }
}

/// The full pipeline: partition, vote per parent (in parallel), reduce.
/// Deterministic for fixed inputs regardless of thread count.
pub fn identify_topology(
    x: &MeasurementMatrix,
    sigma: f64,
    opts: &HsspOptions,
) -> Result<EstimatedTopology, Error> {
    let partition = partition_nodes(x, sigma, opts)?;
    let tables: Vec<VoteTable> = partition
        .par_iter()
        .map(|(parent, pool)| vote_subsets(*parent, pool, x, sigma, opts))
        .collect::<Result<_, _>>()?;
    Ok(reduce_redundant(&tables, opts, x.nodes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{feeder13, Topology};
    use crate::measure::{aggregate_readings, inject_noise, sample_loads, NoiseMode, NoiseModel};

    fn noisy_instance(
        topo: &Topology,
        timesteps: usize,
        sigma: f64,
        seed: u64,
    ) -> MeasurementMatrix {
        let loads = sample_loads(topo, timesteps, 25.0, 50.0, seed);
        let agg = aggregate_readings(topo, &loads, AggregationMode::PureSum).unwrap();
        inject_noise(
            &agg,
            &NoiseModel {
                sigma,
                mode: NoiseMode::Additive,
                seed: seed ^ 0x5eed,
            },
        )
    }

    #[test]
    fn tolerance_floor_applies_at_zero_sigma() {
        let opts = HsspOptions::default();
        assert_eq!(tolerance_for(3, 0.0, &opts), opts.tolerance_floor);
    }

    #[test]
    fn tolerance_closed_form() {
        let opts = HsspOptions {
            tolerance_floor: 1e-9,
            z: 3.0,
            ..HsspOptions::default()
        };
        // size 3: 3 * 0.05 * sqrt(4) = 0.3
        assert!((tolerance_for(3, 0.05, &opts) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn hierarchical_pools_are_next_layer_sets() {
        let topo = feeder13();
        let x = noisy_instance(&topo, 4, 0.0, 3);
        let opts = HsspOptions::hierarchical(topo.layers().to_vec());
        let partition = partition_nodes(&x, 0.0, &opts).unwrap();
        for (parent, pool) in partition {
            let expect: Vec<usize> = (0..topo.len())
                .filter(|&c| topo.layer(c) == topo.layer(parent) + 1)
                .collect();
            assert_eq!(pool, expect, "parent {parent}");
        }
    }

    #[test]
    fn layer_count_mismatch_is_an_error() {
        let topo = feeder13();
        let x = noisy_instance(&topo, 2, 0.0, 3);
        let opts = HsspOptions::hierarchical(vec![0, 1]);
        assert!(matches!(
            partition_nodes(&x, 0.0, &opts),
            Err(Error::LayerCount {
                expected: 13,
                found: 2
            })
        ));
    }

    #[test]
    fn dominance_keeps_only_the_larger_parent() {
        // two nodes reading 7 and 3 at every timestep
        let x = MeasurementMatrix::from_readings(2, 2, vec![7.0, 7.0, 3.0, 3.0]);
        let opts = HsspOptions::default();
        let partition = partition_nodes(&x, 0.0, &opts).unwrap();
        assert_eq!(partition, vec![(0, vec![1]), (1, vec![])]);
    }

    #[test]
    fn dominance_shrinks_flat_pools_on_random_instances() {
        let mut shrunk = 0;
        let total = 40;
        for seed in 0..total {
            let topo = Topology::random(33, 4, seed);
            let x = noisy_instance(&topo, 10, 0.02, seed + 1000);
            let opts = HsspOptions::default();
            let partition = partition_nodes(&x, 0.02, &opts).unwrap();
            let pooled: usize = partition.iter().map(|(_, pool)| pool.len()).sum();
            if pooled < 33 * 32 {
                shrunk += 1;
            }
        }
        assert!(shrunk * 100 >= total * 95, "{shrunk}/{total}");
    }

    #[test]
    fn noiseless_star_collects_all_votes() {
        let topo = Topology::from_parts(vec![None, Some(0), Some(0)], vec![0, 1, 1]);
        let x = noisy_instance(&topo, 10, 0.0, 5);
        let opts = HsspOptions::hierarchical(topo.layers().to_vec());
        let table = vote_subsets(0, &[1, 2], &x, 0.0, &opts).unwrap();
        assert_eq!(table.tallies.get(&vec![1, 2]), Some(&10));
    }

    #[test]
    fn decoy_collision_cannot_outvote_truth() {
        // star 0 -> {1, 2}; node 3 shadows node 1's value at timestep 0 only
        let readings = vec![
            7.0, 9.0, 11.0, // parent 0
            3.0, 4.0, 5.0, // child 1
            4.0, 5.0, 6.0, // child 2
            3.0, 9.0, 1.0, // decoy 3
        ];
        let x = MeasurementMatrix::from_readings(4, 3, readings);
        let opts = HsspOptions {
            tolerance_floor: 1e-9,
            ..HsspOptions::default()
        };
        let table = vote_subsets(0, &[1, 2, 3], &x, 0.0, &opts).unwrap();
        assert_eq!(table.tallies.get(&vec![1, 2]), Some(&3));
        assert_eq!(table.tallies.get(&vec![2, 3]), Some(&1));
        let est = reduce_redundant(&[table], &opts, 4);
        let edges: Vec<(usize, usize)> = est.edges.iter().map(|e| (e.parent, e.child)).collect();
        assert_eq!(edges, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn zero_reading_parent_gets_no_votes() {
        let x = MeasurementMatrix::from_readings(3, 2, vec![0.0, 0.0, 3.0, 3.0, 4.0, 4.0]);
        let opts = HsspOptions::default();
        let table = vote_subsets(0, &[1, 2], &x, 0.0, &opts).unwrap();
        assert!(table.tallies.is_empty());
    }

    #[test]
    fn vote_counts_never_exceed_timestep_count() {
        let topo = Topology::random(13, 4, 2);
        let x = noisy_instance(&topo, 10, 0.05, 6);
        let opts = HsspOptions::hierarchical(topo.layers().to_vec());
        let partition = partition_nodes(&x, 0.05, &opts).unwrap();
        for (parent, pool) in partition {
            let table = vote_subsets(parent, &pool, &x, 0.05, &opts).unwrap();
            for (set, votes) in &table.tallies {
                assert!(*votes <= 10, "set {set:?} got {votes} votes");
                assert!(!set.contains(&parent));
            }
        }
    }

    #[test]
    fn reduce_assigns_contested_child_to_stronger_claim() {
        let mut strong = BTreeMap::new();
        strong.insert(vec![2], 9usize);
        let mut weak = BTreeMap::new();
        weak.insert(vec![2], 4usize);
        let tables = vec![
            VoteTable {
                parent: 0,
                tallies: strong,
            },
            VoteTable {
                parent: 1,
                tallies: weak,
            },
        ];
        let opts = HsspOptions::default();
        let est = reduce_redundant(&tables, &opts, 3);
        let edges: Vec<(usize, usize)> = est.edges.iter().map(|e| (e.parent, e.child)).collect();
        assert_eq!(edges, vec![(0, 2)]);
        assert!(est.adjacency.entry(0, 2) && est.adjacency.entry(2, 0));
        assert!(!est.adjacency.entry(1, 2));
    }

    #[test]
    fn reduce_prefers_more_votes_then_smaller_sets() {
        let mut tallies = BTreeMap::new();
        tallies.insert(vec![1, 2], 10usize);
        tallies.insert(vec![1], 10usize);
        tallies.insert(vec![2, 3], 4usize);
        let tables = vec![VoteTable { parent: 0, tallies }];
        let opts = HsspOptions::default();
        let est = reduce_redundant(&tables, &opts, 4);
        let edges: Vec<(usize, usize)> = est.edges.iter().map(|e| (e.parent, e.child)).collect();
        assert_eq!(edges, vec![(0, 1)], "tie broken toward the smaller set");
    }

    #[test]
    fn mutual_claims_collapse_to_one_edge() {
        // two nodes with identical readings claim each other in flat mode;
        // the undirected link must appear once
        let x = MeasurementMatrix::from_readings(2, 3, vec![5.0, 6.0, 7.0, 5.0, 6.0, 7.0]);
        let opts = HsspOptions::default();
        let est = identify_topology(&x, 0.0, &opts).unwrap();
        let pairs: Vec<(usize, usize)> = est.edges.iter().map(|e| (e.parent, e.child)).collect();
        assert_eq!(pairs, vec![(0, 1)]);
        assert!(est.adjacency.entry(0, 1) && est.adjacency.entry(1, 0));
    }

    #[test]
    fn single_node_yields_no_edges() {
        let topo = Topology::random(1, 2, 0);
        let x = noisy_instance(&topo, 3, 0.0, 0);
        let opts = HsspOptions::hierarchical(topo.layers().to_vec());
        let est = identify_topology(&x, 0.0, &opts).unwrap();
        assert!(est.edges.is_empty());
    }

    #[test]
    fn feeder_is_recovered_exactly_at_low_noise() {
        let topo = feeder13();
        let x = noisy_instance(&topo, 10, 0.01, 1);
        let opts = HsspOptions::hierarchical(topo.layers().to_vec());
        let est = identify_topology(&x, 0.01, &opts).unwrap();
        assert_eq!(est.adjacency, topo.adjacency());
    }

    #[test]
    fn medium_grid_accuracy_stays_high() {
        let mut total = 0.0;
        let seeds = 20;
        for seed in 0..seeds {
            let topo = Topology::random(33, 4, seed);
            let x = noisy_instance(&topo, 10, 0.01, seed + 500);
            let opts = HsspOptions::hierarchical(topo.layers().to_vec());
            let est = identify_topology(&x, 0.01, &opts).unwrap();
            let report = crate::metrics::compare(&est.adjacency, &topo.adjacency()).unwrap();
            total += report.edge_accuracy;
        }
        let mean = total / seeds as f64;
        assert!(mean >= 0.93, "mean accuracy {mean}");
    }

    #[test]
    fn noiseless_random_trees_recover_exactly() {
        for &(n, seed) in &[(2usize, 0u64), (5, 1), (12, 2), (25, 3), (40, 4)] {
            let topo = Topology::random(n, 4, seed);
            let x = noisy_instance(&topo, 3, 0.0, seed + 40);
            let opts = HsspOptions::hierarchical(topo.layers().to_vec());
            let est = identify_topology(&x, 0.0, &opts).unwrap();
            assert_eq!(est.adjacency, topo.adjacency(), "n={n} seed={seed}");
        }
    }

    #[test]
    fn true_child_sets_pass_tolerance_almost_always() {
        // admission rate of the generating child set per (parent, timestep)
        let mut admitted = 0usize;
        let mut checked = 0usize;
        let sigma = 0.05;
        let opts = HsspOptions::default();
        for seed in 0..30 {
            let topo = Topology::random(33, 4, seed);
            let x = noisy_instance(&topo, 10, sigma, seed + 900);
            for parent in 0..topo.len() {
                let children = topo.children(parent);
                if children.is_empty() {
                    continue;
                }
                let tol = tolerance_for(children.len(), sigma, &opts);
                for k in 0..10 {
                    let sum: f64 = children.iter().map(|&c| x.reading(c, k)).sum();
                    checked += 1;
                    if (sum - x.reading(parent, k)).abs() <= tol {
                        admitted += 1;
                    }
                }
            }
        }
        assert!(
            admitted as f64 >= 0.99 * checked as f64,
            "admitted {admitted}/{checked}"
        );
    }

    #[test]
    fn scaling_readings_and_tolerances_keeps_edges() {
        let topo = Topology::random(21, 4, 8);
        let sigma = 0.02;
        let x = noisy_instance(&topo, 10, sigma, 77);
        let opts = HsspOptions::hierarchical(topo.layers().to_vec());
        let base = identify_topology(&x, sigma, &opts).unwrap();
        for &scale in &[0.25f64, 2.0, 4.0] {
            let scaled_readings: Vec<f64> = (0..21)
                .flat_map(|i| (0..10).map(move |k| (i, k)))
                .map(|(i, k)| x.reading(i, k) * scale)
                .collect();
            let xs = MeasurementMatrix::from_readings(21, 10, scaled_readings);
            let scaled_opts = HsspOptions {
                tolerance_floor: opts.tolerance_floor * scale,
                ..opts.clone()
            };
            let est = identify_topology(&xs, sigma * scale, &scaled_opts).unwrap();
            assert_eq!(est.adjacency, base.adjacency, "scale {scale}");
        }
    }

    #[test]
    fn own_load_mode_needs_individual_channel() {
        let x = MeasurementMatrix::from_readings(2, 1, vec![5.0, 5.0]);
        let opts = HsspOptions {
            aggregation: AggregationMode::OwnLoad,
            ..HsspOptions::default()
        };
        assert!(matches!(
            identify_topology(&x, 0.0, &opts),
            Err(Error::MissingIndividualChannel)
        ));
    }

    #[test]
    fn own_load_mode_recovers_the_tree() {
        let topo = Topology::random(13, 3, 6);
        let loads = sample_loads(&topo, 8, 25.0, 50.0, 21);
        let agg = aggregate_readings(&topo, &loads, AggregationMode::OwnLoad).unwrap();
        let opts = HsspOptions {
            hierarchy: Some(topo.layers().to_vec()),
            aggregation: AggregationMode::OwnLoad,
            ..HsspOptions::default()
        };
        let est = identify_topology(&agg, 0.0, &opts).unwrap();
        assert_eq!(est.adjacency, topo.adjacency());
    }
}

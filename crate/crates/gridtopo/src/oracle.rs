//! Brute-force baseline for tiny grids: enumerate every labeled tree on n
//! nodes and return the one whose power-balance residual over the whole
//! time series is smallest.

use rayon::prelude::*;

use crate::error::Error;
use crate::grid::Topology;
use crate::measure::MeasurementMatrix;

/// Largest node count the exhaustive search accepts (n^(n-2) trees).
pub const ORACLE_NODE_LIMIT: usize = 8;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best_tree: Topology,
    /// Sum over internal nodes and timesteps of |reading - children sum|.
    pub residual: f64,
}

/// Decode a Prüfer sequence into the edge list of the labeled tree it
/// encodes. `n` is the node count; the sequence has length `n - 2`.
fn prufer_to_edges(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    debug_assert_eq!(seq.len(), n - 2);
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut ptr = 0usize;
    while degree[ptr] != 1 {
        ptr += 1;
    }
    let mut leaf = ptr;
    for &s in seq {
        edges.push((leaf, s));
        degree[s] -= 1;
        if degree[s] == 1 && s < ptr {
            leaf = s;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    // the largest label is never consumed as a leaf, so it closes the tree
    edges.push((leaf, n - 1));
    edges
}

/// Orient `edges` away from `root`, producing parent pointers and layers.
fn root_edges(edges: &[(usize, usize)], n: usize, root: usize) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut neighbors = vec![Vec::new(); n];
    for &(a, b) in edges {
        neighbors[a].push(b);
        neighbors[b].push(a);
    }
    let mut parent_of = vec![None; n];
    let mut layer = vec![0usize; n];
    let mut visited = vec![false; n];
    visited[root] = true;
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in &neighbors[u] {
            if !visited[v] {
                visited[v] = true;
                parent_of[v] = Some(u);
                layer[v] = layer[u] + 1;
                queue.push_back(v);
            }
        }
    }
    (parent_of, layer)
}

fn residual_of(parent_of: &[Option<usize>], x: &MeasurementMatrix) -> f64 {
    let n = parent_of.len();
    let k_count = x.timesteps();
    let mut children = vec![Vec::new(); n];
    for (child, parent) in parent_of.iter().enumerate() {
        if let Some(p) = parent {
            children[*p].push(child);
        }
    }
    let mut total = 0.0;
    for (node, kids) in children.iter().enumerate() {
        if kids.is_empty() {
            continue;
        }
        for k in 0..k_count {
            let sum = kids.iter().fold(0.0, |acc, &c| acc + x.reading(c, k));
            total += (x.reading(node, k) - sum).abs();
        }
    }
    total
}

/// Parent-pointer encoding used for deterministic tie-breaking: the parent
/// of every non-root node, ascending by node index.
fn encoding(parent_of: &[Option<usize>], root: usize) -> Vec<usize> {
    parent_of
        .iter()
        .enumerate()
        .filter(|&(node, _)| node != root)
        .map(|(_, p)| p.expect("non-root node has a parent"))
        .collect()
}

/// Score every labeled tree on `x.nodes()` nodes rooted at `root` by its
/// total power-balance residual and return the minimizer; ties break on
/// the lexicographically smallest parent encoding.
pub fn exhaustive_identify(x: &MeasurementMatrix, root: usize) -> Result<OracleResult, Error> {
    let n = x.nodes();
    if n > ORACLE_NODE_LIMIT {
        return Err(Error::TooManyNodes {
            n,
            limit: ORACLE_NODE_LIMIT,
        });
    }
    assert!(root < n, "root out of range");

    if n == 1 {
        return Ok(OracleResult {
            best_tree: Topology::from_parts(vec![None], vec![0]),
            residual: 0.0,
        });
    }

    let tree_count: usize = if n == 2 {
        1
    } else {
        (n as u64).pow((n - 2) as u32) as usize
    };

    let best = (0..tree_count)
        .into_par_iter()
        .map(|index| {
            let edges = if n == 2 {
                vec![(0usize, 1usize)]
            } else {
                let mut seq = vec![0usize; n - 2];
                let mut rest = index;
                for slot in seq.iter_mut() {
                    *slot = rest % n;
                    rest /= n;
                }
                prufer_to_edges(&seq, n)
            };
            let (parent_of, layer) = root_edges(&edges, n, root);
            let residual = residual_of(&parent_of, x);
            (residual, encoding(&parent_of, root), parent_of, layer)
        })
        .reduce_with(
            |a, b| match a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)) {
                std::cmp::Ordering::Greater => b,
                _ => a,
            },
        )
        .expect("at least one tree");

    let (residual, _, parent_of, layer) = best;
    Ok(OracleResult {
        best_tree: Topology::from_parts(parent_of, layer),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{
        aggregate_readings, inject_noise, sample_loads, AggregationMode, NoiseMode, NoiseModel,
    };

    fn pure_sum_instance(topo: &Topology, timesteps: usize, seed: u64) -> MeasurementMatrix {
        let loads = sample_loads(topo, timesteps, 25.0, 50.0, seed);
        aggregate_readings(topo, &loads, AggregationMode::PureSum).unwrap()
    }

    #[test]
    fn two_nodes_have_one_tree() {
        let topo = Topology::random(2, 2, 0);
        let x = pure_sum_instance(&topo, 3, 1);
        let result = exhaustive_identify(&x, 0).unwrap();
        assert_eq!(result.best_tree.edges(), vec![(0, 1)]);
        assert_eq!(result.residual, 0.0);
    }

    #[test]
    fn five_node_branch_recovers_exactly() {
        // feeder-like shape: 0 - 1 - {2, 3}, 3 - 4
        let topo = Topology::from_parts(
            vec![None, Some(0), Some(1), Some(1), Some(3)],
            vec![0, 1, 2, 2, 3],
        );
        let x = pure_sum_instance(&topo, 4, 9);
        let result = exhaustive_identify(&x, 0).unwrap();
        assert_eq!(result.residual, 0.0);
        assert_eq!(
            result.best_tree.adjacency().edge_set(),
            topo.adjacency().edge_set()
        );
    }

    #[test]
    fn prufer_enumeration_visits_every_tree_once() {
        // n = 5: 5^3 = 125 distinct labeled trees
        let n = 5;
        let mut seen = std::collections::BTreeSet::new();
        for index in 0..125usize {
            let mut seq = vec![0usize; n - 2];
            let mut rest = index;
            for slot in seq.iter_mut() {
                *slot = rest % n;
                rest /= n;
            }
            let mut edges: Vec<(usize, usize)> = prufer_to_edges(&seq, n)
                .into_iter()
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect();
            edges.sort_unstable();
            assert_eq!(edges.len(), n - 1);
            seen.insert(edges);
        }
        assert_eq!(seen.len(), 125);
    }

    #[test]
    fn noiseless_recovery_across_sizes() {
        for n in 3..=7 {
            for seed in 0..5 {
                let topo = Topology::random(n, 3, seed);
                let x = pure_sum_instance(&topo, 3, seed + 50);
                let result = exhaustive_identify(&x, 0).unwrap();
                assert_eq!(
                    result.best_tree.adjacency().edge_set(),
                    topo.adjacency().edge_set(),
                    "n={n} seed={seed}"
                );
                assert_eq!(result.residual, 0.0, "n={n} seed={seed}");
            }
        }
    }

    /// Random tree where every internal node has at least two children.
    /// A single-child node reads exactly like its child, which makes the
    /// swapped chain fit the data perfectly too; conditioning the shape
    /// keeps the residual minimizer unique so noise comparisons are fair.
    pub(crate) fn bushy_topology(n: usize, branching: usize, seed: u64) -> Topology {
        let mut attempt = seed;
        loop {
            let topo = Topology::random(n, branching, attempt);
            let ok = (0..n).all(|node| topo.children(node).len() != 1);
            if ok {
                return topo;
            }
            attempt = attempt.wrapping_add(0x9E37_79B9);
        }
    }

    #[test]
    fn mild_noise_rarely_changes_the_winner() {
        let mut agree = 0;
        let total = 40;
        for seed in 0..total {
            let topo = bushy_topology(6, 3, seed);
            let clean = pure_sum_instance(&topo, 10, seed + 7);
            let noisy = inject_noise(
                &clean,
                &NoiseModel {
                    sigma: 0.01,
                    mode: NoiseMode::Additive,
                    seed: seed + 13,
                },
            );
            let result = exhaustive_identify(&noisy, 0).unwrap();
            if result.best_tree.adjacency().edge_set() == topo.adjacency().edge_set() {
                agree += 1;
            }
        }
        assert!(agree * 100 >= total * 95, "agreement {agree}/{total}");
    }

    #[test]
    fn noiseless_chains_break_ties_toward_the_generator_labeling() {
        // a single-child chain admits several zero-residual trees; the
        // lexicographic tie-break lands on the one whose parents carry the
        // smaller indices, which is how the generator labels the truth
        for seed in 0..20 {
            let topo = Topology::random(6, 2, seed);
            let x = pure_sum_instance(&topo, 5, seed + 31);
            let result = exhaustive_identify(&x, 0).unwrap();
            assert_eq!(result.residual, 0.0);
            assert_eq!(
                result.best_tree.adjacency().edge_set(),
                topo.adjacency().edge_set(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn too_many_nodes_is_an_error() {
        let topo = Topology::random(9, 3, 0);
        let x = pure_sum_instance(&topo, 2, 0);
        assert!(matches!(
            exhaustive_identify(&x, 0),
            Err(Error::TooManyNodes { n: 9, .. })
        ));
    }
}

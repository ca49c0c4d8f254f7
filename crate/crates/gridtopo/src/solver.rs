//! Tolerance-window subset-sum search over real-valued pools.
//!
//! Three backends answer the same query: an exhaustive enumerator that
//! doubles as the correctness oracle, a depth-first branch-and-bound for
//! nonnegative pools, and a meet-in-the-middle split. Acceptance of a
//! candidate subset is always decided on the canonical sum (values folded
//! in ascending node order), so all backends return exactly the same hit
//! list: sorted by deviation, then cardinality, then members.

use crate::error::Error;

/// Largest pool [`enumerate_exhaustive`] accepts.
pub const EXHAUSTIVE_POOL_LIMIT: usize = 25;
/// Largest pool [`solve_meet_middle`] accepts.
pub const MEET_MIDDLE_POOL_LIMIT: usize = 40;

/// One matching problem: which nonempty index subsets of `pool` sum into
/// `[target - tolerance, target + tolerance]`.
#[derive(Debug, Clone)]
pub struct SubsetQuery {
    /// `(node index, value in kW)` pairs; node indices must be distinct.
    pub pool: Vec<(usize, f64)>,
    pub target: f64,
    pub tolerance: f64,
    /// Cap on subset cardinality.
    pub max_size: usize,
    /// Cap on the number of returned hits (best-first after canonical sort).
    pub limit: usize,
}

impl SubsetQuery {
    pub fn new(
        pool: Vec<(usize, f64)>,
        target: f64,
        tolerance: f64,
        max_size: usize,
        limit: usize,
    ) -> Self {
        assert!(tolerance >= 0.0, "tolerance must be nonnegative");
        assert!(max_size >= 1, "max_size must be at least 1");
        assert!(limit >= 1, "limit must be at least 1");
        SubsetQuery {
            pool,
            target,
            tolerance,
            max_size,
            limit,
        }
    }
}

/// A subset whose sum lands inside the tolerance window.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetHit {
    /// Member node indices, ascending.
    pub members: Vec<usize>,
    pub achieved_sum: f64,
    pub deviation: f64,
}

fn sorted_by_node(pool: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut entries = pool.to_vec();
    entries.sort_by_key(|e| e.0);
    entries
}

/// Left-to-right fold over ascending positions; the one sum every backend
/// uses to accept or reject a candidate.
fn canonical_sum(entries: &[(usize, f64)], positions: &[usize]) -> f64 {
    positions.iter().fold(0.0, |acc, &p| acc + entries[p].1)
}

fn hit_from(entries: &[(usize, f64)], positions: &[usize], q: &SubsetQuery) -> Option<SubsetHit> {
    let sum = canonical_sum(entries, positions);
    let deviation = (sum - q.target).abs();
    if deviation <= q.tolerance {
        Some(SubsetHit {
            members: positions.iter().map(|&p| entries[p].0).collect(),
            achieved_sum: sum,
            deviation,
        })
    } else {
        None
    }
}

fn canonical_order(mut hits: Vec<SubsetHit>, limit: usize) -> Vec<SubsetHit> {
    hits.sort_by(|a, b| {
        a.deviation
            .total_cmp(&b.deviation)
            .then_with(|| a.members.len().cmp(&b.members.len()))
            .then_with(|| a.members.cmp(&b.members))
    });
    hits.truncate(limit);
    hits
}

/// Margin added to pruning windows so a subset whose canonical sum differs
/// from the search-order accumulation by rounding can never be pruned.
/// Widens exploration only; acceptance stays exact.
fn pruning_slack(entries: &[(usize, f64)], q: &SubsetQuery) -> f64 {
    let total_abs: f64 = entries.iter().map(|e| e.1.abs()).sum();
    f64::EPSILON * 8.0 * (entries.len() as f64 + 16.0) * (total_abs + q.target.abs() + q.tolerance)
}

/// Enumerate every nonempty subset of cardinality `<= max_size` and keep
/// those within tolerance. The correctness oracle for the other backends.
pub fn enumerate_exhaustive(q: &SubsetQuery) -> Result<Vec<SubsetHit>, Error> {
    if q.pool.len() > EXHAUSTIVE_POOL_LIMIT {
        return Err(Error::PoolTooLarge {
            size: q.pool.len(),
            limit: EXHAUSTIVE_POOL_LIMIT,
        });
    }
    let entries = sorted_by_node(&q.pool);
    let mut hits = Vec::new();
    let mut picked = Vec::new();
    exhaustive_rec(&entries, 0, 0.0, &mut picked, q, &mut hits);
    Ok(canonical_order(hits, q.limit))
}

fn exhaustive_rec(
    entries: &[(usize, f64)],
    start: usize,
    sum: f64,
    picked: &mut Vec<usize>,
    q: &SubsetQuery,
    hits: &mut Vec<SubsetHit>,
) {
    for pos in start..entries.len() {
        // `s` accumulates in ascending position order, so it already is the
        // canonical sum for the picked set.
        let s = sum + entries[pos].1;
        picked.push(pos);
        let deviation = (s - q.target).abs();
        if deviation <= q.tolerance {
            hits.push(SubsetHit {
                members: picked.iter().map(|&p| entries[p].0).collect(),
                achieved_sum: s,
                deviation,
            });
        }
        if picked.len() < q.max_size {
            exhaustive_rec(entries, pos + 1, s, picked, q, hits);
        }
        picked.pop();
    }
}

/// Depth-first search over values sorted descending, for nonnegative pools.
/// A branch is dropped once its partial sum overshoots the window, or when
/// even the largest remaining values within the cardinality budget cannot
/// lift it back to the window floor.
pub fn solve_branch_bound(q: &SubsetQuery) -> Result<Vec<SubsetHit>, Error> {
    if let Some(&(node, _)) = q.pool.iter().find(|e| e.1 < 0.0) {
        return Err(Error::NegativePoolValue { node });
    }
    let entries = sorted_by_node(&q.pool);
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| {
        entries[b]
            .1
            .total_cmp(&entries[a].1)
            .then_with(|| entries[a].0.cmp(&entries[b].0))
    });
    let values: Vec<f64> = order.iter().map(|&p| entries[p].1).collect();
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0f64);
    for &v in &values {
        let last = *prefix.last().unwrap();
        prefix.push(last + v);
    }
    let slack = pruning_slack(&entries, q);

    let mut search = BranchBound {
        entries: &entries,
        order: &order,
        values: &values,
        prefix: &prefix,
        q,
        upper: q.target + q.tolerance + slack,
        lower: q.target - q.tolerance - slack,
        near: q.tolerance + slack,
        picked: Vec::new(),
        hits: Vec::new(),
    };
    search.descend(0, 0.0);
    Ok(canonical_order(search.hits, q.limit))
}

struct BranchBound<'a> {
    entries: &'a [(usize, f64)],
    order: &'a [usize],
    values: &'a [f64],
    prefix: &'a [f64],
    q: &'a SubsetQuery,
    upper: f64,
    lower: f64,
    near: f64,
    /// Positions into `entries`, in search (descending-value) order.
    picked: Vec<usize>,
    hits: Vec<SubsetHit>,
}

impl BranchBound<'_> {
    /// Sum of the `budget` largest values still available from `from` on.
    fn best_extension(&self, from: usize, budget: usize) -> f64 {
        let end = (from + budget).min(self.values.len());
        if from >= end {
            0.0
        } else {
            self.prefix[end] - self.prefix[from]
        }
    }

    fn descend(&mut self, start: usize, sum: f64) {
        for idx in start..self.values.len() {
            let s = sum + self.values[idx];
            if s > self.upper {
                // Overshoot: neither this set nor any superset fits, but a
                // smaller later value still might.
                continue;
            }
            let budget = self.q.max_size - (self.picked.len() + 1);
            if s + self.best_extension(idx + 1, budget) < self.lower {
                // Values only shrink from here, so no later branch reaches
                // the window either.
                break;
            }
            self.picked.push(self.order[idx]);
            if (s - self.q.target).abs() <= self.near {
                let mut positions = self.picked.clone();
                positions.sort_unstable();
                if let Some(hit) = hit_from(self.entries, &positions, self.q) {
                    self.hits.push(hit);
                }
            }
            if self.picked.len() < self.q.max_size {
                self.descend(idx + 1, s);
            }
            self.picked.pop();
        }
    }
}

#[derive(Clone, Copy)]
struct HalfSubset {
    sum: f64,
    count: u8,
    mask: u32,
}

fn half_subsets(side: &[(usize, f64)], max_size: usize) -> Vec<HalfSubset> {
    // DFS in ascending position order keeps each half-sum equal to its
    // canonical within-half fold. The empty subset is included so the join
    // can produce single-sided hits.
    fn rec(
        side: &[(usize, f64)],
        start: usize,
        sum: f64,
        count: usize,
        mask: u32,
        max_size: usize,
        out: &mut Vec<HalfSubset>,
    ) {
        for pos in start..side.len() {
            let s = sum + side[pos].1;
            let m = mask | (1u32 << pos);
            out.push(HalfSubset {
                sum: s,
                count: (count + 1) as u8,
                mask: m,
            });
            if count + 1 < max_size {
                rec(side, pos + 1, s, count + 1, m, max_size, out);
            }
        }
    }
    let mut out = vec![HalfSubset {
        sum: 0.0,
        count: 0,
        mask: 0,
    }];
    rec(side, 0, 0.0, 0, 0, max_size, &mut out);
    out
}

fn mask_positions(mask: u32, offset: usize, out: &mut Vec<usize>) {
    let mut m = mask;
    while m != 0 {
        let bit = m.trailing_zeros() as usize;
        out.push(offset + bit);
        m &= m - 1;
    }
}

/// Split the pool in half, enumerate each half's subset sums, and join the
/// sorted left sums against the window shifted by each right sum.
pub fn solve_meet_middle(q: &SubsetQuery) -> Result<Vec<SubsetHit>, Error> {
    if q.pool.len() > MEET_MIDDLE_POOL_LIMIT {
        return Err(Error::PoolTooLarge {
            size: q.pool.len(),
            limit: MEET_MIDDLE_POOL_LIMIT,
        });
    }
    let entries = sorted_by_node(&q.pool);
    let half = entries.len() / 2;
    let mut left = half_subsets(&entries[..half], q.max_size);
    left.sort_by(|a, b| a.sum.total_cmp(&b.sum));
    let right = half_subsets(&entries[half..], q.max_size);
    let slack = pruning_slack(&entries, q);

    let mut hits = Vec::new();
    let mut positions = Vec::new();
    for r in &right {
        let lo = q.target - q.tolerance - r.sum - slack;
        let hi = q.target + q.tolerance - r.sum + slack;
        let start = left.partition_point(|l| l.sum < lo);
        for l in &left[start..] {
            if l.sum > hi {
                break;
            }
            let size = l.count as usize + r.count as usize;
            if size == 0 || size > q.max_size {
                continue;
            }
            positions.clear();
            mask_positions(l.mask, 0, &mut positions);
            mask_positions(r.mask, half, &mut positions);
            if let Some(hit) = hit_from(&entries, &positions, q) {
                hits.push(hit);
            }
        }
    }
    Ok(canonical_order(hits, q.limit))
}

/// Route a query to a capable backend: branch-and-bound whenever the pool
/// is nonnegative, otherwise meet-in-the-middle while the pool fits.
pub fn solve(q: &SubsetQuery) -> Result<Vec<SubsetHit>, Error> {
    if q.pool.iter().all(|e| e.1 >= 0.0) {
        solve_branch_bound(q)
    } else if q.pool.len() <= MEET_MIDDLE_POOL_LIMIT {
        solve_meet_middle(q)
    } else {
        Err(Error::PoolTooLarge {
            size: q.pool.len(),
            limit: MEET_MIDDLE_POOL_LIMIT,
        })
    }
}

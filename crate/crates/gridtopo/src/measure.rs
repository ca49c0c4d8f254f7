//! Synthetic nodal load generation, aggregation up the tree, meter-noise
//! injection and CSV round-tripping.
//!
//! Readings are active power in kW, one row per node and one column per
//! timestep. A matrix optionally carries the per-node individual
//! consumption alongside the metered (aggregate) readings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::Serialize;

use crate::error::Error;
use crate::grid::Topology;

/// n x K matrix of power readings, with an optional individual-consumption
/// channel of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    nodes: usize,
    timesteps: usize,
    readings: Vec<f64>,
    individual: Option<Vec<f64>>,
}

impl MeasurementMatrix {
    pub fn from_readings(nodes: usize, timesteps: usize, readings: Vec<f64>) -> Self {
        assert_eq!(readings.len(), nodes * timesteps);
        MeasurementMatrix {
            nodes,
            timesteps,
            readings,
            individual: None,
        }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn reading(&self, node: usize, k: usize) -> f64 {
        self.readings[node * self.timesteps + k]
    }

    pub fn individual(&self, node: usize, k: usize) -> Option<f64> {
        self.individual
            .as_ref()
            .map(|ind| ind[node * self.timesteps + k])
    }

    pub fn has_individual(&self) -> bool {
        self.individual.is_some()
    }

    /// The individual channel repackaged as a plain readings matrix.
    pub fn individual_matrix(&self) -> Option<MeasurementMatrix> {
        self.individual
            .as_ref()
            .map(|ind| MeasurementMatrix::from_readings(self.nodes, self.timesteps, ind.clone()))
    }

    pub fn min_reading(&self) -> f64 {
        self.readings.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Attach another matrix's readings (same shape) as this one's
    /// individual-consumption channel.
    pub fn attach_individual(&self, individual: &MeasurementMatrix) -> MeasurementMatrix {
        assert_eq!(self.nodes, individual.nodes);
        assert_eq!(self.timesteps, individual.timesteps);
        MeasurementMatrix {
            nodes: self.nodes,
            timesteps: self.timesteps,
            readings: self.readings.clone(),
            individual: Some(individual.readings.clone()),
        }
    }

    fn with_individual(mut self, individual: Vec<f64>) -> Self {
        assert_eq!(individual.len(), self.nodes * self.timesteps);
        self.individual = Some(individual);
        self
    }
}

/// Gaussian meter-error specification.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NoiseModel {
    /// Standard deviation: kW in additive mode, a dimensionless
    /// fraction of the true value in multiplicative mode.
    pub sigma: f64,
    pub mode: NoiseMode,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    Additive,
    Multiplicative,
}

/// How meter readings relate to loads when aggregating up the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    /// Leaves meter their own load; internal nodes meter the plain sum of
    /// their children's readings (own consumption ignored).
    PureSum,
    /// Every node meters its own load plus its children's readings; the
    /// individual channel rides along so own consumption stays separable.
    OwnLoad,
}

/// Draw i.i.d. uniform loads on `[lo, hi]` for every node and timestep.
/// The result carries the draws as both the readings and the individual
/// channel; feed it through [`aggregate_readings`] to obtain meter values.
pub fn sample_loads(
    topo: &Topology,
    timesteps: usize,
    lo: f64,
    hi: f64,
    seed: u64,
) -> MeasurementMatrix {
    assert!(lo < hi, "load range must satisfy lo < hi");
    assert!(timesteps >= 1, "need at least one timestep");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(lo, hi);
    let data: Vec<f64> = (0..topo.len() * timesteps)
        .map(|_| dist.sample(&mut rng))
        .collect();
    MeasurementMatrix::from_readings(topo.len(), timesteps, data.clone()).with_individual(data)
}

/// Roll loads up the tree per nodal power balance. Children are summed in
/// ascending index order so the noiseless balance holds bit-exactly.
pub fn aggregate_readings(
    topo: &Topology,
    loads: &MeasurementMatrix,
    mode: AggregationMode,
) -> Result<MeasurementMatrix, Error> {
    let individual = loads
        .individual
        .as_ref()
        .ok_or(Error::MissingIndividualChannel)?;
    assert_eq!(loads.nodes(), topo.len());
    let n = topo.len();
    let k_count = loads.timesteps();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&j| std::cmp::Reverse(topo.layer(j)));

    let mut readings = vec![0.0f64; n * k_count];
    for &node in &order {
        for k in 0..k_count {
            let own = individual[node * k_count + k];
            let mut acc = match mode {
                AggregationMode::PureSum => {
                    if topo.is_leaf(node) {
                        own
                    } else {
                        0.0
                    }
                }
                AggregationMode::OwnLoad => own,
            };
            for &child in topo.children(node) {
                acc += readings[child * k_count + k];
            }
            readings[node * k_count + k] = acc;
        }
    }
    Ok(MeasurementMatrix::from_readings(n, k_count, readings).with_individual(individual.clone()))
}

/// Apply Gaussian meter noise, returning a new matrix. Additive mode adds
/// `N(0, sigma^2)` kW to each entry; multiplicative mode scales each entry
/// by `1 + N(0, sigma^2)`, matching a percent-of-true-value error class.
/// Both the readings and any individual channel are perturbed.
pub fn inject_noise(x: &MeasurementMatrix, nm: &NoiseModel) -> MeasurementMatrix {
    assert!(nm.sigma >= 0.0, "sigma must be nonnegative");
    let mut rng = ChaCha8Rng::seed_from_u64(nm.seed);
    let normal = Normal::new(0.0, nm.sigma).expect("sigma must be finite and nonnegative");
    let mut apply = |values: &[f64]| -> Vec<f64> {
        values
            .iter()
            .map(|&v| match nm.mode {
                NoiseMode::Additive => v + normal.sample(&mut rng),
                NoiseMode::Multiplicative => v * (1.0 + normal.sample(&mut rng)),
            })
            .collect()
    };
    let readings = apply(&x.readings);
    let individual = x.individual.as_ref().map(|ind| apply(ind));
    MeasurementMatrix {
        nodes: x.nodes,
        timesteps: x.timesteps,
        readings,
        individual,
    }
}

/// Render the readings as CSV: row i = node i, column k = timestep k.
/// Values print in shortest round-trip form, so `read_csv` restores them
/// exactly.
pub fn write_csv(x: &MeasurementMatrix) -> String {
    let mut out = String::from("# node readings: rows = nodes, columns = timesteps\n");
    for node in 0..x.nodes {
        let row: Vec<String> = (0..x.timesteps)
            .map(|k| format!("{}", x.reading(node, k)))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parse a readings CSV. Lines starting with `#` and blank lines are
/// skipped; every data row must have the same number of numeric cells.
pub fn read_csv(text: &str) -> Result<MeasurementMatrix, Error> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for (col, cell) in line.split(',').enumerate() {
            let cell = cell.trim();
            match cell.parse::<f64>() {
                Ok(v) => row.push(v),
                Err(_) => {
                    return Err(Error::CsvNumber {
                        line: idx + 1,
                        column: col + 1,
                        text: cell.to_string(),
                    })
                }
            }
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::CsvShape {
                    line: idx + 1,
                    expected: w,
                    found: row.len(),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::CsvEmpty);
    }
    let timesteps = width.unwrap();
    let nodes = rows.len();
    let readings = rows.into_iter().flatten().collect();
    Ok(MeasurementMatrix::from_readings(nodes, timesteps, readings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::feeder13;

    #[test]
    fn loads_stay_in_range() {
        let t = Topology::random(13, 4, 3);
        let m = sample_loads(&t, 10, 25.0, 50.0, 42);
        for node in 0..13 {
            for k in 0..10 {
                let v = m.reading(node, k);
                assert!((25.0..=50.0).contains(&v), "{v}");
            }
        }
        let single = sample_loads(&t, 1, 0.0, 50.0, 42);
        for node in 0..13 {
            assert!((0.0..=50.0).contains(&single.reading(node, 0)));
        }
    }

    #[test]
    fn loads_are_reproducible() {
        let t = Topology::random(5, 2, 9);
        assert_eq!(
            sample_loads(&t, 4, 25.0, 50.0, 1),
            sample_loads(&t, 4, 25.0, 50.0, 1)
        );
        assert_ne!(
            sample_loads(&t, 4, 25.0, 50.0, 1),
            sample_loads(&t, 4, 25.0, 50.0, 2)
        );
    }

    #[test]
    fn load_sample_mean_is_near_midpoint() {
        let t = Topology::random(33, 4, 0);
        let m = sample_loads(&t, 1000, 25.0, 50.0, 7);
        let total: f64 = (0..33)
            .flat_map(|i| (0..1000).map(move |k| (i, k)))
            .map(|(i, k)| m.reading(i, k))
            .sum();
        let mean = total / (33.0 * 1000.0);
        assert!((mean - 37.5).abs() < 1.0, "mean {mean}");
    }

    #[test]
    fn star_pure_sum_is_power_balance() {
        // root with two leaves carrying 3 kW and 4 kW
        let t = Topology::from_parts(vec![None, Some(0), Some(0)], vec![0, 1, 1]);
        let loads = MeasurementMatrix::from_readings(3, 1, vec![99.0, 3.0, 4.0])
            .with_individual(vec![99.0, 3.0, 4.0]);
        let agg = aggregate_readings(&t, &loads, AggregationMode::PureSum).unwrap();
        assert_eq!(agg.reading(0, 0), 7.0);
        assert_eq!(agg.reading(1, 0), 3.0);
        assert_eq!(agg.reading(2, 0), 4.0);
    }

    #[test]
    fn chain_own_load_telescopes() {
        let t = Topology::from_parts(vec![None, Some(0), Some(1)], vec![0, 1, 2]);
        let loads = MeasurementMatrix::from_readings(3, 1, vec![1.0, 2.0, 3.0])
            .with_individual(vec![1.0, 2.0, 3.0]);
        let agg = aggregate_readings(&t, &loads, AggregationMode::OwnLoad).unwrap();
        assert_eq!(agg.reading(0, 0), 6.0);
        assert_eq!(agg.reading(1, 0), 5.0);
        assert_eq!(agg.reading(2, 0), 3.0);
        assert_eq!(agg.individual(1, 0), Some(2.0));
    }

    #[test]
    fn aggregate_requires_individual_channel() {
        let t = Topology::random(3, 2, 0);
        let bare = MeasurementMatrix::from_readings(3, 1, vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            aggregate_readings(&t, &bare, AggregationMode::PureSum),
            Err(Error::MissingIndividualChannel)
        ));
    }

    #[test]
    fn pure_sum_matches_independent_postorder() {
        let t = feeder13();
        let loads = sample_loads(&t, 6, 25.0, 50.0, 17);
        let agg = aggregate_readings(&t, &loads, AggregationMode::PureSum).unwrap();

        // Independent re-computation: recursive post-order walk.
        fn leaf_sum(t: &Topology, loads: &MeasurementMatrix, node: usize, k: usize) -> f64 {
            if t.is_leaf(node) {
                loads.individual(node, k).unwrap()
            } else {
                t.children(node)
                    .iter()
                    .map(|&c| leaf_sum(t, loads, c, k))
                    .sum()
            }
        }
        for node in 0..t.len() {
            for k in 0..6 {
                let expect = leaf_sum(&t, &loads, node, k);
                assert!((agg.reading(node, k) - expect).abs() < 1e-9);
            }
        }
        // And the exact invariant: parent reading equals the ascending-order
        // children sum bit-for-bit.
        for node in 0..t.len() {
            if t.is_leaf(node) {
                continue;
            }
            for k in 0..6 {
                let children_sum = t
                    .children(node)
                    .iter()
                    .fold(0.0, |acc, &c| acc + agg.reading(c, k));
                assert_eq!(agg.reading(node, k), children_sum);
            }
        }
    }

    #[test]
    fn own_load_root_carries_total() {
        let t = Topology::random(21, 3, 2);
        let loads = sample_loads(&t, 5, 25.0, 50.0, 3);
        let agg = aggregate_readings(&t, &loads, AggregationMode::OwnLoad).unwrap();
        for k in 0..5 {
            let total: f64 = (0..21).map(|i| loads.individual(i, k).unwrap()).sum();
            let root = agg.reading(0, k);
            assert!((root - total).abs() <= 1e-12 * total.abs());
        }
    }

    #[test]
    fn zero_sigma_noise_is_identity() {
        let t = Topology::random(9, 3, 4);
        let m = sample_loads(&t, 5, 25.0, 50.0, 8);
        let noisy = inject_noise(
            &m,
            &NoiseModel {
                sigma: 0.0,
                mode: NoiseMode::Additive,
                seed: 5,
            },
        );
        assert_eq!(m, noisy);
    }

    #[test]
    fn noise_is_pure_and_reproducible() {
        let t = Topology::random(9, 3, 4);
        let m = sample_loads(&t, 5, 25.0, 50.0, 8);
        let before = m.clone();
        let nm = NoiseModel {
            sigma: 0.05,
            mode: NoiseMode::Additive,
            seed: 5,
        };
        let a = inject_noise(&m, &nm);
        let b = inject_noise(&m, &nm);
        assert_eq!(m, before, "input must be untouched");
        assert_eq!(a, b);
    }

    #[test]
    fn additive_noise_std_matches_sigma() {
        let t = Topology::random(100, 4, 1);
        let m = sample_loads(&t, 100, 25.0, 50.0, 2);
        let noisy = inject_noise(
            &m,
            &NoiseModel {
                sigma: 0.05,
                mode: NoiseMode::Additive,
                seed: 3,
            },
        );
        let diffs: Vec<f64> = (0..100)
            .flat_map(|i| (0..100).map(move |k| (i, k)))
            .map(|(i, k)| noisy.reading(i, k) - m.reading(i, k))
            .collect();
        let mean: f64 = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var: f64 =
            diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / diffs.len() as f64;
        let std = var.sqrt();
        assert!((std - 0.05).abs() < 0.005, "std {std}");
    }

    #[test]
    fn multiplicative_noise_scales_with_value() {
        let m = MeasurementMatrix::from_readings(1, 2, vec![100.0, 0.0]);
        let noisy = inject_noise(
            &m,
            &NoiseModel {
                sigma: 0.1,
                mode: NoiseMode::Multiplicative,
                seed: 11,
            },
        );
        assert_eq!(noisy.reading(0, 1), 0.0, "zero scales to zero");
        assert_ne!(noisy.reading(0, 0), 100.0);
    }

    #[test]
    fn csv_round_trips_exactly() {
        let m = MeasurementMatrix::from_readings(2, 2, vec![1.5, 2.25, -3.125, 1e-9]);
        let text = write_csv(&m);
        let back = read_csv(&text).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn csv_skips_comment_header() {
        let text = "# node header to skip\n1,2\n3,4\n";
        let m = read_csv(text).unwrap();
        assert_eq!(m.nodes(), 2);
        assert_eq!(m.reading(1, 0), 3.0);
    }

    #[test]
    fn csv_rejects_ragged_and_garbage() {
        assert!(matches!(
            read_csv("1,2\n3\n").unwrap_err(),
            Error::CsvShape { line: 2, .. }
        ));
        assert!(matches!(
            read_csv("1,abc\n").unwrap_err(),
            Error::CsvNumber {
                line: 1,
                column: 2,
                ..
            }
        ));
        assert!(matches!(
            read_csv("# only comments\n").unwrap_err(),
            Error::CsvEmpty
        ));
    }

    proptest::proptest! {
        #[test]
        fn csv_round_trip_any_matrix(
            nodes in 1usize..20,
            timesteps in 1usize..12,
            seed in 0u64..500,
        ) {
            let t = Topology::random(nodes, 4, seed);
            let m = sample_loads(&t, timesteps, 0.0, 120.0, seed ^ 0xabcd);
            let noisy = inject_noise(&m, &NoiseModel {
                sigma: 1.0,
                mode: NoiseMode::Additive,
                seed,
            });
            let back = read_csv(&write_csv(&noisy)).unwrap();
            proptest::prop_assert_eq!(back.nodes(), noisy.nodes());
            proptest::prop_assert_eq!(back.timesteps(), noisy.timesteps());
            for i in 0..noisy.nodes() {
                for k in 0..noisy.timesteps() {
                    proptest::prop_assert_eq!(back.reading(i, k), noisy.reading(i, k));
                }
            }
        }
    }

    #[test]
    fn large_matrix_round_trips() {
        let t = Topology::random(123, 4, 21);
        let loads = sample_loads(&t, 10, 25.0, 50.0, 22);
        let agg = aggregate_readings(&t, &loads, AggregationMode::PureSum).unwrap();
        let back = read_csv(&write_csv(&agg)).unwrap();
        for i in 0..123 {
            for k in 0..10 {
                assert_eq!(back.reading(i, k), agg.reading(i, k));
            }
        }
    }
}

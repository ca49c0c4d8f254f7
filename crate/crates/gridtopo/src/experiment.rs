//! Reproducible experiment runner: cross sizes, noise levels and seeds,
//! score every run against its generating topology, and aggregate per-cell
//! statistics into JSON or CSV reports.
//!
//! All randomness derives from the run seed and the network size, so a
//! sweep is bit-reproducible regardless of thread count. Noise draws do
//! not depend on sigma (sigma only scales them), which pairs the noise
//! levels of a sweep for clean comparisons; hierarchy on/off runs see
//! identical data for the same reason.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Error;
use crate::grid::Topology;
use crate::hssp::{identify_topology, HsspOptions};
use crate::measure::{
    aggregate_readings, inject_noise, sample_loads, AggregationMode, NoiseMode, NoiseModel,
};
use crate::metrics::{compare, AccuracyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Everything a sweep needs; also the provenance record echoed into every
/// report.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub sizes: Vec<usize>,
    /// Fixed topology file; when set it replaces generated trees and the
    /// size list.
    pub topology: Option<PathBuf>,
    pub timesteps: usize,
    pub load_min: f64,
    pub load_max: f64,
    pub sigmas: Vec<f64>,
    pub noise_mode: NoiseMode,
    pub branching: usize,
    /// Hierarchy settings to run; `[true, false]` produces the
    /// ordered-vs-unordered comparison.
    pub hierarchy_modes: Vec<bool>,
    pub z: f64,
    pub tolerance_floor: f64,
    pub max_children: usize,
    pub vote_limit: usize,
    pub aggregation: AggregationMode,
    pub seeds: Vec<u64>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub format: ReportFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sizes: vec![13],
            topology: None,
            timesteps: 10,
            load_min: 25.0,
            load_max: 50.0,
            sigmas: vec![0.01],
            noise_mode: NoiseMode::Additive,
            branching: 4,
            hierarchy_modes: vec![true],
            z: 3.0,
            tolerance_floor: 1e-9,
            max_children: 8,
            vote_limit: 64,
            aggregation: AggregationMode::PureSum,
            seeds: vec![1],
            out: None,
            format: ReportFormat::Json,
        }
    }
}

/// The benchmark grid: five network sizes under four noise levels,
/// twenty seeds each, hierarchical mode. `max_children` matches the
/// generator's branching and the vote limit is widened so the coarse
/// noise levels keep their true candidates in the tally.
pub fn table1_preset() -> ExperimentConfig {
    ExperimentConfig {
        sizes: vec![13, 33, 63, 93, 123],
        sigmas: vec![0.01, 0.02, 0.05, 2.0],
        seeds: (1..=20).collect(),
        hierarchy_modes: vec![true],
        max_children: 4,
        vote_limit: 1024,
        ..ExperimentConfig::default()
    }
}

/// The ordered-vs-unordered comparison: hierarchy on and off over three
/// sizes at a fixed noise level, thirty seeds each.
pub fn fig4_preset() -> ExperimentConfig {
    ExperimentConfig {
        sizes: vec![13, 33, 63],
        sigmas: vec![0.02],
        seeds: (1..=30).collect(),
        hierarchy_modes: vec![true, false],
        max_children: 4,
        vote_limit: 1024,
        ..ExperimentConfig::default()
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig, Error> {
    match name {
        "table1" => Ok(table1_preset()),
        "fig4" => Ok(fig4_preset()),
        other => Err(Error::Config(format!(
            "unknown preset '{other}' (expected table1 or fig4)"
        ))),
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Independent RNG streams per (seed, size, purpose). Streams 0..=2 feed
/// topology, loads and noise.
fn stream_seed(seed: u64, size: usize, stream: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64((size as u64).wrapping_mul(0x10001) ^ stream))
}

/// One scored identification run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub size: usize,
    pub sigma: f64,
    pub hierarchy: bool,
    pub seed: u64,
    pub edge_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub element_agreement: f64,
    /// Wall time of the identification call alone; kept out of serialized
    /// reports so repeated runs emit identical bytes.
    #[serde(skip)]
    pub identify_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum RunOutcome {
    Ok(RunRecord),
    Failed {
        size: usize,
        sigma: f64,
        hierarchy: bool,
        seed: u64,
        error: String,
    },
}

/// Aggregate statistics for one (size, sigma, hierarchy) cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellStats {
    pub size: usize,
    pub sigma: f64,
    pub hierarchy: bool,
    pub runs: usize,
    pub failures: usize,
    pub mean_edge_accuracy: f64,
    pub std_edge_accuracy: f64,
    pub min_edge_accuracy: f64,
    pub max_edge_accuracy: f64,
    pub mean_precision: f64,
    pub mean_f1: f64,
    pub mean_element_agreement: f64,
    #[serde(skip)]
    pub mean_identify_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub cells: Vec<CellStats>,
    pub runs: Vec<RunOutcome>,
}

impl ExperimentResult {
    pub fn cell(&self, size: usize, sigma: f64, hierarchy: bool) -> Option<&CellStats> {
        self.cells
            .iter()
            .find(|c| c.size == size && c.sigma == sigma && c.hierarchy == hierarchy)
    }
}

fn hssp_options(cfg: &ExperimentConfig, topo: &Topology, hierarchy: bool) -> HsspOptions {
    HsspOptions {
        hierarchy: hierarchy.then(|| topo.layers().to_vec()),
        z: cfg.z,
        tolerance_floor: cfg.tolerance_floor,
        max_children: cfg.max_children,
        vote_limit: cfg.vote_limit,
        aggregation: cfg.aggregation,
        dominance_pruning: true,
    }
}

/// Generate, identify and score a single (size, sigma, hierarchy, seed)
/// combination. `fixed` short-circuits topology generation.
pub fn run_one(
    cfg: &ExperimentConfig,
    fixed: Option<&Topology>,
    size: usize,
    sigma: f64,
    hierarchy: bool,
    seed: u64,
) -> Result<RunRecord, Error> {
    let generated;
    let topo = match fixed {
        Some(t) => t,
        None => {
            generated = Topology::random(size, cfg.branching, stream_seed(seed, size, 0));
            &generated
        }
    };
    let loads = sample_loads(
        topo,
        cfg.timesteps,
        cfg.load_min,
        cfg.load_max,
        stream_seed(seed, size, 1),
    );
    let aggregated = aggregate_readings(topo, &loads, cfg.aggregation)?;
    let noisy = inject_noise(
        &aggregated,
        &NoiseModel {
            sigma,
            mode: cfg.noise_mode,
            seed: stream_seed(seed, size, 2),
        },
    );
    let opts = hssp_options(cfg, topo, hierarchy);
    let start = std::time::Instant::now();
    let estimate = identify_topology(&noisy, sigma, &opts)?;
    let elapsed = start.elapsed().as_secs_f64();
    let report: AccuracyReport = compare(&estimate.adjacency, &topo.adjacency())?;
    Ok(RunRecord {
        size,
        sigma,
        hierarchy,
        seed,
        edge_accuracy: report.edge_accuracy,
        precision: report.precision,
        recall: report.recall,
        f1: report.f1,
        element_agreement: report.element_agreement,
        identify_seconds: elapsed,
    })
}

fn validate(cfg: &ExperimentConfig) -> Result<(), Error> {
    if cfg.sizes.is_empty() && cfg.topology.is_none() {
        return Err(Error::Config("no network sizes given".into()));
    }
    if cfg.sigmas.is_empty() {
        return Err(Error::Config("no sigma values given".into()));
    }
    if cfg.seeds.is_empty() {
        return Err(Error::Config("no seeds given".into()));
    }
    if cfg.hierarchy_modes.is_empty() {
        return Err(Error::Config("no hierarchy modes given".into()));
    }
    if cfg.timesteps == 0 {
        return Err(Error::Config("timesteps must be at least 1".into()));
    }
    if !cfg.load_min.is_finite() || !cfg.load_max.is_finite() || cfg.load_min >= cfg.load_max {
        return Err(Error::Config("load range must satisfy min < max".into()));
    }
    if cfg.z < 0.0 || cfg.tolerance_floor < 0.0 {
        return Err(Error::Config(
            "z and tolerance_floor must be nonnegative".into(),
        ));
    }
    if cfg.max_children == 0 || cfg.vote_limit == 0 {
        return Err(Error::Config(
            "max_children and vote_limit must be at least 1".into(),
        ));
    }
    for &s in &cfg.sigmas {
        if s < 0.0 {
            return Err(Error::Config(format!("sigma {s} is negative")));
        }
    }
    Ok(())
}

/// Run a configuration that pins exactly one size, sigma, hierarchy mode
/// and seed.
pub fn run_single(cfg: &ExperimentConfig) -> Result<ExperimentResult, Error> {
    validate(cfg)?;
    let singleton = cfg.topology.is_some() || cfg.sizes.len() == 1;
    if !(singleton
        && cfg.sigmas.len() == 1
        && cfg.hierarchy_modes.len() == 1
        && cfg.seeds.len() == 1)
    {
        return Err(Error::Config(
            "single run needs exactly one size, sigma, hierarchy mode and seed".into(),
        ));
    }
    run_sweep(cfg)
}

/// Execute the full size x sigma x hierarchy x seed grid, in parallel, and
/// aggregate cells. Individual run failures are recorded and do not abort
/// the sweep.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ExperimentResult, Error> {
    validate(cfg)?;
    let fixed = match &cfg.topology {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Some(Topology::from_edge_list(&text)?)
        }
        None => None,
    };
    let sizes: Vec<usize> = match &fixed {
        Some(t) => vec![t.len()],
        None => cfg.sizes.clone(),
    };

    let mut jobs = Vec::new();
    for &size in &sizes {
        for &sigma in &cfg.sigmas {
            for &hierarchy in &cfg.hierarchy_modes {
                for &seed in &cfg.seeds {
                    jobs.push((size, sigma, hierarchy, seed));
                }
            }
        }
    }

    let outcomes: Vec<RunOutcome> = jobs
        .par_iter()
        .map(|&(size, sigma, hierarchy, seed)| {
            match run_one(cfg, fixed.as_ref(), size, sigma, hierarchy, seed) {
                Ok(record) => RunOutcome::Ok(record),
                Err(err) => RunOutcome::Failed {
                    size,
                    sigma,
                    hierarchy,
                    seed,
                    error: err.to_string(),
                },
            }
        })
        .collect();

    let mut cells = Vec::new();
    for &size in &sizes {
        for &sigma in &cfg.sigmas {
            for &hierarchy in &cfg.hierarchy_modes {
                let group: Vec<&RunOutcome> = outcomes
                    .iter()
                    .filter(|o| match o {
                        RunOutcome::Ok(r) => {
                            r.size == size && r.sigma == sigma && r.hierarchy == hierarchy
                        }
                        RunOutcome::Failed {
                            size: s,
                            sigma: g,
                            hierarchy: h,
                            ..
                        } => *s == size && *g == sigma && *h == hierarchy,
                    })
                    .collect();
                cells.push(aggregate_cell(size, sigma, hierarchy, &group));
            }
        }
    }

    Ok(ExperimentResult {
        config: cfg.clone(),
        cells,
        runs: outcomes,
    })
}

fn aggregate_cell(size: usize, sigma: f64, hierarchy: bool, group: &[&RunOutcome]) -> CellStats {
    let records: Vec<&RunRecord> = group
        .iter()
        .filter_map(|o| match o {
            RunOutcome::Ok(r) => Some(r),
            RunOutcome::Failed { .. } => None,
        })
        .collect();
    let failures = group.len() - records.len();
    let count = records.len();
    let mean = |f: &dyn Fn(&RunRecord) -> f64| -> f64 {
        if count == 0 {
            0.0
        } else {
            records.iter().map(|r| f(r)).sum::<f64>() / count as f64
        }
    };
    let mean_acc = mean(&|r| r.edge_accuracy);
    let var = if count == 0 {
        0.0
    } else {
        records
            .iter()
            .map(|r| {
                let d = r.edge_accuracy - mean_acc;
                d * d
            })
            .sum::<f64>()
            / count as f64
    };
    CellStats {
        size,
        sigma,
        hierarchy,
        runs: group.len(),
        failures,
        mean_edge_accuracy: mean_acc,
        std_edge_accuracy: var.sqrt(),
        min_edge_accuracy: records
            .iter()
            .map(|r| r.edge_accuracy)
            .fold(f64::INFINITY, f64::min),
        max_edge_accuracy: records
            .iter()
            .map(|r| r.edge_accuracy)
            .fold(f64::NEG_INFINITY, f64::max),
        mean_precision: mean(&|r| r.precision),
        mean_f1: mean(&|r| r.f1),
        mean_element_agreement: mean(&|r| r.element_agreement),
        mean_identify_seconds: mean(&|r| r.identify_seconds),
    }
}

/// Render the JSON report: config echo, per-cell stats, per-run records.
/// Timings are deliberately absent so identical configs yield identical
/// bytes.
pub fn to_json(result: &ExperimentResult) -> String {
    let mut text = serde_json::to_string_pretty(result).expect("report serializes");
    text.push('\n');
    text
}

/// Render the CSV report: one row per cell with accuracy statistics and
/// the mean identification wall time.
pub fn to_csv(result: &ExperimentResult) -> String {
    let mut out = String::from(
        "size,sigma,hierarchy,runs,failures,mean_edge_accuracy,std_edge_accuracy,\
         min_edge_accuracy,max_edge_accuracy,mean_precision,mean_f1,mean_element_agreement,\
         mean_identify_seconds\n",
    );
    for c in &result.cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.size,
            c.sigma,
            c.hierarchy,
            c.runs,
            c.failures,
            c.mean_edge_accuracy,
            c.std_edge_accuracy,
            c.min_edge_accuracy,
            c.max_edge_accuracy,
            c.mean_precision,
            c.mean_f1,
            c.mean_element_agreement,
            c.mean_identify_seconds,
        )
        .expect("string write");
    }
    out
}

pub fn render_report(result: &ExperimentResult, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => to_json(result),
        ReportFormat::Csv => to_csv(result),
    }
}

/// Write the report to `path` in the requested format.
pub fn emit_report(
    result: &ExperimentResult,
    format: ReportFormat,
    path: &Path,
) -> Result<(), Error> {
    std::fs::write(path, render_report(result, format)).map_err(|e| Error::io(path, e))
}

/// Parse the flat `key = value` experiment-config format. Lines starting
/// with `#` are comments; a `preset = name` line loads that preset as the
/// new base, so put it first and override below.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("config line {}: expected key = value", idx + 1))
        })?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        apply_key(&mut cfg, &key, value)
            .map_err(|e| Error::Config(format!("config line {}: {e}", idx + 1)))?;
    }
    Ok(cfg)
}

/// Apply one key/value pair to a config; shared by the file parser and the
/// CLI flag overrides.
pub fn apply_key(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), Error> {
    let bad = |what: &str| Error::Config(format!("invalid {what}: '{value}'"));
    match key {
        "preset" => *cfg = preset(value)?,
        "nodes" | "sizes" => cfg.sizes = parse_list(value).map_err(|_| bad("node list"))?,
        "topology" => cfg.topology = Some(PathBuf::from(value)),
        "timesteps" => cfg.timesteps = value.parse().map_err(|_| bad("timesteps"))?,
        "load_min" => cfg.load_min = value.parse().map_err(|_| bad("load_min"))?,
        "load_max" => cfg.load_max = value.parse().map_err(|_| bad("load_max"))?,
        "sigma" | "sigmas" => {
            cfg.sigmas = value
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad("sigma list"))?
        }
        "noise_mode" => {
            cfg.noise_mode = match value {
                "additive" => NoiseMode::Additive,
                "multiplicative" => NoiseMode::Multiplicative,
                _ => return Err(bad("noise_mode (additive|multiplicative)")),
            }
        }
        "branching" => cfg.branching = value.parse().map_err(|_| bad("branching"))?,
        "hierarchy" => {
            cfg.hierarchy_modes = match value {
                "on" | "true" => vec![true],
                "off" | "false" => vec![false],
                "both" => vec![true, false],
                _ => return Err(bad("hierarchy (on|off|both)")),
            }
        }
        "z" => cfg.z = value.parse().map_err(|_| bad("z"))?,
        "tolerance_floor" => {
            cfg.tolerance_floor = value.parse().map_err(|_| bad("tolerance_floor"))?
        }
        "max_children" => cfg.max_children = value.parse().map_err(|_| bad("max_children"))?,
        "vote_limit" => cfg.vote_limit = value.parse().map_err(|_| bad("vote_limit"))?,
        "aggregation" | "mode" => {
            cfg.aggregation = match value {
                "pure_sum" | "pure-sum" => AggregationMode::PureSum,
                "own_load" | "own-load" => AggregationMode::OwnLoad,
                _ => return Err(bad("aggregation (pure_sum|own_load)")),
            }
        }
        "seed" => cfg.seeds = vec![value.parse().map_err(|_| bad("seed"))?],
        "seeds" => cfg.seeds = parse_list(value).map_err(|_| bad("seed list"))?,
        "out" => cfg.out = Some(PathBuf::from(value)),
        "format" => {
            cfg.format = match value {
                "json" => ReportFormat::Json,
                "csv" => ReportFormat::Csv,
                _ => return Err(bad("format (json|csv)")),
            }
        }
        other => return Err(Error::Config(format!("unknown key '{other}'"))),
    }
    Ok(())
}

/// Parse `1,2,3` or an inclusive range `1..20`.
fn parse_list<T: std::str::FromStr + PartialOrd + Copy>(value: &str) -> Result<Vec<T>, ()>
where
    std::ops::RangeInclusive<T>: Iterator<Item = T>,
{
    if let Some((lo, hi)) = value.split_once("..") {
        let lo: T = lo.trim().parse().map_err(|_| ())?;
        let hi: T = hi.trim().parse().map_err(|_| ())?;
        if lo > hi {
            return Err(());
        }
        return Ok((lo..=hi).collect());
    }
    value
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| ()))
        .collect()
}

//! Identify the tree topology of a radial power-distribution grid from
//! noisy nodal power time series.
//!
//! The pipeline rests on one observation: under nodal power balance, an
//! internal node's meter reading is the sum of its children's readings.
//! Matching each candidate parent's reading against subset sums of the
//! candidate child pool — within a noise-aware tolerance window — and
//! voting the matches across timesteps recovers the grid's edges. Layer
//! labels (voltage levels), when known, restrict each search to adjacent
//! layers; without them dominance pruning trims the candidate pools.
//!
//! Modules:
//! - [`grid`] — radial topologies, adjacency matrices, edge-list I/O
//! - [`measure`] — synthetic loads, power-balance aggregation, meter noise, CSV
//! - [`solver`] — tolerance-window subset-sum backends
//! - [`hssp`] — the identification pipeline (partition, vote, reduce)
//! - [`metrics`] — edge- and element-level accuracy scoring
//! - [`oracle`] — exhaustive tree search for tiny grids
//! - [`experiment`] — seeded sweeps and machine-readable reports
//!
//! See the crate examples for runnable walkthroughs of each capability,
//! and the `gridtopo` binary for the file-based workflow.

pub mod error;
pub mod experiment;
pub mod grid;
pub mod hssp;
pub mod measure;
pub mod metrics;
pub mod oracle;
pub mod solver;

pub use error::Error;
pub use experiment::{run_single, run_sweep, ExperimentConfig, ExperimentResult, ReportFormat};
pub use grid::{feeder13, AdjacencyMatrix, Topology};
pub use hssp::{identify_topology, EstimatedTopology, HsspOptions};
pub use measure::{
    aggregate_readings, inject_noise, read_csv, sample_loads, write_csv, AggregationMode,
    MeasurementMatrix, NoiseMode, NoiseModel,
};
pub use metrics::{compare, AccuracyReport};
pub use oracle::{exhaustive_identify, OracleResult};
pub use solver::{
    enumerate_exhaustive, solve_branch_bound, solve_meet_middle, SubsetHit, SubsetQuery,
};

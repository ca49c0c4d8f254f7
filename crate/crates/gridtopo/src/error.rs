use std::path::PathBuf;
use thiserror::Error;

/// Reason a node/edge structure fails the radial-tree check.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RadialDefect {
    #[error("cycle through node {node}")]
    Cycle { node: usize },
    #[error("node {node} is not reachable from the root")]
    Disconnected { node: usize },
    #[error("node {node} has layer {stored} but sits at depth {depth}")]
    LayerMismatch {
        node: usize,
        stored: usize,
        depth: usize,
    },
    #[error("{edges} edges where a tree on {nodes} nodes needs {}", nodes - 1)]
    EdgeCount { edges: usize, nodes: usize },
    #[error("root must be node 0 with no parent")]
    BadRoot,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge list line {line}: expected 'parent child', got '{text}'")]
    EdgeParse { line: usize, text: String },
    #[error("duplicate edge {a} {b}")]
    DuplicateEdge { a: usize, b: usize },
    #[error("self-link at node {node}")]
    SelfLink { node: usize },
    #[error("not a radial tree: {0}")]
    NotRadial(RadialDefect),
    #[error("csv line {line}: row has {found} columns, expected {expected}")]
    CsvShape {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("csv line {line}, column {column}: '{text}' is not a number")]
    CsvNumber {
        line: usize,
        column: usize,
        text: String,
    },
    #[error("csv input contains no data rows")]
    CsvEmpty,
    #[error("pool of {size} values exceeds the backend limit of {limit}")]
    PoolTooLarge { size: usize, limit: usize },
    #[error("pool value for node {node} is negative; branch-and-bound needs nonnegative values")]
    NegativePoolValue { node: usize },
    #[error("measurement matrix has no individual-consumption channel")]
    MissingIndividualChannel,
    #[error("got {found} layer labels for {expected} nodes")]
    LayerCount { expected: usize, found: usize },
    #[error("exhaustive tree search supports at most {limit} nodes, got {n}")]
    TooManyNodes { n: usize, limit: usize },
    #[error("adjacency matrices have different sizes: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code a CLI front end should use for this error:
    /// 1 for usage/configuration/file problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::EdgeParse { .. }
            | Error::DuplicateEdge { .. }
            | Error::SelfLink { .. }
            | Error::NotRadial(_)
            | Error::CsvShape { .. }
            | Error::CsvNumber { .. }
            | Error::CsvEmpty
            | Error::LayerCount { .. }
            | Error::TooManyNodes { .. }
            | Error::Config(_)
            | Error::Io { .. } => 1,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

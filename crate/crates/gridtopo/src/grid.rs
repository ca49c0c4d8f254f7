//! Radial grid topologies: rooted layered trees, their adjacency
//! matrices, random generation and edge-list parsing.
//!
//! Node 0 is the feeder root by convention. Every node carries a layer
//! label equal to its depth below the root, so layer(child) is always
//! layer(parent) + 1.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, RadialDefect};

/// A rooted radial tree over `n` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    root: usize,
    parent_of: Vec<Option<usize>>,
    layer: Vec<usize>,
    children: Vec<Vec<usize>>,
}

impl Topology {
    /// Assemble a topology from parent pointers and layer labels without
    /// validating it; call [`Topology::validate`] to check the result.
    pub fn from_parts(parent_of: Vec<Option<usize>>, layer: Vec<usize>) -> Self {
        assert_eq!(parent_of.len(), layer.len());
        let n = parent_of.len();
        let mut children = vec![Vec::new(); n];
        for (child, parent) in parent_of.iter().enumerate() {
            if let Some(p) = parent {
                if *p < n {
                    children[*p].push(child);
                }
            }
        }
        // children vectors are ascending because child indices are visited in order
        Topology {
            n,
            root: 0,
            parent_of,
            layer,
            children,
        }
    }

    /// Grow a random layered tree: node 0 is the root, each later node
    /// attaches uniformly to an existing node that still has spare child
    /// capacity. Deterministic for a fixed `(n, branching, seed)`.
    pub fn random(n: usize, branching: usize, seed: u64) -> Self {
        assert!(n >= 1, "need at least one node");
        assert!(branching >= 1, "branching must be at least 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut parent_of = vec![None; n];
        let mut layer = vec![0usize; n];
        let mut child_count = vec![0usize; n];
        for node in 1..n {
            let eligible: Vec<usize> = (0..node).filter(|&u| child_count[u] < branching).collect();
            let parent = eligible[rng.gen_range(0..eligible.len())];
            parent_of[node] = Some(parent);
            layer[node] = layer[parent] + 1;
            child_count[parent] += 1;
        }
        Topology::from_parts(parent_of, layer)
    }

    /// Parse an edge-list text: one `parent child` pair per line,
    /// whitespace-separated 0-based indices, `#` starts a comment.
    /// Node 0 is taken as the root and layers are the BFS depths.
    pub fn from_edge_list(text: &str) -> Result<Self, Error> {
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let a = parts.next().and_then(|t| t.parse::<usize>().ok());
            let b = parts.next().and_then(|t| t.parse::<usize>().ok());
            let (a, b) = match (a, b, parts.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(Error::EdgeParse {
                        line: idx + 1,
                        text: line.to_string(),
                    })
                }
            };
            if a == b {
                return Err(Error::SelfLink { node: a });
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge { a, b });
            }
            edges.push((a, b));
        }
        let n = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(1);

        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }

        // BFS from the root, diagnosing back edges as cycles.
        let mut parent_of = vec![None; n];
        let mut layer = vec![0usize; n];
        let mut visited = vec![false; n];
        visited[0] = true;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &v in &neighbors[u] {
                if !visited[v] {
                    visited[v] = true;
                    parent_of[v] = Some(u);
                    layer[v] = layer[u] + 1;
                    queue.push_back(v);
                } else if parent_of[u] != Some(v) && v != u {
                    return Err(Error::NotRadial(RadialDefect::Cycle { node: v }));
                }
            }
        }
        if let Some(node) = visited.iter().position(|&v| !v) {
            return Err(Error::NotRadial(RadialDefect::Disconnected { node }));
        }
        let topo = Topology::from_parts(parent_of, layer);
        topo.validate()?;
        Ok(topo)
    }

    /// Check the radial-tree invariants: n-1 edges, connected, acyclic,
    /// root at node 0, and layer labels equal to BFS depth.
    pub fn validate(&self) -> Result<(), Error> {
        if self.n == 0 {
            return Err(Error::NotRadial(RadialDefect::BadRoot));
        }
        if self.parent_of[self.root].is_some() {
            return Err(Error::NotRadial(RadialDefect::BadRoot));
        }
        for (child, parent) in self.parent_of.iter().enumerate() {
            if let Some(p) = parent {
                if *p == child {
                    return Err(Error::SelfLink { node: child });
                }
                if *p >= self.n {
                    return Err(Error::NotRadial(RadialDefect::Disconnected { node: child }));
                }
            }
        }
        let edges = self.parent_of.iter().filter(|p| p.is_some()).count();
        if edges != self.n - 1 {
            return Err(Error::NotRadial(RadialDefect::EdgeCount {
                edges,
                nodes: self.n,
            }));
        }
        // BFS from the root over parent-derived children.
        let mut depth = vec![usize::MAX; self.n];
        depth[self.root] = 0;
        let mut queue = std::collections::VecDeque::from([self.root]);
        while let Some(u) = queue.pop_front() {
            for &c in &self.children[u] {
                if depth[c] == usize::MAX {
                    depth[c] = depth[u] + 1;
                    queue.push_back(c);
                }
            }
        }
        if let Some(node) = depth.iter().position(|&d| d == usize::MAX) {
            // An unreached node either hangs off a parent cycle or off a
            // second root; walking the parent chain tells which.
            let mut walked = HashSet::new();
            let mut cur = node;
            loop {
                if !walked.insert(cur) {
                    return Err(Error::NotRadial(RadialDefect::Cycle { node: cur }));
                }
                match self.parent_of[cur] {
                    Some(p) => cur = p,
                    None => return Err(Error::NotRadial(RadialDefect::Disconnected { node })),
                }
            }
        }
        for (node, (&stored, &depth)) in self.layer.iter().zip(depth.iter()).enumerate() {
            if stored != depth {
                return Err(Error::NotRadial(RadialDefect::LayerMismatch {
                    node,
                    stored,
                    depth,
                }));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent_of[node]
    }

    /// Children of `node` in ascending index order.
    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn layer(&self, node: usize) -> usize {
        self.layer[node]
    }

    pub fn layers(&self) -> &[usize] {
        &self.layer
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.children[node].is_empty()
    }

    /// Parent links as `(parent, child)` pairs, ascending by child.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parent_of
            .iter()
            .enumerate()
            .filter_map(|(child, parent)| parent.map(|p| (p, child)))
            .collect()
    }

    /// Symmetric 0/1 adjacency matrix of the parent links.
    pub fn adjacency(&self) -> AdjacencyMatrix {
        let mut m = AdjacencyMatrix::zeros(self.n);
        for (parent, child) in self.edges() {
            m.set_link(parent, child);
        }
        m
    }

    /// Render as edge-list text parseable by [`Topology::from_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::from("# parent child\n");
        for (parent, child) in self.edges() {
            out.push_str(&format!("{} {}\n", parent, child));
        }
        out
    }
}

/// The 13-node feeder shape bundled for tests and examples.
pub fn feeder13() -> Topology {
    Topology::from_edge_list(include_str!("../data/feeder13.edges"))
        .expect("bundled feeder edge list is valid")
}

/// Symmetric 0/1 connectivity matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    data: Vec<u8>,
}

impl AdjacencyMatrix {
    pub fn zeros(n: usize) -> Self {
        AdjacencyMatrix {
            n,
            data: vec![0; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.data[i * self.n + j] != 0
    }

    /// Set both `(i, j)` and `(j, i)`.
    pub fn set_link(&mut self, i: usize, j: usize) {
        assert_ne!(i, j, "no self-links");
        self.data[i * self.n + j] = 1;
        self.data[j * self.n + i] = 1;
    }

    /// Total number of ones; `2 * (n - 1)` for a tree.
    pub fn ones(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    /// Edges read off the upper triangle, ascending.
    pub fn edge_set(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.entry(i, j) {
                    edges.push((i, j));
                }
            }
        }
        edges
    }
}

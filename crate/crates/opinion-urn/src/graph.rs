//! Simple connected undirected graphs with indexed edge lists.
//!
//! Every structure in this crate runs on a [`Graph`]: an immutable, simple
//! (no self-loops, no duplicate edges), connected graph over vertices
//! `0..n`. Edges carry stable integer indices in input order so the
//! per-step uniform edge draw in [`crate::dynamics`] is an O(1) index
//! sample. Degrees and per-vertex incidence lists are precomputed at
//! construction.
//!
//! Construction always validates; a `Graph` value is proof that the
//! invariants hold, which lets the numerical code index freely without
//! re-checking.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Retry budget for [`erdos_renyi`] before giving up on connectivity.
const CONNECTIVITY_RETRY_BUDGET: usize = 1000;

/// Errors produced while building or parsing a graph.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    /// The vertex set was empty (`n = 0`).
    #[error("graph has an empty vertex set (n = 0)")]
    EmptyVertexSet,
    /// An edge joined a vertex to itself.
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    /// The same unordered pair appeared twice in the edge list.
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    /// An edge referenced a vertex outside `0..n`.
    #[error("edge ({i}, {j}) references vertex {bad}, outside 0..{n}")]
    VertexOutOfRange { i: usize, j: usize, bad: usize, n: usize },
    /// Some vertex is not reachable from vertex 0.
    #[error("graph is disconnected: vertex {0} is not reachable from vertex 0")]
    Disconnected(usize),
    /// A generator was asked for fewer vertices than it supports.
    #[error("{generator} requires at least {min} vertices, got {got}")]
    TooSmall {
        generator: &'static str,
        min: usize,
        got: usize,
    },
    /// An edge probability was outside [0, 1].
    #[error("edge probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    /// Random sampling never produced a connected graph.
    #[error("no connected graph sampled after {attempts} attempts (n = {n}, p = {p})")]
    ConnectivityRetryExhausted { attempts: usize, n: usize, p: f64 },
    /// A JSON payload did not parse or did not match the schema.
    #[error("invalid graph JSON: {0}")]
    InvalidJson(String),
}

/// On-disk / on-wire form of a graph: `{"n": int, "edges": [[i, j], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphJson {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// An immutable simple connected undirected graph.
///
/// Invariants (enforced by every constructor):
/// - no self-loops, no duplicate edges;
/// - connected: every vertex is reachable from vertex 0;
/// - `degrees[i]` equals the number of edges incident to `i`, so
///   `Σ degrees[i] = 2 · |E|` (handshake identity).
///
/// Edges are stored canonically as `(min, max)` pairs, with stable indices
/// in input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
    incidence: Vec<Vec<usize>>,
}

impl Graph {
    /// Number of vertices.
    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Number of edges.
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// All edges as canonical `(min, max)` pairs, in stable index order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Endpoints `(i, j)` of the edge with index `e`.
    ///
    /// # Panics
    /// Panics if `e >= n_edges()`.
    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// Degree of vertex `i`.
    ///
    /// # Panics
    /// Panics if `i >= n_vertices()`.
    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    /// Per-vertex degrees.
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Per-vertex degrees as floating-point values (convenience for the
    /// spectral pipeline).
    pub fn degrees_f64(&self) -> Vec<f64> {
        self.degrees.iter().map(|&d| d as f64).collect()
    }

    /// Indices of the edges incident to vertex `i`.
    ///
    /// # Panics
    /// Panics if `i >= n_vertices()`.
    pub fn incident_edges(&self, i: usize) -> &[usize] {
        &self.incidence[i]
    }

    /// Serializes to the JSON schema `{"n": int, "edges": [[i, j], ...]}`.
    pub fn to_json(&self) -> String {
        let json = GraphJson {
            n: self.n_vertices,
            edges: self.edges.clone(),
        };
        serde_json::to_string(&json).expect("graph serialization cannot fail")
    }

    /// Parses and validates a graph from the JSON schema
    /// `{"n": int, "edges": [[i, j], ...]}`.
    ///
    /// # Errors
    /// [`GraphError::InvalidJson`] if the payload does not match the schema,
    /// otherwise any validation error from [`build_graph`].
    pub fn from_json(payload: &str) -> Result<Self, GraphError> {
        let json: GraphJson =
            serde_json::from_str(payload).map_err(|e| GraphError::InvalidJson(e.to_string()))?;
        build_graph(json.n, &json.edges)
    }
}

/// Builds a validated graph from an explicit edge list.
///
/// Edges are canonicalized to `(min, max)` order; indices follow the input
/// order (duplicates are rejected rather than merged, so indices are
/// well-defined).
///
/// # Errors
/// - [`GraphError::EmptyVertexSet`] if `n = 0`;
/// - [`GraphError::VertexOutOfRange`] if an edge mentions a vertex `>= n`;
/// - [`GraphError::SelfLoop`] on an `(i, i)` pair;
/// - [`GraphError::DuplicateEdge`] if an unordered pair repeats;
/// - [`GraphError::Disconnected`] if some vertex is unreachable from 0.
pub fn build_graph(n: usize, edge_pairs: &[(usize, usize)]) -> Result<Graph, GraphError> {
    if n == 0 {
        return Err(GraphError::EmptyVertexSet);
    }
    let mut edges = Vec::with_capacity(edge_pairs.len());
    let mut seen = std::collections::HashSet::with_capacity(edge_pairs.len());
    for &(i, j) in edge_pairs {
        if i >= n || j >= n {
            let bad = if i >= n { i } else { j };
            return Err(GraphError::VertexOutOfRange { i, j, bad, n });
        }
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        let canonical = (i.min(j), i.max(j));
        if !seen.insert(canonical) {
            return Err(GraphError::DuplicateEdge(canonical.0, canonical.1));
        }
        edges.push(canonical);
    }

    let mut degrees = vec![0usize; n];
    let mut incidence = vec![Vec::new(); n];
    for (idx, &(i, j)) in edges.iter().enumerate() {
        degrees[i] += 1;
        degrees[j] += 1;
        incidence[i].push(idx);
        incidence[j].push(idx);
    }

    // Connectivity: iterative breadth-first traversal from vertex 0.
    let mut reached = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    reached[0] = true;
    queue.push_back(0usize);
    while let Some(v) = queue.pop_front() {
        for &e in &incidence[v] {
            let (a, b) = edges[e];
            let w = if a == v { b } else { a };
            if !reached[w] {
                reached[w] = true;
                queue.push_back(w);
            }
        }
    }
    if let Some(unreached) = reached.iter().position(|&r| !r) {
        return Err(GraphError::Disconnected(unreached));
    }

    Ok(Graph {
        n_vertices: n,
        edges,
        degrees,
        incidence,
    })
}

/// Path graph on `n` vertices: edges `(i, i+1)` for `i < n−1`.
///
/// # Errors
/// [`GraphError::TooSmall`] if `n < 2`.
pub fn path_graph(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::TooSmall {
            generator: "path_graph",
            min: 2,
            got: n,
        });
    }
    let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    build_graph(n, &edges)
}

/// Cycle graph on `n` vertices: the path plus the closing edge `(0, n−1)`.
///
/// # Errors
/// [`GraphError::TooSmall`] if `n < 3`.
pub fn cycle_graph(n: usize) -> Result<Graph, GraphError> {
    if n < 3 {
        return Err(GraphError::TooSmall {
            generator: "cycle_graph",
            min: 3,
            got: n,
        });
    }
    let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    build_graph(n, &edges)
}

/// Complete graph on `n` vertices.
///
/// # Errors
/// [`GraphError::TooSmall`] if `n < 2`.
pub fn complete_graph(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::TooSmall {
            generator: "complete_graph",
            min: 2,
            got: n,
        });
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((i, j));
        }
    }
    build_graph(n, &edges)
}

/// Erdős–Rényi G(n, p) sample, retried until connected.
///
/// Each unordered pair is included independently with probability `p`,
/// drawing from a ChaCha8 stream seeded with `seed`. Sampling repeats on the
/// same stream until the result is connected, so the output is a pure
/// function of `(n, p, seed)`.
///
/// # Errors
/// - [`GraphError::TooSmall`] if `n < 2`;
/// - [`GraphError::InvalidProbability`] if `p` is not in [0, 1];
/// - [`GraphError::ConnectivityRetryExhausted`] if no connected sample
///   appears within the retry budget (certain for `p = 0`, likely for very
///   small `p`).
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::TooSmall {
            generator: "erdos_renyi",
            min: 2,
            got: n,
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(GraphError::InvalidProbability(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..CONNECTIVITY_RETRY_BUDGET {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        match build_graph(n, &edges) {
            Ok(graph) => return Ok(graph),
            Err(GraphError::Disconnected(_)) => continue,
            Err(other) => return Err(other),
        }
    }
    Err(GraphError::ConnectivityRetryExhausted {
        attempts: CONNECTIVITY_RETRY_BUDGET,
        n,
        p,
    })
}

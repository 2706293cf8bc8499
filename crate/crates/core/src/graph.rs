//! Weighted digraphs whose incoming edge weights form a probability
//! distribution at every node.
//!
//! Node ids are dense integers `0..n`. An edge `(u, v, w)` means that node `v`
//! listens to node `u` with weight `w`; the weights entering each node must
//! sum to one and the digraph must be strongly connected for the game to be
//! well posed. [`Graph::validate`] reports both conditions without failing.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Tolerance on the deviation of a node's incoming weight sum from one.
pub const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_count: usize,
    /// Sorted by `(source, target)`.
    edges: Vec<Edge>,
    /// `incoming[v]` holds `(u, w(u, v))` sorted by `u`.
    incoming: Vec<Vec<(usize, f64)>>,
    outgoing: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Defect {
    /// Incoming weights sum to `1 + deviation`.
    WeightSum { deviation: f64 },
    /// Not reachable from node 0.
    Unreachable,
    /// Node 0 is not reachable from this node.
    CannotReachRoot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeDefect {
    pub node: usize,
    pub defect: Defect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub stochastic: bool,
    pub strongly_connected: bool,
    pub offending_nodes: Vec<NodeDefect>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.stochastic && self.strongly_connected
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "stochastic={} strongly_connected={}",
            self.stochastic, self.strongly_connected
        )?;
        let shown = self.offending_nodes.iter().take(5);
        for d in shown {
            match d.defect {
                Defect::WeightSum { deviation } => write!(
                    f,
                    "; node {} in-weight deviation {}",
                    d.node,
                    crate::report::format_sig(deviation)
                )?,
                Defect::Unreachable => write!(f, "; node {} unreachable from 0", d.node)?,
                Defect::CannotReachRoot => write!(f, "; node {} cannot reach 0", d.node)?,
            }
        }
        if self.offending_nodes.len() > 5 {
            write!(f, "; ... {} defects total", self.offending_nodes.len())?;
        }
        Ok(())
    }
}

/// Collects edges and rejects malformed ones, reporting the source line.
struct Builder {
    node_count: usize,
    edges: Vec<Edge>,
    seen: HashSet<(usize, usize)>,
}

impl Builder {
    fn new(node_count: usize) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::EmptyGraph);
        }
        Ok(Builder {
            node_count,
            edges: Vec::new(),
            seen: HashSet::new(),
        })
    }

    fn add(&mut self, line: usize, source: usize, target: usize, weight: f64) -> Result<()> {
        for node in [source, target] {
            if node >= self.node_count {
                return Err(Error::UnknownNode {
                    line,
                    node,
                    node_count: self.node_count,
                });
            }
        }
        if weight.is_nan() || weight <= 0.0 || weight.is_infinite() {
            return Err(Error::NonPositiveWeight { line, weight });
        }
        if source == target {
            return Err(Error::Parse {
                line,
                message: format!("self-loop on node {source} is not allowed"),
            });
        }
        if !self.seen.insert((source, target)) {
            return Err(Error::DuplicateEdge {
                line,
                source_node: source,
                target,
            });
        }
        self.edges.push(Edge {
            source,
            target,
            weight,
        });
        Ok(())
    }

    fn finish(mut self) -> Graph {
        self.edges.sort_by_key(|e| (e.source, e.target));
        let mut incoming = vec![Vec::new(); self.node_count];
        let mut outgoing = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            incoming[e.target].push((e.source, e.weight));
            outgoing[e.source].push(e.target);
        }
        for list in &mut incoming {
            list.sort_by_key(|&(u, _)| u);
        }
        Graph {
            node_count: self.node_count,
            edges: self.edges,
            incoming,
            outgoing,
        }
    }
}

impl Graph {
    /// Builds a graph from `(source, target, weight)` triples. Weights are
    /// taken verbatim; call [`Graph::normalized`] to rescale them.
    pub fn new<I>(node_count: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut builder = Builder::new(node_count)?;
        for (i, (u, v, w)) in edges.into_iter().enumerate() {
            builder.add(i + 1, u, v, w)?;
        }
        Ok(builder.finish())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// In-neighbours `N⁺(v)` of `v` with their weights, sorted by id.
    pub fn incoming(&self, v: usize) -> &[(usize, f64)] {
        &self.incoming[v]
    }

    pub fn outgoing(&self, v: usize) -> &[usize] {
        &self.outgoing[v]
    }

    pub fn incoming_sum(&self, v: usize) -> f64 {
        self.incoming[v].iter().map(|&(_, w)| w).sum()
    }

    /// Returns a copy whose incoming weights at each node are divided by
    /// their sum. Nodes without incoming edges are left untouched.
    pub fn normalized(&self) -> Graph {
        let sums: Vec<f64> = (0..self.node_count).map(|v| self.incoming_sum(v)).collect();
        let mut builder = Builder::new(self.node_count).expect("non-empty graph");
        for (i, e) in self.edges.iter().enumerate() {
            let w = if sums[e.target] > 0.0 {
                e.weight / sums[e.target]
            } else {
                e.weight
            };
            builder
                .add(i + 1, e.source, e.target, w)
                .expect("rescaled edge of a valid graph");
        }
        builder.finish()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut offending = Vec::new();
        for v in 0..self.node_count {
            let deviation = self.incoming_sum(v) - 1.0;
            if deviation.abs() > STOCHASTIC_TOL {
                offending.push(NodeDefect {
                    node: v,
                    defect: Defect::WeightSum { deviation },
                });
            }
        }
        let stochastic = offending.is_empty();

        let forward = self.reachable_from_root(|v| self.outgoing[v].to_vec());
        let backward =
            self.reachable_from_root(|v| self.incoming[v].iter().map(|&(u, _)| u).collect());
        let mut strongly_connected = true;
        for v in 0..self.node_count {
            if !forward[v] {
                strongly_connected = false;
                offending.push(NodeDefect {
                    node: v,
                    defect: Defect::Unreachable,
                });
            }
            if !backward[v] {
                strongly_connected = false;
                offending.push(NodeDefect {
                    node: v,
                    defect: Defect::CannotReachRoot,
                });
            }
        }
        ValidationReport {
            stochastic,
            strongly_connected,
            offending_nodes: offending,
        }
    }

    fn reachable_from_root<F>(&self, next: F) -> Vec<bool>
    where
        F: Fn(usize) -> Vec<usize>,
    {
        let mut seen = vec![false; self.node_count];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for u in next(v) {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    }

    /// Fails with [`Error::InvalidGraph`] unless the graph is stochastic and
    /// strongly connected.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidGraph(report))
        }
    }

    /// Writes the line-oriented edge-list format read by [`load_graph`].
    /// Weights use the shortest decimal form that parses back exactly.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "nodes {}", self.node_count)?;
        for e in &self.edges {
            writeln!(out, "edge {} {} {}", e.source, e.target, e.weight)?;
        }
        Ok(())
    }

    pub fn to_edge_list(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).expect("writing to a Vec");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Directed ring `0 -> 1 -> ... -> n-1 -> 0` with unit weights.
    pub fn cycle(n: usize) -> Result<Graph> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "a cycle needs at least 2 nodes, got {n}"
            )));
        }
        Graph::new(n, (0..n).map(|i| (i, (i + 1) % n, 1.0)))
    }

    /// Complete digraph with every weight `1/(n-1)`.
    pub fn complete(n: usize) -> Result<Graph> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "a complete graph needs at least 2 nodes, got {n}"
            )));
        }
        let w = 1.0 / (n - 1) as f64;
        let edges = (0..n).flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v, w)));
        Graph::new(n, edges)
    }
}

/// Parses the edge-list text format:
///
/// ```text
/// # comment
/// nodes 3
/// edge 0 1 0.5
/// edge 2 1 0.5
/// ```
///
/// With `normalize` set, each node's incoming weights are rescaled to sum to
/// one after parsing. Otherwise weights are kept verbatim.
pub fn load_graph<R: BufRead>(source: R, normalize: bool) -> Result<Graph> {
    let mut builder: Option<Builder> = None;
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match (&mut builder, fields.as_slice()) {
            (None, ["nodes", n]) => {
                let n = parse_field::<usize>(line_no, n, "node count")?;
                builder = Some(Builder::new(n)?);
            }
            (None, _) => {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected `nodes <n>` header".into(),
                })
            }
            (Some(b), ["edge", u, v, w]) => {
                let u = parse_field::<usize>(line_no, u, "source id")?;
                let v = parse_field::<usize>(line_no, v, "target id")?;
                let w = parse_field::<f64>(line_no, w, "weight")?;
                b.add(line_no, u, v, w)?;
            }
            (Some(_), _) => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected `edge <u> <v> <w>`, found `{trimmed}`"),
                })
            }
        }
    }
    let graph = builder.ok_or(Error::EmptyGraph)?.finish();
    Ok(if normalize { graph.normalized() } else { graph })
}

pub fn parse_graph(text: &str, normalize: bool) -> Result<Graph> {
    load_graph(text.as_bytes(), normalize)
}

fn parse_field<T: std::str::FromStr>(line: usize, raw: &str, what: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} `{raw}`"),
    })
}

/// Ids of the two petal nodes attached to central node `i` in a
/// counterexample graph with `central` central nodes: `(left, right)`.
pub fn petal_ids(central: usize, i: usize) -> (usize, usize) {
    (central + 2 * i, central + 2 * i + 1)
}

/// Number of central nodes `m(b+1)+1` in the counterexample graph.
pub fn counterexample_central_count(players: usize, budget: usize) -> usize {
    players * (budget + 1) + 1
}

/// Builds the graph on which the symmetric-budget game with `players`
/// players and budget `budget` has no pure Nash equilibrium when run with
/// `alpha = 1/2` for `budget` steps.
///
/// There are `μ = m(b+1)+1` central nodes `0..μ`, each linked to its next
/// `b` successors around a ring (indices wrap modulo `μ`). Central node `i`
/// owns a left petal `μ + 2i` and a right petal `μ + 2i + 1`, wired
/// `i -> left`, `i -> right`, `left -> right`, `right -> i`. Every edge into
/// `v` carries weight `1/|N⁺(v)|`.
pub fn build_counterexample(players: usize, budget: usize) -> Result<Graph> {
    if players < 2 {
        return Err(Error::InvalidParameter(format!(
            "counterexample needs at least 2 players, got {players}"
        )));
    }
    if budget < 1 {
        return Err(Error::InvalidParameter(
            "counterexample needs a budget of at least 1".into(),
        ));
    }
    let mu = counterexample_central_count(players, budget);
    let mut pairs = Vec::with_capacity(mu * (budget + 4));
    for i in 0..mu {
        for k in 1..=budget {
            pairs.push((i, (i + k) % mu));
        }
        let (left, right) = petal_ids(mu, i);
        pairs.extend([(i, left), (i, right), (left, right), (right, i)]);
    }
    let n = 3 * mu;
    let mut in_degree = vec![0usize; n];
    for &(_, v) in &pairs {
        in_degree[v] += 1;
    }
    Graph::new(
        n,
        pairs
            .into_iter()
            .map(|(u, v)| (u, v, 1.0 / in_degree[v] as f64)),
    )
}

/// Random strongly connected digraph: a random Hamiltonian cycle plus
/// `out_degree - 1` further random out-edges per node, with random weights
/// normalised so each node's incoming weights sum to one. Deterministic for
/// a fixed `seed`.
pub fn random_graph(n: usize, out_degree: usize, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "random graph needs at least 2 nodes, got {n}"
        )));
    }
    if out_degree < 1 || out_degree >= n {
        return Err(Error::InvalidParameter(format!(
            "out-degree must lie in 1..{n}, got {out_degree}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut targets: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        targets[order[i]].push(order[(i + 1) % n]);
    }
    for (u, list) in targets.iter_mut().enumerate() {
        let mut candidates: Vec<usize> = (0..n).filter(|&v| v != u && !list.contains(&v)).collect();
        candidates.shuffle(&mut rng);
        list.extend(candidates.into_iter().take(out_degree - 1));
    }

    let mut edges = Vec::with_capacity(n * out_degree);
    for (u, list) in targets.iter().enumerate() {
        for &v in list {
            edges.push((u, v, rng.gen_range(0.1..1.0)));
        }
    }
    Ok(Graph::new(n, edges)?.normalized())
}

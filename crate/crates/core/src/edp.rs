//! Exact edge-disjoint paths on DAGs, solution checkers, and the line-graph
//! transform to vertex-disjoint paths.
//!
//! Two exact search strategies are provided:
//!
//! * [`Strategy::Pebble`] advances all paths together, always moving the path
//!   whose current end is earliest in topological order. On a DAG no edge
//!   behind that frontier can be reused, so the set of current positions is a
//!   complete description of a partial routing and failed position tuples are
//!   memoized, which bounds the work by `n^{O(k)}` for `k` pairs.
//! * [`Strategy::Sequential`] routes pairs one at a time in the given order,
//!   backtracking over path choices, and after every committed path re-checks
//!   that each remaining pair is still connected in the residual graph.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digraph::{EmbeddedDigraph, VertexLabel};

/// Default node-expansion cap for the path searches.
pub const DEFAULT_EDP_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EdpError {
    #[error("graph has a directed cycle")]
    NotDag,
    #[error("search budget of {0} node expansions exceeded")]
    BudgetExceeded(u64),
    #[error("vertex {0} out of range")]
    BadVertex(usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("malformed path set: {0}")]
    Format(String),
}

/// Plain indexed digraph the searches run on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    edges: Vec<(usize, usize)>,
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, EdpError> {
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        for (e, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(EdpError::BadVertex(u.max(v)));
            }
            if u == v {
                return Err(EdpError::SelfLoop(u));
            }
            out[u].push(e);
            inn[v].push(e);
        }
        Ok(Self {
            edges: edges.to_vec(),
            out,
            inn,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.out.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.inn[v]
    }

    /// First edge id `u → v`, if any.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.out
            .get(u)?
            .iter()
            .copied()
            .find(|&e| self.edges[e].1 == v)
    }

    /// Topological rank of every vertex, or `None` on a cycle.
    pub fn topological_rank(&self) -> Option<Vec<usize>> {
        let n = self.vertex_count();
        let mut indeg: Vec<usize> = self.inn.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut rank = vec![usize::MAX; n];
        let mut next = 0;
        while let Some(u) = queue.pop_front() {
            rank[u] = next;
            next += 1;
            for &e in &self.out[u] {
                let w = self.edges[e].1;
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        (next == n).then_some(rank)
    }

    /// Vertices that can reach `target` using only edges accepted by `usable`.
    fn reaching(&self, target: usize, usable: impl Fn(usize) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.vertex_count()];
        seen[target] = true;
        let mut stack = vec![target];
        while let Some(v) = stack.pop() {
            for &e in &self.inn[v] {
                let u = self.edges[e].0;
                if !seen[u] && usable(e) {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }
}

impl From<&EmbeddedDigraph> for Network {
    fn from(g: &EmbeddedDigraph) -> Self {
        Network::new(g.vertex_count(), g.edges())
            .expect("embedded digraphs have valid endpoints and no self-loops")
    }
}

/// One vertex sequence per terminal pair, index-aligned with the pairs.
/// A single-vertex path is the zero-edge "stay put" path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathSet {
    pub paths: Vec<Vec<usize>>,
}

impl PathSet {
    pub fn new(paths: Vec<Vec<usize>>) -> Self {
        Self { paths }
    }

    pub fn to_labels(&self, g: &EmbeddedDigraph) -> Vec<Vec<VertexLabel>> {
        self.paths
            .iter()
            .map(|p| p.iter().map(|&v| g.label(v).clone()).collect())
            .collect()
    }

    pub fn from_labels(g: &EmbeddedDigraph, paths: &[Vec<VertexLabel>]) -> Result<Self, EdpError> {
        let paths = paths
            .iter()
            .map(|p| {
                p.iter()
                    .map(|l| {
                        g.vertex(l)
                            .ok_or_else(|| EdpError::Format(format!("unknown vertex {l}")))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { paths })
    }

    /// Wire form: a JSON list of vertex-label sequences.
    pub fn to_json(&self, g: &EmbeddedDigraph) -> String {
        serde_json::to_string(&self.to_labels(g)).expect("labels are always serializable")
    }

    pub fn from_json(g: &EmbeddedDigraph, text: &str) -> Result<Self, EdpError> {
        let labels: Vec<Vec<VertexLabel>> =
            serde_json::from_str(text).map_err(|e| EdpError::Format(e.to_string()))?;
        Self::from_labels(g, &labels)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathViolation {
    CountMismatch {
        expected: usize,
        got: usize,
    },
    Empty {
        path: usize,
    },
    WrongStart {
        path: usize,
    },
    WrongEnd {
        path: usize,
    },
    NotAnEdge {
        path: usize,
        from: usize,
        to: usize,
    },
    RepeatedEdge {
        path: usize,
        from: usize,
        to: usize,
    },
    SharedEdge {
        first: usize,
        second: usize,
        from: usize,
        to: usize,
    },
    SharedVertex {
        first: usize,
        second: usize,
        vertex: usize,
    },
}

impl fmt::Display for PathViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathViolation::CountMismatch { expected, got } => {
                write!(f, "{got} paths for {expected} pairs")
            }
            PathViolation::Empty { path } => write!(f, "path {path} is empty"),
            PathViolation::WrongStart { path } => {
                write!(f, "path {path} does not start at its source")
            }
            PathViolation::WrongEnd { path } => write!(f, "path {path} does not end at its sink"),
            PathViolation::NotAnEdge { path, from, to } => {
                write!(f, "path {path} uses missing edge {from}->{to}")
            }
            PathViolation::RepeatedEdge { path, from, to } => {
                write!(f, "path {path} repeats edge {from}->{to}")
            }
            PathViolation::SharedEdge {
                first,
                second,
                from,
                to,
            } => {
                write!(f, "paths {first} and {second} share edge {from}->{to}")
            }
            PathViolation::SharedVertex {
                first,
                second,
                vertex,
            } => {
                write!(f, "paths {first} and {second} share vertex {vertex}")
            }
        }
    }
}

/// Per-path validity: endpoints match and consecutive vertices are edges,
/// no edge repeated. Returns the edge ids of each well-formed path.
fn check_paths(
    net: &Network,
    pairs: &[(usize, usize)],
    ps: &PathSet,
    out: &mut Vec<PathViolation>,
) -> Vec<Vec<usize>> {
    if ps.paths.len() != pairs.len() {
        out.push(PathViolation::CountMismatch {
            expected: pairs.len(),
            got: ps.paths.len(),
        });
        return Vec::new();
    }
    let n = net.vertex_count();
    let mut edge_lists = Vec::with_capacity(pairs.len());
    for (idx, (path, &(s, t))) in ps.paths.iter().zip(pairs).enumerate() {
        let mut edges = Vec::new();
        let (Some(&first), Some(&last)) = (path.first(), path.last()) else {
            out.push(PathViolation::Empty { path: idx });
            edge_lists.push(edges);
            continue;
        };
        if first != s {
            out.push(PathViolation::WrongStart { path: idx });
        }
        if last != t {
            out.push(PathViolation::WrongEnd { path: idx });
        }
        let mut seen = HashSet::new();
        for w in path.windows(2) {
            let (u, v) = (w[0], w[1]);
            match (u < n && v < n).then(|| net.edge_between(u, v)).flatten() {
                None => out.push(PathViolation::NotAnEdge {
                    path: idx,
                    from: u,
                    to: v,
                }),
                Some(e) => {
                    if !seen.insert(e) {
                        out.push(PathViolation::RepeatedEdge {
                            path: idx,
                            from: u,
                            to: v,
                        });
                    }
                    edges.push(e);
                }
            }
        }
        edge_lists.push(edges);
    }
    edge_lists
}

/// Every violation of the edge-disjoint-paths conditions; empty means valid.
/// Vertex sharing is allowed.
pub fn edp_violations(net: &Network, pairs: &[(usize, usize)], ps: &PathSet) -> Vec<PathViolation> {
    let mut out = Vec::new();
    let edge_lists = check_paths(net, pairs, ps, &mut out);
    let mut owner: Vec<Option<usize>> = vec![None; net.edges.len()];
    for (idx, edges) in edge_lists.iter().enumerate() {
        for &e in edges.iter().collect::<HashSet<_>>() {
            if let Some(first) = owner[e] {
                let (from, to) = net.edges[e];
                out.push(PathViolation::SharedEdge {
                    first,
                    second: idx,
                    from,
                    to,
                });
            } else {
                owner[e] = Some(idx);
            }
        }
    }
    out
}

pub fn check_edp_solution(net: &Network, pairs: &[(usize, usize)], ps: &PathSet) -> bool {
    edp_violations(net, pairs, ps).is_empty()
}

/// As [`edp_violations`], but no internal vertex of one path may appear on
/// another path. Endpoints may be shared.
pub fn vdp_violations(net: &Network, pairs: &[(usize, usize)], ps: &PathSet) -> Vec<PathViolation> {
    let mut out = Vec::new();
    check_paths(net, pairs, ps, &mut out);
    if ps.paths.len() != pairs.len() {
        return out;
    }
    for (a, pa) in ps.paths.iter().enumerate() {
        let internal: HashSet<usize> = if pa.len() > 2 {
            pa[1..pa.len() - 1].iter().copied().collect()
        } else {
            HashSet::new()
        };
        for (b, pb) in ps.paths.iter().enumerate() {
            if a == b {
                continue;
            }
            if let Some(&vertex) = pb.iter().find(|v| internal.contains(v)) {
                out.push(PathViolation::SharedVertex {
                    first: a,
                    second: b,
                    vertex,
                });
            }
        }
    }
    out
}

pub fn check_vdp_solution(net: &Network, pairs: &[(usize, usize)], ps: &PathSet) -> bool {
    vdp_violations(net, pairs, ps).is_empty()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Strategy {
    #[default]
    Pebble,
    Sequential,
}

/// Finds pairwise edge-disjoint paths with [`Strategy::Pebble`].
/// `Ok(None)` means the instance is infeasible.
pub fn solve_edp_dag(
    net: &Network,
    pairs: &[(usize, usize)],
    budget: u64,
) -> Result<Option<PathSet>, EdpError> {
    solve_edp_dag_with(net, pairs, budget, Strategy::Pebble)
}

pub fn solve_edp_dag_with(
    net: &Network,
    pairs: &[(usize, usize)],
    budget: u64,
    strategy: Strategy,
) -> Result<Option<PathSet>, EdpError> {
    let n = net.vertex_count();
    if let Some(&(s, t)) = pairs.iter().find(|&&(s, t)| s >= n || t >= n) {
        return Err(EdpError::BadVertex(s.max(t)));
    }
    let rank = net.topological_rank().ok_or(EdpError::NotDag)?;
    let reach: Vec<Vec<bool>> = pairs
        .iter()
        .map(|&(_, t)| net.reaching(t, |_| true))
        .collect();
    if pairs.iter().zip(&reach).any(|(&(s, _), r)| !r[s]) {
        return Ok(None);
    }
    match strategy {
        Strategy::Pebble => PebbleSearch::new(net, pairs, rank, reach, budget).run(),
        Strategy::Sequential => SequentialSearch::new(net, pairs, budget).run(),
    }
}

struct PebbleSearch<'a> {
    net: &'a Network,
    pairs: &'a [(usize, usize)],
    rank: Vec<usize>,
    reach: Vec<Vec<bool>>,
    // 0: waiting at the source; e + 1: last traversed edge e.
    pos: Vec<u32>,
    trail: Vec<Vec<usize>>,
    failed: HashSet<Vec<u32>>,
    expansions: u64,
    budget: u64,
}

impl<'a> PebbleSearch<'a> {
    fn new(
        net: &'a Network,
        pairs: &'a [(usize, usize)],
        rank: Vec<usize>,
        reach: Vec<Vec<bool>>,
        budget: u64,
    ) -> Self {
        Self {
            net,
            pairs,
            rank,
            reach,
            pos: vec![0; pairs.len()],
            trail: vec![Vec::new(); pairs.len()],
            failed: HashSet::new(),
            expansions: 0,
            budget,
        }
    }

    fn head(&self, p: usize) -> usize {
        match self.pos[p] {
            0 => self.pairs[p].0,
            e => self.net.edges[e as usize - 1].1,
        }
    }

    fn run(mut self) -> Result<Option<PathSet>, EdpError> {
        if !self.advance()? {
            return Ok(None);
        }
        let paths = self
            .trail
            .iter()
            .zip(self.pairs)
            .map(|(edges, &(s, _))| {
                std::iter::once(s)
                    .chain(edges.iter().map(|&e| self.net.edges[e].1))
                    .collect()
            })
            .collect();
        Ok(Some(PathSet { paths }))
    }

    fn advance(&mut self) -> Result<bool, EdpError> {
        let active = (0..self.pairs.len())
            .filter(|&p| self.head(p) != self.pairs[p].1)
            .min_by_key(|&p| (self.rank[self.head(p)], p));
        let Some(p) = active else {
            return Ok(true);
        };
        if self.failed.contains(&self.pos) {
            return Ok(false);
        }
        self.expansions += 1;
        if self.expansions > self.budget {
            return Err(EdpError::BudgetExceeded(self.budget));
        }
        let v = self.head(p);
        let before = self.pos[p];
        for &e in &self.net.out[v] {
            let w = self.net.edges[e].1;
            let tag = e as u32 + 1;
            if !self.reach[p][w] || self.pos.contains(&tag) {
                continue;
            }
            self.pos[p] = tag;
            self.trail[p].push(e);
            if self.advance()? {
                return Ok(true);
            }
            self.trail[p].pop();
            self.pos[p] = before;
        }
        self.failed.insert(self.pos.clone());
        Ok(false)
    }
}

struct SequentialSearch<'a> {
    net: &'a Network,
    pairs: &'a [(usize, usize)],
    used: Vec<bool>,
    paths: Vec<Vec<usize>>,
    expansions: u64,
    budget: u64,
}

impl<'a> SequentialSearch<'a> {
    fn new(net: &'a Network, pairs: &'a [(usize, usize)], budget: u64) -> Self {
        Self {
            net,
            pairs,
            used: vec![false; net.edges.len()],
            paths: Vec::new(),
            expansions: 0,
            budget,
        }
    }

    fn run(mut self) -> Result<Option<PathSet>, EdpError> {
        let found = self.route(0)?;
        Ok(found.then_some(PathSet { paths: self.paths }))
    }

    fn tick(&mut self) -> Result<(), EdpError> {
        self.expansions += 1;
        if self.expansions > self.budget {
            Err(EdpError::BudgetExceeded(self.budget))
        } else {
            Ok(())
        }
    }

    fn residual_reaching(&self, t: usize) -> Vec<bool> {
        self.net.reaching(t, |e| !self.used[e])
    }

    fn route(&mut self, p: usize) -> Result<bool, EdpError> {
        if p == self.pairs.len() {
            return Ok(true);
        }
        let (s, t) = self.pairs[p];
        let reach = self.residual_reaching(t);
        if !reach[s] {
            return Ok(false);
        }
        self.paths.push(vec![s]);
        let found = self.extend(p, s, &reach)?;
        if !found {
            self.paths.pop();
        }
        Ok(found)
    }

    fn extend(&mut self, p: usize, v: usize, reach: &[bool]) -> Result<bool, EdpError> {
        self.tick()?;
        if v == self.pairs[p].1 {
            let remaining_ok = self.pairs[p + 1..]
                .iter()
                .all(|&(s, t)| self.residual_reaching(t)[s]);
            return if remaining_ok {
                self.route(p + 1)
            } else {
                Ok(false)
            };
        }
        for idx in 0..self.net.out[v].len() {
            let e = self.net.out[v][idx];
            let w = self.net.edges[e].1;
            if self.used[e] || !reach[w] {
                continue;
            }
            self.used[e] = true;
            self.paths[p].push(w);
            if self.extend(p, w, reach)? {
                return Ok(true);
            }
            self.paths[p].pop();
            self.used[e] = false;
        }
        Ok(false)
    }
}

/// Vertex-disjoint-paths instance built from an edge-disjoint one.
///
/// Vertex `e < m` of the new network stands for edge `e` of the original;
/// pair `p` gets a fresh source `m + 2p` and sink `m + 2p + 1`.
#[derive(Debug, Clone)]
pub struct LineGraphInstance {
    pub net: Network,
    pub pairs: Vec<(usize, usize)>,
    original_edges: Vec<(usize, usize)>,
    original_pairs: Vec<(usize, usize)>,
}

impl LineGraphInstance {
    pub fn edge_vertex_count(&self) -> usize {
        self.original_edges.len()
    }

    /// Edge-disjoint paths in the original graph to vertex-disjoint paths here.
    pub fn lift(&self, original: &Network, ps: &PathSet) -> Option<PathSet> {
        let paths = ps
            .paths
            .iter()
            .enumerate()
            .map(|(p, path)| {
                let (src, dst) = *self.pairs.get(p)?;
                let mut out = vec![src];
                for w in path.windows(2) {
                    out.push(original.edge_between(w[0], w[1])?);
                }
                out.push(dst);
                Some(out)
            })
            .collect::<Option<Vec<_>>>()?;
        Some(PathSet { paths })
    }

    /// Vertex-disjoint paths here back to edge-disjoint paths in the original.
    pub fn project(&self, ps: &PathSet) -> PathSet {
        let paths = ps
            .paths
            .iter()
            .zip(&self.original_pairs)
            .map(|(path, &(s, _))| {
                let inner = &path[1..path.len().saturating_sub(1)];
                std::iter::once(s)
                    .chain(inner.iter().map(|&e| self.original_edges[e].1))
                    .collect()
            })
            .collect();
        PathSet { paths }
    }
}

/// Directed line graph with a super-source and super-sink per pair.
pub fn edp_to_vdp_dag(
    net: &Network,
    pairs: &[(usize, usize)],
) -> Result<LineGraphInstance, EdpError> {
    net.topological_rank().ok_or(EdpError::NotDag)?;
    let m = net.edges.len();
    let mut edges = Vec::new();
    for (e, &(_, head)) in net.edges.iter().enumerate() {
        for &f in &net.out[head] {
            edges.push((e, f));
        }
    }
    let mut new_pairs = Vec::with_capacity(pairs.len());
    for (p, &(s, t)) in pairs.iter().enumerate() {
        let (src, dst) = (m + 2 * p, m + 2 * p + 1);
        edges.extend(net.out[s].iter().map(|&e| (src, e)));
        edges.extend(net.inn[t].iter().map(|&e| (e, dst)));
        if s == t {
            edges.push((src, dst));
        }
        new_pairs.push((src, dst));
    }
    Ok(LineGraphInstance {
        net: Network::new(m + 2 * pairs.len(), &edges)?,
        pairs: new_pairs,
        original_edges: net.edges.clone(),
        original_pairs: pairs.to_vec(),
    })
}

/// Exact vertex-disjoint paths by sequential routing with backtracking.
/// A vertex may be an internal vertex of at most one path, and never an
/// internal vertex of one path while an endpoint of another.
pub fn solve_vdp_dag(
    net: &Network,
    pairs: &[(usize, usize)],
    budget: u64,
) -> Result<Option<PathSet>, EdpError> {
    let n = net.vertex_count();
    if let Some(&(s, t)) = pairs.iter().find(|&&(s, t)| s >= n || t >= n) {
        return Err(EdpError::BadVertex(s.max(t)));
    }
    net.topological_rank().ok_or(EdpError::NotDag)?;
    let mut endpoint_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (p, &(s, t)) in pairs.iter().enumerate() {
        endpoint_of[s].push(p);
        endpoint_of[t].push(p);
    }
    let mut search = VdpSearch {
        net,
        pairs,
        endpoint_of,
        busy: vec![false; n],
        paths: Vec::new(),
        expansions: 0,
        budget,
    };
    Ok(search.route(0)?.then_some(PathSet {
        paths: search.paths,
    }))
}

struct VdpSearch<'a> {
    net: &'a Network,
    pairs: &'a [(usize, usize)],
    endpoint_of: Vec<Vec<usize>>,
    busy: Vec<bool>,
    paths: Vec<Vec<usize>>,
    expansions: u64,
    budget: u64,
}

impl VdpSearch<'_> {
    /// Whether pair `p` may pass through `v` as an internal vertex.
    fn free_for(&self, p: usize, v: usize) -> bool {
        !self.busy[v] && self.endpoint_of[v].iter().all(|&q| q == p)
    }

    fn reaching(&self, p: usize) -> Vec<bool> {
        let (_, t) = self.pairs[p];
        let mut seen = vec![false; self.net.vertex_count()];
        seen[t] = true;
        let mut stack = vec![t];
        while let Some(v) = stack.pop() {
            for &e in &self.net.inn[v] {
                let u = self.net.edges[e].0;
                if !seen[u] && (u == self.pairs[p].0 || self.free_for(p, u)) {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }

    fn route(&mut self, p: usize) -> Result<bool, EdpError> {
        if p == self.pairs.len() {
            return Ok(true);
        }
        let reach = self.reaching(p);
        let s = self.pairs[p].0;
        if !reach[s] {
            return Ok(false);
        }
        self.paths.push(vec![s]);
        if self.extend(p, s, &reach)? {
            return Ok(true);
        }
        self.paths.pop();
        Ok(false)
    }

    fn extend(&mut self, p: usize, v: usize, reach: &[bool]) -> Result<bool, EdpError> {
        self.expansions += 1;
        if self.expansions > self.budget {
            return Err(EdpError::BudgetExceeded(self.budget));
        }
        let t = self.pairs[p].1;
        if v == t {
            let ok = (p + 1..self.pairs.len()).all(|q| self.reaching(q)[self.pairs[q].0]);
            return if ok { self.route(p + 1) } else { Ok(false) };
        }
        for idx in 0..self.net.out[v].len() {
            let w = self.net.edges[self.net.out[v][idx]].1;
            if !reach[w] || (w != t && !self.free_for(p, w)) {
                continue;
            }
            let internal = w != t;
            if internal {
                self.busy[w] = true;
            }
            self.paths[p].push(w);
            if self.extend(p, w, reach)? {
                return Ok(true);
            }
            self.paths[p].pop();
            if internal {
                self.busy[w] = false;
            }
        }
        Ok(false)
    }
}

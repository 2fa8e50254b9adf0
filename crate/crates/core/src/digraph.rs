//! Embedded directed graphs with semantic vertex labels.
//!
//! Every vertex carries exact rational coordinates. The rotation system (the
//! counter-clockwise cyclic order of incident edges around each vertex) is
//! derived from those coordinates and is what [`EmbeddedDigraph::check_planar_embedding`]
//! traces faces on.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Rational = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate vertex label {0}")]
    DuplicateLabel(VertexLabel),
    #[error("vertices {0} and {1} share coordinates")]
    DuplicateCoords(VertexLabel, VertexLabel),
    #[error("self-loop at {0}")]
    SelfLoop(VertexLabel),
    #[error("parallel edge {0} -> {1}")]
    ParallelEdge(VertexLabel, VertexLabel),
    #[error("unknown vertex index {0}")]
    UnknownVertex(usize),
    #[error("underlying undirected graph is not connected")]
    NotConnected,
    #[error("malformed graph JSON: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: Rational,
    pub y: Rational,
}

impl Point {
    pub fn new(x: Rational, y: Rational) -> Self {
        Self { x, y }
    }

    pub fn int(x: i64, y: i64) -> Self {
        Self::new(Rational::from_integer(x), Rational::from_integer(y))
    }
}

/// Which copy of a grid vertex a label refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Part {
    Whole,
    LB,
    TR,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    C,
    D,
}

impl Family {
    pub fn letter(self) -> char {
        match self {
            Family::A => 'a',
            Family::B => 'b',
            Family::C => 'c',
            Family::D => 'd',
        }
    }

    /// Sources (A, C) send edges away; sinks (B, D) receive.
    pub fn is_source(self) -> bool {
        matches!(self, Family::A | Family::C)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexLabel {
    /// `w_{i,j}^{q,ℓ}` and its split copies.
    Grid {
        i: u32,
        j: u32,
        q: u32,
        l: u32,
        part: Part,
    },
    /// `h_{i,j}^{i+1,j}(ℓ)`.
    HBlue {
        i: u32,
        j: u32,
        l: u32,
    },
    /// `v_{i,j}^{i,j+1}(ℓ)`.
    VBlue {
        i: u32,
        j: u32,
        l: u32,
    },
    Terminal {
        family: Family,
        index: u32,
    },
    /// Internal node of a degree-reduction tree; `path` is the 0/1 branch
    /// sequence from the terminal at the root.
    TreeNode {
        family: Family,
        index: u32,
        path: String,
    },
    /// Anonymous vertex for graphs that are not gadget constructions.
    Plain(u32),
}

impl VertexLabel {
    pub fn grid(i: u32, j: u32, q: u32, l: u32, part: Part) -> Self {
        VertexLabel::Grid { i, j, q, l, part }
    }

    pub fn terminal(family: Family, index: u32) -> Self {
        VertexLabel::Terminal { family, index }
    }

    /// `(i, j, q, ℓ)` for grid vertices.
    pub fn grid_position(&self) -> Option<(u32, u32, u32, u32)> {
        match *self {
            VertexLabel::Grid { i, j, q, l, .. } => Some((i, j, q, l)),
            _ => None,
        }
    }
}

impl fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexLabel::Grid { i, j, q, l, part } => {
                write!(f, "w[{i},{j}]({q},{l})")?;
                match part {
                    Part::Whole => Ok(()),
                    Part::LB => write!(f, ".LB"),
                    Part::TR => write!(f, ".TR"),
                }
            }
            VertexLabel::HBlue { i, j, l } => write!(f, "h[{i},{j}]({l})"),
            VertexLabel::VBlue { i, j, l } => write!(f, "v[{i},{j}]({l})"),
            VertexLabel::Terminal { family, index } => write!(f, "{}{index}", family.letter()),
            VertexLabel::TreeNode {
                family,
                index,
                path,
            } => {
                write!(f, "{}{index}/{path}", family.letter())
            }
            VertexLabel::Plain(id) => write!(f, "x{id}"),
        }
    }
}

/// Result of [`EmbeddedDigraph::topological_sort`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopoOrder {
    Order(Vec<usize>),
    /// Vertices of a directed cycle, in edge order.
    Cycle(Vec<usize>),
}

impl TopoOrder {
    pub fn is_dag(&self) -> bool {
        matches!(self, TopoOrder::Order(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingCheck {
    pub genus: i64,
    pub faces: usize,
}

/// Accumulates vertices and edges, rejecting duplicates as they arrive.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    labels: Vec<VertexLabel>,
    coords: Vec<Point>,
    index: HashMap<VertexLabel, usize>,
    edges: Vec<(usize, usize)>,
    edge_set: HashSet<(usize, usize)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, label: VertexLabel, at: Point) -> Result<usize, GraphError> {
        if self.index.contains_key(&label) {
            return Err(GraphError::DuplicateLabel(label));
        }
        let id = self.labels.len();
        self.index.insert(label.clone(), id);
        self.labels.push(label);
        self.coords.push(at);
        Ok(id)
    }

    pub fn vertex(&self, label: &VertexLabel) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<(), GraphError> {
        let n = self.labels.len();
        for v in [from, to] {
            if v >= n {
                return Err(GraphError::UnknownVertex(v));
            }
        }
        if from == to {
            return Err(GraphError::SelfLoop(self.labels[from].clone()));
        }
        if !self.edge_set.insert((from, to)) {
            return Err(GraphError::ParallelEdge(
                self.labels[from].clone(),
                self.labels[to].clone(),
            ));
        }
        self.edges.push((from, to));
        Ok(())
    }

    /// Edge between two labels that must already be present.
    pub fn add_edge_between(
        &mut self,
        from: &VertexLabel,
        to: &VertexLabel,
    ) -> Result<(), GraphError> {
        let u = self
            .vertex(from)
            .ok_or_else(|| GraphError::Format(format!("no vertex {from}")))?;
        let v = self
            .vertex(to)
            .ok_or_else(|| GraphError::Format(format!("no vertex {to}")))?;
        self.add_edge(u, v)
    }

    pub fn finish(self) -> Result<EmbeddedDigraph, GraphError> {
        let mut seen: HashMap<Point, usize> = HashMap::with_capacity(self.coords.len());
        for (v, p) in self.coords.iter().enumerate() {
            if let Some(&w) = seen.get(p) {
                return Err(GraphError::DuplicateCoords(
                    self.labels[w].clone(),
                    self.labels[v].clone(),
                ));
            }
            seen.insert(*p, v);
        }
        let n = self.labels.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            out_edges[u].push(e);
            in_edges[v].push(e);
        }
        let edge_index = self
            .edges
            .iter()
            .enumerate()
            .map(|(e, &uv)| (uv, e))
            .collect();
        let mut g = EmbeddedDigraph {
            labels: self.labels,
            coords: self.coords,
            index: self.index,
            edges: self.edges,
            edge_index,
            out_edges,
            in_edges,
            rotation: Vec::new(),
            rotation_pos: Vec::new(),
        };
        g.derive_rotation();
        Ok(g)
    }
}

/// Directed graph with labeled vertices and a coordinate-derived rotation system.
///
/// No self-loops, no parallel edges, distinct coordinates. Immutable once built.
#[derive(Debug, Clone)]
pub struct EmbeddedDigraph {
    labels: Vec<VertexLabel>,
    coords: Vec<Point>,
    index: HashMap<VertexLabel, usize>,
    edges: Vec<(usize, usize)>,
    edge_index: HashMap<(usize, usize), usize>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    rotation: Vec<Vec<usize>>,
    // Position of each edge in the rotation at its tail and at its head.
    rotation_pos: Vec<[usize; 2]>,
}

impl PartialEq for EmbeddedDigraph {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.coords == other.coords && self.edges == other.edges
    }
}

impl EmbeddedDigraph {
    /// Graph over anonymous vertices placed on the parabola `(v, v²)`, so no
    /// three are collinear.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut b = GraphBuilder::new();
        for v in 0..n {
            b.add_vertex(
                VertexLabel::Plain(v as u32),
                Point::int(v as i64, (v * v) as i64),
            )?;
        }
        for &(u, v) in edges {
            b.add_edge(u, v)?;
        }
        b.finish()
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self, v: usize) -> &VertexLabel {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[VertexLabel] {
        &self.labels
    }

    pub fn coord(&self, v: usize) -> Point {
        self.coords[v]
    }

    pub fn vertex(&self, label: &VertexLabel) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_id(&self, from: usize, to: usize) -> Option<usize> {
        self.edge_index.get(&(from, to)).copied()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edge_index.contains_key(&(from, to))
    }

    pub fn successors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.out_edges[v].iter().map(move |&e| self.edges[e].1)
    }

    pub fn predecessors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.in_edges[v].iter().map(move |&e| self.edges[e].0)
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_edges[v].len()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_edges[v].len()
    }

    pub fn max_out_degree(&self) -> usize {
        self.out_edges.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_in_degree(&self) -> usize {
        self.in_edges.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Counter-clockwise order of incident edge ids around `v`.
    pub fn rotation(&self, v: usize) -> &[usize] {
        &self.rotation[v]
    }

    /// Copy of this graph's vertices and edges, for building an edited graph.
    pub fn to_builder(&self) -> GraphBuilder {
        GraphBuilder {
            labels: self.labels.clone(),
            coords: self.coords.clone(),
            index: self.index.clone(),
            edges: self.edges.clone(),
            edge_set: self.edges.iter().copied().collect(),
        }
    }

    fn derive_rotation(&mut self) {
        let n = self.labels.len();
        let rotation: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                let mut incident: Vec<(usize, usize)> = self.out_edges[v]
                    .iter()
                    .map(|&e| (e, self.edges[e].1))
                    .chain(self.in_edges[v].iter().map(|&e| (e, self.edges[e].0)))
                    .collect();
                let c = self.coords[v];
                incident.sort_by(|&(ea, a), &(eb, b)| {
                    ccw_order(&c, &self.coords[a], &self.coords[b]).then(ea.cmp(&eb))
                });
                incident.into_iter().map(|(e, _)| e).collect()
            })
            .collect();
        let mut rotation_pos = vec![[0usize; 2]; self.edges.len()];
        for (v, rot) in rotation.iter().enumerate() {
            for (pos, &e) in rot.iter().enumerate() {
                let side = usize::from(self.edges[e].0 != v);
                rotation_pos[e][side] = pos;
            }
        }
        self.rotation = rotation;
        self.rotation_pos = rotation_pos;
    }

    /// Kahn's algorithm; sources are released in index order so the output
    /// is deterministic.
    pub fn topological_sort(&self) -> TopoOrder {
        let n = self.labels.len();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.in_degree(v)).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for w in self.successors(u) {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        if order.len() == n {
            return TopoOrder::Order(order);
        }
        // Every leftover vertex has a leftover predecessor; walk back until a repeat.
        let start = (0..n).find(|&v| indeg[v] > 0).expect("some vertex remains");
        let mut walk = vec![start];
        let mut at = HashMap::from([(start, 0usize)]);
        let mut cur = start;
        loop {
            let prev = self
                .predecessors(cur)
                .find(|&p| indeg[p] > 0)
                .expect("leftover vertex has a leftover predecessor");
            if let Some(&i) = at.get(&prev) {
                let mut cycle = walk[i..].to_vec();
                cycle.reverse();
                return TopoOrder::Cycle(cycle);
            }
            at.insert(prev, walk.len());
            walk.push(prev);
            cur = prev;
        }
    }

    /// Whether the underlying undirected graph is connected (and non-empty).
    pub fn is_connected(&self) -> bool {
        let n = self.labels.len();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for w in self.successors(u).chain(self.predecessors(u)) {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    /// Traces the faces of the rotation system and applies Euler's formula
    /// `V − E + F = 2 − 2g`.
    pub fn check_planar_embedding(&self) -> Result<EmbeddingCheck, GraphError> {
        if !self.is_connected() {
            return Err(GraphError::NotConnected);
        }
        let v = self.labels.len() as i64;
        let e = self.edges.len();
        let faces = if e == 0 { 1 } else { self.count_faces() };
        let euler = v - e as i64 + faces as i64;
        Ok(EmbeddingCheck {
            genus: (2 - euler) / 2,
            faces,
        })
    }

    fn count_faces(&self) -> usize {
        // Dart 2e runs tail -> head, dart 2e+1 runs head -> tail.
        let mut visited = vec![false; 2 * self.edges.len()];
        let mut faces = 0;
        for start in 0..visited.len() {
            if visited[start] {
                continue;
            }
            faces += 1;
            let mut d = start;
            while !visited[d] {
                visited[d] = true;
                let e = d / 2;
                let forward = d % 2 == 0;
                let (tail, head) = self.edges[e];
                let (at, side) = if forward { (head, 1) } else { (tail, 0) };
                let rot = &self.rotation[at];
                let pos = self.rotation_pos[e][side];
                let next_e = rot[(pos + rot.len() - 1) % rot.len()];
                d = if self.edges[next_e].0 == at {
                    2 * next_e
                } else {
                    2 * next_e + 1
                };
            }
        }
        faces
    }

    /// `N⁺(S)`: vertices outside `S` with an edge from `S`.
    pub fn out_neighbors(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        set.iter()
            .flat_map(|&u| self.successors(u))
            .filter(|w| !set.contains(w))
            .collect()
    }

    /// `N⁻(S)`: vertices outside `S` with an edge into `S`.
    pub fn in_neighbors(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        set.iter()
            .flat_map(|&u| self.predecessors(u))
            .filter(|w| !set.contains(w))
            .collect()
    }

    /// Whether edge `e` is the dotted `LB → TR` edge of a split grid vertex.
    pub fn is_split_edge(&self, e: usize) -> bool {
        let (u, v) = self.edges[e];
        match (&self.labels[u], &self.labels[v]) {
            (
                VertexLabel::Grid {
                    i,
                    j,
                    q,
                    l,
                    part: Part::LB,
                },
                VertexLabel::Grid {
                    i: i2,
                    j: j2,
                    q: q2,
                    l: l2,
                    part: Part::TR,
                },
            ) => (i, j, q, l) == (i2, j2, q2, l2),
            _ => false,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GraphJson::from(self)).expect("graph JSON is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let raw: GraphJson =
            serde_json::from_str(text).map_err(|e| GraphError::Format(e.to_string()))?;
        raw.try_into()
    }

    /// Graphviz rendering with `pos` pinned to the embedding coordinates.
    pub fn to_dot(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        s.push_str("digraph G {\n");
        s.push_str("  graph [splines=false, outputorder=edgesfirst];\n");
        s.push_str(
            "  node [shape=circle, label=\"\", width=0.12, fixedsize=true, style=filled];\n",
        );
        s.push_str("  edge [arrowsize=0.5];\n");
        for (v, label) in self.labels.iter().enumerate() {
            let p = self.coords[v];
            let color = match label {
                VertexLabel::Grid { .. } | VertexLabel::Plain(_) => "black",
                VertexLabel::HBlue { .. } | VertexLabel::VBlue { .. } => "blue",
                VertexLabel::Terminal { .. } => "green",
                VertexLabel::TreeNode { .. } => "magenta",
            };
            let _ = writeln!(
                s,
                "  v{v} [pos=\"{},{}!\", fillcolor={color}, color={color}, tooltip=\"{label}\"];",
                fmt_coord(p.x),
                fmt_coord(p.y)
            );
        }
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            let attrs = if self.is_split_edge(e) {
                "style=dotted, color=black"
            } else {
                match (&self.labels[u], &self.labels[v]) {
                    (VertexLabel::Terminal { .. } | VertexLabel::TreeNode { .. }, _)
                    | (_, VertexLabel::Terminal { .. } | VertexLabel::TreeNode { .. }) => {
                        "color=magenta"
                    }
                    (VertexLabel::HBlue { .. } | VertexLabel::VBlue { .. }, _)
                    | (_, VertexLabel::HBlue { .. } | VertexLabel::VBlue { .. }) => "color=red",
                    _ => "color=black",
                }
            };
            let _ = writeln!(s, "  v{u} -> v{v} [{attrs}];");
        }
        s.push_str("}\n");
        s
    }
}

fn fmt_coord(r: Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{:.4}", r.to_f64().unwrap_or(f64::NAN))
    }
}

/// Counter-clockwise angular order of `a` and `b` around `c`, starting from
/// the positive x-axis.
fn ccw_order(c: &Point, a: &Point, b: &Point) -> Ordering {
    let (ax, ay) = (a.x - c.x, a.y - c.y);
    let (bx, by) = (b.x - c.x, b.y - c.y);
    let half = |x: Rational, y: Rational| -> u8 {
        if y.is_positive() || (y.is_zero() && x.is_positive()) {
            0
        } else {
            1
        }
    };
    half(ax, ay).cmp(&half(bx, by)).then_with(|| {
        let cross = ax * by - ay * bx;
        Rational::zero().cmp(&cross)
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct VertexJson {
    label: VertexLabel,
    x: String,
    y: String,
}

/// Wire form: vertex records (label plus exact coordinates as `"p/q"`
/// strings) and an edge list of vertex indices.
#[derive(Debug, Serialize, Deserialize)]
pub struct GraphJson {
    vertices: Vec<VertexJson>,
    edges: Vec<[usize; 2]>,
}

impl From<&EmbeddedDigraph> for GraphJson {
    fn from(g: &EmbeddedDigraph) -> Self {
        GraphJson {
            vertices: g
                .labels
                .iter()
                .zip(&g.coords)
                .map(|(label, p)| VertexJson {
                    label: label.clone(),
                    x: p.x.to_string(),
                    y: p.y.to_string(),
                })
                .collect(),
            edges: g.edges.iter().map(|&(u, v)| [u, v]).collect(),
        }
    }
}

impl TryFrom<GraphJson> for EmbeddedDigraph {
    type Error = GraphError;

    fn try_from(raw: GraphJson) -> Result<Self, Self::Error> {
        let mut b = GraphBuilder::new();
        for VertexJson { label, x, y } in raw.vertices {
            let parse = |s: &str| -> Result<Rational, GraphError> {
                s.parse()
                    .map_err(|_| GraphError::Format(format!("bad coordinate {s:?}")))
            };
            b.add_vertex(label, Point::new(parse(&x)?, parse(&y)?))?;
        }
        for [u, v] in raw.edges {
            b.add_edge(u, v)?;
        }
        b.finish()
    }
}

impl Serialize for EmbeddedDigraph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        GraphJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EmbeddedDigraph {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = GraphJson::deserialize(deserializer)?;
        raw.try_into().map_err(serde::de::Error::custom)
    }
}

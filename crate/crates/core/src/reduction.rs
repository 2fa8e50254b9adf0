//! The gadget construction: a Grid Tiling instance becomes an edge-disjoint
//! paths instance on a planar DAG with `2k` terminal pairs.
//!
//! Layout (all coordinates exact): grid `G_{i,j}` occupies the block whose
//! vertex `(q, ℓ)` sits at `x = (i−1)(N+1)+q`, `y = (j−1)(N+1)+ℓ`. Blue
//! connector vertices sit on the interstitial lines `x = i(N+1)` (horizontal
//! connectors) and `y = j(N+1)` (vertical connectors). Terminals lie one unit
//! outside the bounding box. Split copies are offset by `∓1/4` along the
//! SW–NE diagonal.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digraph::{
    EmbeddedDigraph, EmbeddingCheck, Family, GraphBuilder, GraphError, Part, Point, Rational,
    VertexLabel,
};
use crate::gridtiling::{validate_instance, GridTilingInstance, Violation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("invalid parameters: k = {k}, N = {n} (need k >= 1, N >= 2)")]
    InvalidParameters { k: u32, n: u32 },
    #[error("instance is invalid: {0:?}")]
    InvalidInstance(Vec<Violation>),
    #[error("graph does not match the instance: {0}")]
    Mismatch(String),
    #[error("degree reduction was already applied")]
    AlreadyReduced,
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Le,
    Ri,
    To,
    Bo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevelKind {
    Horizontal,
    Vertical,
}

/// Ordered `(source, sink)` pairs: `(a_i, b_i)` for `i = 1..k`, then `(c_j, d_j)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalSet {
    pub pairs: Vec<(VertexLabel, VertexLabel)>,
}

impl TerminalSet {
    pub fn for_k(k: u32) -> Self {
        let ab = (1..=k).map(|i| {
            (
                VertexLabel::terminal(Family::A, i),
                VertexLabel::terminal(Family::B, i),
            )
        });
        let cd = (1..=k).map(|j| {
            (
                VertexLabel::terminal(Family::C, j),
                VertexLabel::terminal(Family::D, j),
            )
        });
        Self {
            pairs: ab.chain(cd).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Vertex indices of each pair in `g`.
    pub fn resolve(&self, g: &EmbeddedDigraph) -> Result<Vec<(usize, usize)>, ReductionError> {
        self.pairs
            .iter()
            .map(|(s, t)| {
                let find = |l: &VertexLabel| {
                    g.vertex(l).ok_or_else(|| {
                        ReductionError::Mismatch(format!("terminal {l} missing from graph"))
                    })
                };
                Ok((find(s)?, find(t)?))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeCounts {
    pub vertices: u64,
    pub edges: u64,
}

/// Closed-form sizes of the reduced graph.
///
/// With `M = Σ (N² − |S_{i,j}|)` split vertices:
/// `|V| = 4k + 2k(k−1)N + k²N² + M` and
/// `|E| = 2k²N(N−1) + M + 2k(k−1)(3N−1) + 4kN`.
/// Degree reduction replaces each of the `4k` stars by a binary tree with
/// `N − 2` internal nodes and `2N − 2` edges.
pub fn predicted_counts(inst: &GridTilingInstance, degree_reduced: bool) -> SizeCounts {
    let k = u64::from(inst.k);
    let n = u64::from(inst.n);
    let m = inst.missing_pairs();
    let mut vertices = 4 * k + 2 * k * (k - 1) * n + k * k * n * n + m;
    let mut edges = 2 * k * k * n * (n - 1) + m + 2 * k * (k - 1) * (3 * n - 1) + 4 * k * n;
    if degree_reduced {
        vertices += 4 * k * (n - 2);
        edges += 4 * k * (n - 2);
    }
    SizeCounts { vertices, edges }
}

/// The reduced instance together with where it came from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionOutput {
    pub k: u32,
    #[serde(rename = "N")]
    pub n: u32,
    pub graph: EmbeddedDigraph,
    pub terminals: TerminalSet,
    pub provenance: GridTilingInstance,
    pub counts: SizeCounts,
    pub degree_reduced: bool,
}

impl ReductionOutput {
    pub fn actual_counts(&self) -> SizeCounts {
        SizeCounts {
            vertices: self.graph.vertex_count() as u64,
            edges: self.graph.edge_count() as u64,
        }
    }

    pub fn counts_match(&self) -> bool {
        self.counts == self.actual_counts()
    }

    pub fn terminal_indices(&self) -> Result<Vec<(usize, usize)>, ReductionError> {
        self.terminals.resolve(&self.graph)
    }

    /// The vertex standing for `w_{i,j}^{q,ℓ}` on the requested side: the
    /// whole vertex if unsplit, otherwise the `part` copy.
    pub fn grid_vertex(&self, i: u32, j: u32, q: u32, l: u32, part: Part) -> Option<usize> {
        self.graph
            .vertex(&VertexLabel::grid(i, j, q, l, Part::Whole))
            .or_else(|| self.graph.vertex(&VertexLabel::grid(i, j, q, l, part)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reduction output is always serializable")
    }

    /// Parses and cross-checks terminals against the graph.
    pub fn from_json(text: &str) -> Result<Self, ReductionError> {
        let out: Self =
            serde_json::from_str(text).map_err(|e| ReductionError::Mismatch(e.to_string()))?;
        if out.terminals.len() != 2 * out.k as usize {
            return Err(ReductionError::Mismatch(format!(
                "{} terminal pairs for k = {}",
                out.terminals.len(),
                out.k
            )));
        }
        out.terminal_indices()?;
        Ok(out)
    }
}

fn check_params(k: u32, n: u32) -> Result<(), ReductionError> {
    if k < 1 || n < 2 {
        Err(ReductionError::InvalidParameters { k, n })
    } else {
        Ok(())
    }
}

fn r(n: i64) -> Rational {
    Rational::from_integer(n)
}

struct Layout {
    k: i64,
    pitch: i64,
}

impl Layout {
    fn new(k: u32, n: u32) -> Self {
        Self {
            k: i64::from(k),
            pitch: i64::from(n) + 1,
        }
    }

    fn grid(&self, i: u32, j: u32, q: u32, l: u32) -> Point {
        Point::int(
            (i64::from(i) - 1) * self.pitch + i64::from(q),
            (i64::from(j) - 1) * self.pitch + i64::from(l),
        )
    }

    fn split(&self, whole: Point, part: Part) -> Point {
        let d = match part {
            Part::Whole => Rational::from_integer(0),
            Part::LB => Rational::new(-1, 4),
            Part::TR => Rational::new(1, 4),
        };
        Point::new(whole.x + d, whole.y + d)
    }

    fn hblue(&self, i: u32, j: u32, l: u32) -> Point {
        Point::int(
            i64::from(i) * self.pitch,
            (i64::from(j) - 1) * self.pitch + i64::from(l),
        )
    }

    fn vblue(&self, i: u32, j: u32, l: u32) -> Point {
        Point::int(
            (i64::from(i) - 1) * self.pitch + i64::from(l),
            i64::from(j) * self.pitch,
        )
    }

    /// Coordinate of the terminal line perpendicular to the star.
    fn terminal_depth(&self, family: Family) -> Rational {
        match family {
            Family::A | Family::C => r(-1),
            Family::B | Family::D => r(self.k * self.pitch + 1),
        }
    }

    fn terminal(&self, family: Family, index: u32) -> Point {
        let centre = r((i64::from(index) - 1) * self.pitch) + Rational::new(self.pitch, 2);
        let depth = self.terminal_depth(family);
        match family {
            Family::A | Family::B => Point::new(centre, depth),
            Family::C | Family::D => Point::new(depth, centre),
        }
    }
}

/// Builds `G_1` for parameters `(k, N)`.
pub fn build_g1(k: u32, n: u32) -> Result<EmbeddedDigraph, ReductionError> {
    check_params(k, n)?;
    let lay = Layout::new(k, n);
    let mut b = GraphBuilder::new();
    let w = |i, j, q, l| VertexLabel::grid(i, j, q, l, Part::Whole);

    for j in 1..=k {
        for i in 1..=k {
            for l in 1..=n {
                for q in 1..=n {
                    b.add_vertex(w(i, j, q, l), lay.grid(i, j, q, l))?;
                }
            }
        }
    }
    for j in 1..=k {
        for i in 1..k {
            for l in 1..=n {
                b.add_vertex(VertexLabel::HBlue { i, j, l }, lay.hblue(i, j, l))?;
            }
        }
    }
    for j in 1..k {
        for i in 1..=k {
            for l in 1..=n {
                b.add_vertex(VertexLabel::VBlue { i, j, l }, lay.vblue(i, j, l))?;
            }
        }
    }
    for family in [Family::A, Family::B, Family::C, Family::D] {
        for index in 1..=k {
            b.add_vertex(
                VertexLabel::terminal(family, index),
                lay.terminal(family, index),
            )?;
        }
    }

    // Grid edges: upward and rightward.
    for j in 1..=k {
        for i in 1..=k {
            for l in 1..=n {
                for q in 1..=n {
                    if l < n {
                        b.add_edge_between(&w(i, j, q, l), &w(i, j, q, l + 1))?;
                    }
                    if q < n {
                        b.add_edge_between(&w(i, j, q, l), &w(i, j, q + 1, l))?;
                    }
                }
            }
        }
    }
    // Horizontal connectors: Ri(G_{i,j}) -> H -> Le(G_{i+1,j}), path upwards.
    for j in 1..=k {
        for i in 1..k {
            for l in 1..=n {
                let h = VertexLabel::HBlue { i, j, l };
                if l < n {
                    b.add_edge_between(&h, &VertexLabel::HBlue { i, j, l: l + 1 })?;
                }
                b.add_edge_between(&w(i, j, n, l), &h)?;
                b.add_edge_between(&h, &w(i + 1, j, 1, l))?;
            }
        }
    }
    // Vertical connectors: To(G_{i,j}) -> V -> Bo(G_{i,j+1}), path rightwards.
    for j in 1..k {
        for i in 1..=k {
            for l in 1..=n {
                let v = VertexLabel::VBlue { i, j, l };
                if l < n {
                    b.add_edge_between(&v, &VertexLabel::VBlue { i, j, l: l + 1 })?;
                }
                b.add_edge_between(&w(i, j, l, n), &v)?;
                b.add_edge_between(&v, &w(i, j + 1, l, 1))?;
            }
        }
    }
    // Terminal stars.
    for idx in 1..=k {
        let (a, bt, c, d) = (
            VertexLabel::terminal(Family::A, idx),
            VertexLabel::terminal(Family::B, idx),
            VertexLabel::terminal(Family::C, idx),
            VertexLabel::terminal(Family::D, idx),
        );
        for l in 1..=n {
            b.add_edge_between(&a, &w(idx, 1, l, 1))?;
            b.add_edge_between(&w(idx, k, l, n), &bt)?;
            b.add_edge_between(&c, &w(1, idx, 1, l))?;
            b.add_edge_between(&w(k, idx, n, l), &d)?;
        }
    }
    Ok(b.finish()?)
}

/// Recovers `(k, N)` from an unsplit `G_1` and checks its size.
fn g1_parameters(g1: &EmbeddedDigraph) -> Result<(u32, u32), ReductionError> {
    let mut k = 0;
    let mut n = 0;
    for label in g1.labels() {
        if let VertexLabel::Grid { i, q, part, .. } = *label {
            if part != Part::Whole {
                return Err(ReductionError::Mismatch(
                    "graph already contains split vertices".into(),
                ));
            }
            k = k.max(i);
            n = n.max(q);
        }
    }
    if k == 0 {
        return Err(ReductionError::Mismatch(
            "graph has no grid vertices".into(),
        ));
    }
    let expected = predicted_counts(
        &GridTilingInstance::full(k, n.max(2)).expect("k >= 1"),
        false,
    );
    let actual = SizeCounts {
        vertices: g1.vertex_count() as u64,
        edges: g1.edge_count() as u64,
    };
    if n < 2 || actual != expected {
        return Err(ReductionError::Mismatch(format!(
            "graph is not G1 for k = {k}, N = {n}"
        )));
    }
    Ok((k, n))
}

/// Splits every grid vertex `w_{i,j}^{q,ℓ}` with `(q, ℓ) ∉ S_{i,j}` into an
/// `LB → TR` pair; incoming edges move to `LB`, outgoing edges to `TR`.
pub fn split_vertices(
    g1: &EmbeddedDigraph,
    inst: &GridTilingInstance,
) -> Result<EmbeddedDigraph, ReductionError> {
    let (k, n) = g1_parameters(g1)?;
    if (k, n) != (inst.k, inst.n) {
        return Err(ReductionError::Mismatch(format!(
            "graph built for k = {k}, N = {n}; instance has k = {}, N = {}",
            inst.k, inst.n
        )));
    }
    let lay = Layout::new(k, n);
    let mut b = GraphBuilder::new();
    // Per old vertex: (vertex receiving in-edges, vertex emitting out-edges).
    let mut ends = Vec::with_capacity(g1.vertex_count());
    let mut dotted = Vec::new();
    for v in 0..g1.vertex_count() {
        let label = g1.label(v);
        match *label {
            VertexLabel::Grid { i, j, q, l, .. } if !inst.contains(i, j, (q, l)) => {
                let at = g1.coord(v);
                let lb = b.add_vertex(
                    VertexLabel::grid(i, j, q, l, Part::LB),
                    lay.split(at, Part::LB),
                )?;
                let tr = b.add_vertex(
                    VertexLabel::grid(i, j, q, l, Part::TR),
                    lay.split(at, Part::TR),
                )?;
                dotted.push((lb, tr));
                ends.push((lb, tr));
            }
            _ => {
                let id = b.add_vertex(label.clone(), g1.coord(v))?;
                ends.push((id, id));
            }
        }
    }
    for &(u, v) in g1.edges() {
        b.add_edge(ends[u].1, ends[v].0)?;
    }
    for (lb, tr) in dotted {
        b.add_edge(lb, tr)?;
    }
    Ok(b.finish()?)
}

/// `G_2` and `𝒯` for a valid instance.
pub fn reduce(inst: &GridTilingInstance) -> Result<ReductionOutput, ReductionError> {
    check_params(inst.k, inst.n)?;
    let violations = validate_instance(inst);
    if !violations.is_empty() {
        return Err(ReductionError::InvalidInstance(violations));
    }
    let g1 = build_g1(inst.k, inst.n)?;
    let graph = split_vertices(&g1, inst)?;
    Ok(ReductionOutput {
        k: inst.k,
        n: inst.n,
        graph,
        terminals: TerminalSet::for_k(inst.k),
        provenance: inst.clone(),
        counts: predicted_counts(inst, false),
        degree_reduced: false,
    })
}

/// Replaces every terminal star by a balanced directed binary tree whose
/// leaves are the former star endpoints, so every vertex ends up with
/// in- and out-degree at most two.
pub fn reduce_degree(out: &ReductionOutput) -> Result<ReductionOutput, ReductionError> {
    if out.degree_reduced {
        return Err(ReductionError::AlreadyReduced);
    }
    let g = &out.graph;
    let lay = Layout::new(out.k, out.n);
    let is_terminal = |v: usize| matches!(g.label(v), VertexLabel::Terminal { .. });

    let mut b = GraphBuilder::new();
    for v in 0..g.vertex_count() {
        b.add_vertex(g.label(v).clone(), g.coord(v))?;
    }
    for &(u, v) in g.edges() {
        if !is_terminal(u) && !is_terminal(v) {
            b.add_edge(u, v)?;
        }
    }
    let depth = tree_depth(out.n as usize);
    for family in [Family::A, Family::B, Family::C, Family::D] {
        for index in 1..=out.k {
            let root = g
                .vertex(&VertexLabel::terminal(family, index))
                .ok_or_else(|| {
                    ReductionError::Mismatch(format!("terminal {}{index} missing", family.letter()))
                })?;
            let mut leaves: Vec<usize> = if family.is_source() {
                g.successors(root).collect()
            } else {
                g.predecessors(root).collect()
            };
            // Leaves in boundary order along the star's axis.
            leaves.sort_by_key(|&v| {
                let p = g.coord(v);
                match family {
                    Family::A | Family::B => p.x,
                    Family::C | Family::D => p.y,
                }
            });
            let tree = TreeBuild {
                g,
                lay: &lay,
                family,
                index,
                depth,
            };
            tree.attach(&mut b, root, &leaves, String::new(), 0)?;
        }
    }
    let graph = b.finish()?;
    Ok(ReductionOutput {
        graph,
        counts: predicted_counts(&out.provenance, true),
        degree_reduced: true,
        ..out.clone()
    })
}

fn tree_depth(leaves: usize) -> usize {
    // ceil(log2(leaves))
    (usize::BITS - (leaves.max(1) - 1).leading_zeros()) as usize
}

struct TreeBuild<'a> {
    g: &'a EmbeddedDigraph,
    lay: &'a Layout,
    family: Family,
    index: u32,
    depth: usize,
}

impl TreeBuild<'_> {
    fn edge(&self, b: &mut GraphBuilder, parent: usize, child: usize) -> Result<(), GraphError> {
        if self.family.is_source() {
            b.add_edge(parent, child)
        } else {
            b.add_edge(child, parent)
        }
    }

    /// Attaches `leaves` below `parent`, which sits at tree depth `level`.
    fn attach(
        &self,
        b: &mut GraphBuilder,
        parent: usize,
        leaves: &[usize],
        path: String,
        level: usize,
    ) -> Result<(), ReductionError> {
        let mid = leaves.len().div_ceil(2);
        for (bit, half) in [('0', &leaves[..mid]), ('1', &leaves[mid..])] {
            match half {
                [] => {}
                [leaf] => self.edge(b, parent, *leaf)?,
                _ => {
                    let child_path = format!("{path}{bit}");
                    let label = VertexLabel::TreeNode {
                        family: self.family,
                        index: self.index,
                        path: child_path.clone(),
                    };
                    let node = b.add_vertex(label, self.position(half, level + 1))?;
                    self.edge(b, parent, node)?;
                    self.attach(b, node, half, child_path, level + 1)?;
                }
            }
        }
        Ok(())
    }

    /// Midpoint of the subtree's leaves along the star axis, and a fraction
    /// of the way from the terminal towards the grid by depth.
    fn position(&self, leaves: &[usize], level: usize) -> Point {
        let along = |v: usize| {
            let p = self.g.coord(v);
            match self.family {
                Family::A | Family::B => p.x,
                Family::C | Family::D => p.y,
            }
        };
        let first = along(leaves[0]);
        let last = along(*leaves.last().expect("non-empty subtree"));
        let centre = (first + last) / r(2);
        let step = Rational::new(7, 4) * Rational::new(level as i64, self.depth as i64 + 1);
        let base = self.lay.terminal_depth(self.family);
        let depth = if self.family.is_source() {
            base + step
        } else {
            base - step
        };
        match self.family {
            Family::A | Family::B => Point::new(centre, depth),
            Family::C | Family::D => Point::new(depth, centre),
        }
    }
}

/// The `N` boundary vertices of `G_{i,j}` on `side`, in `ℓ` order. Left and
/// bottom sides use `LB` copies, right and top use `TR` copies.
pub fn boundary(
    out: &ReductionOutput,
    i: u32,
    j: u32,
    side: Side,
) -> Result<Vec<usize>, ReductionError> {
    let k = out.k;
    if !(1..=k).contains(&i) || !(1..=k).contains(&j) {
        return Err(ReductionError::OutOfRange(format!(
            "grid ({i},{j}) with k = {k}"
        )));
    }
    let n = out.n;
    (1..=n)
        .map(|l| {
            let (q, row, part) = match side {
                Side::Le => (1, l, Part::LB),
                Side::Ri => (n, l, Part::TR),
                Side::To => (l, n, Part::TR),
                Side::Bo => (l, 1, Part::LB),
            };
            out.grid_vertex(i, j, q, row, part).ok_or_else(|| {
                ReductionError::Mismatch(format!("grid vertex ({i},{j},{q},{row}) missing"))
            })
        })
        .collect()
}

/// `Horizontal(j)` or `Vertical(i)`. Tree nodes of a degree-reduced graph
/// belong to the level of their terminal.
pub fn level_set(
    out: &ReductionOutput,
    kind: LevelKind,
    index: u32,
) -> Result<BTreeSet<usize>, ReductionError> {
    if !(1..=out.k).contains(&index) {
        return Err(ReductionError::OutOfRange(format!(
            "level {index} with k = {}",
            out.k
        )));
    }
    let g = &out.graph;
    Ok((0..g.vertex_count())
        .filter(|&v| in_level(g.label(v), kind, index))
        .collect())
}

pub(crate) fn in_level(label: &VertexLabel, kind: LevelKind, index: u32) -> bool {
    match (kind, label) {
        (LevelKind::Vertical, VertexLabel::Grid { i, .. }) => *i == index,
        (LevelKind::Horizontal, VertexLabel::Grid { j, .. }) => *j == index,
        (LevelKind::Vertical, VertexLabel::VBlue { i, .. }) => *i == index,
        (LevelKind::Horizontal, VertexLabel::HBlue { j, .. }) => *j == index,
        (
            kind,
            VertexLabel::Terminal { family, index: t }
            | VertexLabel::TreeNode {
                family, index: t, ..
            },
        ) => {
            let vertical = matches!(family, Family::A | Family::B);
            *t == index && (vertical == (kind == LevelKind::Vertical))
        }
        _ => false,
    }
}

/// Outcome of the structural checks run on every reduction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub is_dag: bool,
    pub embedding: Option<EmbeddingCheck>,
    pub max_in_degree: usize,
    pub max_out_degree: usize,
    pub terminal_pairs: usize,
    pub predicted: SizeCounts,
    pub actual: SizeCounts,
    pub split_edges: usize,
}

impl StructureReport {
    pub fn of(out: &ReductionOutput) -> Self {
        let g = &out.graph;
        Self {
            is_dag: g.topological_sort().is_dag(),
            embedding: g.check_planar_embedding().ok(),
            max_in_degree: g.max_in_degree(),
            max_out_degree: g.max_out_degree(),
            terminal_pairs: out.terminals.len(),
            predicted: out.counts,
            actual: out.actual_counts(),
            split_edges: (0..g.edge_count()).filter(|&e| g.is_split_edge(e)).count(),
        }
    }

    pub fn is_planar(&self) -> bool {
        self.embedding.is_some_and(|e| e.genus == 0)
    }

    /// DAG, genus 0, `2k` pairs, exact counts; plus degree ≤ 2 when `degree_bound`.
    pub fn passes(&self, k: u32, degree_bound: bool) -> bool {
        self.is_dag
            && self.is_planar()
            && self.terminal_pairs == 2 * k as usize
            && self.predicted == self.actual
            && (!degree_bound || (self.max_in_degree <= 2 && self.max_out_degree <= 2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridtiling::{generate_planted, generate_random, GridTilingInstance};

    fn single(n: u32, pairs: &[(u32, u32)]) -> GridTilingInstance {
        GridTilingInstance::from_sets(1, n, [((1, 1), pairs.to_vec())]).unwrap()
    }

    #[test]
    fn g1_size_for_k3_n5() {
        let g = build_g1(3, 5).unwrap();
        assert_eq!(g.vertex_count(), 297);
        assert_eq!(g.vertex_count(), 9 * 25 + 2 * 3 * 2 * 5 + 4 * 3);
        let full = GridTilingInstance::full(3, 5).unwrap();
        assert_eq!(g.edge_count() as u64, predicted_counts(&full, false).edges);
    }

    #[test]
    fn g1_smallest() {
        let g = build_g1(1, 2).unwrap();
        assert_eq!(g.vertex_count(), 8);
        // 2N(N-1) = 4 grid edges plus 4kN = 8 star edges.
        assert_eq!(g.edge_count(), 12);
    }

    #[test]
    fn g1_grid_vertices_have_two_in_two_out() {
        for (k, n) in [(1, 2), (2, 3), (3, 5)] {
            let g = build_g1(k, n).unwrap();
            for v in 0..g.vertex_count() {
                if let VertexLabel::Grid { .. } = g.label(v) {
                    assert_eq!((g.in_degree(v), g.out_degree(v)), (2, 2), "{}", g.label(v));
                }
            }
        }
    }

    #[test]
    fn g1_rejects_bad_parameters() {
        assert_eq!(
            build_g1(0, 3),
            Err(ReductionError::InvalidParameters { k: 0, n: 3 })
        );
        assert_eq!(
            build_g1(2, 1),
            Err(ReductionError::InvalidParameters { k: 2, n: 1 })
        );
    }

    #[test]
    fn g1_is_a_planar_dag() {
        for (k, n) in [(1, 2), (2, 2), (2, 3), (3, 5)] {
            let g = build_g1(k, n).unwrap();
            assert!(g.topological_sort().is_dag());
            assert_eq!(g.check_planar_embedding().unwrap().genus, 0, "k={k} N={n}");
        }
    }

    #[test]
    fn splitting_full_sets_is_identity() {
        let inst = GridTilingInstance::full(2, 3).unwrap();
        let g1 = build_g1(2, 3).unwrap();
        let g2 = split_vertices(&g1, &inst).unwrap();
        assert_eq!(g2, g1);
    }

    #[test]
    fn splitting_empty_sets_doubles_the_grid() {
        let inst = GridTilingInstance::empty(2, 2).unwrap();
        let g1 = build_g1(2, 2).unwrap();
        let g2 = split_vertices(&g1, &inst).unwrap();
        let grid = g2
            .labels()
            .iter()
            .filter(|l| matches!(l, VertexLabel::Grid { .. }))
            .count();
        assert_eq!(grid, 2 * 4 * 4);
        let dotted = (0..g2.edge_count())
            .filter(|&e| g2.is_split_edge(e))
            .count();
        assert_eq!(dotted, 4 * 4);
    }

    #[test]
    fn splitting_single_cell() {
        let inst = single(2, &[(1, 1)]);
        let g2 = split_vertices(&build_g1(1, 2).unwrap(), &inst).unwrap();
        assert_eq!(g2.vertex_count(), 11);
    }

    #[test]
    fn splitting_rejects_mismatched_instance() {
        let g1 = build_g1(2, 3).unwrap();
        let inst = GridTilingInstance::full(2, 2).unwrap();
        assert!(matches!(
            split_vertices(&g1, &inst),
            Err(ReductionError::Mismatch(_))
        ));
        let g2 = split_vertices(&g1, &GridTilingInstance::empty(2, 3).unwrap()).unwrap();
        assert!(matches!(
            split_vertices(&g2, &GridTilingInstance::empty(2, 3).unwrap()),
            Err(ReductionError::Mismatch(_))
        ));
    }

    #[test]
    fn split_vertex_moves_edges() {
        let inst = single(2, &[(1, 1)]);
        let out = reduce(&inst).unwrap();
        let g = &out.graph;
        let lb = g.vertex(&VertexLabel::grid(1, 1, 2, 2, Part::LB)).unwrap();
        let tr = g.vertex(&VertexLabel::grid(1, 1, 2, 2, Part::TR)).unwrap();
        assert_eq!((g.in_degree(lb), g.out_degree(lb)), (2, 1));
        assert_eq!((g.in_degree(tr), g.out_degree(tr)), (1, 2));
        assert!(g.has_edge(lb, tr));
    }

    #[test]
    fn reduce_planted_counts() {
        let inst = generate_planted(2, 3, 0, 7).unwrap();
        let out = reduce(&inst).unwrap();
        assert_eq!(out.counts.vertices, 88);
        assert!(out.counts_match());
        let report = StructureReport::of(&out);
        assert!(report.passes(2, false), "{report:?}");
        assert_eq!(out.terminals.len(), 4);
    }

    #[test]
    fn reduce_full_single_cell() {
        let out = reduce(&GridTilingInstance::full(1, 2).unwrap()).unwrap();
        assert_eq!(out.counts.vertices, 8);
        assert_eq!(out.terminals.len(), 2);
    }

    #[test]
    fn reduce_rejects_invalid_instance() {
        let mut inst = GridTilingInstance::full(2, 2).unwrap();
        inst.sets.remove(&(2, 2));
        assert!(matches!(
            reduce(&inst),
            Err(ReductionError::InvalidInstance(_))
        ));
    }

    #[test]
    fn size_bound_class() {
        for seed in 0..20 {
            let inst = generate_random(3, 4, 0.5, seed).unwrap();
            let out = reduce(&inst).unwrap();
            let (k, n) = (3u64, 4u64);
            assert!(out.counts.vertices <= 4 * k + 2 * k * k * n + 2 * k * k * n * n);
        }
    }

    #[test]
    fn g2_non_terminal_degrees_at_most_two() {
        let inst = generate_random(3, 4, 0.3, 11).unwrap();
        let out = reduce(&inst).unwrap();
        let g = &out.graph;
        for v in 0..g.vertex_count() {
            match g.label(v) {
                VertexLabel::Terminal { .. } => {}
                _ => assert!(g.in_degree(v) <= 2 && g.out_degree(v) <= 2),
            }
        }
    }

    #[test]
    fn degree_reduction() {
        let out = reduce(&GridTilingInstance::full(2, 4).unwrap()).unwrap();
        assert_eq!(out.graph.max_out_degree(), 4);
        let red = reduce_degree(&out).unwrap();
        assert_eq!(red.graph.max_out_degree(), 2);
        assert_eq!(red.graph.max_in_degree(), 2);
        assert!(red.counts_match());
        assert!(StructureReport::of(&red).passes(2, true));
        assert_eq!(
            reduce_degree(&red).unwrap_err(),
            ReductionError::AlreadyReduced
        );

        // N = 2 stars are already binary: no tree nodes added.
        let small = reduce(&GridTilingInstance::full(1, 2).unwrap()).unwrap();
        let red = reduce_degree(&small).unwrap();
        assert_eq!(red.graph.vertex_count(), small.graph.vertex_count());
        assert!(StructureReport::of(&red).passes(1, true));
    }

    #[test]
    fn degree_reduction_k3_n5_stays_planar_dag() {
        let inst = generate_random(3, 5, 0.5, 3).unwrap();
        let red = reduce_degree(&reduce(&inst).unwrap()).unwrap();
        let report = StructureReport::of(&red);
        assert!(report.passes(3, true), "{report:?}");
        assert!(
            red.graph.vertex_count() as u64 - reduce(&inst).unwrap().counts.vertices
                <= 4 * 3 * 2 * 5
        );
    }

    #[test]
    fn tree_depths() {
        assert_eq!(tree_depth(2), 1);
        assert_eq!(tree_depth(3), 2);
        assert_eq!(tree_depth(4), 2);
        assert_eq!(tree_depth(5), 3);
    }

    #[test]
    fn boundaries() {
        let full = reduce(&GridTilingInstance::full(1, 2).unwrap()).unwrap();
        let le = boundary(&full, 1, 1, Side::Le).unwrap();
        let labels: Vec<_> = le.iter().map(|&v| full.graph.label(v).clone()).collect();
        assert_eq!(
            labels,
            vec![
                VertexLabel::grid(1, 1, 1, 1, Part::Whole),
                VertexLabel::grid(1, 1, 1, 2, Part::Whole)
            ]
        );

        let empty = reduce(&GridTilingInstance::empty(1, 2).unwrap()).unwrap();
        let le = boundary(&empty, 1, 1, Side::Le).unwrap();
        let labels: Vec<_> = le.iter().map(|&v| empty.graph.label(v).clone()).collect();
        assert_eq!(
            labels,
            vec![
                VertexLabel::grid(1, 1, 1, 1, Part::LB),
                VertexLabel::grid(1, 1, 1, 2, Part::LB)
            ]
        );
        let to = boundary(&empty, 1, 1, Side::To).unwrap();
        assert_eq!(
            empty.graph.label(to[1]),
            &VertexLabel::grid(1, 1, 2, 2, Part::TR)
        );

        for side in [Side::Le, Side::Ri, Side::To, Side::Bo] {
            assert_eq!(boundary(&empty, 1, 1, side).unwrap().len(), 2);
        }
        assert!(matches!(
            boundary(&empty, 2, 1, Side::Le),
            Err(ReductionError::OutOfRange(_))
        ));
    }

    #[test]
    fn level_sets() {
        let out = reduce(&generate_random(3, 3, 0.5, 1).unwrap()).unwrap();
        for a in 1..=3 {
            for b in 1..=3 {
                let ha = level_set(&out, LevelKind::Horizontal, a).unwrap();
                let hb = level_set(&out, LevelKind::Horizontal, b).unwrap();
                if a != b {
                    assert!(ha.is_disjoint(&hb));
                }
                let vb = level_set(&out, LevelKind::Vertical, b).unwrap();
                let cell: BTreeSet<usize> = (0..out.graph.vertex_count())
                    .filter(|&v| matches!(out.graph.label(v), VertexLabel::Grid { i, j, .. } if *i == b && *j == a))
                    .collect();
                assert_eq!(ha.intersection(&vb).copied().collect::<BTreeSet<_>>(), cell);
            }
        }
        assert!(level_set(&out, LevelKind::Vertical, 4).is_err());

        let one = reduce(&generate_random(1, 3, 0.5, 1).unwrap()).unwrap();
        let v1 = level_set(&one, LevelKind::Vertical, 1).unwrap();
        let c = one
            .graph
            .vertex(&VertexLabel::terminal(Family::C, 1))
            .unwrap();
        let d = one
            .graph
            .vertex(&VertexLabel::terminal(Family::D, 1))
            .unwrap();
        let expected: BTreeSet<usize> = (0..one.graph.vertex_count())
            .filter(|&v| v != c && v != d)
            .collect();
        assert_eq!(v1, expected);
    }

    #[test]
    fn vertical_level_out_neighbourhood_is_horizontal_connectors() {
        let out = reduce(&generate_planted(2, 2, 1, 4).unwrap()).unwrap();
        let v1 = level_set(&out, LevelKind::Vertical, 1).unwrap();
        let expected: BTreeSet<usize> = (0..out.graph.vertex_count())
            .filter(|&v| matches!(out.graph.label(v), VertexLabel::HBlue { i: 1, .. }))
            .collect();
        assert_eq!(out.graph.out_neighbors(&v1), expected);
    }

    #[test]
    fn json_round_trip() {
        let out = reduce_degree(&reduce(&generate_planted(2, 3, 2, 5).unwrap()).unwrap()).unwrap();
        let back = ReductionOutput::from_json(&out.to_json()).unwrap();
        assert_eq!(back.graph, out.graph);
        assert_eq!(back.terminals, out.terminals);
        assert_eq!(back.provenance, out.provenance);
        assert!(back.degree_reduced);
        assert_eq!(back.to_json(), out.to_json());
    }
}

//! Path systems from tilings and tilings from path systems.
//!
//! `P_i` (pair `a_i → b_i`) is path `i − 1` of a [`PathSet`]; `Q_j`
//! (pair `c_j → d_j`) is path `k + j − 1`.

use std::collections::HashSet;

use thiserror::Error;

use crate::digraph::{EmbeddedDigraph, Family, Part, VertexLabel};
use crate::edp::PathSet;
use crate::gridtiling::{check_gt_solution, GTAssignment};
use crate::reduction::{in_level, LevelKind, ReductionError, ReductionOutput};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("assignment is not a solution of the source instance")]
    InvalidSolution,
    #[error("expected {expected} paths, got {got}")]
    WrongPathCount { expected: usize, got: usize },
    #[error("no shared whole vertex for cell ({i},{j})")]
    ExtractionFailed { i: u32, j: u32 },
    #[error("vertex {0} missing from graph")]
    MissingVertex(String),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

fn check_range(out: &ReductionOutput, i: u32, j: u32, l: u32) -> Result<(), MapError> {
    let (k, n) = (out.k, out.n);
    if (1..=k).contains(&i) && (1..=k).contains(&j) && (1..=n).contains(&l) {
        Ok(())
    } else {
        Err(MapError::OutOfRange(format!(
            "grid ({i},{j}) line {l} with k = {k}, N = {n}"
        )))
    }
}

/// Vertices of one grid position in traversal order: the whole vertex, or
/// `LB` then `TR` across its dotted edge.
fn through(
    out: &ReductionOutput,
    i: u32,
    j: u32,
    q: u32,
    l: u32,
    path: &mut Vec<usize>,
) -> Result<(), MapError> {
    let g = &out.graph;
    if let Some(v) = g.vertex(&VertexLabel::grid(i, j, q, l, Part::Whole)) {
        path.push(v);
        return Ok(());
    }
    for part in [Part::LB, Part::TR] {
        let label = VertexLabel::grid(i, j, q, l, part);
        path.push(
            g.vertex(&label)
                .ok_or_else(|| MapError::MissingVertex(label.to_string()))?,
        );
    }
    Ok(())
}

/// `w^{1,ℓ} ⇝ w^{N,ℓ}` inside grid `(i, j)`.
pub fn row_path(out: &ReductionOutput, i: u32, j: u32, l: u32) -> Result<Vec<usize>, MapError> {
    check_range(out, i, j, l)?;
    let mut path = Vec::new();
    for q in 1..=out.n {
        through(out, i, j, q, l, &mut path)?;
    }
    Ok(path)
}

/// `w^{ℓ,1} ⇝ w^{ℓ,N}` inside grid `(i, j)`.
pub fn column_path(out: &ReductionOutput, i: u32, j: u32, l: u32) -> Result<Vec<usize>, MapError> {
    check_range(out, i, j, l)?;
    let mut path = Vec::new();
    for row in 1..=out.n {
        through(out, i, j, l, row, &mut path)?;
    }
    Ok(path)
}

fn lookup(g: &EmbeddedDigraph, label: VertexLabel) -> Result<usize, MapError> {
    g.vertex(&label)
        .ok_or_else(|| MapError::MissingVertex(label.to_string()))
}

/// Route from a terminal to a leaf of its star, through tree nodes if the
/// star was replaced by a tree. Returned in edge direction.
fn star_route(
    g: &EmbeddedDigraph,
    family: Family,
    index: u32,
    leaf: usize,
) -> Result<Vec<usize>, MapError> {
    let root = lookup(g, VertexLabel::terminal(family, index))?;
    let forward = family.is_source();
    let own_node = |v: usize| matches!(g.label(v), VertexLabel::TreeNode { family: f, index: t, .. } if *f == family && *t == index);
    // Depth-first over the tree from the root; tree paths are unique.
    let mut stack = vec![vec![root]];
    while let Some(route) = stack.pop() {
        let v = *route.last().expect("routes are non-empty");
        let next: Vec<usize> = if forward {
            g.successors(v).collect()
        } else {
            g.predecessors(v).collect()
        };
        for w in next {
            if w == leaf {
                let mut done = route.clone();
                done.push(w);
                if !forward {
                    done.reverse();
                }
                return Ok(done);
            }
            if own_node(w) {
                let mut longer = route.clone();
                longer.push(w);
                stack.push(longer);
            }
        }
    }
    Err(MapError::MissingVertex(format!(
        "route from {}{index} to {}",
        family.letter(),
        g.label(leaf)
    )))
}

/// Appends `tail` to `path`, dropping the duplicated junction vertex.
fn splice(path: &mut Vec<usize>, tail: Vec<usize>) {
    let skip = usize::from(path.last().is_some() && path.last() == tail.first());
    path.extend(tail.into_iter().skip(skip));
}

/// Builds `R_1..R_k, T_1..T_k` from a tiling solution.
///
/// `R_i` climbs the column `α_{i,j}` of every grid in column `i`, moving
/// between grids along the vertical blue path from `v(α_{i,j})` to
/// `v(α_{i,j+1})`. `T_j` does the same horizontally with rows `β_{i,j}`.
pub fn gt_solution_to_paths(
    out: &ReductionOutput,
    asg: &GTAssignment,
) -> Result<PathSet, MapError> {
    if !check_gt_solution(&out.provenance, asg) {
        return Err(MapError::InvalidSolution);
    }
    let (k, g) = (out.k, &out.graph);
    let mut paths = Vec::with_capacity(2 * k as usize);
    for i in 1..=k {
        let alpha = |j: u32| asg.get(i, j).0;
        let mut path = Vec::new();
        for j in 1..=k {
            let column = column_path(out, i, j, alpha(j))?;
            if j == 1 {
                path = star_route(g, Family::A, i, column[0])?;
            }
            splice(&mut path, column);
            if j < k {
                for l in alpha(j)..=alpha(j + 1) {
                    path.push(lookup(g, VertexLabel::VBlue { i, j, l })?);
                }
            }
        }
        let last = *path.last().expect("column paths are non-empty");
        splice(&mut path, star_route(g, Family::B, i, last)?);
        paths.push(path);
    }
    for j in 1..=k {
        let beta = |i: u32| asg.get(i, j).1;
        let mut path = Vec::new();
        for i in 1..=k {
            let row = row_path(out, i, j, beta(i))?;
            if i == 1 {
                path = star_route(g, Family::C, j, row[0])?;
            }
            splice(&mut path, row);
            if i < k {
                for l in beta(i)..=beta(i + 1) {
                    path.push(lookup(g, VertexLabel::HBlue { i, j, l })?);
                }
            }
        }
        let last = *path.last().expect("row paths are non-empty");
        splice(&mut path, star_route(g, Family::D, j, last)?);
        paths.push(path);
    }
    Ok(PathSet::new(paths))
}

/// Reads a tiling off a path system: for each cell, the first whole vertex
/// of grid `(i, j)` along `P_i` that `Q_j` also visits.
pub fn paths_to_gt_solution(out: &ReductionOutput, ps: &PathSet) -> Result<GTAssignment, MapError> {
    let k = out.k as usize;
    if ps.paths.len() != 2 * k {
        return Err(MapError::WrongPathCount {
            expected: 2 * k,
            got: ps.paths.len(),
        });
    }
    let g = &out.graph;
    let mut choice = Vec::with_capacity(k * k);
    for j in 1..=out.k {
        let q_set: HashSet<usize> = ps.paths[k + j as usize - 1].iter().copied().collect();
        for i in 1..=out.k {
            let shared = ps.paths[i as usize - 1]
                .iter()
                .find_map(|&v| match *g.label(v) {
                    VertexLabel::Grid {
                        i: gi,
                        j: gj,
                        q,
                        l,
                        part: Part::Whole,
                    } if gi == i && gj == j && q_set.contains(&v) => Some((q, l)),
                    _ => None,
                });
            choice.push(((i, j), shared.ok_or(MapError::ExtractionFailed { i, j })?));
        }
    }
    Ok(
        GTAssignment::from_map(out.k, &choice.into_iter().collect())
            .expect("every cell was filled"),
    )
}

/// Every vertex of `P_i` lies in `Vertical(i)` and every vertex of `Q_j` in
/// `Horizontal(j)`.
pub fn check_level_confinement(out: &ReductionOutput, ps: &PathSet) -> bool {
    let k = out.k as usize;
    ps.paths.len() == 2 * k
        && ps.paths.iter().enumerate().all(|(idx, path)| {
            let (kind, index) = if idx < k {
                (LevelKind::Vertical, idx + 1)
            } else {
                (LevelKind::Horizontal, idx - k + 1)
            };
            path.iter().all(|&v| {
                v < out.graph.vertex_count() && in_level(out.graph.label(v), kind, index as u32)
            })
        })
}

//! Grid Tiling (the `≤` variant): instances, solution checking, generators
//! and an exhaustive backtracking solver.
//!
//! Cells are indexed by `(x, y)` with `1 ≤ x, y ≤ k`; `x` grows to the right
//! and `y` grows upwards. A solution picks one pair `(a, b)` per cell such
//! that second coordinates are non-decreasing along every row (growing `x`)
//! and first coordinates are non-decreasing along every column (growing `y`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A pair `(a, b) ∈ [N]×[N]`.
pub type Pair = (u32, u32);

/// A cell index `(x, y) ∈ [k]×[k]`.
pub type Cell = (u32, u32);

/// Default node-expansion cap for [`solve_gt_brute_force`].
pub const DEFAULT_GT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridTilingError {
    #[error("invalid parameters: k = {k}, N = {n} (need k >= 1, N >= 2)")]
    InvalidParameters { k: u32, n: u32 },
    #[error("density {0} outside [0, 1]")]
    InvalidDensity(f64),
    #[error("instance is invalid: {0:?}")]
    InvalidInstance(Vec<Violation>),
    #[error("brute-force budget of {0} node expansions exceeded")]
    BudgetExceeded(u64),
    #[error("malformed instance JSON: {0}")]
    Format(String),
}

/// A single reason an instance fails validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    ZeroK,
    SmallN(u32),
    MissingCell(Cell),
    CellOutOfRange(Cell),
    PairOutOfRange { cell: Cell, pair: Pair },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroK => write!(f, "k must be at least 1"),
            Violation::SmallN(n) => write!(f, "N = {n} but N must be at least 2"),
            Violation::MissingCell((x, y)) => write!(f, "cell ({x},{y}) has no set"),
            Violation::CellOutOfRange((x, y)) => {
                write!(f, "cell ({x},{y}) is outside the k x k grid")
            }
            Violation::PairOutOfRange { cell, pair } => write!(
                f,
                "pair ({},{}) in cell ({},{}) is outside [N]x[N]",
                pair.0, pair.1, cell.0, cell.1
            ),
        }
    }
}

/// `(k, N, 𝒮)`: one set `S_{x,y} ⊆ [N]×[N]` per cell.
///
/// The set map is kept as parsed, so a malformed instance can be represented
/// and reported by [`validate_instance`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceJson", into = "InstanceJson")]
pub struct GridTilingInstance {
    pub k: u32,
    pub n: u32,
    pub sets: BTreeMap<Cell, BTreeSet<Pair>>,
}

impl GridTilingInstance {
    /// Instance with every cell present and empty.
    pub fn empty(k: u32, n: u32) -> Result<Self, GridTilingError> {
        check_params(k, n)?;
        let sets = cells(k).map(|c| (c, BTreeSet::new())).collect();
        Ok(Self { k, n, sets })
    }

    /// Instance with every cell equal to `[N]×[N]`.
    pub fn full(k: u32, n: u32) -> Result<Self, GridTilingError> {
        let mut inst = Self::empty(k, n)?;
        let all: BTreeSet<Pair> = all_pairs(n).collect();
        for set in inst.sets.values_mut() {
            *set = all.clone();
        }
        Ok(inst)
    }

    /// Builds an instance from explicit per-cell sets and validates it.
    pub fn from_sets(
        k: u32,
        n: u32,
        sets: impl IntoIterator<Item = (Cell, Vec<Pair>)>,
    ) -> Result<Self, GridTilingError> {
        let inst = Self {
            k,
            n,
            sets: sets
                .into_iter()
                .map(|(c, ps)| (c, ps.into_iter().collect()))
                .collect(),
        };
        inst.ensure_valid()?;
        Ok(inst)
    }

    /// The set `S_{x,y}`; empty for cells that are absent.
    pub fn set(&self, x: u32, y: u32) -> &BTreeSet<Pair> {
        static EMPTY: BTreeSet<Pair> = BTreeSet::new();
        self.sets.get(&(x, y)).unwrap_or(&EMPTY)
    }

    pub fn contains(&self, x: u32, y: u32, pair: Pair) -> bool {
        self.set(x, y).contains(&pair)
    }

    /// `Σ_{x,y} (N² − |S_{x,y}|)`: the number of grid vertices the reduction splits.
    pub fn missing_pairs(&self) -> u64 {
        let n2 = u64::from(self.n) * u64::from(self.n);
        cells(self.k)
            .map(|(x, y)| n2 - self.set(x, y).len() as u64)
            .sum()
    }

    /// Set sizes in row-major order (x fast).
    pub fn set_sizes(&self) -> Vec<usize> {
        cells(self.k).map(|(x, y)| self.set(x, y).len()).collect()
    }

    pub fn ensure_valid(&self) -> Result<(), GridTilingError> {
        let violations = validate_instance(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(GridTilingError::InvalidInstance(violations))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&InstanceJson::from(self))
            .expect("instance JSON is always serializable")
    }

    /// Parses the JSON instance format. The result is not validated.
    pub fn from_json(text: &str) -> Result<Self, GridTilingError> {
        let raw: InstanceJson =
            serde_json::from_str(text).map_err(|e| GridTilingError::Format(e.to_string()))?;
        raw.try_into()
    }
}

/// Wire form: `{"k":int,"N":int,"sets":{"x,y":[[a,b],...]}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceJson {
    k: u32,
    #[serde(rename = "N")]
    n: u32,
    sets: BTreeMap<String, Vec<[u32; 2]>>,
}

impl From<GridTilingInstance> for InstanceJson {
    fn from(inst: GridTilingInstance) -> Self {
        InstanceJson::from(&inst)
    }
}

impl From<&GridTilingInstance> for InstanceJson {
    fn from(inst: &GridTilingInstance) -> Self {
        let sets = inst
            .sets
            .iter()
            .map(|(&(x, y), s)| (format!("{x},{y}"), s.iter().map(|&(a, b)| [a, b]).collect()))
            .collect();
        InstanceJson {
            k: inst.k,
            n: inst.n,
            sets,
        }
    }
}

impl TryFrom<InstanceJson> for GridTilingInstance {
    type Error = GridTilingError;

    fn try_from(raw: InstanceJson) -> Result<Self, Self::Error> {
        let mut sets = BTreeMap::new();
        for (key, pairs) in raw.sets {
            let cell = parse_cell_key(&key)
                .ok_or_else(|| GridTilingError::Format(format!("bad cell key {key:?}")))?;
            sets.insert(cell, pairs.into_iter().map(|[a, b]| (a, b)).collect());
        }
        Ok(GridTilingInstance {
            k: raw.k,
            n: raw.n,
            sets,
        })
    }
}

fn parse_cell_key(key: &str) -> Option<Cell> {
    let (x, y) = key.split_once(',')?;
    Some((x.trim().parse().ok()?, y.trim().parse().ok()?))
}

/// One chosen pair `γ_{x,y}` per cell, stored row-major (x fast).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GTAssignment {
    k: u32,
    choice: Vec<Pair>,
}

impl GTAssignment {
    /// Assignment built from a function of the cell.
    pub fn from_fn(k: u32, mut f: impl FnMut(u32, u32) -> Pair) -> Self {
        let choice = cells(k).map(|(x, y)| f(x, y)).collect();
        Self { k, choice }
    }

    /// Builds an assignment from a cell map; `None` unless every cell of
    /// `[k]×[k]` is present.
    pub fn from_map(k: u32, map: &BTreeMap<Cell, Pair>) -> Option<Self> {
        let choice = cells(k)
            .map(|c| map.get(&c).copied())
            .collect::<Option<Vec<_>>>()?;
        Some(Self { k, choice })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn get(&self, x: u32, y: u32) -> Pair {
        self.choice[cell_index(self.k, x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, pair: Pair) {
        let idx = cell_index(self.k, x, y);
        self.choice[idx] = pair;
    }

    pub fn iter(&self) -> impl Iterator<Item = (Cell, Pair)> + '_ {
        cells(self.k).zip(self.choice.iter().copied())
    }
}

fn cell_index(k: u32, x: u32, y: u32) -> usize {
    assert!(
        (1..=k).contains(&x) && (1..=k).contains(&y),
        "cell ({x},{y}) outside [{k}]x[{k}]"
    );
    ((y - 1) * k + (x - 1)) as usize
}

/// Cells of `[k]×[k]` in row-major order (x fast).
pub fn cells(k: u32) -> impl Iterator<Item = Cell> + Clone {
    (1..=k).flat_map(move |y| (1..=k).map(move |x| (x, y)))
}

/// All pairs of `[N]×[N]` in lexicographic order.
pub fn all_pairs(n: u32) -> impl Iterator<Item = Pair> + Clone {
    (1..=n).flat_map(move |a| (1..=n).map(move |b| (a, b)))
}

fn check_params(k: u32, n: u32) -> Result<(), GridTilingError> {
    if k < 1 || n < 2 {
        Err(GridTilingError::InvalidParameters { k, n })
    } else {
        Ok(())
    }
}

/// Lists every invariant violation; an empty list means the instance is well formed.
pub fn validate_instance(inst: &GridTilingInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    if inst.k < 1 {
        out.push(Violation::ZeroK);
    }
    if inst.n < 2 {
        out.push(Violation::SmallN(inst.n));
    }
    for c in cells(inst.k) {
        if !inst.sets.contains_key(&c) {
            out.push(Violation::MissingCell(c));
        }
    }
    let range = 1..=inst.k;
    let coord = 1..=inst.n;
    for (&cell, set) in &inst.sets {
        if !range.contains(&cell.0) || !range.contains(&cell.1) {
            out.push(Violation::CellOutOfRange(cell));
        }
        for &pair in set {
            if !coord.contains(&pair.0) || !coord.contains(&pair.1) {
                out.push(Violation::PairOutOfRange { cell, pair });
            }
        }
    }
    out
}

/// Membership plus row and column monotonicity.
pub fn check_gt_solution(inst: &GridTilingInstance, asg: &GTAssignment) -> bool {
    if asg.k != inst.k {
        return false;
    }
    let k = inst.k;
    cells(k).all(|(x, y)| {
        let (a, b) = asg.get(x, y);
        let member = inst.contains(x, y, (a, b));
        let row_ok = x == k || b <= asg.get(x + 1, y).1;
        let col_ok = y == k || a <= asg.get(x, y + 1).0;
        member && row_ok && col_ok
    })
}

/// Exhaustive backtracking over cells in row-major order, pruning on the
/// left and lower neighbours as soon as they are fixed.
///
/// Returns `Ok(None)` when the instance has no solution.
pub fn solve_gt_brute_force(
    inst: &GridTilingInstance,
    budget: u64,
) -> Result<Option<GTAssignment>, GridTilingError> {
    inst.ensure_valid()?;
    let k = inst.k;
    let order: Vec<Cell> = cells(k).collect();
    let candidates: Vec<Vec<Pair>> = order
        .iter()
        .map(|&(x, y)| inst.set(x, y).iter().copied().collect())
        .collect();
    let mut search = GtSearch {
        k: k as usize,
        candidates: &candidates,
        chosen: Vec::with_capacity(order.len()),
        expansions: 0,
        budget,
    };
    if search.extend()? {
        Ok(Some(GTAssignment {
            k,
            choice: search.chosen,
        }))
    } else {
        Ok(None)
    }
}

struct GtSearch<'a> {
    k: usize,
    candidates: &'a [Vec<Pair>],
    chosen: Vec<Pair>,
    expansions: u64,
    budget: u64,
}

impl GtSearch<'_> {
    fn extend(&mut self) -> Result<bool, GridTilingError> {
        let idx = self.chosen.len();
        if idx == self.candidates.len() {
            return Ok(true);
        }
        let (x, y) = (idx % self.k, idx / self.k);
        let left = (x > 0).then(|| self.chosen[idx - 1]);
        let below = (y > 0).then(|| self.chosen[idx - self.k]);
        for &(a, b) in &self.candidates[idx] {
            self.expansions += 1;
            if self.expansions > self.budget {
                return Err(GridTilingError::BudgetExceeded(self.budget));
            }
            if left.is_some_and(|(_, lb)| lb > b) || below.is_some_and(|(ba, _)| ba > a) {
                continue;
            }
            self.chosen.push((a, b));
            if self.extend()? {
                return Ok(true);
            }
            self.chosen.pop();
        }
        Ok(false)
    }
}

/// The planted monotone assignment: cell `(x, y)` gets `(min(y, N), min(x, N))`.
pub fn planted_assignment(k: u32, n: u32) -> GTAssignment {
    GTAssignment::from_fn(k, |x, y| (y.min(n), x.min(n)))
}

/// Yes-instance holding [`planted_assignment`] plus `noise` uniformly drawn
/// pairs per cell (duplicates collapse, so `|S_{x,y}| ≤ noise + 1`).
pub fn generate_planted(
    k: u32,
    n: u32,
    noise: u32,
    seed: u64,
) -> Result<GridTilingInstance, GridTilingError> {
    let mut inst = GridTilingInstance::empty(k, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted = planted_assignment(k, n);
    for ((x, y), pair) in planted.iter() {
        let set = inst
            .sets
            .get_mut(&(x, y))
            .expect("empty() creates every cell");
        set.insert(pair);
        for _ in 0..noise {
            set.insert((rng.gen_range(1..=n), rng.gen_range(1..=n)));
        }
    }
    Ok(inst)
}

/// Each pair joins each set independently with probability `density`.
pub fn generate_random(
    k: u32,
    n: u32,
    density: f64,
    seed: u64,
) -> Result<GridTilingInstance, GridTilingError> {
    if !(0.0..=1.0).contains(&density) {
        return Err(GridTilingError::InvalidDensity(density));
    }
    let mut inst = GridTilingInstance::empty(k, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for c in cells(k) {
        let set = inst.sets.get_mut(&c).expect("empty() creates every cell");
        for pair in all_pairs(n) {
            if rng.gen_bool(density) {
                set.insert(pair);
            }
        }
    }
    Ok(inst)
}

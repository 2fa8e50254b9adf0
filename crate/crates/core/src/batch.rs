//! End-to-end verification of single instances and batches of them.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::edp::{
    check_edp_solution, solve_edp_dag_with, EdpError, Network, Strategy, DEFAULT_EDP_BUDGET,
};
use crate::gridtiling::{
    check_gt_solution, generate_planted, generate_random, solve_gt_brute_force, GridTilingError,
    GridTilingInstance, DEFAULT_GT_BUDGET,
};
use crate::mappers::{check_level_confinement, gt_solution_to_paths, paths_to_gt_solution};
use crate::reduction::{reduce, reduce_degree, ReductionOutput, SizeCounts, StructureReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Also verify the degree-reduced graph.
    pub degree2: bool,
    pub gt_budget: u64,
    pub edp_budget: u64,
    pub strategy: Strategy,
    pub timings: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            degree2: false,
            gt_budget: DEFAULT_GT_BUDGET,
            edp_budget: DEFAULT_EDP_BUDGET,
            strategy: Strategy::Pebble,
            timings: false,
        }
    }
}

/// Checks on one reduced graph. `None` means the check did not apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRun {
    pub structure: StructureReport,
    pub structure_ok: bool,
    pub edp_feasible: Option<bool>,
    /// Planted or oracle solution mapped forward: valid and level-confined.
    pub forward_ok: Option<bool>,
    /// Solver paths stay in their level sets.
    pub solver_confined: Option<bool>,
    /// Extraction from solver paths yields a valid tiling.
    pub extraction_ok: Option<bool>,
    pub round_trip_ok: Option<bool>,
    pub edp_ms: Option<f64>,
}

impl GraphRun {
    fn passed(&self) -> bool {
        let opt = |b: Option<bool>| b.unwrap_or(true);
        self.structure_ok
            && opt(self.forward_ok)
            && opt(self.solver_confined)
            && opt(self.extraction_ok)
            && opt(self.round_trip_ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    CheckFailed,
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub k: u32,
    #[serde(rename = "N")]
    pub n: u32,
    pub set_sizes: Vec<usize>,
    pub predicted: SizeCounts,
    pub actual: SizeCounts,
    pub gt_feasible: Option<bool>,
    pub plain: Option<GraphRun>,
    pub degree2: Option<GraphRun>,
    pub answers_agree: bool,
    pub verdict: Verdict,
    pub error: Option<String>,
    pub gt_ms: Option<f64>,
    pub reduce_ms: Option<f64>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn millis(start: Instant, on: bool) -> Option<f64> {
    on.then(|| start.elapsed().as_secs_f64() * 1e3)
}

enum Stop {
    Budget(String),
    Failure(String),
}

impl From<EdpError> for Stop {
    fn from(e: EdpError) -> Self {
        match e {
            EdpError::BudgetExceeded(_) => Stop::Budget(e.to_string()),
            other => Stop::Failure(other.to_string()),
        }
    }
}

fn check_graph(
    out: &ReductionOutput,
    gt_solution: Option<&crate::gridtiling::GTAssignment>,
    opts: &RunOptions,
) -> Result<GraphRun, Stop> {
    let structure = StructureReport::of(out);
    let structure_ok = structure.passes(out.k, out.degree_reduced);
    let pairs = out
        .terminal_indices()
        .map_err(|e| Stop::Failure(e.to_string()))?;
    let net = Network::from(&out.graph);

    let forward_ok = gt_solution.map(|asg| match gt_solution_to_paths(out, asg) {
        Ok(ps) => check_edp_solution(&net, &pairs, &ps) && check_level_confinement(out, &ps),
        Err(_) => false,
    });
    let round_trip_ok = gt_solution.map(|asg| {
        gt_solution_to_paths(out, asg)
            .and_then(|ps| paths_to_gt_solution(out, &ps))
            .is_ok_and(|back| &back == asg)
    });

    let start = Instant::now();
    let solved = solve_edp_dag_with(&net, &pairs, opts.edp_budget, opts.strategy)?;
    let edp_ms = millis(start, opts.timings);
    let (solver_confined, extraction_ok) = match &solved {
        Some(ps) => {
            let valid = check_edp_solution(&net, &pairs, ps);
            let extracted = paths_to_gt_solution(out, ps)
                .is_ok_and(|asg| check_gt_solution(&out.provenance, &asg));
            (
                Some(valid && check_level_confinement(out, ps)),
                Some(valid && extracted),
            )
        }
        None => (None, None),
    };
    Ok(GraphRun {
        structure,
        structure_ok,
        edp_feasible: Some(solved.is_some()),
        forward_ok,
        solver_confined,
        extraction_ok,
        round_trip_ok,
        edp_ms,
    })
}

/// Reduces `inst`, solves both sides exactly, and runs every mapping check.
pub fn roundtrip_instance(
    name: &str,
    inst: &GridTilingInstance,
    opts: &RunOptions,
) -> Result<RunReport, GridTilingError> {
    inst.ensure_valid()?;
    let start = Instant::now();
    let out = reduce(inst).expect("valid instances always reduce");
    let reduce_ms = millis(start, opts.timings);
    let mut report = RunReport {
        name: name.to_owned(),
        k: inst.k,
        n: inst.n,
        set_sizes: inst.set_sizes(),
        predicted: out.counts,
        actual: out.actual_counts(),
        gt_feasible: None,
        plain: None,
        degree2: None,
        answers_agree: false,
        verdict: Verdict::CheckFailed,
        error: None,
        gt_ms: None,
        reduce_ms,
    };

    let start = Instant::now();
    let gt = match solve_gt_brute_force(inst, opts.gt_budget) {
        Ok(gt) => gt,
        Err(GridTilingError::BudgetExceeded(_)) => {
            report.verdict = Verdict::BudgetExceeded;
            report.error = Some(format!(
                "tiling search exceeded {} expansions",
                opts.gt_budget
            ));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.gt_ms = millis(start, opts.timings);
    report.gt_feasible = Some(gt.is_some());

    let run = |out: &ReductionOutput| check_graph(out, gt.as_ref(), opts);
    let result = run(&out).and_then(|plain| {
        let degree2 = if opts.degree2 {
            let reduced = reduce_degree(&out).map_err(|e| Stop::Failure(e.to_string()))?;
            Some(run(&reduced)?)
        } else {
            None
        };
        Ok((plain, degree2))
    });
    match result {
        Ok((plain, degree2)) => {
            let runs: Vec<&GraphRun> = [Some(&plain), degree2.as_ref()]
                .into_iter()
                .flatten()
                .collect();
            report.answers_agree = runs.iter().all(|r| r.edp_feasible == report.gt_feasible);
            let all_pass = runs.iter().all(|r| r.passed());
            report.verdict = if report.answers_agree && all_pass && out.counts_match() {
                Verdict::Pass
            } else {
                Verdict::CheckFailed
            };
            report.plain = Some(plain);
            report.degree2 = degree2;
        }
        Err(Stop::Budget(msg)) => {
            report.verdict = Verdict::BudgetExceeded;
            report.error = Some(msg);
        }
        Err(Stop::Failure(msg)) => {
            report.error = Some(msg);
        }
    }
    Ok(report)
}

/// One named instance of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub name: String,
    pub instance: GridTilingInstance,
}

/// Random instances over the grid `ks × ns × densities × seeds`, followed by
/// planted instances for every `k`, `N`, and seed.
pub fn sweep_jobs(
    ks: &[u32],
    ns: &[u32],
    densities: &[f64],
    seeds: &[u64],
) -> Result<Vec<Job>, GridTilingError> {
    let mut jobs = Vec::new();
    for &k in ks {
        for &n in ns {
            for &d in densities {
                for &seed in seeds {
                    jobs.push(Job {
                        name: format!("random k={k} N={n} density={d} seed={seed}"),
                        instance: generate_random(k, n, d, seed)?,
                    });
                }
            }
            for &seed in seeds {
                let noise = (seed % 3) as u32;
                jobs.push(Job {
                    name: format!("planted k={k} N={n} noise={noise} seed={seed}"),
                    instance: generate_planted(k, n, noise, seed)?,
                });
            }
        }
    }
    Ok(jobs)
}

fn run_job(job: &Job, opts: &RunOptions) -> RunReport {
    roundtrip_instance(&job.name, &job.instance, opts).unwrap_or_else(|e| RunReport {
        name: job.name.clone(),
        k: job.instance.k,
        n: job.instance.n,
        set_sizes: Vec::new(),
        predicted: SizeCounts {
            vertices: 0,
            edges: 0,
        },
        actual: SizeCounts {
            vertices: 0,
            edges: 0,
        },
        gt_feasible: None,
        plain: None,
        degree2: None,
        answers_agree: false,
        verdict: Verdict::CheckFailed,
        error: Some(e.to_string()),
        gt_ms: None,
        reduce_ms: None,
    })
}

/// Runs every job on the calling thread; reports come back in job order.
pub fn run_batch_sequential(jobs: &[Job], opts: &RunOptions) -> Vec<RunReport> {
    jobs.iter().map(|job| run_job(job, opts)).collect()
}

/// Runs jobs on the rayon pool when the `parallel` feature is enabled.
/// Reports come back in job order either way.
pub fn run_batch(jobs: &[Job], opts: &RunOptions) -> Vec<RunReport> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter().map(|job| run_job(job, opts)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_batch_sequential(jobs, opts)
    }
}

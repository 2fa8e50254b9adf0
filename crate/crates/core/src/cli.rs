//! Command-line driver. Exit codes: 0 all checks pass, 1 a check failed,
//! 2 usage or parse error, 3 a search budget was exceeded.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::batch::{
    roundtrip_instance, run_batch, run_batch_sequential, sweep_jobs, RunOptions, RunReport, Verdict,
};
use crate::digraph::EmbeddedDigraph;
use crate::edp::{Strategy, DEFAULT_EDP_BUDGET};
use crate::gridtiling::{
    generate_planted, generate_random, solve_gt_brute_force, GridTilingInstance, DEFAULT_GT_BUDGET,
};
use crate::reduction::{reduce, reduce_degree, ReductionOutput, StructureReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Environment variable overriding the search expansion caps.
pub const BUDGET_VAR: &str = "DPATH_BUDGET";

#[derive(Debug, Parser)]
#[command(
    name = "dpath",
    version,
    about = "Grid Tiling to edge-disjoint paths: build, solve, verify"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Planted,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Pebble,
    Sequential,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Pebble => Strategy::Pebble,
            StrategyArg::Sequential => Strategy::Sequential,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a Grid Tiling instance.
    Gen {
        #[arg(short)]
        k: u32,
        #[arg(short = 'n', long = "N")]
        n: u32,
        #[arg(long, value_enum, default_value = "planted")]
        mode: Mode,
        /// Inclusion probability per pair (random mode).
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        /// Extra pairs drawn per cell (planted mode).
        #[arg(long, default_value_t = 0)]
        noise: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Build the edge-disjoint-paths instance for a tiling instance.
    Reduce {
        instance: PathBuf,
        /// Replace terminal stars by binary trees.
        #[arg(long)]
        degree2: bool,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Solve both problems, map solutions both ways, report agreement.
    Roundtrip {
        instance: PathBuf,
        #[arg(long)]
        degree2: bool,
        #[arg(long, value_enum, default_value = "pebble")]
        strategy: StrategyArg,
        #[arg(long)]
        timings: bool,
    },
    /// Render a reduction output or bare graph file.
    Export {
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "dot")]
        format: Format,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Round-trip a grid of random and planted instances.
    Sweep {
        #[arg(short, long = "k", value_delimiter = ',', default_values_t = [1u32, 2])]
        k: Vec<u32>,
        #[arg(short = 'n', long = "N", value_delimiter = ',', default_values_t = [2u32, 3])]
        n: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.3, 0.6, 1.0])]
        density: Vec<f64>,
        /// Seeds 1..=SEEDS for each parameter combination.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        degree2: bool,
        /// Run on the calling thread only.
        #[arg(long)]
        sequential: bool,
        #[arg(long, value_enum, default_value = "pebble")]
        strategy: StrategyArg,
        #[arg(long)]
        timings: bool,
    },
}

/// Failure that maps to an exit code, with a message for stderr.
struct Exit(i32, String);

fn usage(msg: impl ToString) -> Exit {
    Exit(EXIT_USAGE, msg.to_string())
}

fn read(path: &Path) -> Result<String, Exit> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Exit> {
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<GridTilingInstance, Exit> {
    let inst = GridTilingInstance::from_json(&read(path)?)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    inst.ensure_valid()
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(inst)
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports are always serializable")
}

fn budget_override(var: Option<String>) -> Result<Option<u64>, Exit> {
    var.map(|v| {
        v.trim()
            .parse::<u64>()
            .map_err(|_| usage(format!("{BUDGET_VAR} must be an integer, got {v:?}")))
    })
    .transpose()
}

fn options(degree2: bool, strategy: Strategy, timings: bool, budget: Option<u64>) -> RunOptions {
    RunOptions {
        degree2,
        strategy,
        timings,
        gt_budget: budget.unwrap_or(DEFAULT_GT_BUDGET),
        edp_budget: budget.unwrap_or(DEFAULT_EDP_BUDGET),
    }
}

fn exit_for(reports: &[RunReport]) -> i32 {
    if reports.iter().any(|r| r.verdict == Verdict::CheckFailed) {
        EXIT_CHECK
    } else if reports.iter().any(|r| r.verdict == Verdict::BudgetExceeded) {
        EXIT_BUDGET
    } else {
        EXIT_OK
    }
}

fn summary(r: &RunReport) -> String {
    let show = |b: Option<bool>| b.map_or("-".to_owned(), |b| b.to_string());
    let edp = r.plain.as_ref().and_then(|p| p.edp_feasible);
    format!(
        "{}: |V|={} |E|={} tiling={} paths={} verdict={:?}{}",
        r.name,
        r.actual.vertices,
        r.actual.edges,
        show(r.gt_feasible),
        show(edp),
        r.verdict,
        r.error
            .as_ref()
            .map_or(String::new(), |e| format!(" ({e})")),
    )
}

#[derive(Serialize)]
struct ReduceReport {
    k: u32,
    #[serde(rename = "N")]
    n: u32,
    degree_reduced: bool,
    terminal_pairs: usize,
    structure: StructureReport,
    passes: bool,
}

fn dispatch(
    cli: Cli,
    env_budget: Option<String>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Exit> {
    let budget = budget_override(env_budget)?;
    let out = |stdout: &mut dyn Write, text: &str| writeln!(stdout, "{text}").map_err(usage);
    match cli.command {
        Command::Gen {
            k,
            n,
            mode,
            density,
            noise,
            seed,
            out: path,
        } => {
            let inst = match mode {
                Mode::Planted => generate_planted(k, n, noise, seed),
                Mode::Random => generate_random(k, n, density, seed),
            }
            .map_err(usage)?;
            write_file(&path, &inst.to_json())?;
            let _ = writeln!(stderr, "wrote k={k} N={n} instance to {}", path.display());
            Ok(EXIT_OK)
        }
        Command::Reduce {
            instance,
            degree2,
            out: path,
        } => {
            let inst = load_instance(&instance)?;
            let mut red = reduce(&inst).map_err(usage)?;
            if degree2 {
                red = reduce_degree(&red).map_err(usage)?;
            }
            write_file(&path, &red.to_json())?;
            let structure = StructureReport::of(&red);
            let passes = structure.passes(red.k, degree2);
            let report = ReduceReport {
                k: red.k,
                n: red.n,
                degree_reduced: degree2,
                terminal_pairs: red.terminals.len(),
                passes,
                structure,
            };
            out(stdout, &json(&report))?;
            let _ = writeln!(
                stderr,
                "|V|={} |E|={} split edges={} max degree in/out={}/{} checks {}",
                report.structure.actual.vertices,
                report.structure.actual.edges,
                report.structure.split_edges,
                report.structure.max_in_degree,
                report.structure.max_out_degree,
                if passes { "pass" } else { "FAIL" }
            );
            Ok(if passes { EXIT_OK } else { EXIT_CHECK })
        }
        Command::Roundtrip {
            instance,
            degree2,
            strategy,
            timings,
        } => {
            let inst = load_instance(&instance)?;
            let opts = options(degree2, strategy.into(), timings, budget);
            let name = instance.display().to_string();
            let report = roundtrip_instance(&name, &inst, &opts).map_err(usage)?;
            out(stdout, &json(&report))?;
            let _ = writeln!(stderr, "{}", summary(&report));
            Ok(exit_for(std::slice::from_ref(&report)))
        }
        Command::Export {
            graph,
            format,
            out: path,
        } => {
            let text = read(&graph)?;
            let g = match ReductionOutput::from_json(&text) {
                Ok(red) => red.graph,
                Err(_) => EmbeddedDigraph::from_json(&text).map_err(|e| {
                    usage(format!(
                        "{}: neither a reduction nor a graph: {e}",
                        graph.display()
                    ))
                })?,
            };
            let rendered = match format {
                Format::Dot => g.to_dot(),
                // Re-exporting a reduction keeps terminals and provenance.
                Format::Json => match ReductionOutput::from_json(&text) {
                    Ok(red) => red.to_json(),
                    Err(_) => g.to_json(),
                },
            };
            match path {
                Some(p) => write_file(&p, &rendered)?,
                None => write!(stdout, "{rendered}").map_err(usage)?,
            }
            Ok(EXIT_OK)
        }
        Command::Sweep {
            k,
            n,
            density,
            seeds,
            degree2,
            sequential,
            strategy,
            timings,
        } => {
            let seeds: Vec<u64> = (1..=seeds).collect();
            let jobs = sweep_jobs(&k, &n, &density, &seeds).map_err(usage)?;
            let opts = options(degree2, strategy.into(), timings, budget);
            let reports = if sequential {
                run_batch_sequential(&jobs, &opts)
            } else {
                run_batch(&jobs, &opts)
            };
            out(stdout, &json(&reports))?;
            for r in reports.iter().filter(|r| !r.passed()) {
                let _ = writeln!(stderr, "{}", summary(r));
            }
            let passed = reports.iter().filter(|r| r.passed()).count();
            let _ = writeln!(stderr, "{passed}/{} instances pass", reports.len());
            Ok(exit_for(&reports))
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the
/// exit code. `env_budget` is the raw value of [`BUDGET_VAR`], if set.
pub fn run<I, T>(
    args: I,
    env_budget: Option<String>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(cli, env_budget, stdout, stderr) {
        Ok(code) => code,
        Err(Exit(code, msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            code
        }
    }
}

/// Oracle answer for an instance file, used by tests of generated files.
pub fn instance_feasible(path: &Path) -> Option<bool> {
    let inst = load_instance(path).ok()?;
    solve_gt_brute_force(&inst, DEFAULT_GT_BUDGET)
        .ok()
        .map(|s| s.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("dpath").chain(args.iter().copied()),
            None,
            &mut o,
            &mut e,
        );
        (
            code,
            String::from_utf8(o).unwrap(),
            String::from_utf8(e).unwrap(),
        )
    }

    #[test]
    fn unknown_subcommand_is_usage() {
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    }

    #[test]
    fn help_is_ok() {
        assert_eq!(call(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn bad_budget_var() {
        assert!(budget_override(Some("lots".into())).is_err());
        assert_eq!(
            budget_override(Some(" 12 ".into())).ok().flatten(),
            Some(12)
        );
    }

    #[test]
    fn missing_file_is_usage() {
        assert_eq!(
            call(&["roundtrip", "/nonexistent/instance.json"]).0,
            EXIT_USAGE
        );
    }
}

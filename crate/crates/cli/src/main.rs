//! Command-line front end: `solve`, `bound`, `ssvd`, `export-milp`, `bench`.
//!
//! Every command prints one JSON document on stdout. Exit status is 0 on
//! success, 2 for invalid input or usage, 3 when a node or time limit cut
//! the search short, and 1 for anything else.

mod input;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sparse_spectra::bnb::{solve_exact, BnbOptions};
use sparse_spectra::bounds::{saddle_upper_bound, SaddleOptions, DEFAULT_SADDLE_ITERS};
use sparse_spectra::heuristics::{greedy, greedy_local_search, s_swap_local_search};
use sparse_spectra::milp::{
    build_milp, build_milp_fixed_j, check_point, read_solution, witness_fixed_j,
    witness_from_support, write_lp, Assignment, MilpModel, PointCheck, DEFAULT_EPS,
};
use sparse_spectra::oracle::{brute_force, brute_force_ssvd, DEFAULT_SIZE_GUARD};
use sparse_spectra::problem::{relative_gap, SolveReport, SpcaInstance};
use sparse_spectra::spectral::GramFactor;
use sparse_spectra::ssvd::{
    greedy_ssvd, local_search_ssvd, truncation_ssvd, upper_bound_ssvd, SsvdInstance,
};
use sparse_spectra::{Error, Result};

use input::{KindArg, ModeArg};
use report::{sig10, sig10_opt, Instance};

#[derive(Parser)]
#[command(
    name = "sparse-spectra",
    version,
    about = "Sparse PCA and rank-one sparse SVD solvers"
)]
struct Cli {
    /// Worker threads for parallel scans (default: all cores).
    #[arg(long, global = true, env = "SPARSE_SPECTRA_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// `pitprops`, `random<N>`, a `.mtx` file or a CSV file.
    #[arg(long)]
    input: String,
    #[arg(long, value_enum, default_value_t = KindArg::Auto)]
    kind: KindArg,
    /// How raw observations are reduced to a symmetric matrix.
    #[arg(long, value_enum, default_value_t = ModeArg::Covariance)]
    mode: ModeArg,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    ddof: u8,
    /// Seed for generated instances.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveMethod {
    Greedy,
    Local,
    Sswap,
    Exact,
    Brute,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SsvdMethod {
    Greedy,
    Local,
    Trunc,
    Brute,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchSet {
    Pitprops,
}

#[derive(Subcommand)]
enum Command {
    /// Find a size-k support maximizing the top eigenvalue.
    Solve {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum)]
        method: SolveMethod,
        #[arg(long)]
        k: usize,
        /// Swap size for `sswap`.
        #[arg(long)]
        s: Option<usize>,
        /// Seconds before the exact search stops.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        node_limit: Option<usize>,
        #[arg(long, default_value_t = 1e-4)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        abs_tol: f64,
        /// Brute force runs only while C(n,k) <= C(g, g/2).
        #[arg(long, default_value_t = DEFAULT_SIZE_GUARD)]
        size_guard: usize,
    },
    /// Saddle-point upper bound next to a greedy + local search lower bound.
    Bound {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_SADDLE_ITERS)]
        iters: usize,
    },
    /// Rank-one sparse SVD with k1 rows and k2 columns.
    Ssvd {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum)]
        method: SsvdMethod,
        #[arg(long)]
        k1: usize,
        #[arg(long)]
        k2: usize,
        /// Also run the saddle upper bound for this many iterations.
        #[arg(long)]
        bound_iters: Option<usize>,
        /// Largest number of (row set, column set) pairs brute force visits.
        #[arg(long, default_value_t = 10_000_000)]
        pair_limit: u128,
    },
    /// Write the ε-accurate MILP as an LP file.
    ExportMilp {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
        /// Emit the per-index model with x_j = 1 (1-based).
        #[arg(long)]
        fixed_j: Option<usize>,
        /// Lower bound on the optimum (default: greedy + local search).
        #[arg(long)]
        w_lower: Option<f64>,
        /// Upper bound on the optimum (default: saddle bound).
        #[arg(long)]
        w_upper: Option<f64>,
        /// Write the heuristic witness point as a `name value` file.
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Shell command run after export; `{lp}` and `{sol}` are replaced by
        /// the model path and a solution path it must write.
        #[arg(long)]
        solver: Option<String>,
        /// Check a `name value` solution file against the model.
        #[arg(long)]
        check_solution: Option<PathBuf>,
    },
    /// Reproduce the Pitprops tables.
    Bench {
        #[arg(value_enum)]
        dataset: BenchSet,
    },
}

enum Failure {
    Lib(Error),
    Usage(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Lib(Error::Io { .. } | Error::NonConvergence { .. }) | Failure::Other(_) => 1,
            Failure::Lib(_) | Failure::Usage(_) => 2,
        }
    }
}

fn instance_of(source: &str, inst: &SpcaInstance) -> Instance {
    Instance::Symmetric {
        source: source.to_string(),
        n: inst.n(),
        k: inst.k(),
    }
}

fn load_spca(args: &InputArgs, k: usize) -> Result<(String, SpcaInstance)> {
    let loaded = input::load(&args.input, args.kind, args.seed, false)?;
    let a = input::symmetric(&loaded.dataset, args.mode, args.ddof as usize)?;
    Ok((loaded.source, SpcaInstance::new(a, k)?))
}

fn spca_report(
    command: &'static str,
    source: &str,
    inst: &SpcaInstance,
    method: &str,
    r: &SolveReport,
) -> report::RunReport {
    report::RunReport {
        version: report::VERSION,
        command,
        instance: instance_of(source, inst),
        method: method.to_string(),
        value: sig10(r.value),
        support: r.selection.one_based(),
        bound: sig10_opt(r.upper_bound),
        gap: sig10_opt(r.gap),
        status: serde_json::to_value(r.status)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        iterations: r.iterations,
        wall_time_ms: report::millis(r.wall_time),
    }
}

#[allow(clippy::too_many_arguments)]
fn solve(
    input: &InputArgs,
    method: SolveMethod,
    k: usize,
    s: Option<usize>,
    time_limit: Option<f64>,
    node_limit: Option<usize>,
    rel_tol: f64,
    abs_tol: f64,
    size_guard: usize,
) -> std::result::Result<u8, Failure> {
    let (source, inst) = load_spca(input, k)?;
    let (name, r) = match method {
        SolveMethod::Greedy => ("greedy", greedy(&inst)),
        SolveMethod::Local => ("local", greedy_local_search(&inst)),
        SolveMethod::Sswap => {
            let s = s.ok_or_else(|| Failure::Usage("--method sswap needs --s".into()))?;
            let start = greedy(&inst);
            ("sswap", s_swap_local_search(&inst, s, &start.selection)?)
        }
        SolveMethod::Exact => {
            let time_limit = match time_limit {
                Some(t) if !(t >= 0.0 && t.is_finite()) => {
                    return Err(Failure::Usage(format!(
                        "--time-limit must be a non-negative number, got {t}"
                    )));
                }
                t => t.map(Duration::from_secs_f64),
            };
            let opts = BnbOptions {
                abs_tol,
                rel_tol,
                time_limit,
                node_limit,
                ..BnbOptions::default()
            };
            ("exact", solve_exact(&inst, &opts))
        }
        SolveMethod::Brute => ("brute", brute_force(&inst, size_guard)?),
    };
    report::print(&spca_report("solve", &source, &inst, name, &r));
    Ok(if r.status.is_limit() { 3 } else { 0 })
}

fn bound(input: &InputArgs, k: usize, iters: usize) -> std::result::Result<u8, Failure> {
    let (source, inst) = load_spca(input, k)?;
    let start = Instant::now();
    let lower = greedy_local_search(&inst);
    let opts = SaddleOptions {
        max_iters: iters,
        ..SaddleOptions::default()
    };
    let (ub, state) = saddle_upper_bound(inst.factor(), k, &opts)?;
    let mut r = lower.with_bound(ub);
    r.iterations = state.iterate_count;
    r.wall_time = start.elapsed();
    report::print(&spca_report("bound", &source, &inst, "saddle", &r));
    Ok(0)
}

fn ssvd(
    input: &InputArgs,
    method: SsvdMethod,
    k1: usize,
    k2: usize,
    bound_iters: Option<usize>,
    pair_limit: u128,
) -> std::result::Result<u8, Failure> {
    let loaded = input::load(&input.input, input.kind, input.seed, true)?;
    let inst = SsvdInstance::new(loaded.dataset.values.clone(), k1, k2)?;
    let start = Instant::now();
    let (name, r) = match method {
        SsvdMethod::Greedy => ("greedy", greedy_ssvd(&inst)),
        SsvdMethod::Local => {
            let g = greedy_ssvd(&inst);
            ("local", local_search_ssvd(&inst, &g.rows, &g.cols)?)
        }
        SsvdMethod::Trunc => ("trunc", truncation_ssvd(&inst)),
        SsvdMethod::Brute => ("brute", brute_force_ssvd(&inst, pair_limit)?),
    };
    let ub = match bound_iters {
        Some(iters) => Some(upper_bound_ssvd(&inst, iters)?),
        None if method == SsvdMethod::Brute => Some(r.value),
        None => None,
    };
    let a = inst.a();
    report::print(&report::SsvdRunReport {
        version: report::VERSION,
        command: "ssvd",
        instance: Instance::Rectangular {
            source: loaded.source,
            m: a.nrows(),
            n: a.ncols(),
            k1,
            k2,
        },
        method: name.to_string(),
        value: sig10(r.value),
        rows: r.rows.one_based(),
        cols: r.cols.one_based(),
        bound: sig10_opt(ub),
        gap: sig10_opt(ub.map(|u| relative_gap(u, r.value))),
        iterations: r.iterations,
        wall_time_ms: report::millis(start.elapsed()),
    });
    Ok(0)
}

fn point_report(check: &PointCheck) -> report::PointReport {
    report::PointReport {
        feasible: check.feasible,
        objective: sig10(check.objective),
        violations: check.violations.iter().map(|v| v.name.clone()).collect(),
    }
}

fn write_assignment(path: &PathBuf, a: &Assignment) -> std::result::Result<(), Failure> {
    let mut text = String::new();
    for (name, v) in a.iter() {
        text.push_str(&format!("{name} {v}\n"));
    }
    std::fs::write(path, text).map_err(|source| {
        Failure::Lib(Error::Io {
            path: path.clone(),
            source,
        })
    })
}

fn read_assignment(path: &PathBuf) -> std::result::Result<Assignment, Failure> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(read_solution(&text)?)
}

fn run_solver(
    template: &str,
    lp: &Path,
    model: &MilpModel,
) -> std::result::Result<report::PointReport, Failure> {
    let sol = lp.with_extension("sol");
    let cmd = template
        .replace("{lp}", &lp.display().to_string())
        .replace("{sol}", &sol.display().to_string());
    let status = std::process::Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .status()
        .map_err(|e| Failure::Other(format!("could not start solver: {e}")))?;
    if !status.success() {
        return Err(Failure::Other(format!(
            "solver command `{cmd}` failed with {status}"
        )));
    }
    let point = read_assignment(&sol)?;
    Ok(point_report(&check_point(model, &point)?))
}

#[allow(clippy::too_many_arguments)]
fn export_milp(
    input: &InputArgs,
    k: usize,
    eps: f64,
    out: &PathBuf,
    fixed_j: Option<usize>,
    w_lower: Option<f64>,
    w_upper: Option<f64>,
    witness_path: Option<&PathBuf>,
    solver: Option<&str>,
    check_solution: Option<&PathBuf>,
) -> std::result::Result<u8, Failure> {
    let (source, inst) = load_spca(input, k)?;
    let start = Instant::now();
    let heuristic = greedy_local_search(&inst);
    let factor: &GramFactor = inst.factor();
    let lower = w_lower.unwrap_or(heuristic.value);
    let upper = match w_upper {
        Some(u) => u,
        None => saddle_upper_bound(factor, k, &SaddleOptions::default())?
            .0
            .max(lower + eps),
    };
    let model = match fixed_j {
        Some(0) => return Err(Failure::Usage("--fixed-j is 1-based".into())),
        Some(j) => build_milp_fixed_j(factor, k, eps, lower, upper, j - 1)?,
        None => build_milp(factor, k, eps, lower, upper)?,
    };
    std::fs::write(out, write_lp(&model)).map_err(|source| Error::Io {
        path: out.clone(),
        source,
    })?;

    let witness = if fixed_j.is_some() {
        witness_fixed_j(&model, factor, &heuristic.selection)
    } else {
        witness_from_support(&model, factor, &heuristic.selection)
    };
    let witness = match witness {
        Ok(point) => {
            if let Some(path) = witness_path {
                write_assignment(path, &point)?;
            }
            Some(point_report(&check_point(&model, &point)?))
        }
        Err(_) if fixed_j.is_some() => None,
        Err(e) => return Err(e.into()),
    };
    let solution = match (solver, check_solution) {
        (Some(cmd), _) => Some(run_solver(cmd, out, &model)?),
        (None, Some(path)) => Some(point_report(&check_point(&model, &read_assignment(path)?)?)),
        (None, None) => None,
    };
    report::print(&report::ExportReport {
        version: report::VERSION,
        command: "export-milp",
        instance: instance_of(&source, &inst),
        out: out.display().to_string(),
        d: model.meta.d,
        m: model.meta.m,
        eps: model.meta.eps,
        w_lower: sig10(lower),
        w_upper: sig10(upper),
        fixed_j,
        binaries: model.binary_count(),
        continuous: model.continuous_count(),
        constraints: model.constraints.len(),
        witness,
        solution,
        wall_time_ms: report::millis(start.elapsed()),
    });
    Ok(0)
}

fn bench_pitprops() -> std::result::Result<u8, Failure> {
    let start = Instant::now();
    let a = sparse_spectra::io::pitprops().symmetric()?;
    let mut rows = Vec::new();
    for k in 4..=10 {
        let inst = SpcaInstance::new(a.clone(), k)?;
        let opts = BnbOptions {
            abs_tol: 1e-9,
            rel_tol: 0.0,
            ..BnbOptions::default()
        };
        let exact = solve_exact(&inst, &opts);
        let g = greedy(&inst);
        let l = greedy_local_search(&inst);
        let (ub, _) = saddle_upper_bound(inst.factor(), k, &SaddleOptions::default())?;
        let w = exact.value;
        let pct = |v: f64| sig10(100.0 * (w - v) / w);
        rows.push(report::BenchRow {
            k,
            w_star: sig10(w),
            support: exact.selection.one_based(),
            nodes: exact.iterations,
            exact_time_ms: report::millis(exact.wall_time),
            greedy: sig10(g.value),
            greedy_gap_pct: pct(g.value),
            local: sig10(l.value),
            local_gap_pct: pct(l.value),
            upper_bound: sig10(ub),
            bound_gap_pct: sig10(100.0 * (ub - w) / w),
        });
    }
    report::print(&report::BenchReport {
        version: report::VERSION,
        command: "bench",
        instance: report::BenchInstance {
            source: "pitprops".into(),
            n: a.dim(),
        },
        rows,
        wall_time_ms: report::millis(start.elapsed()),
    });
    Ok(0)
}

fn run(cli: Cli) -> std::result::Result<u8, Failure> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Other(e.to_string()))?;
    }
    match cli.command {
        Command::Solve {
            input,
            method,
            k,
            s,
            time_limit,
            node_limit,
            rel_tol,
            abs_tol,
            size_guard,
        } => solve(
            &input, method, k, s, time_limit, node_limit, rel_tol, abs_tol, size_guard,
        ),
        Command::Bound { input, k, iters } => bound(&input, k, iters),
        Command::Ssvd {
            input,
            method,
            k1,
            k2,
            bound_iters,
            pair_limit,
        } => ssvd(&input, method, k1, k2, bound_iters, pair_limit),
        Command::ExportMilp {
            input,
            k,
            eps,
            out,
            fixed_j,
            w_lower,
            w_upper,
            witness,
            solver,
            check_solution,
        } => export_milp(
            &input,
            k,
            eps,
            &out,
            fixed_j,
            w_lower,
            w_upper,
            witness.as_ref(),
            solver.as_deref(),
            check_solution.as_ref(),
        ),
        Command::Bench {
            dataset: BenchSet::Pitprops,
        } => bench_pitprops(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            let msg = match &failure {
                Failure::Lib(e) => e.to_string(),
                Failure::Usage(m) | Failure::Other(m) => m.clone(),
            };
            eprintln!("error: {msg}");
            ExitCode::from(failure.code())
        }
    }
}

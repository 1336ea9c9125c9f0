//! The `gsandwich` command-line frontend: batch access to the oracle, the
//! estimates, the coupling procedures, and the verification harness.
//!
//! Contract: stdout carries only the payload (plain decimal for
//! single-number commands, JSON otherwise), stderr carries diagnostics,
//! and every stochastic command is byte-identical for identical flags and
//! seed. Parallel runs are merged by run index.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::asymptotic;
use crate::beta::{solve_beta, SolveOptions};
use crate::coupling::{
    self, compute_params, CompletionMode, CouplingParams, ProbEngine,
};
use crate::graphs::{self, DegreeSequence, Graph};
use crate::harness::{self, TestReport};
use crate::oracle::{self, Budget};
use crate::stream;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "gsandwich",
    about = "Random graphs with given degrees: exact factor oracles, saddle-point estimates, and binomial sandwich couplings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum EngineChoice {
    Exact,
    Asymptotic,
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum CompletionChoice {
    Factor,
    Sequential,
}

impl From<CompletionChoice> for CompletionMode {
    fn from(c: CompletionChoice) -> CompletionMode {
        match c {
            CompletionChoice::Factor => CompletionMode::FactorSample,
            CompletionChoice::Sequential => CompletionMode::Sequential,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SuiteChoice {
    Marginals,
    Tails,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Exact t-factor count of a host graph (prints a decimal integer).
    Count {
        host: PathBuf,
        degrees: PathBuf,
        #[arg(long, default_value_t = Budget::DEFAULT_NODE_LIMIT)]
        budget: u64,
    },
    /// Saddle-point estimate of log N(S, t) with its components.
    Estimate {
        host: PathBuf,
        degrees: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
    },
    /// Fit the beta model on (host, degrees).
    Beta {
        host: PathBuf,
        degrees: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
    },
    /// Probability that a random factor contains --plus and avoids --minus.
    Prob {
        host: PathBuf,
        degrees: PathBuf,
        /// Forced edges, e.g. "0-1,2-3".
        #[arg(long)]
        plus: Option<String>,
        /// Forbidden edges, e.g. "0-2".
        #[arg(long)]
        minus: Option<String>,
        #[arg(long, value_enum, default_value_t = EngineChoice::Auto)]
        engine: EngineChoice,
        #[arg(long, default_value_t = Budget::DEFAULT_NODE_LIMIT)]
        budget: u64,
    },
    /// Draw one exactly uniform t-factor (prints an edge list).
    Sample {
        host: PathBuf,
        degrees: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = Budget::DEFAULT_NODE_LIMIT)]
        budget: u64,
    },
    /// Run the coupling procedure and report containment statistics.
    Couple {
        #[command(flatten)]
        spec: DegreeSpec,
        #[arg(long)]
        xi: f64,
        #[arg(long = "C", default_value_t = 2.0)]
        c: f64,
        /// Override ζ (default C·ξ).
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        runs: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value_t = EngineChoice::Auto)]
        engine: EngineChoice,
        #[arg(long, value_enum, default_value_t = CompletionChoice::Factor)]
        completion: CompletionChoice,
        #[arg(long, default_value_t = Budget::DEFAULT_NODE_LIMIT)]
        budget: u64,
    },
    /// Run the two-sided sandwich and report joint containment frequencies.
    Sandwich {
        #[command(flatten)]
        spec: DegreeSpec,
        #[arg(long)]
        xi: f64,
        #[arg(long = "C", default_value_t = 2.0)]
        c: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        runs: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value_t = EngineChoice::Auto)]
        engine: EngineChoice,
        #[arg(long, value_enum, default_value_t = CompletionChoice::Factor)]
        completion: CompletionChoice,
        #[arg(long, default_value_t = Budget::DEFAULT_NODE_LIMIT)]
        budget: u64,
    },
    /// Run the statistical verification suites; exits nonzero if any fails.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteChoice::All)]
        suite: SuiteChoice,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        runs: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(clap::Args)]
#[group(required = true)]
struct DegreeSpec {
    /// Degree file (whitespace-separated integers).
    #[arg(long, conflicts_with_all = ["n", "d"])]
    degrees: Option<PathBuf>,
    /// Vertex count for a regular sequence (with --d).
    #[arg(long, requires = "d")]
    n: Option<usize>,
    /// Degree for a regular sequence (with --n).
    #[arg(long, requires = "n")]
    d: Option<usize>,
}

pub struct Failure {
    pub code: i32,
    pub message: String,
}

type CliResult<T> = Result<T, Failure>;

impl From<graphs::FileFormatError> for Failure {
    fn from(e: graphs::FileFormatError) -> Failure {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
}

macro_rules! failure_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for Failure {
            fn from(e: $ty) -> Failure {
                Failure { code: 1, message: e.to_string() }
            }
        }
    )*};
}
failure_from!(
    crate::oracle::OracleError,
    crate::beta::BetaError,
    crate::asymptotic::AsymptoticError,
    crate::coupling::CouplingError,
    crate::graphs::GraphError
);

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn emit<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serialization")
    );
}

fn resolve_degrees(spec: &DegreeSpec) -> CliResult<DegreeSequence> {
    match (&spec.degrees, spec.n, spec.d) {
        (Some(path), _, _) => Ok(graphs::read_degrees(path)?),
        (None, Some(n), Some(d)) => Ok(DegreeSequence::regular(n, d)?),
        _ => Err(Failure {
            code: 2,
            message: "specify either --degrees or both --n and --d".into(),
        }),
    }
}

fn pick_engine(choice: EngineChoice, n: usize, budget: u64) -> Box<dyn ProbEngine> {
    match choice {
        EngineChoice::Exact => Box::new(coupling::ExactEngine {
            node_budget: budget,
        }),
        EngineChoice::Asymptotic => Box::new(coupling::BetaEngine::default()),
        EngineChoice::Auto => {
            if n <= 16 {
                Box::new(coupling::ExactEngine {
                    node_budget: budget,
                })
            } else {
                Box::new(coupling::BetaEngine::default())
            }
        }
    }
}

fn parse_edge_spec(n: usize, spec: &str) -> CliResult<Graph> {
    let mut edges = Vec::new();
    for item in spec.split(',').filter(|s| !s.trim().is_empty()) {
        let parts: Vec<&str> = item.trim().split('-').collect();
        if parts.len() != 2 {
            return Err(Failure {
                code: 2,
                message: format!("bad edge spec {item:?}, expected u-v"),
            });
        }
        let u: usize = parts[0].parse().map_err(|_| Failure {
            code: 2,
            message: format!("bad vertex in {item:?}"),
        })?;
        let v: usize = parts[1].parse().map_err(|_| Failure {
            code: 2,
            message: format!("bad vertex in {item:?}"),
        })?;
        edges.push((u, v));
    }
    Ok(Graph::from_edges(n, &edges)?)
}

fn dispatch(cmd: Command) -> CliResult<i32> {
    match cmd {
        Command::Count {
            host,
            degrees,
            budget,
        } => {
            let g = graphs::read_edge_list(&host)?;
            let t = graphs::read_degrees(&degrees)?;
            let mut b = Budget::new(budget);
            let count = oracle::count_factors(&g, &t, &mut b)?;
            println!("{count}");
            Ok(0)
        }
        Command::Estimate {
            host,
            degrees,
            tol,
            max_iters,
        } => {
            let g = graphs::read_edge_list(&host)?;
            let t = graphs::read_degrees(&degrees)?;
            let sol = solve_beta(&g, &t, SolveOptions { tol, max_iters })?;
            let est = asymptotic::estimate_count_with(&g, &t, &sol)?;
            #[derive(Serialize)]
            struct Out<'a> {
                schema_version: u32,
                command: &'a str,
                config: EstimateConfig<'a>,
                #[serde(flatten)]
                estimate: &'a asymptotic::CountEstimate,
            }
            #[derive(Serialize)]
            struct EstimateConfig<'a> {
                host: &'a str,
                degrees: &'a str,
                tol: f64,
                max_iters: usize,
            }
            emit(&Out {
                schema_version: SCHEMA_VERSION,
                command: "estimate",
                config: EstimateConfig {
                    host: host.to_str().unwrap_or(""),
                    degrees: degrees.to_str().unwrap_or(""),
                    tol,
                    max_iters,
                },
                estimate: &est,
            });
            Ok(0)
        }
        Command::Beta {
            host,
            degrees,
            tol,
            max_iters,
        } => {
            let g = graphs::read_edge_list(&host)?;
            let t = graphs::read_degrees(&degrees)?;
            let sol = solve_beta(&g, &t, SolveOptions { tol, max_iters })?;
            #[derive(Serialize)]
            struct Out {
                schema_version: u32,
                command: &'static str,
                config: BetaConfig,
                beta: Vec<f64>,
                residual_inf: f64,
                iterations: usize,
                lambda: f64,
                big_lambda: f64,
                beta_range: f64,
            }
            #[derive(Serialize)]
            struct BetaConfig {
                host: String,
                degrees: String,
                tol: f64,
                max_iters: usize,
            }
            emit(&Out {
                schema_version: SCHEMA_VERSION,
                command: "beta",
                config: BetaConfig {
                    host: host.display().to_string(),
                    degrees: degrees.display().to_string(),
                    tol,
                    max_iters,
                },
                beta_range: sol.beta_range(),
                beta: sol.beta,
                residual_inf: sol.residual_inf,
                iterations: sol.iterations,
                lambda: sol.lambda,
                big_lambda: sol.big_lambda,
            });
            Ok(0)
        }
        Command::Prob {
            host,
            degrees,
            plus,
            minus,
            engine,
            budget,
        } => {
            let g = graphs::read_edge_list(&host)?;
            let t = graphs::read_degrees(&degrees)?;
            let h_plus = parse_edge_spec(g.n(), plus.as_deref().unwrap_or(""))?;
            let h_minus = parse_edge_spec(g.n(), minus.as_deref().unwrap_or(""))?;
            let use_exact = matches!(engine, EngineChoice::Exact)
                || (matches!(engine, EngineChoice::Auto) && g.n() <= 16);
            #[derive(Serialize)]
            struct Out {
                schema_version: u32,
                command: &'static str,
                config: ProbConfig,
                engine: &'static str,
                p: f64,
                #[serde(skip_serializing_if = "Option::is_none")]
                p_rational: Option<String>,
                #[serde(skip_serializing_if = "Option::is_none")]
                error_scale: Option<f64>,
            }
            #[derive(Serialize)]
            struct ProbConfig {
                host: String,
                degrees: String,
                plus: String,
                minus: String,
                budget: u64,
            }
            let config = ProbConfig {
                host: host.display().to_string(),
                degrees: degrees.display().to_string(),
                plus: plus.unwrap_or_default(),
                minus: minus.unwrap_or_default(),
                budget,
            };
            let out = if use_exact {
                let mut b = Budget::new(budget);
                let p = oracle::subgraph_probability_exact(&g, &t, &h_plus, &h_minus, &mut b)?;
                use num_traits::ToPrimitive;
                Out {
                    schema_version: SCHEMA_VERSION,
                    command: "prob",
                    config,
                    engine: "exact",
                    p: p.to_f64().unwrap_or(f64::NAN),
                    p_rational: Some(p.to_string()),
                    error_scale: None,
                }
            } else {
                let est = asymptotic::estimate_subgraph_probability(&g, &t, &h_plus, &h_minus)?;
                Out {
                    schema_version: SCHEMA_VERSION,
                    command: "prob",
                    config,
                    engine: "asymptotic",
                    p: est.p,
                    p_rational: None,
                    error_scale: Some(est.error_scale),
                }
            };
            emit(&out);
            Ok(0)
        }
        Command::Sample {
            host,
            degrees,
            seed,
            budget,
        } => {
            let g = graphs::read_edge_list(&host)?;
            let t = graphs::read_degrees(&degrees)?;
            let mut rng = stream::substream(seed, 0);
            let mut b = Budget::new(budget);
            let f = oracle::sample_factor(&g, &t, &mut rng, &mut b)?;
            print!("{}", graphs::format_edge_list(&f));
            Ok(0)
        }
        Command::Couple {
            spec,
            xi,
            c,
            zeta,
            seed,
            runs,
            jobs,
            engine,
            completion,
            budget,
        } => {
            let d = resolve_degrees(&spec)?;
            let mut params = compute_params(&d, xi, c)?;
            if let Some(z) = zeta {
                if !(0.0..=1.0).contains(&z) {
                    return Err(Failure {
                        code: 2,
                        message: format!("zeta override {z} outside [0, 1]"),
                    });
                }
                params.zeta = z;
                params.p_zeta =
                    1.0 - (-params.mu * (1.0 - z) / params.pairs as f64).exp();
            }
            let eng = pick_engine(engine, d.len(), budget);
            let mode: CompletionMode = completion.into();
            let summaries = run_parallel(jobs, runs, |run| {
                let mut rng = stream::run_substream(seed, 1, run);
                let iterations = coupling::draw_iterations(&params, &mut rng);
                let out =
                    coupling::coupling_run(&d, iterations, params.zeta, eng.as_ref(), mode, &mut rng)?;
                Ok(CoupleRunSummary {
                    run,
                    iterations,
                    ind_sample_at: out.stats.ind_sample_at,
                    max_eta: out.stats.max_eta,
                    contained: out.g_zeta.is_subgraph_of(&out.g),
                    in_g0: out.g_zeta.is_subgraph_of(&out.g0),
                    g_zeta_edges: out.g_zeta.edge_count(),
                    g_edges: out.g.edge_count(),
                    g0_edges: out.g0.edge_count(),
                    approximate: out.stats.approximate,
                })
            })?;
            let contained = summaries.iter().filter(|s| s.contained).count() as u64;
            let indsample = summaries
                .iter()
                .filter(|s| s.ind_sample_at.is_some())
                .count() as u64;
            #[derive(Serialize)]
            struct Out<'a> {
                schema_version: u32,
                command: &'static str,
                config: CoupleConfig,
                params: &'a CouplingParams,
                runs: u64,
                containment_frequency: f64,
                indsample_frequency: f64,
                per_run: &'a [CoupleRunSummary],
            }
            emit(&Out {
                schema_version: SCHEMA_VERSION,
                command: "couple",
                config: CoupleConfig {
                    degrees: degree_spec_string(&spec),
                    xi,
                    c,
                    zeta: params.zeta,
                    seed,
                    runs,
                    jobs,
                    engine: eng.name(),
                    completion,
                    budget,
                },
                params: &params,
                runs,
                containment_frequency: contained as f64 / runs.max(1) as f64,
                indsample_frequency: indsample as f64 / runs.max(1) as f64,
                per_run: &summaries,
            });
            Ok(0)
        }
        Command::Sandwich {
            spec,
            xi,
            c,
            seed,
            runs,
            jobs,
            engine,
            completion,
            budget,
        } => {
            let d = resolve_degrees(&spec)?;
            let eng = pick_engine(engine, d.len(), budget);
            let mode: CompletionMode = completion.into();
            let summaries = run_parallel(jobs, runs, |run| {
                let mut rng = stream::run_substream(seed, 2, run);
                let out = coupling::sandwich(&d, xi, c, eng.as_ref(), mode, &mut rng)?;
                Ok(SandwichRunSummary {
                    run,
                    lower_ok: out.lower_ok,
                    upper_ok: out.upper_ok,
                    joint: out.lower_ok && out.upper_ok,
                    p1: out.p1,
                    p2: out.p2,
                })
            })?;
            let lower = summaries.iter().filter(|s| s.lower_ok).count() as f64;
            let upper = summaries.iter().filter(|s| s.upper_ok).count() as f64;
            let joint = summaries.iter().filter(|s| s.joint).count() as f64;
            let denom = runs.max(1) as f64;
            #[derive(Serialize)]
            struct Out<'a> {
                schema_version: u32,
                command: &'static str,
                config: SandwichConfig,
                runs: u64,
                lower_frequency: f64,
                upper_frequency: f64,
                joint_frequency: f64,
                per_run: &'a [SandwichRunSummary],
            }
            emit(&Out {
                schema_version: SCHEMA_VERSION,
                command: "sandwich",
                config: SandwichConfig {
                    degrees: degree_spec_string(&spec),
                    xi,
                    c,
                    seed,
                    runs,
                    jobs,
                    engine: eng.name(),
                    completion,
                    budget,
                },
                runs,
                lower_frequency: lower / denom,
                upper_frequency: upper / denom,
                joint_frequency: joint / denom,
                per_run: &summaries,
            });
            Ok(0)
        }
        Command::Verify {
            suite,
            seed,
            runs,
            jobs,
        } => {
            let mut reports = Vec::new();
            if matches!(suite, SuiteChoice::Marginals | SuiteChoice::All) {
                reports.extend(marginal_suite(seed, runs, jobs)?);
            }
            if matches!(suite, SuiteChoice::Tails | SuiteChoice::All) {
                reports.extend(tails_suite());
            }
            let all_pass = reports.iter().all(|r| r.pass);
            #[derive(Serialize)]
            struct Out<'a> {
                schema_version: u32,
                command: &'static str,
                config: VerifyConfig,
                all_pass: bool,
                reports: &'a [TestReport],
            }
            #[derive(Serialize)]
            struct VerifyConfig {
                suite: SuiteChoice,
                seed: u64,
                runs: u64,
                jobs: usize,
            }
            emit(&Out {
                schema_version: SCHEMA_VERSION,
                command: "verify",
                config: VerifyConfig {
                    suite,
                    seed,
                    runs,
                    jobs,
                },
                all_pass,
                reports: &reports,
            });
            Ok(if all_pass { 0 } else { 1 })
        }
    }
}

#[derive(Serialize)]
struct CoupleConfig {
    degrees: String,
    xi: f64,
    c: f64,
    zeta: f64,
    seed: u64,
    runs: u64,
    jobs: usize,
    engine: &'static str,
    completion: CompletionChoice,
    budget: u64,
}

#[derive(Serialize)]
struct SandwichConfig {
    degrees: String,
    xi: f64,
    c: f64,
    seed: u64,
    runs: u64,
    jobs: usize,
    engine: &'static str,
    completion: CompletionChoice,
    budget: u64,
}

#[derive(Serialize)]
struct CoupleRunSummary {
    run: u64,
    iterations: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ind_sample_at: Option<u64>,
    max_eta: f64,
    contained: bool,
    in_g0: bool,
    g_zeta_edges: usize,
    g_edges: usize,
    g0_edges: usize,
    approximate: bool,
}

#[derive(Serialize)]
struct SandwichRunSummary {
    run: u64,
    lower_ok: bool,
    upper_ok: bool,
    joint: bool,
    p1: f64,
    p2: f64,
}

fn degree_spec_string(spec: &DegreeSpec) -> String {
    match (&spec.degrees, spec.n, spec.d) {
        (Some(p), _, _) => p.display().to_string(),
        (None, Some(n), Some(d)) => format!("regular n={n} d={d}"),
        _ => String::new(),
    }
}

fn run_parallel<T: Send>(
    jobs: usize,
    runs: u64,
    f: impl Fn(u64) -> Result<T, coupling::CouplingError> + Sync,
) -> CliResult<Vec<T>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Failure {
            code: 1,
            message: e.to_string(),
        })?;
    let results: Result<Vec<T>, coupling::CouplingError> =
        pool.install(|| (0..runs).into_par_iter().map(&f).collect());
    results.map_err(Failure::from)
}

/// The pre-registered marginal suite at n = 6, d = 3 (ξ = 0.2, C = 2).
fn marginal_suite(seed: u64, runs: u64, jobs: usize) -> CliResult<Vec<TestReport>> {
    let d = DegreeSequence::regular(6, 3).unwrap();
    let host = Graph::complete(6);
    let engine = coupling::ExactEngine::default();
    let params = compute_params(&d, 0.2, 2.0)?;
    let mut reports = Vec::new();

    // 1. exact sampler uniformity
    let samples = run_parallel(jobs, runs, |run| {
        let mut rng = stream::run_substream(seed, 3, run);
        oracle::sample_factor(&host, &d, &mut rng, &mut Budget::default())
            .map_err(coupling::CouplingError::from)
    })?;
    reports.push(harness::verify_uniform_marginal(&samples, &d, seed));

    // 2. negative control: the deliberately biased sampler must fail
    let biased = run_parallel(jobs, runs, |run| {
        let mut rng = stream::run_substream(seed, 4, run);
        harness::biased_sample_factor(&host, &d, &mut rng, &mut Budget::default())
            .map_err(coupling::CouplingError::from)
    })?;
    let inner = harness::verify_uniform_marginal(&biased, &d, seed);
    let control_pass = !inner.pass;
    reports.push(TestReport {
        name: "negative_control_biased_sampler_rejected".into(),
        pass: control_pass,
        subtests: vec![inner],
        ..blank_report(seed, runs)
    });

    // 3-5. coupling runs: G uniformity, G_0/G_ζ marginals, containment
    struct RunOut {
        g_zeta: Graph,
        g: Graph,
        g0: Graph,
        indsample: bool,
        contained: bool,
        in_g0: bool,
    }
    let outs = run_parallel(jobs, runs, |run| {
        let mut rng = stream::run_substream(seed, 5, run);
        let iterations = coupling::draw_iterations(&params, &mut rng);
        let out = coupling::coupling_run(
            &d,
            iterations,
            params.zeta,
            &engine,
            CompletionMode::FactorSample,
            &mut rng,
        )?;
        Ok(RunOut {
            contained: out.g_zeta.is_subgraph_of(&out.g),
            in_g0: out.g_zeta.is_subgraph_of(&out.g0),
            indsample: out.stats.ind_sample_at.is_some(),
            g_zeta: out.g_zeta,
            g: out.g,
            g0: out.g0,
        })
    })?;
    let gs: Vec<Graph> = outs.iter().map(|o| o.g.clone()).collect();
    reports.push(harness::verify_uniform_marginal(&gs, &d, seed));
    let g0s: Vec<Graph> = outs.iter().map(|o| o.g0.clone()).collect();
    let mut rep = harness::verify_gnp_marginal(&g0s, params.p0, seed);
    rep.name = format!("coupling_g0_{}", rep.name);
    reports.push(rep);
    let gzs: Vec<Graph> = outs.iter().map(|o| o.g_zeta.clone()).collect();
    let mut rep = harness::verify_gnp_marginal(&gzs, params.p_zeta, seed);
    rep.name = format!("coupling_gzeta_{}", rep.name);
    reports.push(rep);

    let in_g0_all = outs.iter().all(|o| o.in_g0);
    reports.push(TestReport {
        name: "gzeta_subset_g0_always".into(),
        pass: in_g0_all,
        ..blank_report(seed, runs)
    });
    let containment_when_no_indsample = outs
        .iter()
        .filter(|o| !o.indsample)
        .all(|o| o.contained);
    reports.push(TestReport {
        name: "gzeta_subset_g_without_indsample".into(),
        pass: containment_when_no_indsample,
        ..blank_report(seed, runs)
    });

    // 6. universal failure lower bound (Lemma-style check on the embedding)
    let failures = outs.iter().filter(|o| !o.contained).count() as u64;
    reports.push(harness::theprop_check(
        6,
        params.p_zeta,
        3,
        failures,
        runs,
        seed,
    ));
    Ok(reports)
}

fn blank_report(seed: u64, runs: u64) -> TestReport {
    TestReport {
        name: String::new(),
        statistic: 0.0,
        p_value: None,
        bound_gap: None,
        pass: false,
        n_samples: runs,
        seed,
        alpha: harness::ALPHA,
        subtests: Vec::new(),
    }
}

/// Deterministic tail-bound checks (no randomness involved).
fn tails_suite() -> Vec<TestReport> {
    let mut min_margin = f64::INFINITY;
    for &k in &[10u64, 30, 100, 400] {
        for &p in &[0.05, 0.2, 0.5, 0.8] {
            for &eps in &[0.1, 0.3, 1.0, 2.0] {
                let b = harness::chernoff_bounds(k, p, eps);
                let pk = p * k as f64;
                let upper = harness::binomial_tail(k, p, (pk * (1.0 + eps)).ceil() as u64);
                let lower = if pk * (1.0 - eps) < 0.0 {
                    0.0
                } else {
                    1.0 - harness::binomial_tail(k, p, (pk * (1.0 - eps)).floor() as u64 + 1)
                };
                min_margin = min_margin.min(b.binomial_two_sided - (upper + lower));
                let ptail = harness::poisson_tail(pk, (pk * (1.0 + eps)).ceil() as u64);
                min_margin = min_margin.min(b.poisson_upper - ptail);
            }
        }
    }
    let mut monotone = true;
    for m in 0..30u64 {
        monotone &= harness::binomial_tail(30, 0.4, m) >= harness::binomial_tail(30, 0.4, m + 1);
        monotone &= harness::poisson_tail(6.0, m) >= harness::poisson_tail(6.0, m + 1);
    }
    vec![
        TestReport {
            name: "chernoff_dominates_exact_tails".into(),
            statistic: min_margin,
            pass: min_margin >= -1e-12,
            ..blank_report(0, 0)
        },
        TestReport {
            name: "tails_monotone_in_threshold".into(),
            pass: monotone,
            ..blank_report(0, 0)
        },
    ]
}

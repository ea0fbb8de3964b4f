//! `fbed` command-line tool: run selection on a CSV file, or reproduce the
//! simulation studies.
//!
//! Exit codes: 0 success, 1 runtime/data error, 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fbed::criteria::{default_gamma, Criterion};
use fbed::experiments::{run_mb_recovery, run_mt_simulation};
use fbed::selection::{EventKind, Runs};
use fbed::{fbed as run_fbed, fbs as run_fbs, Dataset};

#[derive(Parser)]
#[command(name = "fbed", version, about = "Stepwise feature selection with early dropping")]
struct Cli {
    /// Seed for data generation and simulations
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (defaults to all cores; FBED_THREADS is the fallback)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Report format
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    Fbs,
    Fbed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionKind {
    It,
    Aic,
    Bic,
    Ebic,
}

#[derive(Subcommand)]
enum Command {
    /// Run selection on a CSV dataset
    Select {
        /// Input CSV (header row required, numeric cells only)
        #[arg(long)]
        input: PathBuf,
        /// Name of the target column
        #[arg(long)]
        target: String,
        #[arg(long, value_enum)]
        criterion: CriterionKind,
        /// Significance level; required by --criterion it
        #[arg(long)]
        alpha: Option<f64>,
        /// EBIC gamma in [0,1], or "default" for 1 - 0.5 ln(n)/ln(p)
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long, value_enum)]
        algorithm: Algorithm,
        /// Run budget K for fbed: a nonnegative integer or "inf"
        #[arg(long)]
        runs: Option<String>,
    },
    /// Multiple-testing simulation over null data
    SimulateMt {
        /// Samples per dataset
        #[arg(long)]
        n: usize,
        /// Predictor count; repeat for several
        #[arg(long = "p", required = true)]
        p: Vec<usize>,
        /// Significance level; repeat for several
        #[arg(long = "alpha", required = true)]
        alpha: Vec<f64>,
        /// Replicates per cell
        #[arg(long, default_value_t = 100)]
        reps: usize,
    },
    /// Markov-blanket recovery with the graph oracle
    SimulateMb {
        #[arg(long)]
        graphs: usize,
        #[arg(long)]
        nodes: usize,
        #[arg(long = "edge-prob")]
        edge_prob: f64,
        #[arg(long, default_value_t = 0)]
        latent: usize,
        /// Run budget; repeat for several values, "inf" allowed
        #[arg(long = "k", required = true)]
        k: Vec<String>,
    },
}

enum CliError {
    Usage(String),
    Run(String),
}

impl From<fbed::Error> for CliError {
    fn from(e: fbed::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = resolve_threads(cli.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Run(format!("thread pool: {e}")))?;
    }

    let report = match &cli.command {
        Command::Select {
            input,
            target,
            criterion,
            alpha,
            gamma,
            algorithm,
            runs,
        } => cmd_select(&cli, input, target, *criterion, *alpha, gamma.as_deref(), *algorithm, runs.as_deref())?,
        Command::SimulateMt { n, p, alpha, reps } => {
            let report = run_mt_simulation(*n, p, alpha, *reps, cli.seed)?;
            match cli.format {
                Format::Json => report.to_records(),
                Format::Table => report.to_table(),
            }
        }
        Command::SimulateMb {
            graphs,
            nodes,
            edge_prob,
            latent,
            k,
        } => {
            let k: Vec<Runs> = k
                .iter()
                .map(|s| s.parse().map_err(|e: String| CliError::Usage(format!("--k: {e}"))))
                .collect::<Result<_, _>>()?;
            let report = run_mb_recovery(*graphs, *nodes, *edge_prob, *latent, &k, cli.seed)?;
            match cli.format {
                Format::Json => report.to_records(),
                Format::Table => report.to_table(),
            }
        }
    };

    match &cli.output {
        Some(path) => std::fs::write(path, report).map_err(|e| CliError::Run(format!("write output: {e}"))),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var("FBED_THREADS") {
            Ok(v) => Some(
                v.parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("FBED_THREADS: '{v}' is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    Ok(threads)
}

#[allow(clippy::too_many_arguments)]
fn cmd_select(
    cli: &Cli,
    input: &PathBuf,
    target: &str,
    criterion: CriterionKind,
    alpha: Option<f64>,
    gamma: Option<&str>,
    algorithm: Algorithm,
    runs: Option<&str>,
) -> Result<String, CliError> {
    // Fail fast on flag combinations before touching the data.
    match criterion {
        CriterionKind::It => {
            if alpha.is_none() {
                return Err(CliError::Usage("--alpha is required with --criterion it".into()));
            }
        }
        _ => {
            if alpha.is_some() {
                return Err(CliError::Usage("--alpha is only accepted with --criterion it".into()));
            }
        }
    }
    if gamma.is_some() && criterion != CriterionKind::Ebic {
        return Err(CliError::Usage("--gamma is only accepted with --criterion ebic".into()));
    }
    let runs = match (algorithm, runs) {
        (Algorithm::Fbs, Some(_)) => {
            return Err(CliError::Usage("--runs is only accepted with --algorithm fbed".into()))
        }
        (Algorithm::Fbs, None) => None,
        (Algorithm::Fbed, Some(r)) => {
            Some(r.parse::<Runs>().map_err(|e| CliError::Usage(format!("--runs: {e}")))?)
        }
        (Algorithm::Fbed, None) => {
            return Err(CliError::Usage("--runs is required with --algorithm fbed".into()))
        }
    };
    if let Some(a) = alpha {
        if !a.is_finite() || a <= 0.0 || a >= 1.0 {
            return Err(CliError::Usage(format!("--alpha must lie in (0, 1), got {a}")));
        }
    }

    let d = Dataset::load_csv(input, target)?;

    let mut resolved_gamma = None;
    let c = match criterion {
        CriterionKind::It => Criterion::it(alpha.expect("validated above"))?,
        CriterionKind::Aic => Criterion::Aic,
        CriterionKind::Bic => Criterion::Bic,
        CriterionKind::Ebic => {
            let g = match gamma.unwrap_or("default") {
                "default" => default_gamma(d.n(), d.p().max(2)),
                raw => raw
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("--gamma: '{raw}' is not a number or 'default'")))?,
            };
            resolved_gamma = Some(g);
            Criterion::ebic(g, d.p())?
        }
    };

    let result = match (algorithm, runs) {
        (Algorithm::Fbs, _) => run_fbs(&d, &c)?,
        (Algorithm::Fbed, Some(k)) => run_fbed(&d, &c, k)?,
        (Algorithm::Fbed, None) => unreachable!("validated above"),
    };

    let selected_names: Vec<&str> = result.selected.iter().map(|&v| d.name(v)).collect();
    match cli.format {
        Format::Json => {
            let mut per_run = Vec::new();
            for run in 0..result.runs_executed {
                let included: Vec<_> = result
                    .trace
                    .iter()
                    .filter(|e| e.run_index == run && e.kind == EventKind::Include)
                    .map(|e| {
                        serde_json::json!({
                            "index": e.variable,
                            "name": d.name(e.variable),
                            "score": e.score,
                        })
                    })
                    .collect();
                let dropped = result
                    .trace
                    .iter()
                    .filter(|e| e.run_index == run && e.kind == EventKind::Drop)
                    .count();
                per_run.push(serde_json::json!({
                    "run": run,
                    "included": included,
                    "dropped": dropped,
                }));
            }
            let removed: Vec<_> = result
                .trace
                .iter()
                .filter(|e| e.kind == EventKind::Remove)
                .map(|e| {
                    serde_json::json!({
                        "index": e.variable,
                        "name": d.name(e.variable),
                        "score": e.score,
                    })
                })
                .collect();
            let report = serde_json::json!({
                "command": "select",
                "input": input.display().to_string(),
                "target": target,
                "n": d.n(),
                "p": d.p(),
                "algorithm": match algorithm { Algorithm::Fbs => "fbs", Algorithm::Fbed => "fbed" },
                "criterion": c.name(),
                "alpha": alpha,
                "gamma": resolved_gamma,
                "runs": runs.map(|k| k.to_string()),
                "seed": cli.seed,
                "selected": selected_names,
                "selected_indices": result.selected,
                "n_evaluations": result.n_evaluations,
                "runs_executed": result.runs_executed,
                "trace": per_run,
                "removed": removed,
            });
            Ok(format!("{report}\n"))
        }
        Format::Table => {
            let mut out = String::new();
            out.push_str(&format!(
                "selected {} of {} variables: {}\n",
                result.selected.len(),
                d.p(),
                if selected_names.is_empty() {
                    "(none)".to_string()
                } else {
                    selected_names.join(" ")
                }
            ));
            if let Some(g) = resolved_gamma {
                out.push_str(&format!("gamma: {g:.4}\n"));
            }
            out.push_str(&format!(
                "runs executed: {}  evaluations: {}\n",
                result.runs_executed, result.n_evaluations
            ));
            for run in 0..result.runs_executed {
                let included: Vec<&str> = result
                    .trace
                    .iter()
                    .filter(|e| e.run_index == run && e.kind == EventKind::Include)
                    .map(|e| d.name(e.variable))
                    .collect();
                let dropped = result
                    .trace
                    .iter()
                    .filter(|e| e.run_index == run && e.kind == EventKind::Drop)
                    .count();
                out.push_str(&format!(
                    "run {run}: included [{}], dropped {dropped}\n",
                    included.join(" ")
                ));
            }
            let removed: Vec<&str> = result
                .trace
                .iter()
                .filter(|e| e.kind == EventKind::Remove)
                .map(|e| d.name(e.variable))
                .collect();
            out.push_str(&format!("backward removed [{}]\n", removed.join(" ")));
            Ok(out)
        }
    }
}

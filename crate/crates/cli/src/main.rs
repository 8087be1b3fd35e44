use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use saag::experiment::{
    finalize, metadata, plan_jobs, render_summary, run_job, summarize, ExperimentConfig, SweepAxis,
};
use saag::render_csv;
use saag::suite::{run_suite, CheckStatus, SuiteOptions};
use saag::SnapScaling;

#[derive(Parser)]
#[command(name = "saag", version, about = "SAAG solvers: runs, sweeps and self-checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (solver x seed) combination and write one trace CSV.
    Run(ExperimentArgs),
    /// Repeat the runs over a grid of batch sizes or ℓ2 values.
    Sweep {
        /// `batch` or `lambda`.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values; the standard grid when omitted.
        #[arg(long)]
        values: Option<String>,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Run the built-in verification suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Plain-text `key = value` file, or a trace CSV carrying a config echo.
    #[arg(long)]
    config: Option<PathBuf>,
    /// LibSVM file.
    #[arg(long, conflicts_with = "synthetic")]
    dataset: Option<PathBuf>,
    /// Synthetic generator, e.g. `n=200,d=10,separability=2,flip=0.05,seed=1`.
    #[arg(long)]
    synthetic: Option<String>,
    /// Comma-separated solver kinds.
    #[arg(long, alias = "solver")]
    solvers: Option<String>,
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    l1: Option<String>,
    #[arg(long)]
    l2: Option<String>,
    /// Mini-batch size.
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    /// Comma-separated run seeds.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    eta0: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    shrink: Option<String>,
    #[arg(long)]
    max_backtracks: Option<String>,
    /// Constant step size; disables the line search.
    #[arg(long)]
    fixed_eta: Option<String>,
    #[arg(long)]
    train_fraction: Option<String>,
    #[arg(long)]
    split_seed: Option<String>,
    #[arg(long)]
    reference_budget: Option<String>,
    /// Output CSV; written to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent runs (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Dataset sizes for the enumeration suites.
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 6, 8])]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2])]
    b: Vec<usize>,
    /// Random (w, w~) pairs per configuration.
    #[arg(long, default_value_t = 20)]
    pairs: usize,
    /// Debug mutation: scale the SAAG-II snap term by 1/b instead of 1/n.
    #[arg(long, hide = true)]
    mutate_snap_scaling: bool,
}

/// Error in the user's input rather than during execution.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    Usage(e.to_string()).into()
}

impl ExperimentArgs {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ExperimentConfig::from_file_text(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
            }
            None => ExperimentConfig::default(),
        };
        let dataset = self.dataset.as_ref().map(|p| p.display().to_string());
        let flags = [
            ("dataset", &dataset),
            ("synthetic", &self.synthetic),
            ("solvers", &self.solvers),
            ("loss", &self.loss),
            ("l1", &self.l1),
            ("l2", &self.l2),
            ("b", &self.b),
            ("epochs", &self.epochs),
            ("seeds", &self.seeds),
            ("eta0", &self.eta0),
            ("alpha", &self.alpha),
            ("shrink", &self.shrink),
            ("max_backtracks", &self.max_backtracks),
            ("fixed_eta", &self.fixed_eta),
            ("train_fraction", &self.train_fraction),
            ("split_seed", &self.split_seed),
            ("reference_budget", &self.reference_budget),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v).map_err(usage)?;
            }
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

fn parse_values(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| usage(format!("bad axis value {s:?}"))))
        .collect()
}

fn experiment(args: &ExperimentArgs, sweep: Option<(SweepAxis, Vec<f64>)>) -> anyhow::Result<bool> {
    let cfg = args.config()?;
    let sweep_ref = sweep.as_ref().map(|(a, v)| (*a, v.as_slice()));
    let jobs = plan_jobs(&cfg, sweep_ref).map_err(usage)?;
    let (train, test) = cfg.prepare_data()?;

    let echo = cfg.echo();
    let to_stdout = cfg.out.is_none();
    // with the CSV on stdout the human-readable parts go to stderr
    let say = |text: &str| {
        if to_stdout {
            eprintln!("{text}");
        } else {
            println!("{text}");
        }
    };
    say(&echo.join("\n"));
    say(&format!(
        "train n = {}, test n = {}, d = {}, runs = {}",
        train.n(),
        test.n(),
        train.d(),
        jobs.len()
    ));

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = args.workers {
        if w == 0 {
            bail!(usage("--workers must be >= 1"));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().context("building worker pool")?;
    let mut traces: Vec<_> = pool.install(|| jobs.par_iter().map(|job| run_job(&cfg, job, &train, &test)).collect());

    let f_stars = finalize(&cfg, &jobs, &mut traces, &train)?;
    let meta = metadata(&cfg, sweep_ref, &f_stars, &traces);
    let csv = render_csv(&traces, &meta)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    say(&render_summary(&summarize(&traces)));
    let failures: Vec<_> = traces
        .iter()
        .filter_map(|t| t.failure.as_ref().map(|f| (t, f)))
        .collect();
    for (t, why) in &failures {
        eprintln!("run failed: {} seed {}: {why}", t.solver, t.seed);
    }
    Ok(failures.is_empty())
}

fn verify(args: &VerifyArgs) -> anyhow::Result<bool> {
    let opts = SuiteOptions {
        seed: args.seed,
        sizes: args.n.clone(),
        batch_sizes: args.b.clone(),
        pairs: args.pairs,
        snap_scaling: if args.mutate_snap_scaling {
            SnapScaling::PerBatch
        } else {
            SnapScaling::PerDataset
        },
        ..SuiteOptions::default()
    };
    if args.mutate_snap_scaling {
        println!("mutation active: SAAG-II snap term scaled by 1/b");
    }
    let outcomes = run_suite(&opts)?;
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| o.status == CheckStatus::Failed).count();
    let skipped = outcomes
        .iter()
        .filter(|o| matches!(o.status, CheckStatus::Skipped(_)))
        .count();
    println!(
        "{} passed, {failed} failed, {skipped} skipped",
        outcomes.len() - failed - skipped
    );
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => experiment(args, None),
        Command::Sweep { axis, values, exp } => axis.parse::<SweepAxis>().map_err(usage).and_then(|axis| {
            let values = match values {
                Some(text) => parse_values(text)?,
                None => axis.default_values(),
            };
            experiment(exp, Some((axis, values)))
        }),
        Command::Verify(args) => verify(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use finshap_cli::{cmd_explain, cmd_synthesize, cmd_train_eval, cmd_validate, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "finshap", version, about = "Shapley attribution of profitability-direction classifiers")]
struct Args {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Does not affect results.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic panel, its schema and the planted truth.
    Synthesize,
    /// Accuracy / ROC-AUC grid over model kinds and raw vs. ratio features.
    TrainEval,
    /// Attributions, Top-k rankings and importance histograms for the test year.
    Explain,
    /// Retrain on ranking-selected feature subsets.
    Validate,
}

fn run(args: Args) -> Result<String, CliError> {
    let mut config = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = args.out {
        config.out = out;
    }
    if config.seed > i64::MAX as u64 {
        return Err(CliError::Config("seed must be below 2^63".into()));
    }
    config.resolve_seeds();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", args.workers)))?;
    pool.install(|| match args.command {
        Command::Synthesize => {
            let truth = cmd_synthesize(&config)?;
            Ok(format!("wrote synthetic panel ({} informative features)", truth.informative_features.len()))
        }
        Command::TrainEval => {
            let rows = cmd_train_eval(&config)?;
            Ok(format!("wrote {}-row evaluation grid", rows.len()))
        }
        Command::Explain => {
            let o = cmd_explain(&config)?;
            Ok(format!(
                "explained {} instances (test accuracy {:.3})",
                o.attributions.n_instances(),
                o.eval.accuracy
            ))
        }
        Command::Validate => {
            let v = cmd_validate(&config)?;
            let c = &v.combined;
            Ok(format!(
                "accuracy all={:.3} top-{}={:.3} without-bottom-{}={:.3}",
                c.all_features.eval.accuracy,
                c.keep_top_n,
                c.top_n.eval.accuracy,
                c.drop_bottom_m,
                c.without_bottom_m.eval.accuracy
            ))
        }
    })
    .map(|msg| format!("{msg} -> {}", config.out.display()))
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

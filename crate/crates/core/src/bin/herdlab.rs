use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use herdlab::config::ExperimentConfig;
use herdlab::lab::{self, CheckResult};
use herdlab::runner;

#[derive(Parser)]
#[command(name = "herdlab", version, about = "Social learning experiments and lemma checks")]
struct Cli {
    /// Override the master seed of every experiment.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps, replications and checks.
    #[arg(long, global = true, env = "HERDLAB_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write metrics.csv, config.json and summary.json.
    Run {
        config: PathBuf,
        /// Output directory (default: `output` from the config, else results/<config stem>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the lemma suite on the default models.
    Verify {
        #[arg(long)]
        json: bool,
        /// Replace the cutoff with 1 - c to demonstrate a failing suite.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Run one experiment per value of a config key.
    Sweep {
        config: PathBuf,
        /// `key=v1,v2,...`, e.g. `distribution.alpha=0.5,1,1.5`.
        #[arg(long)]
        param: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write frontier.csv for the runs under a results directory.
    Report { dir: PathBuf },
}

fn load(path: &Path, seed: Option<u64>) -> herdlab::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig, path: &Path, out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| cfg.output.clone()).unwrap_or_else(|| {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        PathBuf::from("results").join(stem.unwrap_or_else(|| "run".into()))
    })
}

fn verify(seed: u64, json: bool, inject_fault: bool) -> bool {
    let mut results = lab::run_suite(seed);
    if inject_fault {
        let flipped = |nu: f64, tau: f64| herdlab::decision::cutoff(nu, tau).map(|c| 1.0 - c);
        results[0] = lab::check_cutoff_shift_with(1_000_000, seed, flipped);
    }
    if json {
        for r in &results {
            println!("{}", serde_json::to_string(r).expect("check results serialize"));
        }
    } else {
        for r in &results {
            println!("{r}");
        }
        let failed = results.iter().filter(|r| !r.passed()).count();
        println!("{} checks, {} failed", results.len(), failed);
    }
    results.iter().all(CheckResult::passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} workers: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Run { config, out } => load(&config, cli.seed).and_then(|cfg| {
            let dir = out_dir(&cfg, &config, out);
            let s = runner::run(&cfg, &dir)?;
            println!(
                "{}: cum_mistakes {:.6} cum_transfers {:.6} classification {}",
                dir.display(),
                s.cum_mistakes,
                s.cum_transfers,
                s.classification.map(|c| c.to_string()).unwrap_or_else(|| "n/a".into())
            );
            Ok(true)
        }),
        Command::Verify { json, inject_fault } => Ok(verify(cli.seed.unwrap_or(0), json, inject_fault)),
        Command::Sweep { config, param, out } => load(&config, cli.seed).and_then(|cfg| {
            let (key, values) = runner::parse_param(&param)?;
            let dir = out_dir(&cfg, &config, out);
            for s in runner::sweep(&cfg, &key, &values, &dir)? {
                println!("{}: cum_mistakes {:.6} cum_transfers {:.6}", s.label, s.cum_mistakes, s.cum_transfers);
            }
            println!("frontier: {}", dir.join("frontier.csv").display());
            Ok(true)
        }),
        Command::Report { dir } => runner::report(&dir).map(|rows| {
            println!("{}", runner::FRONTIER_HEADER);
            for r in rows {
                println!(
                    "{},{},{},{},{}",
                    r.label,
                    r.cum_transfers,
                    r.cum_mistakes,
                    r.classification.map(|c| c.to_string()).unwrap_or_default(),
                    r.pareto
                );
            }
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

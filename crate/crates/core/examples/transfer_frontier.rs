//! Contrarian transfers trade money for mistakes. Sweeps τ, writes the run
//! directories and prints the frontier table.

use herdlab::config::ExperimentConfig;
use herdlab::policy::TransferScheme;
use herdlab::runner::{report, sweep};

fn main() -> herdlab::Result<()> {
    let dir = std::env::temp_dir().join("herdlab-frontier");
    let cfg = ExperimentConfig::exact(1.0, 5000).with_transfers(TransferScheme::ConstantContrarian { tau: 0.0 });
    let values: Vec<String> = ["0", "0.1", "0.3", "0.5"].iter().map(|s| s.to_string()).collect();
    sweep(&cfg, "transfers.tau", &values, &dir)?;
    for row in report(&dir)? {
        println!(
            "{:<18} transfers {:>10.3} mistakes {:>8.4} {:>12} pareto={}",
            row.label,
            row.cum_transfers,
            row.cum_mistakes,
            row.classification.map(|c| c.to_string()).unwrap_or_default(),
            row.pareto
        );
    }
    println!("frontier written to {}", dir.join("frontier.csv").display());
    Ok(())
}

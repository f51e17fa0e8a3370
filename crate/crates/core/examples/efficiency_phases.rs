//! Efficient vs inefficient learning under full disclosure: cumulative
//! mistakes plateau for α < 1 and keep growing for α ≥ 1.

use herdlab::config::ExperimentConfig;
use herdlab::engine::exact::exact_evolve;
use herdlab::metrics::efficiency_diagnostics;

fn main() -> herdlab::Result<()> {
    println!("{:>5} {:>12} {:>12} {:>9} {:>14}", "alpha", "cum_mistakes", "tail_incr", "slope", "class");
    for alpha in [0.5, 0.75, 1.0, 1.25, 1.5] {
        let run = exact_evolve(&ExperimentConfig::exact(alpha, 5000))?;
        let r = efficiency_diagnostics(&run.periods)?;
        println!(
            "{alpha:>5} {:>12.4} {:>12.3e} {:>9.4} {:>14}",
            r.cum_mistakes, r.tail_increment, r.slope, r.classification
        );
    }
    Ok(())
}

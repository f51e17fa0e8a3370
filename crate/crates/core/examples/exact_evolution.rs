//! Exact evolution of the planner's belief law on an LLR grid: mistake
//! probabilities, the martingale property, and predicted vs realized growth
//! of E|ℓ|.

use herdlab::config::ExperimentConfig;
use herdlab::engine::exact::exact_evolve;

fn main() -> herdlab::Result<()> {
    let run = exact_evolve(&ExperimentConfig::exact(1.0, 2000))?;
    let inc = run.realized_increments();
    for t in [1, 2, 3, 10, 100, 1000, 2000] {
        let p = &run.periods[t - 1];
        println!(
            "t={t:>4} agent={:.6} planner={:.6} E|l|={:.4} E[pi]={:.12} dE|l|={:.3e} delta={:.3e}",
            p.p_mistake_agent,
            p.p_mistake_planner,
            p.e_abs_llr,
            run.mean_belief[t - 1],
            inc[t - 1],
            run.delta[t - 1]
        );
    }
    println!("diagnostics: {:?}", run.diagnostics);
    Ok(())
}

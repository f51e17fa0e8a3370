//! Disclosure of the last k actions, solved by a dynamic program over action
//! windows.

use herdlab::config::ExperimentConfig;
use herdlab::engine::exact::exact_evolve;
use herdlab::engine::lastk;
use herdlab::engine::Environment;
use herdlab::policy::DisclosurePolicy;

fn main() -> herdlab::Result<()> {
    let env = Environment::full_disclosure(1.0)?;
    let tables = lastk::tables(&env, 1, 3)?;
    println!("k=1: nu_2(h) = {:.4}, nu_2(l) = {:.4}", tables[1].social_prob(1), tables[1].social_prob(0));

    for k in [1, 2, 4, 8] {
        let cfg = ExperimentConfig::exact(1.0, 1000).with_disclosure(DisclosurePolicy::LastK { k });
        let run = exact_evolve(&cfg)?;
        let last = run.periods.last().expect("nonempty horizon");
        println!(
            "k={k}: P[mistake] at t=1000 = {:.3e}, cumulative = {:.4}, planner = {:.3e}",
            last.p_mistake_agent, last.cum_mistakes, last.p_mistake_planner
        );
    }
    Ok(())
}

//! Seeded Monte Carlo: one recorded trajectory, then a parallel estimate of
//! the mistake curve with standard errors.

use herdlab::engine::mc::{estimate, simulate_trajectory};
use herdlab::engine::Environment;

fn main() -> herdlab::Result<()> {
    let env = Environment::full_disclosure(1.0)?;
    let traj = simulate_trajectory(&env, 8, 2024, 0, None)?;
    println!("theta = {:?}", traj.theta);
    for p in &traj.periods {
        println!(
            "t={} nu={:.4} cutoff={:.4} q={:.4} action={:?} pi={:.4}",
            p.t, p.nu, p.cutoff, p.q, p.action, p.pi
        );
    }

    let run = estimate(&env, 10, 100_000, 7)?;
    println!("\n{} replications", run.replications);
    for (p, se) in run.periods.iter().zip(&run.agent_se) {
        println!("t={:>2} P[mistake] = {:.5} ± {:.5}", p.t, p.p_mistake_agent, se);
    }
    Ok(())
}

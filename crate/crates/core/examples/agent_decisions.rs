//! Posterior, cutoff and actions of a single agent, and how far a transfer
//! can move the cutoff.

use herdlab::decision::{cutoff, decide, posterior, presignal_action};

fn main() -> herdlab::Result<()> {
    println!("posterior(q=0.7, nu=0.6) = {:.6}", posterior(0.7, 0.6)?);
    for (nu, tau) in [(0.8, 0.0), (0.5, 0.4), (0.9, -0.5), (0.2, 0.3)] {
        let c = cutoff(nu, tau)?;
        println!(
            "nu={nu:<4} tau={tau:<5} cutoff={c:.4} shift={:.4} <= |tau|={:.1}  presignal={:?}  at q=0.5: {:?}",
            (c - (1.0 - nu)).abs(),
            tau.abs(),
            presignal_action(nu, tau)?,
            decide(0.5, nu, tau)?,
        );
    }
    Ok(())
}

//! The mirrored power family: unconditional and conditional CDFs, ε_F, and
//! the efficiency integral ∫ 1/F for a few tail exponents.

use herdlab::signals::{EfficiencyIntegral, SignalModel};
use herdlab::Side;

fn main() -> herdlab::Result<()> {
    println!("{:>5} {:>8} {:>8} {:>8} {:>8} {:>14}", "alpha", "F(.1)", "F_h(.1)", "F_l(.1)", "eps_F", "int 1/F");
    for alpha in [0.25, 0.5, 0.75, 1.0, 1.5, 2.0] {
        let m = SignalModel::power(alpha)?;
        let integral = match m.efficiency_integral() {
            EfficiencyIntegral::Finite { value } => format!("{value:.6}"),
            EfficiencyIntegral::Divergent => "divergent".to_string(),
        };
        println!(
            "{alpha:>5} {:>8.5} {:>8.5} {:>8.5} {:>8.5} {integral:>14}",
            m.cdf(0.1),
            m.cdf_conditional(Side::High, 0.1)?,
            m.cdf_conditional(Side::Low, 0.1)?,
            m.epsilon_f(),
        );
    }

    // inverse-CDF sampling of private beliefs
    let m = SignalModel::power(1.0)?;
    let q = m.sample_private_belief(Side::High, 0.25)?;
    println!("\nalpha=1: F_h^-1(0.25) = {q:.12} (sqrt(0.25) = 0.5)");
    Ok(())
}

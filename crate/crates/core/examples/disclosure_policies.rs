//! What each disclosure policy shows an agent, and what each transfer
//! scheme pays her.

use herdlab::decision::Belief;
use herdlab::policy::{disclose, transfer, DisclosurePolicy, EpsilonSchedule, IntervalValue, TransferScheme};

fn main() -> herdlab::Result<()> {
    let pi = Belief::from_prob(0.65);
    let policies = [
        DisclosurePolicy::Full,
        DisclosurePolicy::NoDisclosure,
        DisclosurePolicy::Stochastic {
            epsilon: EpsilonSchedule::Constant { value: 0.7 },
        },
        DisclosurePolicy::BinarySplit { lo: 0.4, hi: 0.9 },
    ];
    for p in &policies {
        let branches = p.branches(pi, 1)?;
        let law: Vec<String> = branches
            .iter()
            .map(|(w, nu)| format!("{:.3} w.p. {w:.3}", nu.prob()))
            .collect();
        let draw = disclose(p, pi, 1, None, 0.9)?;
        println!("{p:?}\n    nu ~ [{}], draw at u=0.9 -> {:.3}", law.join(", "), draw.prob());
    }

    let schemes = [
        TransferScheme::Zero,
        TransferScheme::ConstantContrarian { tau: 0.3 },
        TransferScheme::Table {
            entries: vec![
                IntervalValue { lo: 0.0, hi: 0.5, value: 0.1 },
                IntervalValue { lo: 0.5, hi: 1.0, value: -0.1 },
            ],
        },
    ];
    for s in &schemes {
        let taus: Vec<String> = [0.2, 0.5, 0.8]
            .iter()
            .map(|&nu| transfer(s, Belief::from_prob(nu), 1).map(|t| format!("{t:+.2}")))
            .collect::<herdlab::Result<_>>()?;
        println!("{s:?}: tau(0.2, 0.5, 0.8) = {}", taus.join(" "));
    }
    Ok(())
}

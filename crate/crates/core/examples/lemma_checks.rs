//! The lemma suite behind `herdlab verify`, plus a deliberately broken
//! cutoff that the suite catches.

use herdlab::decision::cutoff;
use herdlab::lab::{check_cutoff_shift_with, run_suite};

fn main() {
    let results = run_suite(0);
    for r in &results {
        println!("{r}");
    }
    let flipped = check_cutoff_shift_with(100_000, 0, |nu, tau| cutoff(nu, tau).map(|c| 1.0 - c));
    println!("\nwith the cutoff orientation flipped:\n{flipped}");
}

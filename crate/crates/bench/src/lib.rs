//! Shared inputs for the benchmarks.

use nccap::{parry_chain, rll_constraint, MarkovChain, RllParams};

/// Max-entropy chain on the `(d, k)` constraint.
pub fn rll_chain(d: usize, k: Option<usize>) -> MarkovChain {
    let p = RllParams::new(d, k).expect("valid run-length parameters");
    parry_chain(&rll_constraint(p)).expect("run-length constraints are irreducible")
}

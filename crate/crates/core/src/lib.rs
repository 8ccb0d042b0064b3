//! Capacity asymptotics of binary finite-type constrained systems sent
//! through a binary symmetric channel.
//!
//! The crate computes, for a constraint `S` and crossover probability `eps`,
//! the small-noise expansion
//!
//! ```text
//! C(S, eps) = C(S) + c_log * eps * ln(1/eps) + c_lin * eps + O(eps^2 ln^2 eps)
//! ```
//!
//! together with rigorous entropy-rate bounds for hidden Markov outputs and
//! finite-dimensional capacity bounds that sandwich the true value.
//!
//! All entropies are in nats unless a function says otherwise.

pub mod asymptotics;
pub mod capacity;
pub mod channel;
pub mod constraint;
pub mod error;
pub mod markov;
mod numeric;
pub mod rll;
pub mod spectral;
pub mod sweep;
pub mod verify;
pub mod word;

pub use asymptotics::{
    classify_word, expansion_of, f_nk, g_nk, g_positive, h_nk, AsymptoticExpansion, WordClass,
};
pub use capacity::{
    capacity_expansion, capacity_sandwich, optimize_hm, optimize_hn, sharpness_probe, taylor_probe,
    CapacityExpansion, HmOptimum, HnOptimum, SharpnessRow, TaylorProbe,
};
pub use channel::{
    binary_entropy, cond_entropy_birch_lower, cond_entropy_output, entropy_rate_sandwich,
    joint_xz_prob, output_prob, ChannelParameter, EntropySandwich,
};
pub use constraint::{FiniteTypeConstraint, VertexGraph};
pub use error::{Error, Result};
pub use markov::{
    chain_from_kernel, chain_from_pvector, pvector_of, MarkovChain, StationaryPVector,
};
pub use numeric::NeumaierSum;
pub use rll::{rho0, rll_constraint, RllParams};
pub use spectral::{noiseless_capacity, parry_chain, perron, PerronData};
pub use sweep::{SweepFit, SweepRecord};
pub use word::BitWord;

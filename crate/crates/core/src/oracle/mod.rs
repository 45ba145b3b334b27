//! Stability, optimal-constant estimates and global-optimality verdicts for `φ ≡ m`.

mod decision;
mod estimator;
mod lattice;

pub use decision::{decide_uniform, verification_gap, Decision, Verdict};
pub use estimator::{eqal11_sequence, estimate_pn, rayleigh_quotient, PnEstimate, SearchConfig};
pub use lattice::{
    lattice_min, lattice_min_ok, lattice_min_pfc, lattice_vector, representable_norms,
    stability_test, LatticeMinResult, StabilityResult,
};

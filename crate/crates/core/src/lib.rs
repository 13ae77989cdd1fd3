//! Probabilistic relational Hoare logic over a small probabilistic
//! imperative language, with exact rational arithmetic throughout.
//!
//! - [`dist`]: finite sub-distributions, couplings, and a max-flow decision
//!   procedure for liftings of relations.
//! - [`pwhile`]: the language, its exact interpreter, and equivalence-preserving
//!   rewrites.
//! - [`prhl`]: judgments, proof scripts, the proof checker and semantic
//!   validation.
//! - [`consequences`]: distance bounds and stochastic dominance read off
//!   verified judgments.
//! - [`case_studies`]: packaged judgments with their proofs.

pub mod case_studies;
pub mod consequences;
pub mod dist;
pub mod prhl;
pub mod pwhile;

//! Stochastic mass-action reaction networks.
//!
//! The crate covers the pieces needed to study positive recurrence of the
//! continuous-time Markov chain attached to a reaction network:
//!
//! - [`model`] and [`parse`]: networks, rate constants, states and the `.crn`
//!   text format.
//! - [`kinetics`]: mass-action intensities, the entropy-like Lyapunov
//!   function `V`, the generator applied to `V`, the embedded jump chain and
//!   path probabilities.
//! - [`structure`]: linkage classes, weak reversibility, the binary and
//!   species-complex conditions, the structural recurrence verdict and
//!   reachable-set enumeration.
//! - [`tiers`]: D-type and S-type tier partitions along monomial state
//!   sequences, path tiers, witness paths, the tier-inclusion pattern scan
//!   and exact k-step embedded drift of `V`.
//! - [`sim`]: Gillespie simulation, return-time probes, occupancy and
//!   censored-chain stationary estimates, Monte Carlo drift.
//!
//! Data-parallel loops (replicas, path enumeration, pattern scans) run on
//! rayon when the `parallel` feature is enabled (default) and sequentially
//! otherwise; see [`par`].

pub mod error;
pub mod kinetics;
pub mod model;
pub mod networks;
pub mod par;
pub mod parse;
pub mod rng;
pub mod sim;
pub mod structure;
pub mod tiers;

pub use error::{Error, Result};
pub use kinetics::{intensity, lyapunov, lyapunov_increment};
pub use model::{Complex, ComplexId, MassActionSystem, Reaction, ReactionId, ReactionNetwork, Species, State};
pub use par::Exec;

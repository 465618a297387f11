use thiserror::Error;

use crate::model::State;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown reaction index {0}")]
    UnknownReaction(usize),

    #[error("species name must be a nonempty identifier, got {0:?}")]
    InvalidSpeciesName(String),

    #[error("duplicate species {0:?}")]
    DuplicateSpecies(String),

    #[error("reaction {0} has identical source and product")]
    SelfLoop(String),

    #[error("duplicate reaction {0}")]
    DuplicateReaction(String),

    #[error("rate constant for reaction {reaction} must be finite and positive, got {value}")]
    InvalidRate { reaction: usize, value: f64 },

    #[error("expected {expected} rate constants, found {found}")]
    RateCountMismatch { expected: usize, found: usize },

    #[error("copy number {0} exceeds the supported maximum of {max}", max = crate::model::MAX_COUNT)]
    CountTooLarge(u64),

    #[error("state {0} is absorbing: total rate is zero")]
    AbsorbingState(State),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("sequence is not tail-normalized: complex {complex} has zero intensity at n0 = {n0} but not for all n")]
    TailNotNormalized { complex: usize, n0: u64 },

    #[error("every complex lies in the top D-type tier; the sequence is not a proper tier sequence for this network")]
    NoDropComplex,

    #[error("witness path construction failed: {0}")]
    WitnessUnavailable(String),

    #[error("path enumeration needs r^k = {required} paths, above the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("pattern scan supports at most {max} species, network has {found}")]
    TooManySpecies { max: usize, found: usize },

    #[error("region splits into {} closed communicating classes: {classes:?}", classes.len())]
    AmbiguousRegion { classes: Vec<Vec<State>> },

    #[error("region is empty")]
    EmptyRegion,

    #[error("power iteration did not reach residual {tolerance:e} within {iterations} iterations")]
    NotConverged { tolerance: f64, iterations: usize },

    #[error("initial state {0} is not inside the return target")]
    StartOutsideTarget(State),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

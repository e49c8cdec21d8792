use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("register width {n} exceeds the full-simulation cap of {cap} qubits")]
    WidthTooLarge { n: u32, cap: u32 },

    #[error("expected {expected} phase states for {groups} groups, got {got}")]
    ArityMismatch {
        expected: usize,
        got: usize,
        groups: usize,
    },

    #[error("survivor product {size} exceeds the support cap {cap}")]
    SupportTooLarge { size: u128, cap: u64 },

    #[error("subset sum weights are degenerate (max weight < 2)")]
    DegenerateWeights,

    #[error("lattice rows are linearly dependent")]
    DependentRows,

    #[error("brute force enumeration infeasible for m = {m} (cap {cap})")]
    TooLarge { m: usize, cap: usize },

    #[error("relative phase is not ±1 (re = {re}, im = {im})")]
    NonRealPhase { re: f64, im: f64 },

    #[error("no subset sum solution found for group {group}")]
    SvNotFound { group: usize },

    #[error("no candidate pair with exponent gap 2^(n-1)")]
    NoValidPair,

    #[error("projective measurement missed the selected two-level subspace")]
    ProjectionMissed,

    #[error("width {n} is infeasible for this operation: {reason}")]
    InfeasibleWidth { n: u32, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

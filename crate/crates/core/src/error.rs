use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T, E = MorphError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorphError {
    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    #[error("incomplete solution at node `{node}`: no pick for child `{child}`")]
    IncompleteSolution { node: String, child: String },

    #[error("unknown reference `{reference}` in {context}")]
    UnknownReference { reference: String, context: String },

    #[error("node `{0}` has no admissible composite solution")]
    InfeasibleNode(String),

    #[error("node `{node}` is not composable: {reason}")]
    NotComposable { node: String, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("no-op improvement: from and to are both {0}")]
    NoOpAction(u8),

    #[error("stale improvement action: expected current value {expected}, found {found}")]
    StaleAction { expected: u8, found: u8 },

    #[error("length mismatch: expected {expected} levels, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("cardinality mismatch: expected eta {expected}, found {found}")]
    EtaMismatch { expected: u32, found: u32 },

    #[error("design alternative `{0}` carries no multiset estimate")]
    MissingEstimate(String),

    #[error("component `{0}` is both fixed by the kernel and listed as a choice group")]
    ComponentOverlap(String),

    #[error("choice group `{0}` is empty")]
    EmptyGroup(String),

    #[error("duplicate item id `{0}` in knapsack instance")]
    DuplicateItem(String),

    #[error("budget {0} admits no selection with one item per group")]
    InfeasibleBudget(String),

    #[error("knapsack cost grid too large ({0} cells)")]
    GridTooLarge(u128),

    #[error("model failed validation:\n{0}")]
    Invalid(ValidationReport),
}

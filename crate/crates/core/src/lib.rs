//! Hierarchical morphological design: compose a system from per-component
//! design alternatives over a tree, score composites by `(w; e)` quality,
//! extract Pareto layers, locate bottlenecks, work with interval multiset
//! estimates, and extend a solution kernel under a budget.

pub mod aggregate;
pub mod analysis;
pub mod document;
pub mod dot;
pub mod error;
pub mod fixtures;
pub mod generate;
pub mod instance;
pub mod model;
pub mod multiset;
pub mod quality;
pub mod synthesis;

pub use aggregate::{
    extend_kernel, solve_exact, solve_greedy, AggregatedSolution, Amount, ChoiceGroup, ExactSolution, Item, Method,
    Selection,
};
pub use analysis::{apply_improvement, bottlenecks, kernel, superstructure, Action, Bottleneck, Kernel, Slot};
pub use document::{parse_model, DocumentError, ModelDocument, Reference};
pub use error::{MorphError, Result};
pub use instance::{system_quality, Candidate, CompositeSolution, NodeInstance};
pub use model::{
    validate_model, CompatEntry, CompatibilityTable, Component, ComponentKind, DesignAlternative, MorphModel,
    OrdinalScale, ValidationReport,
};
pub use multiset::{
    enumerate_estimates, generalized_median, multiset_number, proximity, uplus, MedianResult, Metric,
    MultisetEstimate, Proximity,
};
pub use quality::{e_dominates, n_dominates, EVector, QualityVector};
pub use synthesis::{
    enumerate_admissible, hierarchical_synthesize, pareto_filter, synthesize_brute, synthesize_dp,
    synthesize_multiset, Algorithm, Frontier, MultisetFrontier, MultisetSolution, Retention, Synthesis,
    SynthesisOptions,
};

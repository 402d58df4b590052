//! Decision support: weighted decision matrix, recommendation with weight
//! sensitivity, and phase-level explanations.

pub mod explain;
pub mod matrix;
pub mod select;

pub use explain::{explain, Assumption, Explanation, Finding, FindingKind, PhaseFinding};
pub use matrix::{
    build_decision_matrix, matrix_from_raw, Criterion, DecisionMatrix, EvaluateError, Weights,
};
pub use select::{select_coa, sensitivity, Selection, SensitivityEntry};

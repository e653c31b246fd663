//! Rule extraction from trained networks: per-sample explanations, their
//! simplification, feature importance and class-level explanations.

mod generate;
mod simplify;
mod tree;

pub use generate::{
    explain_prediction, explain_sample, feature_importance, global_explanation, ExplanationTrace, GlobalExplanation, InclusionTest,
};
pub use simplify::{
    collapse_repeated_operands, collapse_sample_explanation, collapse_single_operands, push_negations_down,
    remove_redundant_predicates, simplify, simplify_tree, SampleExplanation,
};
pub use tree::{Explanation, LogicType};

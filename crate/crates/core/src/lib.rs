//! Neural reasoning networks for tabular binary classification.
//!
//! Networks are stacks of weighted Lukasiewicz conjunction/disjunction
//! blocks over thresholded feature predicates. Training interleaves
//! gradient steps with a bandit that re-wires weak predicate slots, and
//! every prediction can be explained as a conjunction of threshold rules.

pub mod condition;
pub mod error;
pub mod eval;
pub mod explain;
pub mod logic;
pub mod model;
pub mod network;
pub mod preprocess;
pub mod scalar;
pub mod stats;
pub mod trainer;

pub use condition::{CmpOp, ThresholdCondition};
pub use error::{NrnError, Result};
pub use logic::{LogicKind, NodeParams, TruthValue};
pub use network::{ArchitectureConfig, Connectivity, NormalForm, Predicate};
pub use scalar::Scalar;

/// Double precision network, the type used by training and explanation.
pub type Network = network::Network<f64>;
pub type LogicBlock = network::LogicBlock<f64>;

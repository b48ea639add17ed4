//! Tree decompositions and elimination orderings.

mod decomposition;
mod elimination;
mod exact;
mod heuristic;
mod local;

pub use decomposition::{
    parse_decomposition, validate_decomposition, write_decomposition, TreeDecomposition, Violation,
};
pub use elimination::{elimination_width, ordering_to_decomposition, Elimination, EliminationOrdering};
pub use exact::{exact_treewidth, ExactTreewidth, DEFAULT_EXACT_BUDGET, MAX_EXACT_VERTICES};
pub use heuristic::{heuristic_order, HeuristicStrategy};
pub use local::{
    lift_decomposition, local_interaction_path_decomposition, push_decomposition,
    LocalPathDecomposition,
};

pub mod circuit;
pub mod error;
pub mod multigraph;
pub mod oneway;
pub mod oracle;
pub mod planner;
pub mod random;
pub mod tensor;
pub mod treewidth;

pub use error::{Error, Result};

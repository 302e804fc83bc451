//! Calderon-Zygmund decomposition on r-grandchildren, stopping families and
//! sparse collections.

mod cz;
mod sparse;
mod stopping;

pub use cz::{cz_decompose_r, BadCube, BadPart, CzCheck, CzResult};
pub use sparse::{check_sparse, SparseCollection, SparseEntry, SparseReport, Violation, Witness};
pub use stopping::{
    build_stopping_family, ForestNode, StopNode, StoppingForest, StoppingMode, StoppingOptions,
    Trigger,
};

//! Low-dilation embeddings of multidimensional grids into their optimal
//! hypercube, with every intermediate object exposed and checkable.

pub mod cubelabel;
pub mod embed2d;
pub mod error;
mod flow;
pub mod grid;
pub mod pipeline;
pub mod report;
pub mod rounding;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{GridSpec, GridVertex};

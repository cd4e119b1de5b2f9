pub mod compile;
pub mod error;
pub mod gates;
pub mod gaussian;
pub mod lattice;
pub mod measurement;
pub mod protocol;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use gaussian::{graph_distance, CovarianceState, GraphState, Symplectic};

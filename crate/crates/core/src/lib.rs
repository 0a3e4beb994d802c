//! Discretized Riemannian surfaces as finite metric measure spaces, with
//! volume collapsing functions, collapsing graphs and Gromov–Hausdorff
//! estimates for sequences of such spaces.

pub mod collapse;
pub mod error;
pub mod generators;
pub mod gh;
pub mod graph;
pub mod harness;
pub mod io;
pub mod metric;
pub mod space;
pub mod subset;
mod union_find;

pub use error::{Error, Result};
pub use metric::DistanceMatrix;
pub use space::{validate_space, Edge, FiniteMetricMeasureSpace, Point, ValidationReport};
pub use subset::PointSubset;

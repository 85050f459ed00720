//! Numerical Finsler geometry for boundary distance inverse problems.
//!
//! The crate is organized bottom-up:
//!
//! * [`minkowski`]: fiberwise norms, fundamental tensor, Legendre transform and duality.
//! * [`elastic`]: stiffness tensors, Christoffel matrices and the qP Finsler norm.
//! * [`domain`]: compact 2-D regions with parameterized boundaries.
//! * [`geodesic`]: spray, flow integration, exponential maps, cut and focal distances.
//! * [`distance`]: curve length, the graph distance oracle, boundary distance functions
//!   and classification of good directions.
//! * [`reconstruction`]: the inverse pipeline and the non-uniqueness construction.

pub mod error;
pub mod numeric;
pub mod minkowski;
pub mod elastic;
pub mod domain;
pub mod geodesic;
pub mod distance;
pub mod reconstruction;

pub use error::{Error, Result};
pub use minkowski::{Covector, FiberNorm, FundamentalTensor};

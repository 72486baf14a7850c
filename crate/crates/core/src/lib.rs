//! Inertial forward-backward splitting for monotone inclusions in a general
//! metric, its primal-dual specialization for convex-concave saddle-point
//! problems, and total-variation imaging problems to exercise both.

pub mod error;
pub mod imaging;
pub mod linops;
pub mod operators;
pub mod primal_dual;
pub mod splitting;

pub use error::{Error, Result};

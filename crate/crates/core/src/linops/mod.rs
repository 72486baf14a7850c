//! Vectors, linear maps, metrics and spectral estimates.

mod map;
mod metric;
mod sparse;
mod spectral;
pub mod vector;

pub use map::{LinearMap, MapKind, MatrixFreeOp};
pub use metric::{m_norm_sq, Metric};
pub use sparse::CsrMatrix;
pub use spectral::{
    block_pd_check, op_norm, op_norm_estimate, pd_margin, BlockPdReport, DEFAULT_POWER_ITERS,
    DEFAULT_POWER_TOL, DEFAULT_SEED, DENSE_LIMIT,
};
pub(crate) use spectral::weighted_norm;

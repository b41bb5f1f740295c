//! Conservative semi-Lagrangian solver for the ES-BGK kinetic model in one
//! space dimension with two or three velocity dimensions.

// Index loops mirror the tensor notation; `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod grid;
pub mod moments;
pub mod nse;
pub mod projection;
pub mod reconstruction;
pub mod relaxation;
pub mod time_integration;

pub use error::{Result, SolverError};

/// Environment variable overriding the worker-thread count.
pub const THREADS_ENV: &str = "ESBGK_THREADS";

/// Sizes the global rayon pool from `ESBGK_THREADS` when set. Returns the
/// number of threads in use. Calling it again after the pool exists is harmless.
pub fn configure_threads() -> Result<usize> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| SolverError::InvalidParameter(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(SolverError::InvalidParameter(format!("{THREADS_ENV} must be positive")));
        }
        // An already initialised pool keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

//! Time-optimal control of two qubits with opposite drifts, steered to SWAP-equivalent gates.
//!
//! Each block evolves as Ẋ_k = −i(±ω₀S_z + u·S)X_k with |u| ≤ γ. The crate enumerates the
//! analytic extremal families, selects the fastest, propagates and verifies control laws, and
//! scans closed-loop extremals numerically.

pub mod cli;
pub mod costate;
pub mod error;
pub mod extremals;
pub mod optimizer;
pub mod propagate;
pub mod scan;
pub mod su2;

pub use error::{Error, Result};

/// Thread pool sized by the `WORKERS` environment variable (default: available parallelism).
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("WORKERS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidArgument(format!("WORKERS must be a positive integer, got {v:?}")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

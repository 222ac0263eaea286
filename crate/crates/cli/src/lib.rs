//! Experiment driver: configuration, the five experiments, and their outputs.

// NaN-rejecting guards are written as `!(x > 0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;

/// Caps the global rayon pool at `QITE_THREADS` when set.
pub fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("QITE_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| anyhow::anyhow!("QITE_THREADS: expected a positive integer, got {v:?}"))?;
        if n == 0 {
            anyhow::bail!("QITE_THREADS: must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

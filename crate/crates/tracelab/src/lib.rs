//! Trace-reconstruction laboratory: insertion-deletion channel simulation,
//! two-stage alignment, complex-analytic trace statistics, Lagrange coefficient
//! extraction, Littlewood-type polynomial scans, and desk-scale bit-recovery
//! pipelines.
//!
//! Everything is deterministic under a master seed: every stochastic entry
//! point derives an independent stream with [`seed::stream_rng`], so results
//! are identical regardless of worker count.

pub mod align;
pub mod bits;
pub mod channel;
pub mod error;
pub mod genfun;
pub mod interp;
pub mod littlewood;
pub mod pool;
pub mod recon;
pub mod seed;

pub use bits::BitString;
pub use channel::{ChannelParams, ShiftSpec, TraceRecord};
pub use error::{Error, Result};
pub use pool::SamplePool;

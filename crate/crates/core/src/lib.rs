//! Trace-driven simulator for video-on-demand proxy cache replacement.
//!
//! Modules, bottom up:
//!
//! - [`catalog`]: videos, origin servers, and the catalog file format.
//! - [`workload`]: modified-Poisson arrivals, Zipf-like selection, session
//!   truncation, and trace files.
//! - [`cache`]: the byte-capacity cache and its eviction loop.
//! - [`policy`]: rank-value scoring and the baseline policies.
//! - [`metrics`]: hit ratio, byte volume, latency.
//! - [`config`] and [`sim`]: run configuration, the driver, sweeps and
//!   comparisons.

pub mod cache;
pub mod catalog;
pub mod config;
pub mod error;
pub mod metrics;
pub mod policy;
pub mod sim;
pub mod workload;

pub use cache::{Access, AdmitOutcome, Cache, CacheEntry, Eviction};
pub use catalog::{Catalog, ServerId, ServerProfile, VideoId, VideoMeta};
pub use config::{Preset, SimConfig};
pub use error::{Error, Result};
pub use metrics::SimReport;
pub use policy::{PolicyConfig, PolicyKind, ReplacementPolicy};
pub use sim::{compare, run_simulation, run_sweep, RunRecord};

//! System-level simulator for a multi-antenna OFDMA downlink.
//!
//! The crate models a 19-site, 57-sector hexagonal network and measures the
//! central site under full-buffer traffic. Each TTI runs the usual radio
//! resource management chain: Jakes fading, LMMSE/MRC post-detection SINR,
//! delayed and quantized CQI, a two-stage (time domain, then
//! frequency/spatial domain) proportional-fair family scheduler, EESM-based
//! link adaptation with an outer loop, and stop-and-wait HARQ with chase
//! combining. Soft frequency reuse enters through per-PRB power masks that
//! both shape interference and feed the power-aware scheduling metrics.
//!
//! Module map:
//!
//! * [`geometry`]: layout, UE drop, path loss and sector pattern
//! * [`channel`]: fading links, frequency response, CQI pipeline
//! * [`detect`]: MRC/LMMSE detectors and per-mode SINR
//! * [`link_adapt`]: MCS table, EESM, BLEP model, ILLA/OLLA
//! * [`harq`]: stop-and-wait HARQ pools
//! * [`scheduler`]: PF/PPF/MMPF/MPMPF metrics, TD ranking, FD/SD allocation
//! * [`sfr`]: sub-band partitioning and power masks
//! * [`engine`]: per-TTI loop and drop statistics
//! * [`stats`]: Jain index, coverage percentile, multi-drop aggregation
//! * [`config`]: the run configuration and its file format

pub mod channel;
pub mod config;
pub mod detect;
pub mod engine;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod harq;
pub mod link_adapt;
pub mod scheduler;
pub mod sfr;
pub mod stats;

pub use config::SystemConfig;
pub use engine::{run_drop, run_drops, DropState, DropStats};
pub use error::{Error, Result};
pub use exec::Exec;
pub use stats::{aggregate, coverage, jain_index, Report};

//! Two-stage packet scheduler.
//!
//! The time-domain (TD) stage ranks a sector's UEs by a full-band metric and
//! keeps at most `max_mux_ues`. The frequency/spatial-domain (FD/SD) stage
//! first places pending HARQ retransmissions, then gives every remaining PRB
//! to the (UE, mode) option with the largest metric: one stream to one UE,
//! two streams to one UE (SU-MIMO), or one stream each to two UEs (MU-MIMO).

mod alloc;
mod metrics;
mod trackers;

pub use alloc::{
    band_means, build_ue_metrics, fd_sd_allocate, full_band_metric, td_rank, Allocation, PrbAssignment, PrbMetrics,
    PrbUse, RetxRequest, RetxTag, UeMetrics, UNAVAILABLE,
};
pub use metrics::{metric_mmpf, metric_mpmpf, metric_pf, metric_ppf, AlphaPreset, Algorithm, SchedulerParams, StreamInput};
pub use trackers::{update_trackers, CellTracker, CqiAverages, UeTracker};

//! Throughput statistics over UEs and drops.

use serde::{Deserialize, Serialize};

use crate::engine::DropStats;
use crate::error::{Error, Result};

/// `(Σx)² / (n Σx²)`
pub fn jain_index(throughputs: &[f64]) -> Result<f64> {
    if throughputs.is_empty() {
        return Err(Error::Empty("throughput vector"));
    }
    if throughputs.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidArgument("throughputs must be nonnegative".into()));
    }
    let sum: f64 = throughputs.iter().sum();
    let sum_sq: f64 = throughputs.iter().map(|x| x * x).sum();
    if sum_sq == 0.0 {
        return Err(Error::AllZero);
    }
    Ok(sum * sum / (throughputs.len() as f64 * sum_sq))
}

/// 5th-percentile throughput, nearest rank: the `ceil(0.05 n)`-th smallest.
pub fn coverage(throughputs: &[f64]) -> Result<f64> {
    percentile_nearest_rank(throughputs, 5)
}

/// Nearest-rank percentile for an integer percent in `1..=100`.
pub fn percentile_nearest_rank(xs: &[f64], percent: u32) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Empty("throughput vector"));
    }
    if !(1..=100).contains(&percent) {
        return Err(Error::InvalidArgument(format!("percentile {percent} outside 1..=100")));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    // ceil(p n / 100) in integer arithmetic, so 0.05·20 is exactly 1.
    let rank = (percent as usize * xs.len()).div_ceil(100);
    Ok(sorted[rank.max(1) - 1])
}

/// Statistics of one variant, pooled over its drops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub n_drops: usize,
    /// Mean over drops of the per-sector cell throughput, bits/s.
    pub cell_throughput: f64,
    /// 5th percentile of the pooled UE throughputs, bits/s.
    pub coverage: f64,
    pub jain: f64,
    pub mean_ue_throughput: f64,
    /// Pooled first-transmission BLER.
    pub bler: f64,
    /// Pooled per-UE throughputs in drop order, bits/s.
    pub ue_throughputs: Vec<f64>,
}

pub fn aggregate(drops: &[DropStats]) -> Result<Report> {
    if drops.is_empty() {
        return Err(Error::Empty("drop list"));
    }
    let ue_throughputs: Vec<f64> = drops.iter().flat_map(|d| d.ue_throughput.iter().copied()).collect();
    let cell_throughput = drops.iter().map(|d| d.mean_cell_throughput()).sum::<f64>() / drops.len() as f64;
    let first_tx: u64 = drops.iter().map(|d| d.first_tx).sum();
    let first_tx_nack: u64 = drops.iter().map(|d| d.first_tx_nack).sum();
    let mean_ue_throughput = if ue_throughputs.is_empty() {
        0.0
    } else {
        ue_throughputs.iter().sum::<f64>() / ue_throughputs.len() as f64
    };
    Ok(Report {
        n_drops: drops.len(),
        cell_throughput,
        coverage: if ue_throughputs.is_empty() { 0.0 } else { coverage(&ue_throughputs)? },
        jain: match jain_index(&ue_throughputs) {
            Ok(j) => j,
            Err(Error::AllZero | Error::Empty(_)) => 0.0,
            Err(e) => return Err(e),
        },
        mean_ue_throughput,
        bler: if first_tx == 0 { 0.0 } else { first_tx_nack as f64 / first_tx as f64 },
        ue_throughputs,
    })
}

/// Relative change of `value` over `baseline`, in percent.
pub fn relative_gain_pct(value: f64, baseline: f64) -> f64 {
    if baseline == 0.0 {
        f64::NAN
    } else {
        100.0 * (value - baseline) / baseline
    }
}

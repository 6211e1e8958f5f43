use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// True post-detection SINRs (linear) of one PRB for every transmission mode.
///
/// `single[a]` is the single-stream SINR when only transmit antenna `a` is
/// used; entries for absent antennas are zero. `su` and `mu` hold the
/// per-stream SINRs of the dual-stream modes, `None` with one transmit
/// antenna.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrbSinr {
    pub single: [f64; 2],
    pub su: Option<[f64; 2]>,
    pub mu: Option<[f64; 2]>,
}

impl PrbSinr {
    pub fn best_single(&self) -> f64 {
        self.single[0].max(self.single[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CqiConfig {
    pub period_ttis: u64,
    pub delay_ttis: u64,
    pub min_db: f64,
    pub max_db: f64,
    pub step_db: f64,
}

impl Default for CqiConfig {
    fn default() -> Self {
        Self {
            period_ttis: 5,
            delay_ttis: 2,
            min_db: -10.0,
            max_db: 30.0,
            step_db: 1.0,
        }
    }
}

impl CqiConfig {
    /// Floors `sinr_db` to the quantizer step and clamps it to the range.
    pub fn quantize_db(&self, sinr_db: f64) -> f64 {
        if sinr_db.is_nan() {
            return self.min_db;
        }
        // The small guard keeps exact grid values (e.g. 3 dB after a round trip
        // through linear units) on their own step.
        ((sinr_db / self.step_db + 1e-9).floor() * self.step_db).clamp(self.min_db, self.max_db)
    }

    fn quantize_linear(&self, sinr: f64) -> f64 {
        self.quantize_db(10.0 * sinr.log10())
    }
}

/// Quantized per-PRB SINR snapshot, in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct CqiReport {
    pub generated_tti: u64,
    pub applied_tti: u64,
    pub n_tx: usize,
    pub single_db: Vec<[f64; 2]>,
    pub su_db: Vec<[f64; 2]>,
    pub mu_db: Vec<[f64; 2]>,
}

impl CqiReport {
    pub fn n_prb(&self) -> usize {
        self.single_db.len()
    }

    pub fn has_dual(&self) -> bool {
        !self.su_db.is_empty()
    }
}

/// Emits a report on reporting TTIs (`tti % period == 0`), otherwise `None`.
pub fn measure_cqi(sinrs: &[PrbSinr], n_tx: usize, tti: u64, cfg: &CqiConfig) -> Option<CqiReport> {
    if !tti.is_multiple_of(cfg.period_ttis) {
        return None;
    }
    let q2 = |v: [f64; 2]| [cfg.quantize_linear(v[0]), cfg.quantize_linear(v[1])];
    let dual = n_tx > 1 && sinrs.iter().all(|s| s.su.is_some() && s.mu.is_some());
    Some(CqiReport {
        generated_tti: tti,
        applied_tti: tti + cfg.delay_ttis,
        n_tx,
        single_db: sinrs.iter().map(|s| q2(s.single)).collect(),
        su_db: if dual { sinrs.iter().map(|s| q2(s.su.unwrap())).collect() } else { Vec::new() },
        mu_db: if dual { sinrs.iter().map(|s| q2(s.mu.unwrap())).collect() } else { Vec::new() },
    })
}

/// Holds generated reports until their delay elapses.
#[derive(Debug, Clone, Default)]
pub struct CqiPipeline {
    pending: VecDeque<CqiReport>,
    current: Option<CqiReport>,
}

impl CqiPipeline {
    pub fn push(&mut self, report: CqiReport) {
        self.pending.push_back(report);
    }

    /// Makes every report with `applied_tti <= tti` visible. Returns true if
    /// the visible report changed.
    pub fn advance(&mut self, tti: u64) -> bool {
        let mut changed = false;
        while self.pending.front().is_some_and(|r| r.applied_tti <= tti) {
            self.current = self.pending.pop_front();
            changed = true;
        }
        changed
    }

    pub fn current(&self) -> Option<&CqiReport> {
        self.current.as_ref()
    }
}

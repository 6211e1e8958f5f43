//! Link adaptation: EESM compression, the parametric BLEP model, inner-loop
//! MCS selection and the outer-loop offset controller.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SUBCARRIERS_PER_PRB: usize = 12;
pub const SYMBOLS_PER_TTI: usize = 14;

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McsEntry {
    pub name: String,
    pub bits_per_symbol: u32,
    pub code_rate: f64,
    /// EESM calibration factor, linear SINR units.
    pub eesm_beta: f64,
    /// SINR (dB) at which the BLEP is one half.
    pub blep_threshold_db: f64,
    /// Logistic width (dB) of the BLEP waterfall.
    pub blep_slope_db: f64,
}

impl McsEntry {
    pub fn spectral_efficiency(&self) -> f64 {
        self.bits_per_symbol as f64 * self.code_rate
    }

    /// Smallest effective SINR (dB) whose BLEP does not exceed `target`.
    pub fn required_sinr_db(&self, target: f64) -> f64 {
        self.blep_threshold_db + self.blep_slope_db * (1.0 / target - 1.0).ln()
    }
}

/// MCS table ordered by strictly increasing spectral efficiency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct McsTable {
    pub entries: Vec<McsEntry>,
}

const DEFAULT_FORMATS: [(&str, u32, f64, f64); 9] = [
    ("QPSK 1/3", 2, 1.0 / 3.0, 1.49),
    ("QPSK 1/2", 2, 0.5, 1.57),
    ("QPSK 2/3", 2, 2.0 / 3.0, 1.69),
    ("16QAM 1/2", 4, 0.5, 4.56),
    ("16QAM 2/3", 4, 2.0 / 3.0, 6.42),
    ("64QAM 1/2", 6, 0.5, 9.21),
    ("16QAM 4/5", 4, 0.8, 7.90),
    ("64QAM 2/3", 6, 2.0 / 3.0, 14.81),
    ("64QAM 4/5", 6, 0.8, 19.50),
];

impl Default for McsTable {
    fn default() -> Self {
        Self::calibrated(2.0, 0.6, 0.2)
    }
}

impl McsTable {
    /// Places each waterfall so that the BLEP reaches `target` at the Shannon
    /// SINR of the format's spectral efficiency plus `margin_db`.
    pub fn calibrated(margin_db: f64, slope_db: f64, target: f64) -> Self {
        let entries = DEFAULT_FORMATS
            .iter()
            .map(|&(name, bits, rate, beta)| {
                let se = bits as f64 * rate;
                let shannon_db = lin_to_db(2f64.powf(se) - 1.0);
                McsEntry {
                    name: name.to_string(),
                    bits_per_symbol: bits,
                    code_rate: rate,
                    eesm_beta: beta,
                    blep_threshold_db: shannon_db + margin_db - slope_db * (1.0 / target - 1.0).ln(),
                    blep_slope_db: slope_db,
                }
            })
            .collect();
        McsTable { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::config("mcs-table", "table is empty"));
        }
        for (i, e) in self.entries.iter().enumerate() {
            let key = format!("mcs-table[{i}]");
            if e.bits_per_symbol == 0 || !(e.code_rate > 0.0 && e.code_rate <= 1.0) {
                return Err(Error::config(key, "modulation order and code rate must be positive (rate <= 1)"));
            }
            if !(e.eesm_beta > 0.0) {
                return Err(Error::config(key, "eesm_beta must be positive"));
            }
            if !(e.blep_slope_db > 0.0) || !e.blep_threshold_db.is_finite() {
                return Err(Error::config(key, "BLEP slope must be positive and threshold finite"));
            }
            if i > 0 && e.spectral_efficiency() <= self.entries[i - 1].spectral_efficiency() {
                return Err(Error::config(key, "entries must have strictly increasing spectral efficiency"));
            }
        }
        Ok(())
    }
}

/// `γ_eff = -β ln( (1/N) Σ exp(-γ_n / β) )`, evaluated around the minimum
/// SINR so large arguments do not underflow.
pub fn eesm(sinrs: &[f64], beta: f64) -> Result<f64> {
    if sinrs.is_empty() {
        return Err(Error::EmptySinrList);
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("EESM beta must be positive, got {beta}")));
    }
    let min = sinrs.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = sinrs.iter().map(|g| (-(g - min) / beta).exp()).sum::<f64>() / sinrs.len() as f64;
    Ok(min - beta * mean.ln())
}

/// Logistic waterfall `1 / (1 + exp((γ - t) / s))`, `γ` in dB.
pub fn blep(entry: &McsEntry, effective_sinr_db: f64) -> f64 {
    let x = (effective_sinr_db - entry.blep_threshold_db) / entry.blep_slope_db;
    1.0 / (1.0 + x.exp())
}

/// Highest MCS whose BLEP at `effective_sinr_db - olla_offset_db` is at most
/// `target`, or `None` if even the lowest fails.
pub fn highest_feasible_mcs(effective_sinr_db: f64, olla_offset_db: f64, table: &McsTable, target: f64) -> Option<usize> {
    let x = effective_sinr_db - olla_offset_db;
    table.entries.iter().rposition(|e| blep(e, x) <= target)
}

/// Inner-loop selection with the floor rule: a UE below every threshold is
/// still served at the lowest MCS.
pub fn select_mcs(effective_sinr_db: f64, olla_offset_db: f64, table: &McsTable, target: f64) -> usize {
    highest_feasible_mcs(effective_sinr_db, olla_offset_db, table, target).unwrap_or(0)
}

/// Threshold-based MCS selection with the per-entry required SINR cached.
/// Agrees with [`select_mcs`] up to rounding at the exact boundary.
#[derive(Debug, Clone)]
pub struct McsSelector {
    table: McsTable,
    target: f64,
    required_db: Vec<f64>,
    rate_per_prb: Vec<f64>,
}

impl McsSelector {
    pub fn new(table: McsTable, target: f64) -> Self {
        let required_db = table.entries.iter().map(|e| e.required_sinr_db(target)).collect();
        let rate_per_prb = table.entries.iter().map(|e| estimate_rate(e, 1) as f64).collect();
        Self {
            table,
            target,
            required_db,
            rate_per_prb,
        }
    }

    pub fn table(&self) -> &McsTable {
        &self.table
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn select(&self, effective_sinr_db: f64, olla_offset_db: f64) -> usize {
        let x = effective_sinr_db - olla_offset_db;
        self.required_db.iter().rposition(|&r| x >= r).unwrap_or(0)
    }

    /// Bits one PRB carries at the MCS chosen for `sinr_db`.
    pub fn rate_per_prb(&self, sinr_db: f64, olla_offset_db: f64) -> f64 {
        self.rate_per_prb[self.select(sinr_db, olla_offset_db)]
    }

    /// Chooses one MCS for a set of PRB SINRs (linear), compressing them with
    /// each candidate's own EESM β. Returns the MCS index and its effective
    /// SINR in dB.
    pub fn select_for_prbs(&self, sinrs: &[f64], olla_offset_db: f64) -> Result<(usize, f64)> {
        for (m, e) in self.table.entries.iter().enumerate().rev() {
            let eff_db = lin_to_db(eesm(sinrs, e.eesm_beta)?);
            if eff_db - olla_offset_db >= self.required_db[m] {
                return Ok((m, eff_db));
            }
        }
        let e = &self.table.entries[0];
        Ok((0, lin_to_db(eesm(sinrs, e.eesm_beta)?)))
    }
}

/// Transport block size: PRBs × 12 subcarriers × 14 symbols × bits/symbol ×
/// code rate, floored to whole bits.
pub fn estimate_rate(entry: &McsEntry, n_prb: usize) -> u64 {
    let res = (n_prb * SUBCARRIERS_PER_PRB * SYMBOLS_PER_TTI) as f64;
    (res * entry.bits_per_symbol as f64 * entry.code_rate + 1e-9).floor() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OllaConfig {
    pub step_up_db: f64,
    pub min_offset_db: f64,
    pub max_offset_db: f64,
}

impl Default for OllaConfig {
    fn default() -> Self {
        Self {
            step_up_db: 0.5,
            min_offset_db: -5.0,
            max_offset_db: 5.0,
        }
    }
}

/// Outer-loop offset. NACKs raise it by `step_up_db`, ACKs lower it by
/// `step_down_db`; with `step_up / step_down = (1 - target) / target` the
/// loop is drift-free exactly at the target first-transmission BLER.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OllaState {
    pub offset_db: f64,
    pub step_up_db: f64,
    pub step_down_db: f64,
    pub min_db: f64,
    pub max_db: f64,
}

impl OllaState {
    pub fn new(cfg: &OllaConfig, target: f64) -> Self {
        Self {
            offset_db: 0.0,
            step_up_db: cfg.step_up_db,
            step_down_db: cfg.step_up_db * target / (1.0 - target),
            min_db: cfg.min_offset_db,
            max_db: cfg.max_offset_db,
        }
    }

    /// Applies first-transmission feedback.
    pub fn update(&mut self, ack: bool) {
        let next = if ack {
            self.offset_db - self.step_down_db
        } else {
            self.offset_db + self.step_up_db
        };
        self.offset_db = next.clamp(self.min_db, self.max_db);
    }
}

//! Run configuration.
//!
//! Every field has a default, so an empty file is a complete configuration.
//! Files are TOML with the sections `[radio]`, `[scheduler]`, `[mask]`,
//! `[link]` (with `[link.cqi]`, `[link.harq]`, `[link.olla]`), `[run]` and an
//! optional `[[mcs-table]]` array that replaces the built-in MCS table.
//!
//! ```toml
//! [radio]
//! antenna = "2x2"
//!
//! [scheduler]
//! algorithm = "mpmpf"
//! alpha1 = 2
//!
//! [mask]
//! kind = "pm2"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::CqiConfig;
use crate::error::{Error, Result};
use crate::harq::HarqConfig;
use crate::link_adapt::{db_to_lin, McsTable, OllaConfig, SUBCARRIERS_PER_PRB};
use crate::scheduler::SchedulerParams;
use crate::sfr::{MaskConfig, MaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AntennaMode {
    /// One transmit antenna, two receive antennas, MRC.
    #[serde(rename = "1x2")]
    Simo,
    /// Two transmit and two receive antennas, LMMSE, PARC.
    #[serde(rename = "2x2")]
    Mimo,
}

impl AntennaMode {
    pub fn n_tx(self) -> usize {
        match self {
            AntennaMode::Simo => 1,
            AntennaMode::Mimo => 2,
        }
    }
}

impl std::str::FromStr for AntennaMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1x2" | "simo" | "mrc" => Ok(AntennaMode::Simo),
            "2x2" | "mimo" | "lmmse" => Ok(AntennaMode::Mimo),
            other => Err(Error::config("radio.antenna", format!("unknown antenna mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for AntennaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AntennaMode::Simo => "1x2",
            AntennaMode::Mimo => "2x2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    pub inter_site_distance_m: f64,
    pub ues_per_cell: usize,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub prbs: usize,
    pub subcarrier_spacing_hz: f64,
    pub tti_s: f64,
    pub total_power_dbm: f64,
    pub ue_speed_kmh: f64,
    pub shadowing_std_db: f64,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub antenna: AntennaMode,
    /// Frequency samples per PRB (1 or 3).
    pub samples_per_prb: usize,
    /// Sinusoids per fading path.
    pub oscillators: usize,
    /// Interfering sectors per UE with explicitly faded channels; the rest
    /// contribute their average power as white interference.
    pub faded_interferers: usize,
    /// Switches inter-cell interference off entirely.
    pub intercell_interference: bool,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            inter_site_distance_m: 500.0,
            ues_per_cell: 15,
            carrier_hz: 2.0e9,
            bandwidth_hz: 10.0e6,
            prbs: 50,
            subcarrier_spacing_hz: 15.0e3,
            tti_s: 1.0e-3,
            total_power_dbm: 46.0,
            ue_speed_kmh: 3.0,
            shadowing_std_db: 8.0,
            noise_density_dbm_hz: -174.0,
            noise_figure_db: 9.0,
            antenna: AntennaMode::Mimo,
            samples_per_prb: 1,
            oscillators: 16,
            faded_interferers: 8,
            intercell_interference: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    /// First-transmission BLER target.
    pub bler_target: f64,
    pub cqi: CqiConfig,
    pub harq: HarqConfig,
    pub olla: OllaConfig,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            bler_target: 0.2,
            cqi: CqiConfig::default(),
            harq: HarqConfig::default(),
            olla: OllaConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n_ttis: u64,
    pub warmup_ttis: u64,
    pub n_drops: usize,
    /// Base seed; drop `d` uses `seed + d` unless `seeds` is given.
    pub seed: u64,
    /// Explicit per-drop seeds; overrides `seed` and `n_drops`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_ttis: 6000,
            warmup_ttis: 1000,
            n_drops: 4,
            seed: 1,
            seeds: None,
        }
    }
}

impl RunConfig {
    pub fn drop_seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.n_drops as u64).map(|d| self.seed.wrapping_add(d)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
pub struct SystemConfig {
    pub radio: RadioConfig,
    pub scheduler: SchedulerParams,
    pub mask: MaskConfig,
    pub link: LinkConfig,
    pub run: RunConfig,
    #[serde(rename = "mcs-table")]
    pub mcs_table: McsTable,
}


fn check(ok: bool, key: &str, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, msg))
    }
}

fn positive(x: f64, key: &str) -> Result<()> {
    check(x > 0.0 && x.is_finite(), key, "must be a positive number")
}

impl SystemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(text).map_err(|e| {
            let key = e.span().map_or_else(String::new, |s| locate_key(text, s.start));
            Error::config(key, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.radio;
        positive(r.inter_site_distance_m, "radio.inter_site_distance_m")?;
        check(r.ues_per_cell >= 1, "radio.ues_per_cell", "must be at least 1")?;
        positive(r.carrier_hz, "radio.carrier_hz")?;
        positive(r.bandwidth_hz, "radio.bandwidth_hz")?;
        check(r.prbs >= 1, "radio.prbs", "must be at least 1")?;
        positive(r.subcarrier_spacing_hz, "radio.subcarrier_spacing_hz")?;
        check(
            (r.prbs * SUBCARRIERS_PER_PRB) as f64 * r.subcarrier_spacing_hz <= r.bandwidth_hz,
            "radio.prbs",
            "active subcarriers do not fit in the bandwidth",
        )?;
        positive(r.tti_s, "radio.tti_s")?;
        check(r.total_power_dbm.is_finite(), "radio.total_power_dbm", "must be finite")?;
        check(r.ue_speed_kmh >= 0.0 && r.ue_speed_kmh.is_finite(), "radio.ue_speed_kmh", "must be nonnegative")?;
        check(r.shadowing_std_db >= 0.0, "radio.shadowing_std_db", "must be nonnegative")?;
        check(r.noise_density_dbm_hz.is_finite(), "radio.noise_density_dbm_hz", "must be finite")?;
        check(r.noise_figure_db.is_finite(), "radio.noise_figure_db", "must be finite")?;
        check(matches!(r.samples_per_prb, 1 | 3), "radio.samples_per_prb", "must be 1 or 3")?;
        check(r.oscillators >= 1, "radio.oscillators", "must be at least 1")?;

        self.scheduler.validate()?;
        if self.mask.kind != MaskKind::Custom && !self.mask.levels_db.is_empty() {
            return Err(Error::config("mask.levels_db", "only allowed with kind = \"custom\""));
        }
        crate::sfr::PowerMask::from_config(&self.mask, r.prbs)?;

        let l = &self.link;
        check(l.bler_target > 0.0 && l.bler_target < 1.0, "link.bler_target", "must lie in (0, 1)")?;
        check(l.cqi.period_ttis >= 1, "link.cqi.period_ttis", "must be at least 1")?;
        check(l.cqi.step_db > 0.0, "link.cqi.step_db", "must be positive")?;
        check(l.cqi.min_db < l.cqi.max_db, "link.cqi.min_db", "must be below link.cqi.max_db")?;
        check(l.harq.processes >= 1, "link.harq.processes", "must be at least 1")?;
        check(l.harq.feedback_delay_ttis >= 1, "link.harq.feedback_delay_ttis", "must be at least 1")?;
        positive(l.olla.step_up_db, "link.olla.step_up_db")?;
        check(
            l.olla.min_offset_db <= 0.0 && l.olla.max_offset_db >= 0.0,
            "link.olla",
            "offset range must contain 0 dB",
        )?;

        self.mcs_table.validate()?;

        let run = &self.run;
        check(run.n_ttis > run.warmup_ttis, "run.n_ttis", "must exceed run.warmup_ttis")?;
        match &run.seeds {
            Some(s) => check(!s.is_empty(), "run.seeds", "must not be empty")?,
            None => check(run.n_drops >= 1, "run.n_drops", "must be at least 1")?,
        }
        Ok(())
    }

    /// Maximum (0 dB mask level) transmit power of one PRB, in watts.
    pub fn p_max_prb_w(&self) -> f64 {
        db_to_lin(self.radio.total_power_dbm - 30.0) / self.radio.prbs as f64
    }

    /// Thermal noise power per receive antenna over one PRB, in watts.
    pub fn noise_power_w(&self) -> f64 {
        let bw = (SUBCARRIERS_PER_PRB as f64) * self.radio.subcarrier_spacing_hz;
        db_to_lin(self.radio.noise_density_dbm_hz + self.radio.noise_figure_db - 30.0) * bw
    }

    /// Hex SHA-256 of the canonical JSON form of the resolved configuration.
    pub fn fingerprint(&self) -> String {
        let value = serde_json::to_value(self).expect("configuration serializes");
        let canonical = serde_json::to_string(&value).expect("JSON value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<SystemConfig> {
    let text = std::fs::read_to_string(path)?;
    SystemConfig::from_toml_str(&text)
}

/// Dotted key path of the entry at byte offset `pos`, from the enclosing
/// table header and the key on that line.
fn locate_key(text: &str, pos: usize) -> String {
    let mut table = String::new();
    let mut key = String::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            table = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            key.clear();
        } else if let Some((k, _)) = trimmed.split_once('=') {
            key = k.trim().trim_matches('"').to_string();
        }
        offset += line.len();
        if offset > pos {
            break;
        }
    }
    match (table.is_empty(), key.is_empty()) {
        (true, _) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}

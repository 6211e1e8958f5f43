//! Experiment sweeps over schedulers and power masks, with CSV/JSON output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ofdma_sls::config::{parse_config, AntennaMode};
use ofdma_sls::scheduler::{AlphaPreset, Algorithm};
use ofdma_sls::sfr::MaskKind;
use ofdma_sls::stats::relative_gain_pct;
use ofdma_sls::{aggregate, run_drops, Exec, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => bail!("unknown format `{other}` (expected csv or json)"),
        }
    }
}

/// A scheduler selection such as `pf`, `mpmpf-m2` or plain `mpmpf`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerChoice {
    pub name: String,
    pub algorithm: Algorithm,
    pub preset: Option<AlphaPreset>,
}

impl std::str::FromStr for SchedulerChoice {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (alg, preset) = match lower.split_once('-') {
            Some((a, p)) => (a, Some(p.parse::<AlphaPreset>()?)),
            None => (lower.as_str(), None),
        };
        let algorithm: Algorithm = alg.parse()?;
        if preset.is_some() && matches!(algorithm, Algorithm::Pf | Algorithm::Ppf) {
            bail!("scheduler `{s}`: alpha presets only apply to mmpf and mpmpf");
        }
        Ok(Self {
            name: lower,
            algorithm,
            preset,
        })
    }
}

/// What to run and where to write it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub config: Option<PathBuf>,
    /// Empty: the configured scheduler only.
    pub schedulers: Vec<SchedulerChoice>,
    /// Empty: the configured mask only.
    pub masks: Vec<MaskKind>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub antenna: Option<AntennaMode>,
    pub seeds: Option<Vec<u64>>,
    pub drops: Option<usize>,
    pub ttis: Option<u64>,
    pub out: PathBuf,
    pub exec: Exec,
}

impl RunSpec {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            config: None,
            schedulers: Vec::new(),
            masks: Vec::new(),
            alpha1: None,
            alpha2: None,
            antenna: None,
            seeds: None,
            drops: None,
            ttis: None,
            out: out.into(),
            exec: Exec::default(),
        }
    }

    /// The file configuration with the scalar overrides applied.
    pub fn base_config(&self) -> Result<SystemConfig> {
        let mut cfg = match &self.config {
            Some(p) => parse_config(p).with_context(|| format!("reading {}", p.display()))?,
            None => SystemConfig::default(),
        };
        if let Some(a) = self.antenna {
            cfg.radio.antenna = a;
        }
        if let Some(s) = &self.seeds {
            cfg.run.seeds = Some(s.clone());
        }
        if let Some(d) = self.drops {
            cfg.run.n_drops = d;
            if self.seeds.is_none() {
                cfg.run.seeds = None;
            }
        }
        if let Some(t) = self.ttis {
            cfg.run.n_ttis = t;
        }
        if let Some(a) = self.alpha1 {
            cfg.scheduler.alpha1 = a;
        }
        if let Some(a) = self.alpha2 {
            cfg.scheduler.alpha2 = a;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolved configuration of every variant in the sweep, labelled
    /// `<scheduler>-<mask>`.
    pub fn variants(&self) -> Result<Vec<(String, SystemConfig)>> {
        let base = self.base_config()?;
        let schedulers = if self.schedulers.is_empty() {
            vec![SchedulerChoice {
                name: base.scheduler.algorithm.to_string(),
                algorithm: base.scheduler.algorithm,
                preset: None,
            }]
        } else {
            self.schedulers.clone()
        };
        let masks = if self.masks.is_empty() { vec![base.mask.kind] } else { self.masks.clone() };
        let mut out = Vec::with_capacity(schedulers.len() * masks.len());
        for s in &schedulers {
            for &m in &masks {
                let mut cfg = base.clone();
                cfg.scheduler.algorithm = s.algorithm;
                if let Some(p) = s.preset {
                    (cfg.scheduler.alpha1, cfg.scheduler.alpha2) = p.alphas();
                }
                if m != cfg.mask.kind {
                    cfg.mask.kind = m;
                    if m != MaskKind::Custom {
                        cfg.mask.levels_db.clear();
                    }
                }
                cfg.validate()?;
                out.push((format!("{}-{}", s.name, m), cfg));
            }
        }
        Ok(out)
    }
}

/// Outcome of one variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub label: String,
    pub fingerprint: String,
    pub seeds: Vec<u64>,
    pub throughput_mbps: f64,
    pub coverage_kbps: f64,
    pub jain: f64,
    pub bler: f64,
    pub seconds: f64,
    pub ue_throughput_bps: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ResultRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

pub fn run_variant(label: &str, cfg: &SystemConfig, exec: Exec) -> ResultRecord {
    let start = Instant::now();
    let outcome = run_drops(cfg, exec).and_then(|d| aggregate(&d));
    let mut rec = ResultRecord {
        label: label.to_string(),
        fingerprint: cfg.fingerprint(),
        seeds: cfg.run.drop_seeds(),
        throughput_mbps: 0.0,
        coverage_kbps: 0.0,
        jain: 0.0,
        bler: 0.0,
        seconds: 0.0,
        ue_throughput_bps: Vec::new(),
        error: None,
    };
    match outcome {
        Ok(r) => {
            rec.throughput_mbps = r.cell_throughput / 1e6;
            rec.coverage_kbps = r.coverage / 1e3;
            rec.jain = r.jain;
            rec.bler = r.bler;
            rec.ue_throughput_bps = r.ue_throughputs;
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec.seconds = start.elapsed().as_secs_f64();
    rec
}

/// Runs every variant of the sweep. A failing variant is recorded with its
/// error and the remaining variants still run.
pub fn run_experiment(spec: &RunSpec) -> Result<Vec<ResultRecord>> {
    let variants = spec.variants()?;
    Ok(variants.iter().map(|(label, cfg)| run_variant(label, cfg, spec.exec)).collect())
}

/// `x` rounded to six significant digits, printed without exponent.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() { "nan".into() } else { format!("{x}") };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let scale = 10f64.powi(5 - magnitude);
    let rounded = (x * scale).round() / scale;
    format!("{rounded:.decimals$}")
}

pub const RESULT_COLUMNS: [&str; 6] = ["label", "throughput_mbps", "coverage_kbps", "jain", "bler", "seconds"];

fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Baseline for the relative-gain table: the `pf` variant under the same
/// mask, else the first `pf` variant.
fn baseline_for<'a>(rec: &ResultRecord, records: &'a [ResultRecord]) -> Option<&'a ResultRecord> {
    let mask = rec.label.rsplit('-').next().unwrap_or("");
    let pf = |r: &&ResultRecord| r.ok() && r.label.starts_with("pf-");
    records
        .iter()
        .filter(pf)
        .find(|r| r.label.rsplit('-').next() == Some(mask))
        .or_else(|| records.iter().find(pf))
}

/// Writes the results table, relative gains, plot data and one per-UE
/// distribution file per variant into `out`. Returns the written paths.
pub fn emit_report(records: &[ResultRecord], format: Format, out: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        bail!("no records to emit");
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut written = Vec::new();
    let mut write = |name: &str, body: String| -> Result<()> {
        let p = out.join(name);
        fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
        written.push(p);
        Ok(())
    };

    match format {
        Format::Csv => {
            let mut t = RESULT_COLUMNS.join(",");
            t.push('\n');
            for r in records {
                let _ = writeln!(
                    t,
                    "{},{},{},{},{},{}",
                    r.label,
                    sig6(r.throughput_mbps),
                    sig6(r.coverage_kbps),
                    sig6(r.jain),
                    sig6(r.bler),
                    sig6(r.seconds)
                );
            }
            write("results.csv", t)?;
        }
        Format::Json => {
            write("results.json", serde_json::to_string_pretty(records)? + "\n")?;
        }
    }

    let mut gains = String::from("label,baseline,throughput_gain_pct,coverage_gain_pct,jain_gain_pct\n");
    for r in records.iter().filter(|r| r.ok()) {
        if let Some(b) = baseline_for(r, records).filter(|b| b.label != r.label) {
            let _ = writeln!(
                gains,
                "{},{},{},{},{}",
                r.label,
                b.label,
                sig6(relative_gain_pct(r.throughput_mbps, b.throughput_mbps)),
                sig6(relative_gain_pct(r.coverage_kbps, b.coverage_kbps)),
                sig6(relative_gain_pct(r.jain, b.jain))
            );
        }
    }
    write("gains.csv", gains)?;

    let mut plot = String::from("# label throughput_mbps coverage_kbps jain\n");
    for r in records.iter().filter(|r| r.ok()) {
        let _ = writeln!(plot, "{} {} {} {}", r.label, sig6(r.throughput_mbps), sig6(r.coverage_kbps), sig6(r.jain));
    }
    write("plot.dat", plot)?;

    let mut manifest = String::from("label,status,fingerprint,seeds\n");
    for r in records {
        let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
        let status = r.error.as_deref().map_or("ok".to_string(), |e| format!("\"error: {}\"", e.replace('"', "'")));
        let _ = writeln!(manifest, "{},{},{},{}", r.label, status, r.fingerprint, seeds.join(" "));
    }
    write("manifest.csv", manifest)?;

    for r in records.iter().filter(|r| r.ok()) {
        let mut d = String::from("throughput_bps\n");
        for x in &r.ue_throughput_bps {
            let _ = writeln!(d, "{}", sig6(*x));
        }
        write(&format!("ue_{}.csv", file_label(&r.label)), d)?;
    }
    Ok(written)
}

/// Writes the resolved configuration of every variant as TOML.
pub fn echo_configs(variants: &[(String, SystemConfig)], out: &Path) -> Result<()> {
    let dir = out.join("configs");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    for (label, cfg) in variants {
        let p = dir.join(format!("{}.toml", file_label(label)));
        fs::write(&p, cfg.to_toml_string()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

//! Soft frequency reuse: sub-band partitioning and per-PRB power masks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SECTORS_PER_SITE;
use crate::link_adapt::db_to_lin;

pub const PM1_DB: [f64; 3] = [0.0, -4.0, -4.0];
pub const PM2_DB: [f64; 3] = [0.0, -1.0, -4.0];
pub const RB_PATTERN_DB: [f64; 3] = [0.0, -1.0, -2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskKind {
    Flat,
    Pm1,
    Pm2,
    Rb012,
    Custom,
}

impl std::str::FromStr for MaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flat" => Ok(MaskKind::Flat),
            "pm1" => Ok(MaskKind::Pm1),
            "pm2" => Ok(MaskKind::Pm2),
            "rb012" => Ok(MaskKind::Rb012),
            "custom" => Ok(MaskKind::Custom),
            other => Err(Error::config("mask.kind", format!("unknown mask `{other}`"))),
        }
    }
}

impl std::fmt::Display for MaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MaskKind::Flat => "flat",
            MaskKind::Pm1 => "pm1",
            MaskKind::Pm2 => "pm2",
            MaskKind::Rb012 => "rb012",
            MaskKind::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaskConfig {
    pub kind: MaskKind,
    /// Sub-band levels in dB for `custom`, one per sub-band.
    pub levels_db: Vec<f64>,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            kind: MaskKind::Flat,
            levels_db: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskLayout {
    Flat,
    /// Contiguous sub-bands with one level each, rotated per reuse index.
    Subbands { levels_db: Vec<f64>, sizes: Vec<usize> },
    /// Levels repeating PRB by PRB, identical in every sector.
    RbPattern { levels_db: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerMask {
    pub kind: MaskKind,
    pub layout: MaskLayout,
    pub n_prb: usize,
}

impl PowerMask {
    pub fn from_config(cfg: &MaskConfig, n_prb: usize) -> Result<Self> {
        let sub = |levels: &[f64]| -> Result<MaskLayout> {
            Ok(MaskLayout::Subbands {
                levels_db: levels.to_vec(),
                sizes: partition_subbands(n_prb, levels.len())?,
            })
        };
        let layout = match cfg.kind {
            MaskKind::Flat => MaskLayout::Flat,
            MaskKind::Pm1 => sub(&PM1_DB)?,
            MaskKind::Pm2 => sub(&PM2_DB)?,
            MaskKind::Rb012 => MaskLayout::RbPattern {
                levels_db: RB_PATTERN_DB.to_vec(),
            },
            MaskKind::Custom => {
                if cfg.levels_db.is_empty() {
                    return Err(Error::config("mask.levels_db", "custom mask needs at least one level"));
                }
                if cfg.levels_db.iter().any(|l| !(*l <= 0.0) || !l.is_finite()) {
                    return Err(Error::config("mask.levels_db", "levels must be finite and at most 0 dB"));
                }
                sub(&cfg.levels_db)?
            }
        };
        Ok(Self {
            kind: cfg.kind,
            layout,
            n_prb,
        })
    }

    /// Per-PRB power of the sector with the given reuse index.
    pub fn power_map(&self, reuse_index: usize, p_max_prb: f64) -> PrbPowerMap {
        match &self.layout {
            MaskLayout::Flat => PrbPowerMap {
                p_max_prb,
                fractions: vec![1.0; self.n_prb],
            },
            MaskLayout::Subbands { .. } => apply_sfr_mask(self, reuse_index, p_max_prb),
            MaskLayout::RbPattern { levels_db } => pattern_map(levels_db, p_max_prb, self.n_prb),
        }
    }
}

/// Absolute and relative transmit power per PRB of one sector.
#[derive(Debug, Clone, PartialEq)]
pub struct PrbPowerMap {
    pub p_max_prb: f64,
    /// `σ_c²` per PRB, in (0, 1].
    pub fractions: Vec<f64>,
}

impl PrbPowerMap {
    pub fn power(&self, prb: usize) -> f64 {
        self.p_max_prb * self.fractions[prb]
    }

    pub fn total_power(&self) -> f64 {
        self.fractions.iter().sum::<f64>() * self.p_max_prb
    }
}

/// Splits `n_prb` into `n_subbands` blocks as equal as possible, larger
/// blocks first.
pub fn partition_subbands(n_prb: usize, n_subbands: usize) -> Result<Vec<usize>> {
    if n_subbands == 0 || n_subbands > n_prb {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n_prb} PRBs into {n_subbands} sub-bands"
        )));
    }
    let base = n_prb / n_subbands;
    let extra = n_prb % n_subbands;
    Ok((0..n_subbands).map(|i| base + usize::from(i < extra)).collect())
}

/// Rotates the sub-band levels so the 0 dB entry lands on sub-band
/// `reuse_index`.
pub fn apply_sfr_mask(mask: &PowerMask, reuse_index: usize, p_max_prb: f64) -> PrbPowerMap {
    let MaskLayout::Subbands { levels_db, sizes } = &mask.layout else {
        return mask.power_map(reuse_index, p_max_prb);
    };
    let n = levels_db.len();
    let mut fractions = Vec::with_capacity(mask.n_prb);
    for (band, &size) in sizes.iter().enumerate() {
        let level = levels_db[(band + n - reuse_index % n) % n];
        fractions.extend(std::iter::repeat_n(db_to_lin(level), size));
    }
    PrbPowerMap { p_max_prb, fractions }
}

/// The repeating 0/-1/-2 dB per-PRB pattern.
pub fn apply_rb_pattern(p_max_prb: f64, n_prb: usize) -> PrbPowerMap {
    pattern_map(&RB_PATTERN_DB, p_max_prb, n_prb)
}

fn pattern_map(levels_db: &[f64], p_max_prb: f64, n_prb: usize) -> PrbPowerMap {
    PrbPowerMap {
        p_max_prb,
        fractions: (0..n_prb).map(|k| db_to_lin(levels_db[k % levels_db.len()])).collect(),
    }
}

/// Within-site sector index; co-sited sectors put their full-power sub-band
/// on disjoint sub-bands.
pub fn reuse_index_for(sector: usize) -> usize {
    sector % SECTORS_PER_SITE
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_layout, normalize_angle_deg};
    use approx::assert_abs_diff_eq;

    fn mask(kind: MaskKind) -> PowerMask {
        PowerMask::from_config(&MaskConfig { kind, levels_db: vec![] }, 50).unwrap()
    }

    #[test]
    fn partitions() {
        assert_eq!(partition_subbands(50, 3).unwrap(), vec![17, 17, 16]);
        assert_eq!(partition_subbands(50, 1).unwrap(), vec![50]);
        assert_eq!(partition_subbands(6, 3).unwrap(), vec![2, 2, 2]);
        assert!(partition_subbands(2, 3).is_err());
        assert!(partition_subbands(2, 0).is_err());
    }

    #[test]
    fn pm_fractions() {
        let m = mask(MaskKind::Pm1).power_map(0, 1.0);
        assert_eq!(m.fractions[0], 1.0);
        assert_abs_diff_eq!(m.fractions[17], 0.3981, epsilon = 1e-4);
        assert_abs_diff_eq!(m.fractions[49], 10f64.powf(-0.4), epsilon = 1e-15);
        let m = mask(MaskKind::Pm2).power_map(0, 1.0);
        assert_abs_diff_eq!(m.fractions[20], 0.794, epsilon = 1e-3);
        assert_abs_diff_eq!(m.fractions[40], 0.398, epsilon = 1e-3);
        assert!(mask(MaskKind::Flat).power_map(2, 1.0).fractions.iter().all(|&f| f == 1.0));
    }

    #[test]
    fn rotation_puts_full_power_once_per_subband() {
        for kind in [MaskKind::Pm1, MaskKind::Pm2] {
            let m = mask(kind);
            let maps: Vec<_> = (0..3).map(|r| m.power_map(r, 1.0)).collect();
            for (band, start) in [(0usize, 0usize), (1, 17), (2, 34)] {
                let full = maps.iter().filter(|p| p.fractions[start] == 1.0).count();
                assert_eq!(full, 1, "{kind} band {band}");
                assert_eq!(maps[band].fractions[start], 1.0);
            }
        }
    }

    #[test]
    fn rb_pattern() {
        let m = apply_rb_pattern(1.0, 50);
        assert_eq!(m.fractions[0], 1.0);
        assert_abs_diff_eq!(m.fractions[1], 0.794, epsilon = 1e-3);
        assert_abs_diff_eq!(m.fractions[2], 0.631, epsilon = 1e-3);
        assert_eq!(m.fractions[3], 1.0);
        let count = |v: f64| m.fractions.iter().filter(|&&f| f == v).count();
        assert_eq!(count(1.0), 17);
        assert_eq!(count(db_to_lin(-1.0)), 17);
        assert_eq!(count(db_to_lin(-2.0)), 16);
        assert_eq!(mask(MaskKind::Rb012).power_map(1, 1.0), m);
    }

    #[test]
    fn total_power_budget() {
        let p_total = 10f64.powf((46.0 - 30.0) / 10.0);
        let p_prb = p_total / 50.0;
        let flat = mask(MaskKind::Flat).power_map(0, p_prb).total_power();
        assert_abs_diff_eq!(flat, p_total, epsilon = 1e-9);
        for kind in [MaskKind::Pm1, MaskKind::Pm2, MaskKind::Rb012] {
            for r in 0..3 {
                assert!(mask(kind).power_map(r, p_prb).total_power() < p_total);
            }
        }
    }

    #[test]
    fn custom_mask() {
        let cfg = MaskConfig { kind: MaskKind::Custom, levels_db: vec![0.0, -3.0] };
        let m = PowerMask::from_config(&cfg, 10).unwrap().power_map(1, 1.0);
        assert_abs_diff_eq!(m.fractions[0], db_to_lin(-3.0), epsilon = 1e-15);
        assert_eq!(m.fractions[9], 1.0);
        let bad = MaskConfig { kind: MaskKind::Custom, levels_db: vec![1.0] };
        assert!(PowerMask::from_config(&bad, 10).is_err());
        assert!(PowerMask::from_config(&MaskConfig { kind: MaskKind::Custom, levels_db: vec![] }, 10).is_err());
    }

    #[test]
    fn reuse_indices() {
        assert_eq!((0..3).map(reuse_index_for).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(reuse_index_for(3 * 7 + 2), 2);
    }

    #[test]
    fn facing_sectors_of_neighbors_differ() {
        let l = build_layout(500.0).unwrap();
        let facing = |site: usize, toward: [f64; 2]| -> usize {
            let s = l.sites[site];
            let bearing = (toward[1] - s[1]).atan2(toward[0] - s[0]).to_degrees();
            (0..3)
                .min_by(|&a, &b| {
                    let da = normalize_angle_deg(bearing - l.sectors[3 * site + a].boresight_deg).abs();
                    let db = normalize_angle_deg(bearing - l.sectors[3 * site + b].boresight_deg).abs();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap()
        };
        let mut pairs = 0;
        for a in 0..l.sites.len() {
            for b in (a + 1)..l.sites.len() {
                let d = (l.sites[a][0] - l.sites[b][0]).hypot(l.sites[a][1] - l.sites[b][1]);
                if (d - 500.0).abs() > 1e-6 {
                    continue;
                }
                pairs += 1;
                let sa = 3 * a + facing(a, l.sites[b]);
                let sb = 3 * b + facing(b, l.sites[a]);
                assert_ne!(reuse_index_for(sa), reuse_index_for(sb), "sites {a} and {b}");
            }
        }
        assert_eq!(pairs, 42);
    }
}

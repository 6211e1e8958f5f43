//! Hexagonal 19-site layout, UE drop and large-scale gains.
//!
//! Sites sit on a hexagonal grid: the center, a first ring of six at one
//! inter-site distance and a second ring of twelve. Every site carries three
//! sectors with boresights at 30°, 150° and 270°. Sector `s` of site `k` has
//! id `3k + s`, so ids 0..3 are the measured central site.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const SECTORS_PER_SITE: usize = 3;
pub const N_SITES: usize = 19;
pub const MIN_UE_DISTANCE_M: f64 = 35.0;
pub const SECTOR_BORESIGHTS_DEG: [f64; SECTORS_PER_SITE] = [30.0, 150.0, 270.0];

const BEAMWIDTH_3DB_DEG: f64 = 70.0;
const FRONT_TO_BACK_DB: f64 = 20.0;

/// Rejected candidate positions per requested UE before a drop is abandoned.
const MAX_REJECTIONS_PER_UE: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub site: usize,
    pub boresight_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellLayout {
    pub sites: Vec<[f64; 2]>,
    pub sectors: Vec<Sector>,
    pub inter_site_distance: f64,
}

impl CellLayout {
    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }

    pub fn sector_id(site: usize, index: usize) -> usize {
        site * SECTORS_PER_SITE + index
    }

    /// Sector ids belonging to the central (measured) site.
    pub fn central_sectors(&self) -> std::ops::Range<usize> {
        0..SECTORS_PER_SITE
    }

    /// Large-scale gain from sector `sector` towards `pos`, without shadowing.
    fn deterministic_gain(&self, sector: usize, pos: [f64; 2]) -> (f64, f64) {
        let s = self.sectors[sector];
        let site = self.sites[s.site];
        let dx = pos[0] - site[0];
        let dy = pos[1] - site[1];
        let d = dx.hypot(dy).max(MIN_UE_DISTANCE_M);
        let bearing = dy.atan2(dx).to_degrees();
        let off = normalize_angle_deg(bearing - s.boresight_deg);
        (path_loss_unchecked(d), sector_gain(off))
    }
}

/// Per (UE, sector) large-scale terms, all in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeScaleGain {
    pub path_loss_db: f64,
    pub shadowing_db: f64,
    pub antenna_gain_db: f64,
}

impl LargeScaleGain {
    pub fn total_db(&self) -> f64 {
        self.antenna_gain_db - self.path_loss_db + self.shadowing_db
    }

    pub fn linear(&self) -> f64 {
        10f64.powf(self.total_db() / 10.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UePlacement {
    pub position: [f64; 2],
    pub serving_sector: usize,
    pub distance_to_serving: f64,
    /// One entry per sector of the layout, indexed by sector id.
    pub gains: Vec<LargeScaleGain>,
}

pub fn build_layout(inter_site_distance: f64) -> Result<CellLayout> {
    if !(inter_site_distance > 0.0 && inter_site_distance.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "inter-site distance must be positive, got {inter_site_distance}"
        )));
    }
    let d = inter_site_distance;
    let mut sites = Vec::with_capacity(N_SITES);
    sites.push([0.0, 0.0]);
    for k in 0..6 {
        let a = (60.0 * k as f64).to_radians();
        sites.push([d * a.cos(), d * a.sin()]);
    }
    for k in 0..6 {
        let a = (60.0 * k as f64).to_radians();
        sites.push([2.0 * d * a.cos(), 2.0 * d * a.sin()]);
        let b = (30.0 + 60.0 * k as f64).to_radians();
        let r = 3f64.sqrt() * d;
        sites.push([r * b.cos(), r * b.sin()]);
    }
    let sectors = (0..N_SITES)
        .flat_map(|site| {
            SECTOR_BORESIGHTS_DEG
                .iter()
                .map(move |&boresight_deg| Sector {
                    site,
                    boresight_deg,
                })
        })
        .collect();
    Ok(CellLayout {
        sites,
        sectors,
        inter_site_distance,
    })
}

/// Macro-cell path loss `128.1 + 37.6 log10(d / 1 km)` with `d` in meters.
pub fn path_loss(distance_m: f64) -> Result<f64> {
    if distance_m.is_nan() || distance_m < MIN_UE_DISTANCE_M {
        return Err(Error::DistanceBelowMinimum(distance_m));
    }
    Ok(path_loss_unchecked(distance_m))
}

fn path_loss_unchecked(distance_m: f64) -> f64 {
    128.1 + 37.6 * (distance_m / 1000.0).log10()
}

/// Horizontal sector pattern `-min(12 (θ/70)², 20)` dB.
pub fn sector_gain(angle_off_boresight_deg: f64) -> f64 {
    let r = angle_off_boresight_deg / BEAMWIDTH_3DB_DEG;
    -(12.0 * r * r).min(FRONT_TO_BACK_DB)
}

pub fn normalize_angle_deg(a: f64) -> f64 {
    let mut x = (a + 180.0).rem_euclid(360.0) - 180.0;
    if x == -180.0 {
        x = 180.0;
    }
    x
}

/// Drops `ues_per_cell` UEs into each sector of the central site.
///
/// Candidates are drawn uniformly over a disk of one inter-site distance
/// around the center, together with one shadowing value per site (shared by
/// co-sited sectors). A candidate is kept when it is at least 35 m from every
/// site and its best server (sector gain minus path loss plus shadowing,
/// lowest id on ties) is a central sector whose quota is not yet full.
pub fn drop_ues<R: Rng + ?Sized>(
    layout: &CellLayout,
    ues_per_cell: usize,
    shadowing_std_db: f64,
    rng: &mut R,
) -> Result<Vec<UePlacement>> {
    if ues_per_cell == 0 {
        return Err(Error::InvalidArgument("ues_per_cell must be at least 1".into()));
    }
    let shadow = Normal::new(0.0, shadowing_std_db.max(0.0))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let central = layout.central_sectors();
    let mut quota = vec![0usize; central.len()];
    let mut placements: Vec<UePlacement> = Vec::with_capacity(ues_per_cell * central.len());
    let budget = MAX_REJECTIONS_PER_UE * ues_per_cell * central.len();
    let radius = layout.inter_site_distance;
    let mut rejected = 0usize;

    while placements.len() < ues_per_cell * central.len() {
        if rejected >= budget {
            return Err(Error::DropFailed(rejected));
        }
        // Uniform over the disk.
        let r = radius * rng.gen::<f64>().sqrt();
        let phi = rng.gen::<f64>() * std::f64::consts::TAU;
        let pos = [r * phi.cos(), r * phi.sin()];
        let site_shadow: Vec<f64> = (0..layout.sites.len()).map(|_| shadow.sample(rng)).collect();

        let too_close = layout.sites.iter().any(|s| {
            (pos[0] - s[0]).hypot(pos[1] - s[1]) < MIN_UE_DISTANCE_M
        });
        if too_close {
            rejected += 1;
            continue;
        }

        let gains: Vec<LargeScaleGain> = (0..layout.n_sectors())
            .map(|sec| {
                let (pl, ag) = layout.deterministic_gain(sec, pos);
                LargeScaleGain {
                    path_loss_db: pl,
                    shadowing_db: site_shadow[layout.sectors[sec].site],
                    antenna_gain_db: ag,
                }
            })
            .collect();
        let serving = best_server(&gains);
        if !central.contains(&serving) || quota[serving - central.start] >= ues_per_cell {
            rejected += 1;
            continue;
        }
        quota[serving - central.start] += 1;
        let site = layout.sites[layout.sectors[serving].site];
        placements.push(UePlacement {
            position: pos,
            serving_sector: serving,
            distance_to_serving: (pos[0] - site[0]).hypot(pos[1] - site[1]),
            gains,
        });
    }
    Ok(placements)
}

/// Index of the strongest sector, lowest id on ties.
pub fn best_server(gains: &[LargeScaleGain]) -> usize {
    let mut best = 0;
    for (i, g) in gains.iter().enumerate().skip(1) {
        if g.total_db() > gains[best].total_db() {
            best = i;
        }
    }
    best
}

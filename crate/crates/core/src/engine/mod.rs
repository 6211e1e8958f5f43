//! Per-TTI simulation loop and per-drop statistics.
//!
//! Only the central site's three sectors carry UEs; the other 54 sectors are
//! permanently loaded interferers transmitting at their mask power on every
//! PRB. Each TTI:
//!
//! 1. advances every fading link,
//! 2. computes true per-PRB SINRs (all PRBs on CQI TTIs, otherwise only
//!    where they are needed),
//! 3. steps the CQI pipelines,
//! 4. applies HARQ feedback that is due,
//! 5. schedules each sector (TD, then FD/SD) from the delayed CQI,
//! 6. picks MCSs from the CQI and draws outcomes from the true SINRs,
//! 7. updates throughput trackers and statistics.

mod radio;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{doppler_hz, measure_cqi, prb_sample_frequencies, CqiPipeline, FrequencyGrid, PowerDelayProfile, PrbSinr};
use crate::config::SystemConfig;
use crate::detect::NoiseCov;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{build_layout, drop_ues, UePlacement, SECTORS_PER_SITE};
use crate::harq::HarqPool;
use crate::link_adapt::{blep, db_to_lin, eesm, estimate_rate, lin_to_db, McsSelector, OllaState, SUBCARRIERS_PER_PRB};
use crate::scheduler::{
    band_means, build_ue_metrics, fd_sd_allocate, td_rank, update_trackers, Allocation, CellTracker, PrbUse, RetxRequest,
    UeMetrics, UeTracker,
};
use crate::sfr::{reuse_index_for, PowerMask};

use radio::{RadioContext, UeRadio};

/// Seed-stream layout of a drop: geometry, outcome draws, then one stream
/// per UE for its fading links.
const STREAM_GEOMETRY: u64 = 0;
const STREAM_OUTCOMES: u64 = 1;
const STREAM_FADING_BASE: u64 = 16;

#[derive(Debug, Clone, Copy)]
struct InFlight {
    stream: usize,
    process: usize,
    due: u64,
    ack: bool,
}

struct UeState {
    sector: usize,
    radio: UeRadio,
    /// True SINR per PRB for the current TTI, filled on demand.
    sinr: Vec<Option<PrbSinr>>,
    need: Vec<usize>,
    cqi: CqiPipeline,
    harq: Vec<HarqPool>,
    olla: [OllaState; 2],
    inflight: Vec<InFlight>,
    window_bits: u64,
}

impl UeState {
    fn fill_sinr(&mut self, ctx: &RadioContext, all: bool) -> Result<()> {
        if all {
            for k in 0..ctx.n_prb {
                if self.sinr[k].is_none() {
                    self.sinr[k] = Some(self.radio.prb_sinr(ctx, k)?);
                }
            }
        }
        for i in 0..self.need.len() {
            let k = self.need[i];
            if self.sinr[k].is_none() {
                self.sinr[k] = Some(self.radio.prb_sinr(ctx, k)?);
            }
        }
        self.need.clear();
        Ok(())
    }

    fn sinr(&self, k: usize) -> Result<&PrbSinr> {
        self.sinr[k]
            .as_ref()
            .ok_or_else(|| Error::Consistency(format!("SINR of PRB {k} used before evaluation")))
    }
}

/// Per-drop results for the central site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropStats {
    pub seed: u64,
    /// Length of the statistics window, seconds.
    pub window_s: f64,
    pub ue_sector: Vec<usize>,
    /// ACKed payload bits per UE inside the window.
    pub ue_bits: Vec<u64>,
    /// `ue_bits / window_s`, bits/s.
    pub ue_throughput: Vec<f64>,
    /// Sum of the UE throughputs of each central sector, bits/s.
    pub sector_throughput: Vec<f64>,
    pub first_tx: u64,
    pub first_tx_nack: u64,
    /// PRB-TTIs used for single-stream, SU-dual and MU-dual new data.
    pub mode_counts: [u64; 3],
    pub retx_prbs: u64,
}

impl DropStats {
    pub fn mean_cell_throughput(&self) -> f64 {
        if self.sector_throughput.is_empty() {
            0.0
        } else {
            self.sector_throughput.iter().sum::<f64>() / self.sector_throughput.len() as f64
        }
    }

    pub fn bler(&self) -> f64 {
        if self.first_tx == 0 {
            0.0
        } else {
            self.first_tx_nack as f64 / self.first_tx as f64
        }
    }
}

/// Everything that evolves during one drop.
pub struct DropState {
    cfg: SystemConfig,
    seed: u64,
    exec: Exec,
    ctx: RadioContext,
    selector: McsSelector,
    ues: Vec<UeState>,
    trackers: Vec<UeTracker>,
    cells: Vec<CellTracker>,
    /// UE id range of each central sector.
    sector_ues: Vec<std::ops::Range<usize>>,
    outcome_rng: ChaCha8Rng,
    next_tti: u64,
    first_tx: u64,
    first_tx_nack: u64,
    mode_counts: [u64; 3],
    retx_prbs: u64,
    last_allocations: Vec<Allocation>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl DropState {
    /// Builds the layout, drops UEs and initializes all links for `seed`.
    pub fn new(cfg: &SystemConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let layout = build_layout(cfg.radio.inter_site_distance_m)?;
        let mut rng = stream_rng(seed, STREAM_GEOMETRY);
        let placements = drop_ues(&layout, cfg.radio.ues_per_cell, cfg.radio.shadowing_std_db, &mut rng)?;
        Self::with_placements(cfg, seed, placements)
    }

    /// Builds a drop around given UE placements. Every placement must be
    /// served by a central sector and carry one gain per layout sector.
    pub fn with_placements(cfg: &SystemConfig, seed: u64, mut placements: Vec<UePlacement>) -> Result<Self> {
        cfg.validate()?;
        let r = &cfg.radio;
        let n_sectors = crate::geometry::N_SITES * SECTORS_PER_SITE;
        for (i, p) in placements.iter().enumerate() {
            if p.serving_sector >= SECTORS_PER_SITE || p.gains.len() != n_sectors {
                return Err(Error::InvalidArgument(format!(
                    "placement {i} must be served by a central sector and list {n_sectors} gains"
                )));
            }
        }
        placements.sort_by_key(|p| p.serving_sector);

        let n_prb = r.prbs;
        let pdp = PowerDelayProfile::typical_urban_20();
        let freqs = prb_sample_frequencies(n_prb, SUBCARRIERS_PER_PRB, r.subcarrier_spacing_hz, r.samples_per_prb);
        let mask = PowerMask::from_config(&cfg.mask, n_prb)?;
        let p_max = cfg.p_max_prb_w() / cfg.noise_power_w();
        let fractions = (0..n_sectors)
            .map(|s| mask.power_map(reuse_index_for(s), 1.0).fractions)
            .collect();
        let ctx = RadioContext {
            grid: FrequencyGrid::new(&freqs, &pdp.delays()),
            antenna: r.antenna,
            n_tx: r.antenna.n_tx(),
            n_prb,
            samples_per_prb: r.samples_per_prb,
            p_max,
            fractions,
            noise: NoiseCov::white(1.0)?,
        };

        let fd = doppler_hz(r.ue_speed_kmh, r.carrier_hz);
        let target = cfg.link.bler_target;
        let olla = OllaState::new(&cfg.link.olla, target);
        let mut ues = Vec::with_capacity(placements.len());
        for (id, p) in placements.iter().enumerate() {
            let mut rng = stream_rng(seed, STREAM_FADING_BASE + id as u64);
            let radio = UeRadio::new(
                &ctx,
                p,
                &pdp,
                fd,
                r.oscillators,
                r.faded_interferers,
                r.intercell_interference,
                &mut rng,
            )?;
            ues.push(UeState {
                sector: p.serving_sector,
                radio,
                sinr: vec![None; n_prb],
                need: Vec::new(),
                cqi: CqiPipeline::default(),
                harq: (0..ctx.n_tx).map(|s| HarqPool::new(s, cfg.link.harq)).collect(),
                olla: [olla; 2],
                inflight: Vec::new(),
                window_bits: 0,
            });
        }

        let selector = McsSelector::new(cfg.mcs_table.clone(), target);
        let t0 = estimate_rate(&cfg.mcs_table.entries[0], 1) as f64;
        let sector_ues = (0..SECTORS_PER_SITE)
            .map(|s| {
                let start = ues.iter().position(|u| u.sector >= s).unwrap_or(ues.len());
                let end = ues.iter().position(|u| u.sector > s).unwrap_or(ues.len());
                start..end
            })
            .collect();

        Ok(Self {
            trackers: vec![UeTracker::new(t0); ues.len()],
            cells: vec![CellTracker { t_tot: t0 }; SECTORS_PER_SITE],
            sector_ues,
            ues,
            selector,
            ctx,
            outcome_rng: stream_rng(seed, STREAM_OUTCOMES),
            cfg: cfg.clone(),
            seed,
            exec: Exec::default(),
            next_tti: 0,
            first_tx: 0,
            first_tx_nack: 0,
            mode_counts: [0; 3],
            retx_prbs: 0,
            last_allocations: Vec::new(),
        })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn n_ues(&self) -> usize {
        self.ues.len()
    }

    pub fn next_tti(&self) -> u64 {
        self.next_tti
    }

    pub fn trackers(&self) -> &[UeTracker] {
        &self.trackers
    }

    /// Allocations of the last TTI, one per central sector.
    pub fn last_allocations(&self) -> &[Allocation] {
        &self.last_allocations
    }

    /// Current OLLA offset of codeword `stream` of UE `ue`, dB.
    pub fn olla_offset_db(&self, ue: usize, stream: usize) -> f64 {
        self.ues[ue].olla[stream].offset_db
    }

    /// Mean serving SNR of each UE at full PRB power, linear.
    pub fn mean_snr(&self) -> Vec<f64> {
        self.ues.iter().map(|u| u.radio.mean_snr(&self.ctx)).collect()
    }

    /// Runs TTI `tti`, which must be the next one.
    pub fn run_tti(&mut self, tti: u64) -> Result<()> {
        if tti != self.next_tti {
            return Err(Error::Consistency(format!("TTI {tti} run out of order, expected {}", self.next_tti)));
        }
        let t = tti as f64 * self.cfg.radio.tti_s;
        let cqi_cfg = self.cfg.link.cqi;
        let cqi_tti = tti.is_multiple_of(cqi_cfg.period_ttis);
        let ctx = &self.ctx;

        // 1-2. Fading and, on reporting TTIs, the full SINR table.
        self.exec.try_for_each_mut(&mut self.ues, |_, u| {
            u.radio.advance_to(t)?;
            u.sinr.iter_mut().for_each(|s| *s = None);
            if cqi_tti {
                u.fill_sinr(ctx, true)?;
            }
            Ok::<(), Error>(())
        })?;

        // 3. CQI pipeline.
        let rho = self.cfg.scheduler.forgetting_factor;
        let weight = 1.0 - (1.0 - rho).powi(cqi_cfg.period_ttis as i32);
        for (u, tr) in self.ues.iter_mut().zip(&mut self.trackers) {
            if cqi_tti {
                let table: Vec<PrbSinr> = u.sinr.iter().map(|s| s.expect("filled on CQI TTIs")).collect();
                if let Some(report) = measure_cqi(&table, ctx.n_tx, tti, &cqi_cfg) {
                    u.cqi.push(report);
                }
            }
            if u.cqi.advance(tti) {
                let report = u.cqi.current().expect("report just became visible");
                tr.observe_cqi(band_means(report), weight);
            }
        }

        // 4. HARQ feedback.
        let in_window = tti >= self.cfg.run.warmup_ttis;
        let mut delivered = vec![0u64; self.ues.len()];
        for (id, u) in self.ues.iter_mut().enumerate() {
            u.inflight.sort_by_key(|f| (f.due, f.stream, f.process));
            let due = u.inflight.partition_point(|f| f.due <= tti);
            for f in u.inflight.drain(..due) {
                let outcome = u.harq[f.stream].on_feedback(f.process, f.ack, tti)?;
                if outcome.first_transmission() {
                    u.olla[f.stream].update(f.ack);
                    if in_window {
                        self.first_tx += 1;
                        self.first_tx_nack += u64::from(!f.ack);
                    }
                }
                delivered[id] += outcome.delivered_bits();
            }
        }

        // 5. Scheduling per sector.
        let mut allocations = Vec::with_capacity(SECTORS_PER_SITE);
        let mut ranked_per_sector = Vec::with_capacity(SECTORS_PER_SITE);
        let mut metric_lists = Vec::with_capacity(SECTORS_PER_SITE);
        for s in 0..SECTORS_PER_SITE {
            let (alloc, ranked, metrics) = self.schedule_sector(s)?;
            allocations.push(alloc);
            ranked_per_sector.push(ranked);
            metric_lists.push(metrics);
        }

        // 6-7. Link adaptation and outcome draws.
        for alloc in &allocations {
            for k in 0..alloc.prbs.len() {
                if let Some(a) = &alloc.prbs[k] {
                    for ue in a.usage.ues() {
                        self.ues[ue].need.push(k);
                    }
                }
            }
        }
        let ctx = &self.ctx;
        self.exec.try_for_each_mut(&mut self.ues, |_, u| u.fill_sinr(ctx, false))?;
        for (s, alloc) in allocations.iter().enumerate() {
            self.transmit(s, alloc, tti, in_window)?;
        }

        // 8. Trackers and statistics.
        for s in 0..SECTORS_PER_SITE {
            let range = self.sector_ues[s].clone();
            let ranked: Vec<usize> = ranked_per_sector[s]
                .iter()
                .map(|&i: &usize| metric_lists[s][i].ue - range.start)
                .collect();
            update_trackers(
                &mut self.trackers[range.clone()],
                &delivered[range],
                &mut self.cells[s],
                &ranked,
                rho,
            );
        }
        if in_window {
            for (u, &d) in self.ues.iter_mut().zip(&delivered) {
                u.window_bits += d;
            }
        }
        self.last_allocations = allocations;
        self.next_tti += 1;
        Ok(())
    }

    fn schedule_sector(&self, s: usize) -> Result<(Allocation, Vec<usize>, Vec<UeMetrics>)> {
        let range = self.sector_ues[s].clone();
        let params = &self.cfg.scheduler;
        let t_tot = self.cells[s].t_tot;
        let power_ratio = &self.ctx.fractions[s];
        let mut metrics = Vec::new();
        let mut retx: Vec<(u64, usize, RetxRequest)> = Vec::new();
        for id in range {
            let u = &self.ues[id];
            let Some(report) = u.cqi.current() else { continue };
            let mut stream_ok = [false; 2];
            for (st, pool) in u.harq.iter().enumerate() {
                stream_ok[st] = pool.has_idle();
            }
            let index = metrics.len();
            metrics.push(build_ue_metrics(
                id,
                params,
                &self.selector,
                report,
                &self.trackers[id],
                t_tot,
                [u.olla[0].offset_db, u.olla[1].offset_db],
                power_ratio,
                stream_ok,
            ));
            for (st, pool) in u.harq.iter().enumerate() {
                for p in pool.pending_retransmissions() {
                    let since = pool.process(p.process).pending_since;
                    retx.push((
                        since,
                        id,
                        RetxRequest {
                            index,
                            stream: st,
                            process: p.process,
                            n_prb: p.n_prb,
                        },
                    ));
                }
            }
        }
        retx.sort_by_key(|&(since, id, r)| (since, id, r.stream, r.process));
        let retx: Vec<RetxRequest> = retx.into_iter().map(|(_, _, r)| r).collect();

        let ranked = td_rank(&metrics, params.max_mux_ues);
        let mut selected = ranked.clone();
        selected.sort_by_key(|&i| metrics[i].ue);
        let alloc = fd_sd_allocate(&metrics, &selected, &retx, self.ctx.n_prb);
        alloc.validate(&metrics, &selected)?;
        Ok((alloc, ranked, metrics))
    }

    /// Link adaptation, HARQ bookkeeping and outcome draws for one sector.
    fn transmit(&mut self, sector: usize, alloc: &Allocation, tti: u64, in_window: bool) -> Result<()> {
        let range = self.sector_ues[sector].clone();
        let n_tx = self.ctx.n_tx;
        let delay = self.cfg.link.harq.feedback_delay_ttis;
        // Per UE and codeword: (PRB, reported dB, true linear SINR).
        let mut new_data: Vec<[Vec<(f64, f64)>; 2]> = vec![[Vec::new(), Vec::new()]; range.len()];
        // Per UE: (stream, process, true SINRs).
        let mut retx: Vec<Vec<(usize, usize, Vec<f64>)>> = vec![Vec::new(); range.len()];

        for (k, a) in alloc.prbs.iter().enumerate() {
            let Some(a) = a else { continue };
            if let Some(tag) = a.retx {
                let PrbUse::Single { ue, antenna } = a.usage else {
                    return Err(Error::Consistency("retransmission without single-stream mode".into()));
                };
                let sinr = self.ues[ue].sinr(k)?.single[antenna];
                let list = &mut retx[ue - range.start];
                match list.iter_mut().find(|(s, p, _)| *s == tag.stream && *p == tag.process) {
                    Some(entry) => entry.2.push(sinr),
                    None => list.push((tag.stream, tag.process, vec![sinr])),
                }
                if in_window {
                    self.retx_prbs += 1;
                }
                continue;
            }
            let mut add = |ue: usize, cw: usize, reported_db: f64, true_sinr: f64| {
                new_data[ue - range.start][cw].push((reported_db, true_sinr));
            };
            match a.usage {
                PrbUse::Single { ue, antenna } => {
                    let rep = self.ues[ue].cqi.current().expect("scheduled UEs have a report");
                    add(ue, antenna, rep.single_db[k][antenna], self.ues[ue].sinr(k)?.single[antenna]);
                    if in_window {
                        self.mode_counts[0] += 1;
                    }
                }
                PrbUse::SuDual { ue } => {
                    let rep = self.ues[ue].cqi.current().expect("scheduled UEs have a report");
                    let su = self.ues[ue].sinr(k)?.su.ok_or_else(|| Error::Consistency("SU-dual without two antennas".into()))?;
                    for cw in 0..2 {
                        add(ue, cw, rep.su_db[k][cw], su[cw]);
                    }
                    if in_window {
                        self.mode_counts[1] += 1;
                    }
                }
                PrbUse::MuDual { ues } => {
                    for (cw, &ue) in ues.iter().enumerate() {
                        let rep = self.ues[ue].cqi.current().expect("scheduled UEs have a report");
                        let mu = self.ues[ue].sinr(k)?.mu.ok_or_else(|| Error::Consistency("MU-dual without two antennas".into()))?;
                        add(ue, cw, rep.mu_db[k][cw], mu[cw]);
                    }
                    if in_window {
                        self.mode_counts[2] += 1;
                    }
                }
            }
        }

        let table = self.selector.table().clone();
        for (local, id) in range.enumerate() {
            let u = &mut self.ues[id];
            for (stream, process, sinrs) in std::mem::take(&mut retx[local]) {
                let mcs = u.harq[stream].process(process).mcs;
                let entry = &table.entries[mcs];
                let eff = eesm(&sinrs, entry.eesm_beta)?;
                let acc = u.harq[stream].retransmit(process, eff, tti)?;
                let ack = self.outcome_rng.gen::<f64>() >= blep(entry, lin_to_db(acc));
                u.inflight.push(InFlight { stream, process, due: tti + delay, ack });
            }
            for cw in 0..n_tx {
                let prbs = &new_data[local][cw];
                if prbs.is_empty() {
                    continue;
                }
                let reported: Vec<f64> = prbs.iter().map(|p| db_to_lin(p.0)).collect();
                let (mcs, _) = self.selector.select_for_prbs(&reported, u.olla[cw].offset_db)?;
                let entry = &table.entries[mcs];
                let truth: Vec<f64> = prbs.iter().map(|p| p.1).collect();
                let eff = eesm(&truth, entry.eesm_beta)?;
                let payload = estimate_rate(entry, prbs.len());
                let process = u.harq[cw].start_transmission(payload, mcs, prbs.len(), eff, tti)?;
                let ack = self.outcome_rng.gen::<f64>() >= blep(entry, lin_to_db(eff));
                u.inflight.push(InFlight { stream: cw, process, due: tti + delay, ack });
            }
        }
        Ok(())
    }

    /// Statistics over the TTIs run so far after the warm-up.
    pub fn stats(&self) -> Result<DropStats> {
        let warmup = self.cfg.run.warmup_ttis;
        if self.next_tti <= warmup {
            return Err(Error::EmptyWindow { n_ttis: self.next_tti, warmup });
        }
        let window_s = (self.next_tti - warmup) as f64 * self.cfg.radio.tti_s;
        let ue_bits: Vec<u64> = self.ues.iter().map(|u| u.window_bits).collect();
        let ue_throughput: Vec<f64> = ue_bits.iter().map(|&b| b as f64 / window_s).collect();
        let sector_throughput = self
            .sector_ues
            .iter()
            .map(|r| ue_throughput[r.clone()].iter().sum())
            .collect();
        Ok(DropStats {
            seed: self.seed,
            window_s,
            ue_sector: self.ues.iter().map(|u| u.sector).collect(),
            ue_bits,
            ue_throughput,
            sector_throughput,
            first_tx: self.first_tx,
            first_tx_nack: self.first_tx_nack,
            mode_counts: self.mode_counts,
            retx_prbs: self.retx_prbs,
        })
    }
}

/// Runs one drop with the configured number of TTIs.
pub fn run_drop(cfg: &SystemConfig, seed: u64) -> Result<DropStats> {
    run_drop_with(cfg, seed, Exec::default())
}

pub fn run_drop_with(cfg: &SystemConfig, seed: u64, exec: Exec) -> Result<DropStats> {
    if cfg.run.n_ttis <= cfg.run.warmup_ttis {
        return Err(Error::EmptyWindow {
            n_ttis: cfg.run.n_ttis,
            warmup: cfg.run.warmup_ttis,
        });
    }
    let mut state = DropState::new(cfg, seed)?.with_exec(exec);
    for tti in 0..cfg.run.n_ttis {
        state.run_tti(tti)?;
    }
    state.stats()
}

/// Runs every drop of the configuration; results are in seed order.
pub fn run_drops(cfg: &SystemConfig, exec: Exec) -> Result<Vec<DropStats>> {
    let seeds = cfg.run.drop_seeds();
    // Drops are the coarse-grained parallel unit; each runs its TTI loop
    // with the same policy for the per-UE work inside.
    exec.map(&seeds, |&seed| run_drop_with(cfg, seed, exec))
        .into_iter()
        .collect()
}

use crate::channel::CqiReport;
use crate::error::{Error, Result};
use crate::link_adapt::{db_to_lin, McsSelector};

use super::metrics::{SchedulerParams, StreamInput};
use super::trackers::{CqiAverages, UeTracker};

/// Metric value of an option that cannot be used.
pub const UNAVAILABLE: f64 = f64::NEG_INFINITY;

/// Scheduler metrics of one UE on one PRB.
///
/// `single[a]`: one stream from transmit antenna `a`. `su[s]` and `mu[s]`:
/// stream `s` of a dual-stream transmission, either both streams to this UE
/// or this UE paired with another on the other stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrbMetrics {
    pub single: [f64; 2],
    pub su: [f64; 2],
    pub mu: [f64; 2],
}

impl PrbMetrics {
    pub const NONE: PrbMetrics = PrbMetrics {
        single: [UNAVAILABLE; 2],
        su: [UNAVAILABLE; 2],
        mu: [UNAVAILABLE; 2],
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeMetrics {
    pub ue: usize,
    pub n_tx: usize,
    /// Whether codeword `s` can start a new packet (has an idle HARQ process).
    pub stream_ok: [bool; 2],
    pub prbs: Vec<PrbMetrics>,
    /// Full-band metric used by the TD stage.
    pub full_band: f64,
}

impl UeMetrics {
    fn single_new(&self, k: usize, a: usize) -> f64 {
        if a < self.n_tx && self.stream_ok[a] {
            self.prbs[k].single[a]
        } else {
            UNAVAILABLE
        }
    }

    fn su_new(&self, k: usize) -> f64 {
        if self.n_tx == 2 && self.stream_ok[0] && self.stream_ok[1] {
            self.prbs[k].su[0] + self.prbs[k].su[1]
        } else {
            UNAVAILABLE
        }
    }

    fn mu_new(&self, k: usize, s: usize) -> f64 {
        if self.n_tx == 2 && self.stream_ok[s] {
            self.prbs[k].mu[s]
        } else {
            UNAVAILABLE
        }
    }

    /// Best single-stream antenna for a retransmission, ignoring HARQ
    /// availability.
    fn retx_choice(&self, k: usize) -> (usize, f64) {
        let p = &self.prbs[k];
        if self.n_tx == 2 && p.single[1] > p.single[0] {
            (1, p.single[1])
        } else {
            (0, p.single[0])
        }
    }
}

/// Band means of a report's linear SINRs, as folded into `CQI_avg`.
pub fn band_means(report: &CqiReport) -> CqiAverages {
    let n = report.n_prb().max(1) as f64;
    let single = report
        .single_db
        .iter()
        .map(|v| db_to_lin(if report.n_tx > 1 { v[0].max(v[1]) } else { v[0] }))
        .sum::<f64>()
        / n;
    let dual = if report.has_dual() {
        report.su_db.iter().map(|v| 0.5 * (db_to_lin(v[0]) + db_to_lin(v[1]))).sum::<f64>() / n
    } else {
        single
    };
    CqiAverages { single, dual }
}

/// Evaluates every option of one UE from its visible report.
///
/// `power_ratio[k]` is `P_k / P_max` on PRB `k`; a dual-stream transmission
/// gives each stream half of it. `olla_db[s]` is codeword `s`'s offset.
#[allow(clippy::too_many_arguments)]
pub fn build_ue_metrics(
    ue: usize,
    params: &SchedulerParams,
    selector: &McsSelector,
    report: &CqiReport,
    tracker: &UeTracker,
    t_tot: f64,
    olla_db: [f64; 2],
    power_ratio: &[f64],
    stream_ok: [bool; 2],
) -> UeMetrics {
    let n_prb = report.n_prb();
    debug_assert_eq!(power_ratio.len(), n_prb);
    let avg = tracker.cqi_avg.unwrap_or_else(|| band_means(report));
    let t_i = tracker.throughput;
    let n_tx = report.n_tx.min(2);
    let dual = n_tx == 2 && report.has_dual();
    let metric = |p: f64, db: f64, olla: f64, cqi_avg: f64| {
        params.stream_metric(
            &StreamInput {
                power_ratio: p,
                rate: selector.rate_per_prb(db, olla),
                cqi: db_to_lin(db),
                cqi_avg,
            },
            t_i,
            t_tot,
        )
    };

    // Full-band accumulators: rate sum and CQI sum per option.
    let mut single_acc = (0.0, 0.0);
    let mut su_acc = [(0.0, 0.0); 2];
    let mut mu_acc = [(0.0, 0.0); 2];
    let mut p_sum = 0.0;
    let mut prbs = Vec::with_capacity(n_prb);
    for k in 0..n_prb {
        let p = power_ratio[k];
        p_sum += p;
        let mut m = PrbMetrics::NONE;
        let s_db = report.single_db[k];
        for a in 0..n_tx {
            m.single[a] = metric(p, s_db[a], olla_db[a], avg.single);
        }
        let best = (0..n_tx)
            .filter(|&a| stream_ok[a])
            .max_by(|&a, &b| s_db[a].total_cmp(&s_db[b]).then(b.cmp(&a)));
        if let Some(a) = best {
            single_acc.0 += selector.rate_per_prb(s_db[a], olla_db[a]);
            single_acc.1 += db_to_lin(s_db[a]);
        }
        if dual {
            for s in 0..2 {
                let su_db = report.su_db[k][s];
                let mu_db = report.mu_db[k][s];
                m.su[s] = metric(0.5 * p, su_db, olla_db[s], avg.dual);
                m.mu[s] = metric(0.5 * p, mu_db, olla_db[s], avg.dual);
                su_acc[s].0 += selector.rate_per_prb(su_db, olla_db[s]);
                su_acc[s].1 += db_to_lin(su_db);
                mu_acc[s].0 += selector.rate_per_prb(mu_db, olla_db[s]);
                mu_acc[s].1 += db_to_lin(mu_db);
            }
        }
        prbs.push(m);
    }

    let n = n_prb.max(1) as f64;
    let p_mean = p_sum / n;
    let full = |p: f64, acc: (f64, f64), cqi_avg: f64| {
        params.stream_metric(
            &StreamInput {
                power_ratio: p,
                rate: acc.0,
                cqi: acc.1 / n,
                cqi_avg,
            },
            t_i,
            t_tot,
        )
    };
    let mut full_band = UNAVAILABLE;
    if (0..n_tx).any(|a| stream_ok[a]) {
        full_band = full(p_mean, single_acc, avg.single);
    }
    if dual {
        if stream_ok[0] && stream_ok[1] {
            full_band = full_band.max(full(0.5 * p_mean, su_acc[0], avg.dual) + full(0.5 * p_mean, su_acc[1], avg.dual));
        }
        for s in 0..2 {
            if stream_ok[s] {
                full_band = full_band.max(full(0.5 * p_mean, mu_acc[s], avg.dual));
            }
        }
    }
    if n_prb == 0 {
        full_band = UNAVAILABLE;
    }

    UeMetrics {
        ue,
        n_tx,
        stream_ok,
        prbs,
        full_band,
    }
}

/// Full-band metric of a UE, as used by the TD stage.
pub fn full_band_metric(m: &UeMetrics) -> f64 {
    m.full_band
}

/// TD stage: indices into `ues` of the at most `max_mux` UEs with the
/// highest full-band metric, best first. Ties go to the lower UE id; UEs
/// with no usable option are never ranked.
pub fn td_rank(ues: &[UeMetrics], max_mux: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..ues.len()).filter(|&i| ues[i].full_band > UNAVAILABLE && !ues[i].full_band.is_nan()).collect();
    idx.sort_by(|&a, &b| {
        ues[b]
            .full_band
            .total_cmp(&ues[a].full_band)
            .then(ues[a].ue.cmp(&ues[b].ue))
    });
    idx.truncate(max_mux);
    idx
}

/// A HARQ process waiting for a retransmission of `n_prb` PRBs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetxRequest {
    /// Index into the metric list.
    pub index: usize,
    pub stream: usize,
    pub process: usize,
    pub n_prb: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrbUse {
    Single { ue: usize, antenna: usize },
    SuDual { ue: usize },
    /// `ues[s]` receives stream `s`.
    MuDual { ues: [usize; 2] },
}

impl PrbUse {
    pub fn ues(&self) -> impl Iterator<Item = usize> {
        let (a, b) = match *self {
            PrbUse::Single { ue, .. } | PrbUse::SuDual { ue } => (ue, None),
            PrbUse::MuDual { ues } => (ues[0], Some(ues[1])),
        };
        std::iter::once(a).chain(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetxTag {
    pub stream: usize,
    pub process: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrbAssignment {
    pub usage: PrbUse,
    pub retx: Option<RetxTag>,
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Allocation {
    /// One entry per PRB; `None` leaves the PRB idle.
    pub prbs: Vec<Option<PrbAssignment>>,
    /// Retransmission requests that did not fit this TTI.
    pub deferred: Vec<RetxRequest>,
}

impl Allocation {
    pub fn n_assigned(&self) -> usize {
        self.prbs.iter().flatten().count()
    }

    /// Checks that new data only goes to TD-selected UEs, retransmissions
    /// are single-stream and each request is placed at most once.
    pub fn validate(&self, ues: &[UeMetrics], selected: &[usize]) -> Result<()> {
        let selected_ids: Vec<usize> = selected.iter().map(|&i| ues[i].ue).collect();
        let mut seen_retx: Vec<RetxTag> = Vec::new();
        for (k, a) in self.prbs.iter().enumerate() {
            let Some(a) = a else { continue };
            match a.retx {
                Some(tag) => {
                    if !matches!(a.usage, PrbUse::Single { .. }) {
                        return Err(Error::Consistency(format!("retransmission on PRB {k} is not single-stream")));
                    }
                    if !seen_retx.contains(&tag) {
                        seen_retx.push(tag);
                    }
                }
                None => {
                    if let Some(u) = a.usage.ues().find(|u| !selected_ids.contains(u)) {
                        return Err(Error::Consistency(format!("UE {u} got PRB {k} without TD selection")));
                    }
                    if let PrbUse::MuDual { ues } = a.usage {
                        if ues[0] == ues[1] {
                            return Err(Error::Consistency(format!("MU pairing of UE {} with itself on PRB {k}", ues[0])));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Top two candidates `(metric, position)` for one MU stream.
fn top2(ues: &[UeMetrics], selected: &[usize], k: usize, s: usize) -> [(f64, usize); 2] {
    let mut best = [(UNAVAILABLE, usize::MAX); 2];
    for &i in selected {
        let m = ues[i].mu_new(k, s);
        if m > best[0].0 {
            best[1] = best[0];
            best[0] = (m, i);
        } else if m > best[1].0 {
            best[1] = (m, i);
        }
    }
    best
}

/// FD/SD stage.
///
/// Retransmissions (in the given order) each take the `n_prb` free PRBs with
/// the highest single-stream metric. Every other PRB goes to the best option
/// among the TD-selected UEs. `selected` must be sorted by UE id for ties to
/// favor lower ids; options are compared single, then SU, then MU, and only
/// a strictly better metric replaces an earlier one.
pub fn fd_sd_allocate(ues: &[UeMetrics], selected: &[usize], retx: &[RetxRequest], n_prb: usize) -> Allocation {
    let mut prbs: Vec<Option<PrbAssignment>> = vec![None; n_prb];
    let mut deferred = Vec::new();

    for r in retx {
        let u = &ues[r.index];
        let mut free: Vec<(usize, usize, f64)> = (0..n_prb)
            .filter(|&k| prbs[k].is_none())
            .map(|k| {
                let (a, m) = u.retx_choice(k);
                (k, a, m)
            })
            .collect();
        if r.n_prb == 0 || free.len() < r.n_prb {
            deferred.push(*r);
            continue;
        }
        free.sort_by(|x, y| y.2.total_cmp(&x.2).then(x.0.cmp(&y.0)));
        for &(k, antenna, metric) in &free[..r.n_prb] {
            prbs[k] = Some(PrbAssignment {
                usage: PrbUse::Single { ue: u.ue, antenna },
                retx: Some(RetxTag {
                    stream: r.stream,
                    process: r.process,
                }),
                metric,
            });
        }
    }

    let any_mimo = selected.iter().any(|&i| ues[i].n_tx == 2);
    for (k, slot) in prbs.iter_mut().enumerate() {
        if slot.is_some() {
            continue;
        }
        let mut best: Option<PrbAssignment> = None;
        let mut offer = |usage: PrbUse, metric: f64| {
            if metric > UNAVAILABLE && best.is_none_or(|b| metric > b.metric) {
                best = Some(PrbAssignment { usage, retx: None, metric });
            }
        };
        for &i in selected {
            let u = &ues[i];
            for a in 0..u.n_tx {
                offer(PrbUse::Single { ue: u.ue, antenna: a }, u.single_new(k, a));
            }
        }
        if any_mimo {
            for &i in selected {
                offer(PrbUse::SuDual { ue: ues[i].ue }, ues[i].su_new(k));
            }
            let t0 = top2(ues, selected, k, 0);
            let t1 = top2(ues, selected, k, 1);
            let pair = if t0[0].1 != t1[0].1 {
                Some((t0[0], t1[0]))
            } else {
                let a = (t0[0], t1[1]);
                let b = (t0[1], t1[0]);
                let sa = a.0 .0 + a.1 .0;
                let sb = b.0 .0 + b.1 .0;
                // Equal sums: prefer the pair whose stream-0 UE has the lower id.
                if sa > sb || (sa == sb && ues_id(ues, a.0 .1) <= ues_id(ues, b.0 .1)) {
                    Some(a)
                } else {
                    Some(b)
                }
            };
            if let Some((x, y)) = pair {
                if x.1 != usize::MAX && y.1 != usize::MAX {
                    offer(
                        PrbUse::MuDual {
                            ues: [ues[x.1].ue, ues[y.1].ue],
                        },
                        x.0 + y.0,
                    );
                }
            }
        }
        *slot = best;
    }

    Allocation { prbs, deferred }
}

fn ues_id(ues: &[UeMetrics], i: usize) -> usize {
    ues.get(i).map_or(usize::MAX, |u| u.ue)
}

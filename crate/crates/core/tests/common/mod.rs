//! Independent oracles and the unit-level acceptance checks, shared by the
//! integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};
use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{Complex as NC, Matrix2, Vector2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ofdma_sls::channel::{doppler_hz, init_fading, PathSpec, PowerDelayProfile};
use ofdma_sls::config::AntennaMode;
use ofdma_sls::detect::{
    lmmse_dual, lmmse_single, mrc_weights, sinr_dual, sinr_single, InterferenceCov, Mat2, NoiseCov, TxPowerSpec, Vec2,
};
use ofdma_sls::harq::{combine, FeedbackOutcome, HarqConfig, HarqPool, HarqState};
use ofdma_sls::link_adapt::{blep, eesm, select_mcs, McsTable, OllaConfig, OllaState};
use ofdma_sls::scheduler::{Algorithm, SchedulerParams, StreamInput};
use ofdma_sls::sfr::{partition_subbands, reuse_index_for, MaskConfig, MaskKind, PowerMask, PM1_DB, PM2_DB};
use ofdma_sls::stats::percentile_nearest_rank;
use ofdma_sls::{coverage, jain_index, DropState, Exec, SystemConfig};

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        Self { name, pass, detail }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cn<R: Rng>(r: &mut R) -> Complex64 {
    let re: f64 = r.sample(StandardNormal);
    let im: f64 = r.sample(StandardNormal);
    Complex64::new(re, im) / 2f64.sqrt()
}

fn to_na(c: Complex64) -> NC<f64> {
    NC::new(c.re, c.im)
}

fn mat_na(m: &Mat2) -> Matrix2<NC<f64>> {
    Matrix2::new(to_na(m.0[0][0]), to_na(m.0[0][1]), to_na(m.0[1][0]), to_na(m.0[1][1]))
}

fn vec_na(v: &Vec2) -> Vector2<NC<f64>> {
    Vector2::new(to_na(v.0[0]), to_na(v.0[1]))
}

fn hermitian_cond(m: &Matrix2<NC<f64>>) -> f64 {
    // 2x2 Hermitian PSD: eigenvalues from trace and determinant.
    let tr = (m[(0, 0)] + m[(1, 1)]).re;
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 + disc) / (tr / 2.0 - disc)
}

/// One random detector instance: channel, noise, interference and powers.
pub struct DetectorInstance {
    pub h: Mat2,
    pub noise: NoiseCov,
    pub intf: InterferenceCov,
    pub tx: TxPowerSpec,
}

pub fn random_instance<R: Rng>(r: &mut R) -> DetectorInstance {
    let h = Mat2([[cn(r), cn(r)], [cn(r), cn(r)]]);
    let noise = NoiseCov::new(r.gen_range(0.5..2.0), r.gen_range(0.5..2.0)).unwrap();
    let mut intf = InterferenceCov::zero();
    for _ in 0..r.gen_range(0..4) {
        intf.add_rank_one(r.gen_range(0.0..3.0), &Vec2::new(cn(r), cn(r)));
    }
    let tx = TxPowerSpec::new(10f64.powf(r.gen_range(-1.0..2.0)), r.gen_range(0.3..=1.0)).unwrap();
    DetectorInstance { h, noise, intf, tx }
}

fn rel_err_vec(a: &Vector2<NC<f64>>, b: &Vector2<NC<f64>>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Criterion 1: LMMSE weights against a direct linear solve, SINRs
/// nonnegative, LMMSE never worse than MRC.
pub fn detector_oracle(n: usize, seed: u64) -> Check {
    let start = Instant::now();
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut done = 0;
    while done < n {
        let inst = random_instance(&mut r);
        let cov = mat_na(inst.noise.matrix()) + mat_na(inst.intf.matrix());
        let hn = mat_na(&inst.h);
        let dual_p = inst.tx.dual_powers();
        let sx = Matrix2::from_diagonal(&Vector2::new(NC::new(dual_p[0], 0.0), NC::new(dual_p[1], 0.0)));
        let a_dual = hn * sx * hn.adjoint() + cov;
        if hermitian_cond(&a_dual) > 1e4 {
            continue;
        }
        done += 1;

        for tx_ant in 0..2 {
            let h = inst.h.column(tx_ant);
            let hv = vec_na(&h);
            let p = inst.tx.single_power();
            let a = hv * hv.adjoint() * NC::new(p, 0.0) + cov;
            let oracle = a.lu().solve(&(hv * NC::new(p, 0.0))).expect("well-conditioned");
            let w = lmmse_single(&h, &inst.tx, &inst.noise, &inst.intf).unwrap();
            worst = worst.max(rel_err_vec(&vec_na(&w), &oracle));

            let s_lmmse = sinr_single(&w, &h, &inst.tx, &inst.noise, &inst.intf).unwrap();
            let m = mrc_weights(&h).unwrap();
            let s_mrc = sinr_single(&m, &h, &inst.tx, &inst.noise, &inst.intf).unwrap();
            if !(s_lmmse >= 0.0 && s_mrc >= 0.0) {
                failures.push(format!("negative single SINR {s_lmmse} / {s_mrc}"));
            }
            if s_lmmse < s_mrc * (1.0 - 1e-12) {
                failures.push(format!("LMMSE {s_lmmse} < MRC {s_mrc}"));
            }
        }

        // W = Σx Hᴴ A⁻¹, so Wᴴ = A⁻¹ H Σx with A Hermitian.
        let oracle_wh = a_dual.lu().solve(&(hn * sx)).expect("well-conditioned");
        let w = lmmse_dual(&inst.h, dual_p, &inst.noise, &inst.intf).unwrap();
        let wn = mat_na(&w);
        worst = worst.max((wn.adjoint() - oracle_wh).norm() / oracle_wh.norm());
        let s = sinr_dual(&w, &inst.h, dual_p, &inst.noise, &inst.intf).unwrap();
        if s.iter().any(|x| !(*x >= 0.0)) {
            failures.push(format!("negative dual SINR {s:?}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 1e-12 && failures.is_empty() && secs < 10.0;
    let mut detail = format!("{n} instances, max rel err {worst:.2e}, {secs:.2} s");
    if let Some(f) = failures.first() {
        detail += &format!(", {} violations, first: {f}", failures.len());
    }
    Check::new("detector oracle", pass, detail)
}

fn metric_argmax(params: &SchedulerParams, inputs: &[Vec<StreamInput>], t: &[f64], t_tot: f64) -> Vec<usize> {
    let n_prb = inputs[0].len();
    (0..n_prb)
        .map(|k| {
            let mut best = 0;
            let mut best_m = f64::NEG_INFINITY;
            for (u, row) in inputs.iter().enumerate() {
                let m = params.stream_metric(&row[k], t[u], t_tot);
                if m > best_m {
                    best_m = m;
                    best = u;
                }
            }
            best
        })
        .collect()
}

/// Criterion 2, algebraic half: the power-aware metric's per-PRB argmax is
/// unchanged by scaling one user's CQI and CQI average together, and by
/// scaling every throughput quantity by one factor.
pub fn metric_invariance(n: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut violations = 0;
    for _ in 0..n {
        let n_ue = r.gen_range(2..16);
        let n_prb = r.gen_range(1..20);
        let preset = [(1.0, 1.0), (2.0, 1.0), (4.0, 1.0)][r.gen_range(0..3)];
        let params = SchedulerParams {
            algorithm: Algorithm::Mpmpf,
            alpha1: preset.0,
            alpha2: preset.1,
            ..SchedulerParams::default()
        };
        let levels = [1.0, 10f64.powf(-0.1), 10f64.powf(-0.4)];
        let inputs: Vec<Vec<StreamInput>> = (0..n_ue)
            .map(|_| {
                let avg = r.gen_range(0.5..100.0);
                (0..n_prb)
                    .map(|_| StreamInput {
                        power_ratio: levels[r.gen_range(0..3)],
                        rate: r.gen_range(100.0..5000.0),
                        cqi: avg * r.gen_range(0.1..10.0),
                        cqi_avg: avg,
                    })
                    .collect()
            })
            .collect();
        let t: Vec<f64> = (0..n_ue).map(|_| r.gen_range(1e4..1e7)).collect();
        let t_tot = r.gen_range(1e4..1e7);
        let base = metric_argmax(&params, &inputs, &t, t_tot);

        // Powers of two keep the scaled quotients bit-identical.
        let mut scaled = inputs.clone();
        let u = r.gen_range(0..n_ue);
        let c = 2f64.powi(r.gen_range(-8..8));
        for s in &mut scaled[u] {
            s.cqi *= c;
            s.cqi_avg *= c;
        }
        if metric_argmax(&params, &scaled, &t, t_tot) != base {
            violations += 1;
        }
        let g = 2f64.powi(r.gen_range(-8..8));
        let t_g: Vec<f64> = t.iter().map(|x| x * g).collect();
        let mut rates = inputs.clone();
        rates.iter_mut().flatten().for_each(|s| s.rate *= g);
        if metric_argmax(&params, &rates, &t_g, t_tot * g) != base {
            violations += 1;
        }
    }
    Check::new(
        "metric invariance",
        violations == 0,
        format!("{n} random instances, {violations} argmax changes"),
    )
}

/// Criterion 2, engine half: a plain metric and its power-aware variant
/// produce identical allocations every TTI under the flat mask.
pub fn flat_mask_equivalence(plain: Algorithm, aware: Algorithm, ttis: u64, seed: u64) -> Check {
    let mut cfg = SystemConfig::default();
    cfg.radio.antenna = AntennaMode::Simo;
    cfg.mask = MaskConfig::default();
    cfg.run.n_ttis = ttis;
    cfg.run.warmup_ttis = 0;
    let mut a_cfg = cfg.clone();
    a_cfg.scheduler.algorithm = plain;
    let mut b_cfg = cfg;
    b_cfg.scheduler.algorithm = aware;
    let mut a = DropState::new(&a_cfg, seed).unwrap().with_exec(Exec::default());
    let mut b = DropState::new(&b_cfg, seed).unwrap().with_exec(Exec::default());
    let mut first_diff = None;
    let mut assigned = 0;
    for tti in 0..ttis {
        a.run_tti(tti).unwrap();
        b.run_tti(tti).unwrap();
        assigned += a.last_allocations().iter().map(|x| x.n_assigned()).sum::<usize>();
        if a.last_allocations() != b.last_allocations() {
            first_diff = Some(tti);
            break;
        }
    }
    let name = match aware {
        Algorithm::Ppf => "PPF == PF, flat mask",
        _ => "MPMPF == MMPF, flat mask",
    };
    let detail = match first_diff {
        None => format!("{ttis} TTIs identical, {assigned} PRB assignments"),
        Some(t) => format!("allocations differ at TTI {t}"),
    };
    Check::new(name, first_diff.is_none() && assigned > 0, detail)
}

/// Closed-form Jain index.
pub fn jain_oracle(x: &[f64]) -> f64 {
    let s: f64 = x.iter().sum();
    let q: f64 = x.iter().map(|v| v * v).sum();
    s * s / (x.len() as f64 * q)
}

/// 5th percentile by the nearest-rank rule, via full sort and ceil.
pub fn coverage_oracle(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // ceil(0.05 n) in integers; the float product can land a hair above n/20.
    let idx = (5 * v.len()).div_ceil(100);
    v[idx.max(1) - 1]
}

/// Criterion 3.
pub fn jain_coverage_exact(n: usize, seed: u64) -> Check {
    let mut errs = Vec::new();
    let ex = |x: &[f64], want: f64, errs: &mut Vec<String>| {
        let got = jain_index(x).unwrap();
        if got != want {
            errs.push(format!("jain({x:?}) = {got}, want {want}"));
        }
    };
    ex(&[1.0, 1.0, 1.0, 1.0], 1.0, &mut errs);
    ex(&[1.0, 0.0, 0.0, 0.0], 0.25, &mut errs);
    ex(&[2.0, 4.0], 0.9, &mut errs);
    let tens: Vec<f64> = (1..=10).map(|i| 10.0 * i as f64).collect();
    if coverage(&tens).unwrap() != 10.0 {
        errs.push("coverage(10..100) != 10".into());
    }
    if coverage(&[7.5; 13]).unwrap() != 7.5 {
        errs.push("coverage(constant) != constant".into());
    }
    if jain_index(&[0.0, 0.0]).is_ok() {
        errs.push("all-zero input accepted".into());
    }

    let mut r = rng(seed);
    for _ in 0..n {
        let len = r.gen_range(1..400);
        let x: Vec<f64> = (0..len).map(|_| r.gen_range(0.0..1e7)).collect();
        if coverage(&x).unwrap() != coverage_oracle(&x) {
            errs.push(format!("coverage mismatch on n = {len}"));
        }
        let p = r.gen_range(1..=100);
        let mut v = x.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rank = (0..=len).find(|&r| 100 * r >= p as usize * len).unwrap();
        let brute = v[rank.max(1) - 1];
        if percentile_nearest_rank(&x, p).unwrap() != brute {
            errs.push(format!("percentile {p} mismatch on n = {len}"));
        }
        let j = jain_index(&x).unwrap();
        let o = jain_oracle(&x);
        if (j - o).abs() > 4.0 * f64::EPSILON * o {
            errs.push(format!("jain {j} vs {o}"));
        }
    }
    Check::new(
        "jain/coverage exactness",
        errs.is_empty(),
        match errs.first() {
            None => format!("listed examples + {n} random vectors"),
            Some(e) => format!("{} mismatches, first: {e}", errs.len()),
        },
    )
}

/// Criterion 4.
pub fn eesm_checks(n: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut errs = Vec::new();
    let betas = [0.5, 1.0, 1.49, 2.0, 4.56, 7.9, 14.81, 20.0];
    for &b in &betas {
        for &g in &[1e-3, 0.5, 1.0, 10.0, 300.0, 1000.0] {
            let e = eesm(&[g; 7], b).unwrap();
            if ((e - g) / g).abs() > 1e-12 {
                errs.push(format!("eesm(const {g}, {b}) = {e}"));
            }
        }
    }
    let two = eesm(&[0.0, 2.0], 1.0).unwrap();
    if (two - -(0.5 * (1.0 + (-2f64).exp())).ln()).abs() > 1e-12 {
        errs.push(format!("eesm((0, 2), 1) = {two}"));
    }
    for _ in 0..n {
        let len = r.gen_range(1..60);
        let x: Vec<f64> = (0..len).map(|_| 10f64.powf(r.gen_range(-1.5..3.0))).collect();
        let b = if r.gen_bool(0.5) { betas[r.gen_range(0..betas.len())] } else { r.gen_range(0.5..=20.0) };
        let e = eesm(&x, b).unwrap();
        let mean = x.iter().sum::<f64>() / len as f64;
        if e > mean * (1.0 + 1e-12) {
            errs.push(format!("eesm {e} > mean {mean} at beta {b}"));
        }
    }
    if eesm(&[], 1.0).is_ok() {
        errs.push("empty list accepted".into());
    }
    Check::new(
        "EESM identity and Jensen bound",
        errs.is_empty(),
        match errs.first() {
            None => format!("constant inputs over {} betas, {n} random vectors", betas.len()),
            Some(e) => format!("{} violations, first: {e}", errs.len()),
        },
    )
}

/// Criterion 5: OLLA on a synthetic link whose reported SINR is a biased,
/// noisy estimate of the true SINR and whose errors follow the logistic
/// BLEP of the chosen MCS.
pub fn olla_convergence(warmup: u64, ttis: u64, seed: u64) -> Check {
    let table = McsTable::default();
    let target = 0.2;
    let mut olla = OllaState::new(&OllaConfig::default(), target);
    let mut r = rng(seed);
    let (mut n, mut nack) = (0u64, 0u64);
    for t in 0..warmup + ttis {
        let true_db: f64 = 12.0 + 4.0 * r.sample::<f64, _>(StandardNormal);
        let reported_db = true_db + 1.5 + 1.0 * r.sample::<f64, _>(StandardNormal);
        let mcs = select_mcs(reported_db, olla.offset_db, &table, target);
        let ack = r.gen::<f64>() >= blep(&table.entries[mcs], true_db);
        olla.update(ack);
        if t >= warmup {
            n += 1;
            nack += u64::from(!ack);
        }
    }
    let bler = nack as f64 / n as f64;
    Check::new(
        "OLLA convergence",
        (0.18..=0.22).contains(&bler),
        format!("BLER {bler:.4} over {n} TTIs after {warmup} warm-up, offset {:.2} dB", olla.offset_db),
    )
}

/// Criterion 6: breadth-first exploration of every reachable state of one
/// six-process pool. States are the (phase, transmission count) per slot;
/// payloads carry a unique tag so credits can be traced.
pub fn harq_model_check() -> Check {
    let cfg = HarqConfig::default();
    let max_tx = cfg.max_retransmissions + 1;
    let key = |p: &HarqPool| -> Vec<(u8, u8)> {
        p.processes()
            .iter()
            .map(|s| {
                let phase = match s.state {
                    HarqState::Idle => 0,
                    HarqState::AwaitingFeedback => 1,
                    HarqState::PendingRetx => 2,
                };
                (phase, s.transmission_count)
            })
            .collect()
    };
    let mut errs: Vec<String> = Vec::new();
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    let init = HarqPool::new(0, cfg);
    seen.insert(key(&init));
    queue.push_back((init, 1u64));
    let mut transitions = 0u64;
    let (mut delivered, mut dropped) = (0u64, 0u64);

    while let Some((pool, tti)) = queue.pop_front() {
        if errs.len() > 10 {
            break;
        }
        if pool.in_flight() > cfg.processes {
            errs.push(format!("{} in flight", pool.in_flight()));
        }
        let mut next = Vec::new();

        let mut p = pool.clone();
        match p.start_transmission(1_000_000 + tti, 0, 1, 1.0, tti) {
            Ok(id) => {
                if pool.process(id).state != HarqState::Idle {
                    errs.push("new packet placed on a busy slot".into());
                }
                next.push(p);
            }
            Err(_) if pool.has_idle() => errs.push("start refused with an idle slot".into()),
            Err(_) => {}
        }

        for id in 0..cfg.processes {
            let s = *pool.process(id);
            let mut p = pool.clone();
            let retx = p.retransmit(id, 0.75, tti);
            match (s.state, retx) {
                (HarqState::PendingRetx, Ok(acc)) => {
                    if acc != combine(s.accumulated_sinr, 0.75) || p.process(id).transmission_count != s.transmission_count + 1 {
                        errs.push(format!("retransmission bookkeeping wrong on slot {id}"));
                    }
                    next.push(p);
                }
                (HarqState::PendingRetx, Err(e)) => errs.push(format!("valid retransmission refused: {e}")),
                (_, Ok(_)) => errs.push(format!("retransmission accepted in state {:?}", s.state)),
                (_, Err(_)) => {}
            }

            for ack in [true, false] {
                let mut p = pool.clone();
                let fb_tti = s.last_tx_tti + cfg.feedback_delay_ttis;
                let out = p.on_feedback(id, ack, fb_tti);
                match (s.state, out) {
                    (HarqState::AwaitingFeedback, Ok(o)) => {
                        match o {
                            FeedbackOutcome::Delivered { bits, first_transmission } => {
                                delivered += 1;
                                if !ack || bits != s.payload_bits || p.process(id).state != HarqState::Idle {
                                    errs.push(format!("bad delivery on slot {id}"));
                                }
                                if first_transmission != (s.transmission_count == 1) {
                                    errs.push("first-transmission flag wrong".into());
                                }
                            }
                            FeedbackOutcome::Retransmit { .. } => {
                                if ack || s.transmission_count >= max_tx || p.process(id).state != HarqState::PendingRetx {
                                    errs.push(format!("bad retransmit transition on slot {id}"));
                                }
                            }
                            FeedbackOutcome::Dropped { .. } => {
                                dropped += 1;
                                if ack || s.transmission_count != max_tx || p.process(id).state != HarqState::Idle {
                                    errs.push(format!("drop after {} transmissions", s.transmission_count));
                                }
                            }
                        }
                        if o.delivered_bits() > 0 && !matches!(o, FeedbackOutcome::Delivered { .. }) {
                            errs.push("bits credited without an ACK".into());
                        }
                        next.push(p);
                    }
                    (HarqState::AwaitingFeedback, Err(e)) => errs.push(format!("valid feedback refused: {e}")),
                    (_, Ok(_)) => errs.push(format!("feedback accepted in state {:?}", s.state)),
                    (_, Err(_)) => {}
                }
            }
            if s.state == HarqState::AwaitingFeedback {
                let mut p = pool.clone();
                if p.on_feedback(id, true, s.last_tx_tti + cfg.feedback_delay_ttis + 1).is_ok() {
                    errs.push("late feedback accepted".into());
                }
            }
        }

        for p in next {
            transitions += 1;
            if seen.insert(key(&p)) {
                queue.push_back((p, tti + 1));
            }
        }
    }

    let mut r = rng(6);
    for _ in 0..1000 {
        let (a, b, c): (f64, f64, f64) = (r.gen_range(0.0..100.0), r.gen_range(0.0..100.0), r.gen_range(0.0..100.0));
        if combine(a, b) != a + b || (combine(combine(a, b), c) - combine(a, combine(b, c))).abs() > 1e-12 {
            errs.push("combine not additive".into());
            break;
        }
    }
    // Drops need max_tx transmissions, deliveries need at least one.
    let pass = errs.is_empty() && delivered > 0 && dropped > 0;
    Check::new(
        "HARQ model check",
        pass,
        match errs.first() {
            None => format!("{} states, {transitions} transitions", seen.len()),
            Some(e) => format!("{} violations, first: {e}", errs.len()),
        },
    )
}

/// `J0(x) = (1/π) ∫₀^π cos(x sin θ) dθ`, composite Simpson.
pub fn bessel_j0(x: f64) -> f64 {
    let n = 2000;
    let h = PI / n as f64;
    let f = |t: f64| (x * t.sin()).cos();
    let mut s = f(0.0) + f(PI);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0 / PI
}

/// Criterion 7: normalized tap autocorrelation against `J0(2π f_d τ)` for
/// τ ≤ 50 ms, and per-path power of the TU profile, both over the ensemble
/// of independent links.
pub fn channel_statistics(seed: u64) -> Check {
    let start = Instant::now();
    let fd = doppler_hz(3.0, 2e9);
    let single = PowerDelayProfile {
        paths: vec![PathSpec { delay_s: 0.0, power: 1.0 }],
    };
    let dt = 1e-3;
    let max_lag = 50usize;
    let origins = 20usize;
    let spacing = 150usize;
    let n_links = 5000usize;
    let mut r = rng(seed);
    let mut acc = vec![Complex64::new(0.0, 0.0); max_lag + 1];
    let mut power = 0.0;
    let mut samples = 0usize;
    for _ in 0..n_links {
        let mut link = init_fading(&single, fd, 1, 1, 16, &mut r).unwrap();
        let mut series = Vec::with_capacity(origins * spacing);
        for n in 0..origins * spacing {
            link.advance_to(n as f64 * dt).unwrap();
            series.push(link.tap(0, 0, 0));
        }
        for o in 0..origins {
            let base = o * spacing;
            let h0 = series[base];
            for (lag, a) in acc.iter_mut().enumerate() {
                *a += h0 * series[base + lag].conj();
            }
            power += h0.norm_sqr();
            samples += 1;
        }
    }
    let mut worst_corr = 0.0f64;
    for (lag, a) in acc.iter().enumerate() {
        let est = a.re / power;
        let want = bessel_j0(2.0 * PI * fd * lag as f64 * dt);
        worst_corr = worst_corr.max((est - want).abs());
    }

    let tu = PowerDelayProfile::typical_urban_20();
    let mut tap_pow = vec![0.0; tu.paths.len()];
    let mut tap_samples = 0usize;
    for _ in 0..2500 {
        let mut link = init_fading(&tu, fd, 2, 2, 16, &mut r).unwrap();
        for n in 0..10 {
            link.advance_to(n as f64 * 0.2).unwrap();
            for pair in 0..4 {
                for (p, acc) in tap_pow.iter_mut().enumerate() {
                    *acc += link.tap(pair / 2, pair % 2, p).norm_sqr();
                }
                tap_samples += 1;
            }
        }
    }
    let total: f64 = tap_pow.iter().sum::<f64>() / tap_samples as f64;
    let worst_path = tap_pow
        .iter()
        .zip(&tu.paths)
        .map(|(a, p)| ((a / tap_samples as f64) / p.power - 1.0).abs())
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_corr <= 0.05 && (total - 1.0).abs() <= 0.01 && secs < 60.0;
    Check::new(
        "channel statistics",
        pass,
        format!(
            "max |R(τ) - J0| {worst_corr:.4} over {samples} origins, total tap power {total:.4} \
             ({tap_samples} samples, worst single path {:.1}%), {secs:.1} s",
            100.0 * worst_path
        ),
    )
}

/// Criterion 8.
pub fn sfr_masks() -> Check {
    let mut errs = Vec::new();
    if partition_subbands(50, 3).unwrap() != vec![17, 17, 16] {
        errs.push("partition(50, 3)".to_string());
    }
    let cfg = SystemConfig::default();
    let p_prb = cfg.p_max_prb_w();
    let total_w = 10f64.powf((cfg.radio.total_power_dbm - 30.0) / 10.0);
    for (kind, levels) in [(MaskKind::Pm1, PM1_DB), (MaskKind::Pm2, PM2_DB)] {
        let mask = PowerMask::from_config(&MaskConfig { kind, levels_db: vec![] }, 50).unwrap();
        for sector in 0..3 {
            let map = mask.power_map(reuse_index_for(sector), p_prb);
            let mut k = 0;
            for (band, size) in [17, 17, 16].into_iter().enumerate() {
                let want = 10f64.powf(levels[(band + 3 - sector % 3) % 3] / 10.0);
                for _ in 0..size {
                    if (map.fractions[k] - want).abs() > 1e-12 {
                        errs.push(format!("{kind} sector {sector} PRB {k}: {}", map.fractions[k]));
                    }
                    k += 1;
                }
            }
            if !(map.total_power() < total_w) {
                errs.push(format!("{kind} total {} W not below 46 dBm", map.total_power()));
            }
        }
    }
    {
        let kind = MaskKind::Rb012;
        let mask = PowerMask::from_config(&MaskConfig { kind, levels_db: vec![] }, 50).unwrap();
        if !(mask.power_map(0, p_prb).total_power() < total_w) {
            errs.push(format!("{kind} not below 46 dBm"));
        }
    }
    let flat = PowerMask::from_config(&MaskConfig::default(), 50).unwrap().power_map(0, p_prb);
    let flat_dbm = 10.0 * (flat.total_power() * 1e3).log10();
    if (flat_dbm - 46.0).abs() > 1e-12 {
        errs.push(format!("flat total {flat_dbm} dBm"));
    }
    Check::new(
        "SFR masks",
        errs.is_empty(),
        match errs.first() {
            None => format!("flat total {flat_dbm:.12} dBm"),
            Some(e) => format!("{} violations, first: {e}", errs.len()),
        },
    )
}

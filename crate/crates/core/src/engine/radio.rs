//! Per-UE radio links and post-detection SINR.
//!
//! Powers are normalized to the thermal noise power of one PRB, so the noise
//! covariance is the identity.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{init_fading, FadingLink, FrequencyGrid, PowerDelayProfile, PrbSinr};
use crate::config::AntennaMode;
use crate::detect::{
    lmmse_dual, lmmse_single, mrc_weights, sinr_dual, sinr_single, InterferenceCov, Mat2, NoiseCov, TxPowerSpec, Vec2,
};
use crate::error::Result;
use crate::geometry::UePlacement;

pub(crate) const N_RX: usize = 2;

/// Drop-wide quantities shared by every UE.
pub(crate) struct RadioContext {
    pub grid: FrequencyGrid,
    pub antenna: AntennaMode,
    pub n_tx: usize,
    pub n_prb: usize,
    pub samples_per_prb: usize,
    /// `P_max` per PRB over the per-PRB noise power.
    pub p_max: f64,
    /// `σ_c²` per sector and PRB.
    pub fractions: Vec<Vec<f64>>,
    pub noise: NoiseCov,
}

struct FadedInterferer {
    sector: usize,
    gain: f64,
    link: FadingLink,
}

pub(crate) struct UeRadio {
    serving: usize,
    serving_amp: f64,
    serving_link: FadingLink,
    faded: Vec<FadedInterferer>,
    /// Average power of the interferers without explicit fading, per PRB.
    white: Vec<f64>,
}

impl UeRadio {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        ctx: &RadioContext,
        placement: &UePlacement,
        pdp: &PowerDelayProfile,
        doppler_hz: f64,
        oscillators: usize,
        faded_interferers: usize,
        interference: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let serving = placement.serving_sector;
        let gains: Vec<f64> = placement.gains.iter().map(|g| g.linear()).collect();
        let serving_link = init_fading(pdp, doppler_hz, N_RX, ctx.n_tx, oscillators, rng)?;

        let mut others: Vec<usize> = if interference {
            (0..gains.len()).filter(|&j| j != serving).collect()
        } else {
            Vec::new()
        };
        others.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
        let n_faded = faded_interferers.min(others.len());
        let mut faded = Vec::with_capacity(n_faded);
        for &j in &others[..n_faded] {
            faded.push(FadedInterferer {
                sector: j,
                gain: gains[j],
                link: init_fading(pdp, doppler_hz, N_RX, ctx.n_tx, oscillators, rng)?,
            });
        }
        let mut white = vec![0.0; ctx.n_prb];
        for &j in &others[n_faded..] {
            for (k, w) in white.iter_mut().enumerate() {
                *w += ctx.p_max * ctx.fractions[j][k] * gains[j];
            }
        }
        Ok(Self {
            serving,
            serving_amp: gains[serving].sqrt(),
            serving_link,
            faded,
            white,
        })
    }

    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        self.serving_link.advance_to(t)?;
        for f in &mut self.faded {
            f.link.advance_to(t)?;
        }
        Ok(())
    }

    /// Mean serving SNR over PRBs at full power, ignoring fading.
    pub fn mean_snr(&self, ctx: &RadioContext) -> f64 {
        ctx.p_max * self.serving_amp * self.serving_amp
    }

    fn column(link: &FadingLink, grid: &FrequencyGrid, f: usize, tx: usize, amp: f64) -> Vec2 {
        let a = Complex64::new(amp, 0.0);
        Vec2([link.response(grid, f, 0, tx) * a, link.response(grid, f, 1, tx) * a])
    }

    fn sample_sinr(&self, ctx: &RadioContext, k: usize, f: usize) -> Result<PrbSinr> {
        let n_tx = ctx.n_tx;
        let mut intf = InterferenceCov::zero();
        for i in &self.faded {
            // Interferers split their PRB power evenly over their antennas.
            let w = ctx.p_max * ctx.fractions[i.sector][k] * i.gain / n_tx as f64;
            for tx in 0..n_tx {
                intf.add_rank_one(w, &Self::column(&i.link, &ctx.grid, f, tx, 1.0));
            }
        }
        intf.add_white(self.white[k]);

        let tx_power = TxPowerSpec::new(ctx.p_max, ctx.fractions[self.serving][k])?;
        let mut cols = [Vec2::ZERO; 2];
        for (tx, c) in cols.iter_mut().enumerate().take(n_tx) {
            *c = Self::column(&self.serving_link, &ctx.grid, f, tx, self.serving_amp);
        }
        let mut single = [0.0; 2];
        for (a, h) in cols.iter().enumerate().take(n_tx) {
            let w = match ctx.antenna {
                AntennaMode::Simo => mrc_weights(h)?,
                AntennaMode::Mimo => lmmse_single(h, &tx_power, &ctx.noise, &intf)?,
            };
            single[a] = sinr_single(&w, h, &tx_power, &ctx.noise, &intf)?;
        }
        let (su, mu) = if n_tx == 2 {
            let h = Mat2::from_columns(cols[0], cols[1]);
            let powers = tx_power.dual_powers();
            let w = lmmse_dual(&h, powers, &ctx.noise, &intf)?;
            let s = sinr_dual(&w, &h, powers, &ctx.noise, &intf)?;
            // Each MU receiver runs the dual-stream detector on its own
            // channel, so its per-stream SINR equals the SU value.
            (Some(s), Some(s))
        } else {
            (None, None)
        };
        Ok(PrbSinr { single, su, mu })
    }

    /// True SINRs of PRB `k`; with several samples per PRB, the linear mean.
    pub fn prb_sinr(&self, ctx: &RadioContext, k: usize) -> Result<PrbSinr> {
        let spp = ctx.samples_per_prb;
        if spp == 1 {
            return self.sample_sinr(ctx, k, k);
        }
        let mut acc = PrbSinr {
            single: [0.0; 2],
            su: (ctx.n_tx == 2).then_some([0.0; 2]),
            mu: (ctx.n_tx == 2).then_some([0.0; 2]),
        };
        let add = |a: &mut [f64; 2], b: [f64; 2]| {
            a[0] += b[0] / spp as f64;
            a[1] += b[1] / spp as f64;
        };
        for f in k * spp..(k + 1) * spp {
            let s = self.sample_sinr(ctx, k, f)?;
            add(&mut acc.single, s.single);
            if let (Some(a), Some(b)) = (acc.su.as_mut(), s.su) {
                add(a, b);
            }
            if let (Some(a), Some(b)) = (acc.mu.as_mut(), s.mu) {
                add(a, b);
            }
        }
        Ok(acc)
    }
}

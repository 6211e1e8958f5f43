use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Maximum Doppler shift for a UE moving at `speed_kmh` on `carrier_hz`.
pub fn doppler_hz(speed_kmh: f64, carrier_hz: f64) -> f64 {
    speed_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec {
    pub delay_s: f64,
    /// Linear power; a profile's powers sum to one.
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    pub paths: Vec<PathSpec>,
}

impl PowerDelayProfile {
    /// Builds a profile from delays in microseconds and powers in dB,
    /// normalizing the total power to one.
    pub fn from_db(delays_us: &[f64], powers_db: &[f64]) -> Result<Self> {
        if delays_us.len() != powers_db.len() || delays_us.is_empty() {
            return Err(Error::InvalidArgument(
                "power delay profile needs matching, nonempty delay and power lists".into(),
            ));
        }
        let lin: Vec<f64> = powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        Ok(Self {
            paths: delays_us
                .iter()
                .zip(&lin)
                .map(|(&d, &p)| PathSpec {
                    delay_s: d * 1e-6,
                    power: p / total,
                })
                .collect(),
        })
    }

    /// 20-path Typical Urban profile.
    pub fn typical_urban_20() -> Self {
        const DELAYS_US: [f64; 20] = [
            0.0, 0.217, 0.512, 0.514, 0.517, 0.674, 0.882, 1.230, 1.287, 1.311, 1.349, 1.533,
            1.535, 1.622, 1.818, 1.836, 1.884, 1.943, 2.048, 2.140,
        ];
        const POWERS_DB: [f64; 20] = [
            -5.7, -7.6, -10.1, -10.2, -10.2, -11.5, -13.4, -16.3, -16.9, -17.1, -17.4, -19.0,
            -19.0, -19.8, -21.5, -21.6, -22.1, -22.6, -23.5, -24.3,
        ];
        Self::from_db(&DELAYS_US, &POWERS_DB).expect("static profile is well formed")
    }

    pub fn delays(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.delay_s).collect()
    }
}

/// Frequency offsets (Hz, relative to the carrier) of the per-PRB samples.
///
/// One sample sits at the PRB center; three samples sit at the centers of
/// the PRB's thirds.
pub fn prb_sample_frequencies(
    n_prb: usize,
    subcarriers_per_prb: usize,
    spacing_hz: f64,
    samples_per_prb: usize,
) -> Vec<f64> {
    let n_sc = (n_prb * subcarriers_per_prb) as f64;
    let half = n_sc / 2.0 - 0.5;
    let mut out = Vec::with_capacity(n_prb * samples_per_prb);
    for k in 0..n_prb {
        let first = (k * subcarriers_per_prb) as f64;
        for s in 0..samples_per_prb {
            let pos = (s as f64 + 0.5) * subcarriers_per_prb as f64 / samples_per_prb as f64 - 0.5;
            out.push((first + pos - half) * spacing_hz);
        }
    }
    out
}

/// Precomputed `exp(-j 2π f τ_p)` for a fixed set of sample frequencies and
/// path delays. All links of a drop share one profile, hence one grid.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    freqs: Vec<f64>,
    n_paths: usize,
    phase: Vec<Complex64>,
}

impl FrequencyGrid {
    pub fn new(freqs: &[f64], delays_s: &[f64]) -> Self {
        let phase = freqs
            .iter()
            .flat_map(|&f| {
                delays_s
                    .iter()
                    .map(move |&tau| Complex64::from_polar(1.0, -TAU * f * tau))
            })
            .collect();
        Self {
            freqs: freqs.to_vec(),
            n_paths: delays_s.len(),
            phase,
        }
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    fn row(&self, f: usize) -> &[Complex64] {
        &self.phase[f * self.n_paths..(f + 1) * self.n_paths]
    }
}

/// Complex gains per (frequency sample, rx antenna, tx antenna).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample {
    pub n_rx: usize,
    pub n_tx: usize,
    pub gains: Vec<Complex64>,
}

impl ChannelSample {
    pub fn n_freq(&self) -> usize {
        self.gains.len() / (self.n_rx * self.n_tx)
    }

    pub fn get(&self, f: usize, rx: usize, tx: usize) -> Complex64 {
        self.gains[(f * self.n_rx + rx) * self.n_tx + tx]
    }
}

/// Sum-of-sinusoids Rayleigh fading for every (rx, tx, path) triple of one
/// link.
///
/// Each path gain is the sum of `n_osc` complex exponentials with random
/// arrival angles and phases. Over the ensemble the autocorrelation is
/// exactly `J0(2π f_d τ)` and the envelope tends to Rayleigh.
#[derive(Debug, Clone)]
pub struct FadingLink {
    n_rx: usize,
    n_tx: usize,
    n_paths: usize,
    n_osc: usize,
    doppler_hz: f64,
    time_s: f64,
    // Oscillator phasors and per-step rotors, split into real and imaginary
    // parts so the update loop vectorizes.
    phasor_re: Vec<f64>,
    phasor_im: Vec<f64>,
    omegas: Vec<f64>,
    rotor_re: Vec<f64>,
    rotor_im: Vec<f64>,
    rotor_dt: f64,
    taps: Vec<Complex64>,
}

pub fn init_fading<R: Rng + ?Sized>(
    pdp: &PowerDelayProfile,
    doppler_hz: f64,
    n_rx: usize,
    n_tx: usize,
    n_osc: usize,
    rng: &mut R,
) -> Result<FadingLink> {
    if !(doppler_hz >= 0.0 && doppler_hz.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid Doppler {doppler_hz} Hz")));
    }
    if n_rx == 0 || n_tx == 0 || n_osc == 0 {
        return Err(Error::InvalidArgument(
            "fading link needs at least one antenna per side and one oscillator".into(),
        ));
    }
    let n_paths = pdp.paths.len();
    let len = n_rx * n_tx * n_paths * n_osc;
    let mut phasor_re = Vec::with_capacity(len);
    let mut phasor_im = Vec::with_capacity(len);
    let mut omegas = Vec::with_capacity(len);
    for _pair in 0..n_rx * n_tx {
        for path in &pdp.paths {
            let amp = (path.power / n_osc as f64).sqrt();
            for _ in 0..n_osc {
                let aoa = rng.gen::<f64>() * TAU;
                let phase = rng.gen::<f64>() * TAU;
                let (sin, cos) = phase.sin_cos();
                phasor_re.push(amp * cos);
                phasor_im.push(amp * sin);
                omegas.push(TAU * doppler_hz * aoa.cos());
            }
        }
    }
    let mut link = FadingLink {
        n_rx,
        n_tx,
        n_paths,
        n_osc,
        doppler_hz,
        time_s: 0.0,
        phasor_re,
        phasor_im,
        omegas,
        rotor_re: Vec::new(),
        rotor_im: Vec::new(),
        rotor_dt: f64::NAN,
        taps: vec![Complex64::new(0.0, 0.0); n_rx * n_tx * n_paths],
    };
    link.refresh_taps();
    Ok(link)
}

impl FadingLink {
    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn doppler_hz(&self) -> f64 {
        self.doppler_hz
    }

    pub fn time_s(&self) -> f64 {
        self.time_s
    }

    /// Current path gains, indexed `(rx * n_tx + tx) * n_paths + path`.
    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn tap(&self, rx: usize, tx: usize, path: usize) -> Complex64 {
        self.taps[(rx * self.n_tx + tx) * self.n_paths + path]
    }

    /// Moves the link to absolute time `t` seconds.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if !(t >= self.time_s) {
            return Err(Error::InvalidArgument(format!(
                "fading time must be nondecreasing ({} -> {t})",
                self.time_s
            )));
        }
        let dt = t - self.time_s;
        if dt == 0.0 {
            return Ok(());
        }
        // `t` is usually `n * tti`, so consecutive differences wobble in the
        // last bits; a phase error of ω·1e-12·dt is far below anything the
        // model resolves.
        if !((dt - self.rotor_dt).abs() <= 1e-12 * dt) {
            let (sin, cos): (Vec<f64>, Vec<f64>) = self.omegas.iter().map(|&w| (w * dt).sin_cos()).unzip();
            self.rotor_re = cos;
            self.rotor_im = sin;
            self.rotor_dt = dt;
        }
        let n = self.phasor_re.len();
        let (pr, pi) = (&mut self.phasor_re[..n], &mut self.phasor_im[..n]);
        let (rr, ri) = (&self.rotor_re[..n], &self.rotor_im[..n]);
        for i in 0..n {
            let (a, b) = (pr[i], pi[i]);
            pr[i] = a * rr[i] - b * ri[i];
            pi[i] = a * ri[i] + b * rr[i];
        }
        self.time_s = t;
        self.refresh_taps();
        Ok(())
    }

    fn refresh_taps(&mut self) {
        let re = self.phasor_re.chunks_exact(self.n_osc);
        let im = self.phasor_im.chunks_exact(self.n_osc);
        for ((tap, re), im) in self.taps.iter_mut().zip(re).zip(im) {
            *tap = Complex64::new(re.iter().sum(), im.iter().sum());
        }
    }

    /// `H(f) = Σ_p tap_p exp(-j 2π f τ_p)` for one (rx, tx) pair at grid
    /// sample `f`.
    pub fn response(&self, grid: &FrequencyGrid, f: usize, rx: usize, tx: usize) -> Complex64 {
        let start = (rx * self.n_tx + tx) * self.n_paths;
        self.taps[start..start + self.n_paths]
            .iter()
            .zip(grid.row(f))
            .map(|(t, e)| t * e)
            .sum()
    }

    pub fn freq_response(&self, grid: &FrequencyGrid) -> ChannelSample {
        let mut gains = Vec::with_capacity(grid.len() * self.n_rx * self.n_tx);
        for f in 0..grid.len() {
            for rx in 0..self.n_rx {
                for tx in 0..self.n_tx {
                    gains.push(self.response(grid, f, rx, tx));
                }
            }
        }
        ChannelSample {
            n_rx: self.n_rx,
            n_tx: self.n_tx,
            gains,
        }
    }
}

//! MRC and LMMSE detectors and post-detection SINR for the three
//! transmission modes (single stream, dual-stream SU-MIMO, dual-stream
//! MU-MIMO) on a two-antenna receiver.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Column vector of two complex entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2(pub [C; 2]);

/// 2×2 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C; 2]; 2]);

impl Vec2 {
    pub const ZERO: Vec2 = Vec2([ZERO, ZERO]);

    pub fn new(a: C, b: C) -> Self {
        Vec2([a, b])
    }

    pub fn real(a: f64, b: f64) -> Self {
        Vec2([C::new(a, 0.0), C::new(b, 0.0)])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    /// `selfᴴ · other`
    pub fn dot(&self, other: &Vec2) -> C {
        self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]
    }

    pub fn scale(&self, s: C) -> Vec2 {
        Vec2([self.0[0] * s, self.0[1] * s])
    }

    /// `self · selfᴴ`
    pub fn outer(&self) -> Mat2 {
        let [a, b] = self.0;
        Mat2([[a * a.conj(), a * b.conj()], [b * a.conj(), b * b.conj()]])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);

    pub fn identity() -> Self {
        Self::diag(1.0, 1.0)
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Mat2([[C::new(a, 0.0), ZERO], [ZERO, C::new(b, 0.0)]])
    }

    pub fn from_columns(c0: Vec2, c1: Vec2) -> Self {
        Mat2([[c0.0[0], c1.0[0]], [c0.0[1], c1.0[1]]])
    }

    pub fn column(&self, j: usize) -> Vec2 {
        Vec2([self.0[0][j], self.0[1][j]])
    }

    pub fn row(&self, i: usize) -> Vec2 {
        Vec2(self.0[i])
    }

    pub fn adjoint(&self) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    /// Scales column `j` by `s[j]`, i.e. `self · diag(s)`.
    pub fn scale_columns(&self, s: [f64; 2]) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0] * s[0], m[0][1] * s[1]], [m[1][0] * s[0], m[1][1] * s[1]]])
    }

    pub fn mul_vec(&self, v: &Vec2) -> Vec2 {
        let m = &self.0;
        Vec2([
            m[0][0] * v.0[0] + m[0][1] * v.0[1],
            m[1][0] * v.0[0] + m[1][1] * v.0[1],
        ])
    }

    pub fn det(&self) -> C {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Closed-form inverse. Fails when the determinant is negligible against
    /// the matrix scale.
    pub fn inverse(&self) -> Result<Mat2> {
        let m = &self.0;
        let det = self.det();
        let scale = m
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if !(det.norm() > 1e-14 * scale * scale) || !det.norm().is_finite() {
            return Err(Error::SingularCovariance);
        }
        let inv = det.inv();
        Ok(Mat2([
            [m[1][1] * inv, -m[0][1] * inv],
            [-m[1][0] * inv, m[0][0] * inv],
        ]))
    }

    /// `vᴴ · self · v`, real for Hermitian `self`.
    pub fn quad_form(&self, v: &Vec2) -> f64 {
        v.dot(&self.mul_vec(v)).re
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.0[0][1] - self.0[1][0].conj()).norm() <= tol
            && self.0[0][0].im.abs() <= tol
            && self.0[1][1].im.abs() <= tol
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// Transmit power of one PRB as seen by the detector.
///
/// `sigma_x2` is the symbol power on one used antenna, `sigma_c2` the power
/// mask fraction on this PRB. In dual-stream mode each antenna carries
/// `sigma_x2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxPowerSpec {
    pub sigma_x2: f64,
    pub sigma_c2: f64,
}

impl TxPowerSpec {
    pub fn new(sigma_x2: f64, sigma_c2: f64) -> Result<Self> {
        if !(sigma_x2 > 0.0) || !(sigma_c2 > 0.0 && sigma_c2 <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "transmit power spec out of range: sigma_x2 = {sigma_x2}, sigma_c2 = {sigma_c2}"
            )));
        }
        Ok(Self { sigma_x2, sigma_c2 })
    }

    /// `σ_x² σ_c²`, the single-stream signal power.
    pub fn single_power(&self) -> f64 {
        self.sigma_x2 * self.sigma_c2
    }

    /// Diagonal of `Σ_x = σ_c² diag(σ_x²/2, σ_x²/2)`.
    pub fn dual_powers(&self) -> [f64; 2] {
        let p = 0.5 * self.sigma_x2 * self.sigma_c2;
        [p, p]
    }
}

/// Thermal noise covariance: diagonal with positive entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCov(Mat2);

impl NoiseCov {
    pub fn new(var0: f64, var1: f64) -> Result<Self> {
        if !(var0 > 0.0 && var1 > 0.0) {
            return Err(Error::InvalidArgument("noise variances must be positive".into()));
        }
        Ok(NoiseCov(Mat2::diag(var0, var1)))
    }

    pub fn white(var: f64) -> Result<Self> {
        Self::new(var, var)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }
}

/// Aggregate inter-cell interference covariance (Hermitian, PSD).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceCov(Mat2);

impl InterferenceCov {
    pub fn zero() -> Self {
        InterferenceCov(Mat2::ZERO)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    /// Adds `w · h hᴴ`.
    pub fn add_rank_one(&mut self, weight: f64, h: &Vec2) {
        self.0 = self.0 + h.outer().scale(weight);
    }

    /// Adds `w · I`, the expected covariance of an interferer whose fading is
    /// not tracked explicitly.
    pub fn add_white(&mut self, weight: f64) {
        self.0 = self.0 + Mat2::diag(weight, weight);
    }
}

/// `Σ_z = Σ_j w_j h_j h_jᴴ` where `w_j` is received power (transmit power on
/// the sample times linear large-scale gain) and `h_j` the fading vector.
pub fn interference_cov<'a, I>(terms: I) -> InterferenceCov
where
    I: IntoIterator<Item = (f64, &'a Vec2)>,
{
    let mut cov = InterferenceCov::zero();
    for (w, h) in terms {
        cov.add_rank_one(w, h);
    }
    cov
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SinrResult {
    Single(f64),
    SuDual([f64; 2]),
    /// `[ue_a, ue_b]`: each UE's SINR for the stream it owns.
    MuDual([f64; 2]),
}

/// `w = h / ‖h‖²`
pub fn mrc_weights(h: &Vec2) -> Result<Vec2> {
    let n = h.norm_sqr();
    if !(n > 0.0) {
        return Err(Error::ZeroChannel);
    }
    Ok(h.scale(C::new(1.0 / n, 0.0)))
}

/// `w = σ_x²σ_c² (σ_x²σ_c² h hᴴ + Σ_n + Σ_z)⁻¹ h`
pub fn lmmse_single(h: &Vec2, tx: &TxPowerSpec, noise: &NoiseCov, intf: &InterferenceCov) -> Result<Vec2> {
    let p = tx.single_power();
    let total = h.outer().scale(p) + noise.0 + intf.0;
    Ok(total.inverse()?.mul_vec(h).scale(C::new(p, 0.0)))
}

/// `γ = |wᴴh|² σ_x²σ_c² / (wᴴΣ_n w + wᴴΣ_z w)`
pub fn sinr_single(w: &Vec2, h: &Vec2, tx: &TxPowerSpec, noise: &NoiseCov, intf: &InterferenceCov) -> Result<f64> {
    let num = w.dot(h).norm_sqr() * tx.single_power();
    let den = noise.0.quad_form(w) + intf.0.quad_form(w);
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}

/// `W = Σ_x Hᴴ (H Σ_x Hᴴ + Σ_n + Σ_z)⁻¹`; row `s` is `w_sᴴ`.
///
/// `stream_powers` is the diagonal of `Σ_x` (mask fraction included).
pub fn lmmse_dual(h: &Mat2, stream_powers: [f64; 2], noise: &NoiseCov, intf: &InterferenceCov) -> Result<Mat2> {
    let hs = h.scale_columns(stream_powers);
    let total = hs * h.adjoint() + noise.0 + intf.0;
    Ok(hs.adjoint() * total.inverse()?)
}

/// Per-stream SINR of a dual-stream detector `W` (rows `w_sᴴ`).
pub fn sinr_dual(
    w: &Mat2,
    h: &Mat2,
    stream_powers: [f64; 2],
    noise: &NoiseCov,
    intf: &InterferenceCov,
) -> Result<[f64; 2]> {
    let mut out = [0.0; 2];
    for s in 0..2 {
        let o = 1 - s;
        // Row s of W is w_sᴴ; recover w_s for the quadratic forms.
        let row = w.row(s);
        let ws = Vec2([row.0[0].conj(), row.0[1].conj()]);
        let sig = ws.dot(&h.column(s)).norm_sqr() * stream_powers[s];
        let cross = ws.dot(&h.column(o)).norm_sqr() * stream_powers[o];
        let den = cross + noise.0.quad_form(&ws) + intf.0.quad_form(&ws);
        if !(den > 0.0) {
            return Err(Error::ZeroDenominator);
        }
        out[s] = sig / den;
    }
    Ok(out)
}

/// One receiver's view of a dual-stream transmission.
#[derive(Debug, Clone, Copy)]
pub struct ReceiverView<'a> {
    pub h: &'a Mat2,
    pub noise: &'a NoiseCov,
    pub intf: &'a InterferenceCov,
}

/// MU-MIMO: stream 0 belongs to `ue_a`, stream 1 to `ue_b`. Each UE runs the
/// dual-stream LMMSE detector on its own channel and covariances and keeps
/// only the SINR of its own stream.
pub fn sinr_mu(ue_a: ReceiverView<'_>, ue_b: ReceiverView<'_>, stream_powers: [f64; 2]) -> Result<SinrResult> {
    let own = |v: ReceiverView<'_>, s: usize| -> Result<f64> {
        let w = lmmse_dual(v.h, stream_powers, v.noise, v.intf)?;
        Ok(sinr_dual(&w, v.h, stream_powers, v.noise, v.intf)?[s])
    };
    Ok(SinrResult::MuDual([own(ue_a, 0)?, own(ue_b, 1)?]))
}

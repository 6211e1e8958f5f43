use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// `R / T_i`
    Pf,
    /// `(P_ks / P_max) R / T_i`
    Ppf,
    /// `(CQI / CQI_avg)^α₁ (T_i / T_tot)^-α₂`
    Mmpf,
    /// `(P_ks / P_max) (CQI / CQI_avg)^α₁ (T_i / T_tot)^-α₂`
    Mpmpf,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pf" => Ok(Algorithm::Pf),
            "ppf" => Ok(Algorithm::Ppf),
            "mmpf" => Ok(Algorithm::Mmpf),
            "mpmpf" => Ok(Algorithm::Mpmpf),
            other => Err(Error::config("scheduler.algorithm", format!("unknown scheduler `{other}`"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Pf => "pf",
            Algorithm::Ppf => "ppf",
            Algorithm::Mmpf => "mmpf",
            Algorithm::Mpmpf => "mpmpf",
        })
    }
}

/// The (α₁, α₂) couples used for the MMPF/MPMPF comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaPreset {
    M1,
    M2,
    M3,
}

impl AlphaPreset {
    pub fn alphas(self) -> (f64, f64) {
        match self {
            AlphaPreset::M1 => (1.0, 1.0),
            AlphaPreset::M2 => (2.0, 1.0),
            AlphaPreset::M3 => (4.0, 1.0),
        }
    }
}

impl std::str::FromStr for AlphaPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(AlphaPreset::M1),
            "m2" => Ok(AlphaPreset::M2),
            "m3" => Ok(AlphaPreset::M3),
            other => Err(Error::InvalidArgument(format!("unknown alpha preset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulerParams {
    pub algorithm: Algorithm,
    pub alpha1: f64,
    pub alpha2: f64,
    pub max_mux_ues: usize,
    /// Forgetting factor ρ of the throughput averages.
    pub forgetting_factor: f64,
}

impl Default for SchedulerParams {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Pf,
            alpha1: 1.0,
            alpha2: 1.0,
            max_mux_ues: 10,
            forgetting_factor: 0.002,
        }
    }
}

/// Inputs of one stream's metric on one resource.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamInput {
    /// `P_ks / P_max`
    pub power_ratio: f64,
    /// Estimated bits per TTI.
    pub rate: f64,
    /// Reported linear SINR.
    pub cqi: f64,
    pub cqi_avg: f64,
}

fn powf_fast(x: f64, a: f64) -> f64 {
    if a == 1.0 {
        x
    } else if a.fract() == 0.0 && a.abs() <= 16.0 {
        x.powi(a as i32)
    } else {
        x.powf(a)
    }
}

impl SchedulerParams {
    pub fn with_preset(mut self, preset: AlphaPreset) -> Self {
        (self.alpha1, self.alpha2) = preset.alphas();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha1 >= 0.0 && self.alpha1.is_finite()) {
            return Err(Error::config("scheduler.alpha1", "must be a nonnegative number"));
        }
        if !(self.alpha2 >= 0.0 && self.alpha2.is_finite()) {
            return Err(Error::config("scheduler.alpha2", "must be a nonnegative number"));
        }
        if self.max_mux_ues == 0 {
            return Err(Error::config("scheduler.max_mux_ues", "must be at least 1"));
        }
        if !(self.forgetting_factor > 0.0 && self.forgetting_factor < 1.0) {
            return Err(Error::config("scheduler.forgetting_factor", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Configured metric for one stream, without argument checks. Callers
    /// guarantee positive throughput averages and CQI averages.
    pub fn stream_metric(&self, s: &StreamInput, t_i: f64, t_tot: f64) -> f64 {
        match self.algorithm {
            Algorithm::Pf => s.rate / t_i,
            Algorithm::Ppf => s.power_ratio * s.rate / t_i,
            Algorithm::Mmpf => powf_fast(s.cqi / s.cqi_avg, self.alpha1) * powf_fast(t_tot / t_i, self.alpha2),
            Algorithm::Mpmpf => {
                s.power_ratio * powf_fast(s.cqi / s.cqi_avg, self.alpha1) * powf_fast(t_tot / t_i, self.alpha2)
            }
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {x}")))
    }
}

pub fn metric_pf(rate: f64, t_i: f64) -> Result<f64> {
    positive("T_i", t_i)?;
    Ok(rate / t_i)
}

pub fn metric_ppf(p_ks: f64, p_max: f64, rate: f64, t_i: f64) -> Result<f64> {
    positive("P_max", p_max)?;
    if !(p_ks > 0.0 && p_ks <= p_max) {
        return Err(Error::InvalidArgument(format!("P_ks = {p_ks} outside (0, P_max = {p_max}]")));
    }
    Ok(p_ks / p_max * metric_pf(rate, t_i)?)
}

#[allow(clippy::too_many_arguments)]
pub fn metric_mpmpf(p_ks: f64, p_max: f64, cqi: f64, cqi_avg: f64, t_i: f64, t_tot: f64, alpha1: f64, alpha2: f64) -> Result<f64> {
    positive("P_ks", p_ks)?;
    positive("P_max", p_max)?;
    Ok(p_ks / p_max * metric_mmpf(cqi, cqi_avg, t_i, t_tot, alpha1, alpha2)?)
}

pub fn metric_mmpf(cqi: f64, cqi_avg: f64, t_i: f64, t_tot: f64, alpha1: f64, alpha2: f64) -> Result<f64> {
    for (n, v) in [("CQI", cqi), ("CQI_avg", cqi_avg), ("T_i", t_i), ("T_tot", t_tot)] {
        positive(n, v)?;
    }
    Ok((cqi / cqi_avg).powf(alpha1) * (t_i / t_tot).powf(-alpha2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn pf_examples() {
        assert_eq!(metric_pf(700.0, 700.0).unwrap(), 1.0);
        assert_eq!(metric_pf(1000.0, 500.0).unwrap(), 2.0);
        assert!(metric_pf(1.0, 0.0).is_err());
    }

    #[test]
    fn ppf_examples() {
        assert_eq!(metric_ppf(3.0, 3.0, 1000.0, 500.0).unwrap(), metric_pf(1000.0, 500.0).unwrap());
        assert_eq!(metric_ppf(0.5, 1.0, 1000.0, 500.0).unwrap(), 1.0);
        assert!(metric_ppf(1.5, 1.0, 1.0, 1.0).is_err());
        assert!(metric_ppf(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn mpmpf_examples() {
        // P ratio 0.5, CQI ratio 2, T ratio 0.5 → 0.5·2·2
        assert_abs_diff_eq!(metric_mpmpf(0.5, 1.0, 2.0, 1.0, 0.5, 1.0, 1.0, 1.0).unwrap(), 2.0, epsilon = 1e-15);
        for (a1, a2) in [(0.0, 0.0), (1.0, 1.0), (4.0, 1.0), (2.5, 0.3)] {
            assert_eq!(metric_mpmpf(1.0, 1.0, 3.0, 3.0, 7.0, 7.0, a1, a2).unwrap(), 1.0);
        }
        assert_eq!(metric_mpmpf(0.37, 1.0, 9.0, 2.0, 5.0, 1.0, 0.0, 0.0).unwrap(), 0.37);
        assert!(metric_mpmpf(1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn mmpf_examples() {
        assert_eq!(metric_mmpf(8.0, 2.0, 1.0, 1.0, 2.0, 1.0).unwrap(), 16.0);
        assert_eq!(metric_mmpf(2.0, 2.0, 3.0, 3.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(
            metric_mmpf(3.0, 2.0, 4.0, 5.0, 2.0, 1.0).unwrap(),
            metric_mpmpf(1.0, 1.0, 3.0, 2.0, 4.0, 5.0, 2.0, 1.0).unwrap()
        );
    }

    #[test]
    fn fast_path_matches_checked_functions() {
        let s = StreamInput { power_ratio: 0.63, rate: 448.0, cqi: 5.2, cqi_avg: 3.1 };
        for algorithm in [Algorithm::Pf, Algorithm::Ppf, Algorithm::Mmpf, Algorithm::Mpmpf] {
            for (a1, a2) in [(1.0, 1.0), (2.0, 1.0), (4.0, 1.0), (0.7, 1.3)] {
                let p = SchedulerParams { algorithm, alpha1: a1, alpha2: a2, ..Default::default() };
                let fast = p.stream_metric(&s, 300.0, 410.0);
                let slow = match algorithm {
                    Algorithm::Pf => metric_pf(s.rate, 300.0),
                    Algorithm::Ppf => metric_ppf(s.power_ratio, 1.0, s.rate, 300.0),
                    Algorithm::Mmpf => metric_mmpf(s.cqi, s.cqi_avg, 300.0, 410.0, a1, a2),
                    Algorithm::Mpmpf => metric_mpmpf(s.power_ratio, 1.0, s.cqi, s.cqi_avg, 300.0, 410.0, a1, a2),
                }
                .unwrap();
                assert_abs_diff_eq!(fast, slow, epsilon = 1e-12 * slow);
            }
        }
    }

    #[test]
    fn presets_and_parsing() {
        assert_eq!(AlphaPreset::M2.alphas(), (2.0, 1.0));
        assert_eq!("MPMPF".parse::<Algorithm>().unwrap(), Algorithm::Mpmpf);
        assert!("foo".parse::<Algorithm>().is_err());
        let p = SchedulerParams::default().with_preset(AlphaPreset::M3);
        assert_eq!((p.alpha1, p.alpha2), (4.0, 1.0));
        assert!(SchedulerParams { forgetting_factor: 1.0, ..Default::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn pf_scale_invariant(r in 1.0f64..1e4, t in 1.0f64..1e4, c in 1e-3f64..1e3) {
            let a = metric_pf(r, t).unwrap();
            let b = metric_pf(c * r, c * t).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }

        #[test]
        fn ppf_increasing_in_power(p in 0.01f64..0.99, dp in 0.001f64..0.01, r in 1.0f64..1e3, t in 1.0f64..1e3) {
            prop_assert!(metric_ppf(p + dp, 1.0, r, t).unwrap() > metric_ppf(p, 1.0, r, t).unwrap());
        }

        #[test]
        fn mpmpf_increasing_in_power(p in 0.01f64..0.99, dp in 0.001f64..0.01, q in 0.1f64..10.0, t in 1.0f64..1e3) {
            prop_assert!(
                metric_mpmpf(p + dp, 1.0, q, 1.0, t, 100.0, 1.0, 1.0).unwrap()
                    > metric_mpmpf(p, 1.0, q, 1.0, t, 100.0, 1.0, 1.0).unwrap()
            );
        }
    }
}

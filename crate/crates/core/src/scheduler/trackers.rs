/// Per-mode running averages of a UE's reported linear SINR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqiAverages {
    pub single: f64,
    pub dual: f64,
}

/// Per-UE scheduler state.
#[derive(Debug, Clone, PartialEq)]
pub struct UeTracker {
    /// `T_i`: exponentially averaged delivered bits per TTI.
    pub throughput: f64,
    /// `CQI_avg`; `None` until the first report is visible.
    pub cqi_avg: Option<CqiAverages>,
    pub delivered_bits: u64,
}

impl UeTracker {
    pub fn new(initial_throughput: f64) -> Self {
        Self {
            throughput: initial_throughput,
            cqi_avg: None,
            delivered_bits: 0,
        }
    }

    /// Folds a new report's band means into the CQI averages. `weight` is
    /// the per-report forgetting weight.
    pub fn observe_cqi(&mut self, band_mean: CqiAverages, weight: f64) {
        self.cqi_avg = Some(match self.cqi_avg {
            None => band_mean,
            Some(a) => CqiAverages {
                single: (1.0 - weight) * a.single + weight * band_mean.single,
                dual: (1.0 - weight) * a.dual + weight * band_mean.dual,
            },
        });
    }
}

/// Per-sector state: `T_tot`, the average delivered bits per TTI of the
/// UEs ranked in the TD stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellTracker {
    pub t_tot: f64,
}

/// One TTI of the exponential filters:
/// `T_i ← (1-ρ) T_i + ρ·delivered_i` for every UE (zero when not served),
/// and `T_tot ← (1-ρ) T_tot + ρ·mean(delivered over ranked UEs)` when the
/// TD stage ranked anyone.
pub fn update_trackers(
    ues: &mut [UeTracker],
    delivered: &[u64],
    cell: &mut CellTracker,
    ranked: &[usize],
    rho: f64,
) {
    debug_assert_eq!(ues.len(), delivered.len());
    for (u, &d) in ues.iter_mut().zip(delivered) {
        u.throughput = (1.0 - rho) * u.throughput + rho * d as f64;
        u.delivered_bits += d;
    }
    if !ranked.is_empty() {
        let mean = ranked.iter().map(|&i| delivered[i] as f64).sum::<f64>() / ranked.len() as f64;
        cell.t_tot = (1.0 - rho) * cell.t_tot + rho * mean;
    }
}

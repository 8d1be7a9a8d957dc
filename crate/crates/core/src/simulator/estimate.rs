use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_slot, CellRealization, SimConfig};
use crate::analysis::{atp_protection_radius, atp_w_constant, OutageCurve, SchemeDerived};
use crate::error::Result;
use crate::model::{NetworkParams, SchemeConfig};
use crate::report::{MetricsReport, ReportMode, StandardErrors};

/// Counters of one trial. Merging is plain addition, so pooled estimates
/// do not depend on how slots are split into trials.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrialStats {
    /// Measured transmitter × UL sub-slot pairs.
    pub node_slots: u64,
    pub operable_slots: u64,
    pub transmit_slots: u64,
    pub ul_slots: u64,
    /// Per threshold: UL sub-slots with Γ_b below it.
    pub bs_outage_counts: Vec<u64>,
    pub d2d_samples: u64,
    /// Per threshold: (slot, pair) samples with Γ_i below it.
    pub d2d_outage_counts: Vec<u64>,
    /// Σ over UL sub-slots and measured pairs of w_i·log₂(1 + Γ_i).
    pub rate_sum: f64,
    /// Area of the measured region.
    pub area_m2: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

impl TrialStats {
    fn empty(n_b: usize, n_d: usize, area_m2: f64) -> Self {
        TrialStats {
            bs_outage_counts: vec![0; n_b],
            d2d_outage_counts: vec![0; n_d],
            area_m2,
            ..Default::default()
        }
    }

    pub fn merge(&mut self, other: &TrialStats) {
        self.node_slots += other.node_slots;
        self.operable_slots += other.operable_slots;
        self.transmit_slots += other.transmit_slots;
        self.ul_slots += other.ul_slots;
        self.d2d_samples += other.d2d_samples;
        self.rate_sum += other.rate_sum;
        if self.bs_outage_counts.is_empty() {
            self.bs_outage_counts = vec![0; other.bs_outage_counts.len()];
            self.d2d_outage_counts = vec![0; other.d2d_outage_counts.len()];
            self.area_m2 = other.area_m2;
        }
        for (a, b) in self
            .bs_outage_counts
            .iter_mut()
            .zip(&other.bs_outage_counts)
        {
            *a += b;
        }
        for (a, b) in self
            .d2d_outage_counts
            .iter_mut()
            .zip(&other.d2d_outage_counts)
        {
            *a += b;
        }
    }

    pub fn operable_prob(&self) -> f64 {
        ratio(self.operable_slots, self.node_slots)
    }

    pub fn transmit_prob(&self) -> f64 {
        ratio(self.transmit_slots, self.operable_slots)
    }

    pub fn active_density(&self) -> f64 {
        if self.ul_slots == 0 {
            return f64::NAN;
        }
        self.transmit_slots as f64 / (self.ul_slots as f64 * self.area_m2)
    }

    pub fn bs_outage(&self) -> Vec<f64> {
        self.bs_outage_counts
            .iter()
            .map(|&c| ratio(c, self.ul_slots))
            .collect()
    }

    pub fn d2d_outage(&self) -> Vec<f64> {
        self.d2d_outage_counts
            .iter()
            .map(|&c| ratio(c, self.d2d_samples))
            .collect()
    }

    pub fn sum_rate(&self) -> f64 {
        if self.ul_slots == 0 {
            f64::NAN
        } else {
            self.rate_sum / self.ul_slots as f64
        }
    }
}

/// Runs trial `trial` of `config`. The random stream is ChaCha8 keyed by
/// the seed, with the trial index as stream id.
pub fn run_trial(
    params: &NetworkParams,
    scheme: &SchemeConfig,
    config: &SimConfig,
    gammas_b: &[f64],
    gammas_d: &[f64],
    trial: u64,
) -> Result<TrialStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial);
    let mut state = CellRealization::sample(params, config, trial, &mut rng)?;
    let mut stats = TrialStats::empty(gammas_b.len(), gammas_d.len(), params.cell_area_m2());
    let ts = params.sense_window;

    for slot in 0..config.slots {
        let out = run_slot(
            params,
            &mut state,
            scheme,
            config.contention,
            config.redraw,
            &mut rng,
        )?;
        if slot < config.burn_in {
            continue;
        }
        stats.ul_slots += 1;
        for i in 0..state.len() {
            if state.measured[i] {
                stats.node_slots += 1;
                stats.operable_slots += out.operable_flags[i] as u64;
                stats.transmit_slots += out.transmit_flags[i] as u64;
            }
        }
        for (count, &g) in stats.bs_outage_counts.iter_mut().zip(gammas_b) {
            *count += (out.sinr_bs < g) as u64;
        }
        for &(i, sinr) in &out.sinr_d2d {
            stats.d2d_samples += 1;
            for (count, &g) in stats.d2d_outage_counts.iter_mut().zip(gammas_d) {
                *count += (sinr < g) as u64;
            }
            let weight = match scheme {
                SchemeConfig::Ftp { .. } => 0.5,
                SchemeConfig::Atp { .. } => 0.5 * (1.0 - out.backoffs[i] * ts),
            };
            stats.rate_sum += weight * sinr.ln_1p() / std::f64::consts::LN_2;
        }
    }
    Ok(stats)
}

fn standard_error(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    if v.len() < 2 {
        return f64::NAN;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Runs all trials (in parallel) and pools them into an empirical report.
pub fn estimate_metrics(
    params: &NetworkParams,
    scheme: &SchemeConfig,
    config: &SimConfig,
    gammas_b: &[f64],
    gammas_d: &[f64],
) -> Result<MetricsReport> {
    params.validate_for_simulation()?;
    scheme.validate()?;
    config.validate()?;

    let trials: Vec<TrialStats> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(params, scheme, config, gammas_b, gammas_d, t))
        .collect::<Result<_>>()?;

    let mut pooled = TrialStats::empty(gammas_b.len(), gammas_d.len(), params.cell_area_m2());
    for t in &trials {
        pooled.merge(t);
    }

    let curve_errors = |f: &dyn Fn(&TrialStats) -> Vec<f64>, len: usize| -> Vec<f64> {
        (0..len)
            .map(|k| standard_error(trials.iter().map(|t| f(t)[k])))
            .collect()
    };
    let errors = StandardErrors {
        operable_prob: standard_error(trials.iter().map(TrialStats::operable_prob)),
        transmit_prob: standard_error(trials.iter().map(TrialStats::transmit_prob)),
        active_density_per_m2: standard_error(trials.iter().map(TrialStats::active_density)),
        bs_outage: curve_errors(&TrialStats::bs_outage, gammas_b.len()),
        d2d_outage: curve_errors(&TrialStats::d2d_outage, gammas_d.len()),
        sum_rate: standard_error(trials.iter().map(TrialStats::sum_rate)),
    };

    let (protection_radius_m, w_constant) = match *scheme {
        SchemeConfig::Ftp { .. } => (0.0, 0.0),
        SchemeConfig::Atp { beta_th_mw } => (
            atp_protection_radius(params, beta_th_mw)?,
            atp_w_constant(params, beta_th_mw)?,
        ),
    };
    let derived = SchemeDerived {
        operable_prob: pooled.operable_prob(),
        transmit_prob: pooled.transmit_prob(),
        active_density_per_m2: pooled.active_density(),
        protection_radius_m,
        w_constant,
        fixed_point_residual: 0.0,
    };
    Ok(MetricsReport {
        mode: ReportMode::Simulation,
        scheme: *scheme,
        derived,
        bs_outage: OutageCurve {
            thresholds: gammas_b.to_vec(),
            probabilities: pooled.bs_outage(),
        },
        d2d_outage: OutageCurve {
            thresholds: gammas_d.to_vec(),
            probabilities: pooled.d2d_outage(),
        },
        sum_rate: pooled.sum_rate(),
        errors: Some(errors),
        n_samples: pooled.ul_slots as usize,
        n_d2d_samples: pooled.d2d_samples as usize,
    })
}

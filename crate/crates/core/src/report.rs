//! Result bundle shared by the analytical model and the simulator.

use serde::{Deserialize, Serialize};

use crate::analysis::{OutageCurve, SchemeDerived};
use crate::model::SchemeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportMode {
    Analysis,
    Simulation,
}

/// Standard errors of the simulated metrics, estimated from the spread of
/// the per-trial estimates (NaN with a single trial).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StandardErrors {
    pub operable_prob: f64,
    pub transmit_prob: f64,
    pub active_density_per_m2: f64,
    pub bs_outage: Vec<f64>,
    pub d2d_outage: Vec<f64>,
    pub sum_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: ReportMode,
    pub scheme: SchemeConfig,
    pub derived: SchemeDerived,
    pub bs_outage: OutageCurve,
    /// NaN entries when no D2D link was ever measured.
    pub d2d_outage: OutageCurve,
    pub sum_rate: f64,
    pub errors: Option<StandardErrors>,
    /// UL sub-slots measured after burn-in, summed over trials.
    pub n_samples: usize,
    /// (slot, transmitting pair) samples behind the D2D outage.
    pub n_d2d_samples: usize,
}

//! Experiment files.
//!
//! An experiment is one TOML document. Physical quantities are given in
//! dBm, meters and dB here and converted to linear units once, on load.
//! Every section except `[scheme]` may be omitted and falls back to the
//! reference scenario.

use std::path::Path;

use d2d_eh::analysis::sweep_points;
use d2d_eh::model::{db_to_linear, dbm_to_mw, mw_to_dbm};
use d2d_eh::numerics::{DEFAULT_ORDER, DEFAULT_REL_TOL};
use d2d_eh::simulator::SimConfig;
use d2d_eh::{NetworkParams, SchemeConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub network: NetworkSection,
    pub scheme: SchemeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub thresholds: ThresholdSection,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub validate: ToleranceSection,
}

/// Network constants in boundary units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub cell_radius_m: f64,
    pub d2d_density_per_m2: f64,
    pub pair_distance_m: f64,
    pub path_loss_exponent: f64,
    pub bs_power_dbm: f64,
    pub cell_user_power_dbm: f64,
    pub d2d_power_dbm: f64,
    pub sense_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub harvest_efficiency: f64,
    pub sense_window: f64,
    /// Operability threshold of the battery in dBm·sub-slot; defaults to
    /// one transmission's worth of energy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_threshold_dbm: Option<f64>,
}

impl Default for NetworkSection {
    fn default() -> Self {
        let p = NetworkParams::default();
        NetworkSection {
            cell_radius_m: p.cell_radius_m,
            d2d_density_per_m2: p.d2d_density_per_m2,
            pair_distance_m: p.pair_distance_m,
            path_loss_exponent: p.path_loss_exponent,
            bs_power_dbm: 44.0,
            cell_user_power_dbm: 10.0,
            d2d_power_dbm: -10.0,
            sense_power_dbm: -30.0,
            noise_power_dbm: -90.0,
            harvest_efficiency: p.harvest_efficiency,
            sense_window: p.sense_window,
            energy_threshold_dbm: None,
        }
    }
}

impl NetworkSection {
    pub fn to_params(&self) -> NetworkParams {
        let d2d_power_mw = dbm_to_mw(self.d2d_power_dbm);
        NetworkParams {
            cell_radius_m: self.cell_radius_m,
            d2d_density_per_m2: self.d2d_density_per_m2,
            pair_distance_m: self.pair_distance_m,
            path_loss_exponent: self.path_loss_exponent,
            bs_power_mw: dbm_to_mw(self.bs_power_dbm),
            cell_user_power_mw: dbm_to_mw(self.cell_user_power_dbm),
            d2d_power_mw,
            sense_power_mw: dbm_to_mw(self.sense_power_dbm),
            noise_power_mw: dbm_to_mw(self.noise_power_dbm),
            harvest_efficiency: self.harvest_efficiency,
            sense_window: self.sense_window,
            energy_threshold_mwslots: self.energy_threshold_dbm.map_or(d2d_power_mw, dbm_to_mw),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase", deny_unknown_fields)]
pub enum SchemeSection {
    Ftp { p_t: f64 },
    Atp { beta_th_dbm: f64 },
}

impl SchemeSection {
    pub fn to_scheme(self) -> SchemeConfig {
        match self {
            SchemeSection::Ftp { p_t } => SchemeConfig::Ftp { p_t },
            SchemeSection::Atp { beta_th_dbm } => SchemeConfig::Atp {
                beta_th_mw: dbm_to_mw(beta_th_dbm),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    #[serde(rename = "p_t")]
    TransmitProb,
    BetaThDbm,
    Eta,
    LambdaD,
    GammaBDb,
    GammaDDb,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::TransmitProb => "p_t",
            SweepParameter::BetaThDbm => "beta_th_dbm",
            SweepParameter::Eta => "eta",
            SweepParameter::LambdaD => "lambda_d",
            SweepParameter::GammaBDb => "gamma_b_db",
            SweepParameter::GammaDDb => "gamma_d_db",
        }
    }

    pub fn is_threshold(self) -> bool {
        matches!(self, SweepParameter::GammaBDb | SweepParameter::GammaDDb)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// SINR thresholds in dB. The same grid is used for the BS and the D2D
/// receivers, so every CSV row carries one `gamma_db`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    pub gamma_db: Vec<f64>,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        ThresholdSection {
            gamma_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    /// Number of Gauss–Chebyshev nodes.
    pub order: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        QuadratureSection {
            order: DEFAULT_ORDER,
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// CSV destination; standard output when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    /// Significant digits after the decimal point of scientific notation.
    pub precision: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            csv: None,
            precision: 6,
        }
    }
}

/// Agreement bands of `validate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSection {
    /// Absolute band for the operable and transmit probabilities.
    pub probability_abs: f64,
    /// Absolute band for every outage point.
    pub outage_abs: f64,
    /// Relative band for the sum-rate.
    pub sum_rate_rel: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        ToleranceSection {
            probability_abs: 0.02,
            outage_abs: 0.03,
            sum_rate_rel: 0.10,
        }
    }
}

/// One point of a sweep, in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedPoint {
    pub sweep_value: Option<f64>,
    pub params: NetworkParams,
    pub scheme: SchemeConfig,
    pub gammas_db: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig = toml::from_str(text)
            .map_err(|e| CliError::Config(format!("cannot parse config: {e}")))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// The fully defaulted document, suitable for replaying the run.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment config is always representable as TOML")
    }

    pub fn check(&self) -> Result<(), CliError> {
        let config_err = |e: d2d_eh::Error| CliError::Config(e.to_string());
        self.network.to_params().validate().map_err(config_err)?;
        self.scheme.to_scheme().validate().map_err(config_err)?;
        self.sim.validate().map_err(config_err)?;
        if self.thresholds.gamma_db.iter().any(|g| !g.is_finite()) {
            return Err(CliError::Config("thresholds must be finite".into()));
        }
        if self.quadrature.order == 0 || !(self.quadrature.rel_tol > 0.0) {
            return Err(CliError::Config(
                "quadrature needs order >= 1 and rel_tol > 0".into(),
            ));
        }
        if self.output.precision > 17 {
            return Err(CliError::Config(
                "output precision must be at most 17".into(),
            ));
        }
        if let Some(sweep) = &self.sweep {
            if !(sweep.start <= sweep.stop) {
                return Err(CliError::Config(format!(
                    "sweep bounds out of order: start {} > stop {}",
                    sweep.start, sweep.stop
                )));
            }
            if !(sweep.step > 0.0) {
                return Err(CliError::Config(format!(
                    "sweep step must be positive, got {}",
                    sweep.step
                )));
            }
            match (sweep.parameter, self.scheme) {
                (SweepParameter::TransmitProb, SchemeSection::Atp { .. }) => {
                    return Err(CliError::Config(
                        "p_t can only be swept under the ftp scheme".into(),
                    ))
                }
                (SweepParameter::BetaThDbm, SchemeSection::Ftp { .. }) => {
                    return Err(CliError::Config(
                        "beta_th_dbm can only be swept under the atp scheme".into(),
                    ))
                }
                _ => {}
            }
            for point in self.points()? {
                point.params.validate().map_err(config_err)?;
                point.scheme.validate().map_err(config_err)?;
            }
        }
        let sweeps_threshold = self.sweep.is_some_and(|s| s.parameter.is_threshold());
        if self.thresholds.gamma_db.is_empty() && !sweeps_threshold {
            return Err(CliError::Config("threshold grid is empty".into()));
        }
        Ok(())
    }

    /// Expands the sweep into concrete parameter sets. Without a sweep there
    /// is exactly one point. Sweeping a threshold replaces the threshold
    /// grid: each point then evaluates a single γ.
    pub fn points(&self) -> Result<Vec<ResolvedPoint>, CliError> {
        let params = self.network.to_params();
        let scheme = self.scheme.to_scheme();
        let Some(sweep) = &self.sweep else {
            return Ok(vec![ResolvedPoint {
                sweep_value: None,
                params,
                scheme,
                gammas_db: self.thresholds.gamma_db.clone(),
            }]);
        };
        let values = sweep_points(sweep.start, sweep.stop, sweep.step)
            .map_err(|e| CliError::Config(format!("sweep: {e}")))?;
        Ok(values
            .into_iter()
            .map(|v| {
                let mut point = ResolvedPoint {
                    sweep_value: Some(v),
                    params,
                    scheme,
                    gammas_db: self.thresholds.gamma_db.clone(),
                };
                match sweep.parameter {
                    SweepParameter::TransmitProb => point.scheme = SchemeConfig::Ftp { p_t: v },
                    SweepParameter::BetaThDbm => {
                        point.scheme = SchemeConfig::Atp {
                            beta_th_mw: dbm_to_mw(v),
                        }
                    }
                    SweepParameter::Eta => point.params.harvest_efficiency = v,
                    SweepParameter::LambdaD => point.params.d2d_density_per_m2 = v,
                    SweepParameter::GammaBDb | SweepParameter::GammaDDb => {
                        point.gammas_db = vec![v]
                    }
                }
                point
            })
            .collect())
    }

    pub fn sweep_name(&self) -> &'static str {
        self.sweep.map_or("none", |s| s.parameter.name())
    }
}

pub fn gammas_linear(gammas_db: &[f64]) -> Vec<f64> {
    gammas_db.iter().map(|&g| db_to_linear(g)).collect()
}

/// Boundary-unit view of a protection threshold, for logging.
pub fn beta_dbm(scheme: &SchemeConfig) -> Option<f64> {
    match *scheme {
        SchemeConfig::Atp { beta_th_mw } => mw_to_dbm(beta_th_mw).ok(),
        SchemeConfig::Ftp { .. } => None,
    }
}

//! Parameter types and elementary physical functions shared by the
//! analytical model and the simulator.
//!
//! Internally everything is linear: powers in mW, distances in meters and
//! time in sub-slots of unit length, so a power drawn for one sub-slot is
//! numerically the energy it consumes. dBm only appears at the CLI boundary.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Converts a power level in dBm to linear milliwatts.
pub fn dbm_to_mw(x_dbm: f64) -> f64 {
    10f64.powf(x_dbm / 10.0)
}

/// Converts a linear power in milliwatts to dBm.
pub fn mw_to_dbm(mw: f64) -> Result<f64> {
    if !(mw > 0.0) || !mw.is_finite() {
        return Err(Error::Domain(format!(
            "power must be positive and finite to express in dBm, got {mw}"
        )));
    }
    Ok(10.0 * mw.log10())
}

/// Converts a threshold in dB to a linear ratio.
pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// Γ(1 − 2/α)·Γ(1 + 2/α), the constant of every Rayleigh-faded PPP
/// interference exponent.
pub fn xi(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let delta = 2.0 / alpha;
    Ok(gamma(1.0 - delta) * gamma(1.0 + delta))
}

/// Same constant through the reflection identity, (2π/α)/sin(2π/α).
pub fn xi_reflection(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let z = 2.0 * PI / alpha;
    Ok(z / z.sin())
}

/// Path gain d^(−α).
pub fn path_gain(distance_m: f64, alpha: f64) -> Result<f64> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::Domain(format!(
            "path gain needs a positive finite distance, got {distance_m}"
        )));
    }
    Ok(distance_m.powf(-alpha))
}

/// Path gain from a squared distance; the hot loops of the simulator avoid
/// the square root. Callers guarantee `distance_sq > 0`.
#[inline]
pub(crate) fn path_gain_sq(distance_sq: f64, alpha: f64) -> f64 {
    if alpha == 4.0 {
        1.0 / (distance_sq * distance_sq)
    } else {
        distance_sq.powf(-0.5 * alpha)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 2.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "path-loss exponent must exceed 2, got {alpha}"
        )))
    }
}

/// Physical constants of the cell, in linear units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub cell_radius_m: f64,
    pub d2d_density_per_m2: f64,
    pub pair_distance_m: f64,
    pub path_loss_exponent: f64,
    pub bs_power_mw: f64,
    pub cell_user_power_mw: f64,
    pub d2d_power_mw: f64,
    pub sense_power_mw: f64,
    pub noise_power_mw: f64,
    pub harvest_efficiency: f64,
    /// Sensing window as a fraction of the UL sub-slot.
    pub sense_window: f64,
    /// Battery level (mW·sub-slot) at which a transmitter becomes operable.
    pub energy_threshold_mwslots: f64,
}

impl Default for NetworkParams {
    /// Numerical setup of the reference scenario: P_b = 44 dBm,
    /// P_c = 10 dBm, P_d = −10 dBm, P_s = −30 dBm, N₀ = −90 dBm,
    /// R = 100 m, r_d = 5 m, α = 4, λ_d = 0.01, η = 0.8, T_s = 0.05.
    fn default() -> Self {
        let d2d_power_mw = dbm_to_mw(-10.0);
        NetworkParams {
            cell_radius_m: 100.0,
            d2d_density_per_m2: 0.01,
            pair_distance_m: 5.0,
            path_loss_exponent: 4.0,
            bs_power_mw: dbm_to_mw(44.0),
            cell_user_power_mw: dbm_to_mw(10.0),
            d2d_power_mw,
            sense_power_mw: dbm_to_mw(-30.0),
            noise_power_mw: dbm_to_mw(-90.0),
            harvest_efficiency: 0.8,
            sense_window: 0.05,
            energy_threshold_mwslots: d2d_power_mw,
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cell_radius_m", self.cell_radius_m),
            ("bs_power_mw", self.bs_power_mw),
            ("cell_user_power_mw", self.cell_user_power_mw),
            ("d2d_power_mw", self.d2d_power_mw),
            ("sense_power_mw", self.sense_power_mw),
            ("noise_power_mw", self.noise_power_mw),
            ("energy_threshold_mwslots", self.energy_threshold_mwslots),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.d2d_density_per_m2 >= 0.0) || !self.d2d_density_per_m2.is_finite() {
            return Err(Error::Config(format!(
                "d2d_density_per_m2 must be non-negative, got {}",
                self.d2d_density_per_m2
            )));
        }
        if !(self.pair_distance_m > 0.0 && self.pair_distance_m < self.cell_radius_m) {
            return Err(Error::Config(format!(
                "pair_distance_m must lie in (0, {}), got {}",
                self.cell_radius_m, self.pair_distance_m
            )));
        }
        if !(self.path_loss_exponent > 2.0) || !self.path_loss_exponent.is_finite() {
            return Err(Error::Config(format!(
                "path_loss_exponent must exceed 2, got {}",
                self.path_loss_exponent
            )));
        }
        // η = 0 is accepted as the "never charges" edge case.
        if !(self.harvest_efficiency >= 0.0 && self.harvest_efficiency <= 1.0) {
            return Err(Error::Config(format!(
                "harvest_efficiency must lie in [0, 1], got {}",
                self.harvest_efficiency
            )));
        }
        if !(self.sense_window >= 0.0 && self.sense_window < 1.0) {
            return Err(Error::Config(format!(
                "sense_window must lie in [0, 1), got {}",
                self.sense_window
            )));
        }
        Ok(())
    }

    /// Checks that a transmitter at the threshold can always pay for one
    /// slot: a full transmission and, for ATP, the sensing window.
    pub fn validate_for_simulation(&self) -> Result<()> {
        self.validate()?;
        if self.energy_threshold_mwslots < self.d2d_power_mw {
            return Err(Error::Config(format!(
                "energy threshold {} must be at least one transmission ({} mW)",
                self.energy_threshold_mwslots, self.d2d_power_mw
            )));
        }
        if self.sense_power_mw * self.sense_window >= self.energy_threshold_mwslots {
            return Err(Error::Config(
                "sensing energy P_s·T_s must stay below the energy threshold".into(),
            ));
        }
        Ok(())
    }

    pub fn cell_area_m2(&self) -> f64 {
        PI * self.cell_radius_m * self.cell_radius_m
    }

    /// Mean harvested energy per DL sub-slot at distance `d` from the BS.
    pub fn mean_harvest_at(&self, distance_m: f64) -> Result<f64> {
        Ok(self.harvest_efficiency
            * self.bs_power_mw
            * path_gain(distance_m, self.path_loss_exponent)?)
    }
}

/// Channel-access scheme of the operable transmitters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum SchemeConfig {
    /// Every operable transmitter transmits independently with `p_t`.
    Ftp { p_t: f64 },
    /// Operable transmitters sense and defer above the protection
    /// threshold `beta_th_mw`.
    Atp { beta_th_mw: f64 },
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SchemeConfig::Ftp { p_t } if !(p_t > 0.0 && p_t <= 1.0) => Err(Error::Config(format!(
                "FTP transmit probability must lie in (0, 1], got {p_t}"
            ))),
            SchemeConfig::Atp { beta_th_mw } if !(beta_th_mw > 0.0) => Err(Error::Config(format!(
                "ATP protection threshold must be positive, got {beta_th_mw}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchemeConfig::Ftp { .. } => "ftp",
            SchemeConfig::Atp { .. } => "atp",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dbm_anchors() {
        assert_eq!(dbm_to_mw(0.0), 1.0);
        assert_relative_eq!(dbm_to_mw(44.0), 25_118.864_315_095_8, max_relative = 1e-13);
        assert_relative_eq!(dbm_to_mw(-90.0), 1e-9, max_relative = 1e-13);
        assert!(mw_to_dbm(0.0).is_err());
        assert!(mw_to_dbm(-1.0).is_err());
    }

    #[test]
    fn xi_anchors() {
        assert!((xi(4.0).unwrap() - PI / 2.0).abs() < 1e-12);
        let three = (2.0 * PI / 3.0) / (2.0 * PI / 3.0).sin();
        assert!((xi(3.0).unwrap() - three).abs() < 1e-12);
        assert!((xi(1e9).unwrap() - 1.0).abs() < 1e-6);
        assert!(xi(2.0).is_err());
        assert!(xi_reflection(1.5).is_err());
    }

    #[test]
    fn xi_forms_agree() {
        for alpha in [2.5, 3.0, 3.5, 4.0, 5.0, 6.0] {
            let a = xi(alpha).unwrap();
            let b = xi_reflection(alpha).unwrap();
            assert!((a - b).abs() <= 1e-12 * b, "alpha={alpha}: {a} vs {b}");
        }
    }

    #[test]
    fn path_gain_anchors() {
        assert_eq!(path_gain(1.0, 3.3).unwrap(), 1.0);
        assert_relative_eq!(path_gain(10.0, 4.0).unwrap(), 1e-4, max_relative = 1e-14);
        assert_relative_eq!(path_gain(5.0, 4.0).unwrap(), 0.0016, max_relative = 1e-14);
        assert!(path_gain(0.0, 4.0).is_err());
        assert_relative_eq!(path_gain_sq(25.0, 4.0), 0.0016, max_relative = 1e-14);
        assert_relative_eq!(
            path_gain_sq(25.0, 3.0),
            5f64.powf(-3.0),
            max_relative = 1e-13
        );
    }

    #[test]
    fn path_gain_monotone() {
        for alpha in [2.5, 3.0, 4.0, 5.0] {
            let mut prev = f64::INFINITY;
            for i in 1..200 {
                let d = 0.5 * i as f64;
                let g = path_gain(d, alpha).unwrap();
                assert!(g < prev);
                prev = g;
            }
        }
        for i in 1..100 {
            let d = 1.0 + 0.3 * i as f64;
            let mut prev = f64::INFINITY;
            for alpha in [2.1, 2.5, 3.0, 4.0, 5.0, 6.0] {
                let g = path_gain(d, alpha).unwrap();
                assert!(g < prev);
                prev = g;
            }
        }
    }

    #[test]
    fn defaults_validate() {
        let p = NetworkParams::default();
        p.validate_for_simulation().unwrap();
        let mut bad = p;
        bad.pair_distance_m = 150.0;
        assert!(bad.validate().is_err());
        bad = p;
        bad.path_loss_exponent = 2.0;
        assert!(bad.validate().is_err());
        bad = p;
        bad.energy_threshold_mwslots = 0.5 * p.d2d_power_mw;
        assert!(bad.validate().is_ok());
        assert!(bad.validate_for_simulation().is_err());
        assert!(SchemeConfig::Ftp { p_t: 0.0 }.validate().is_err());
        assert!(SchemeConfig::Atp { beta_th_mw: 0.0 }.validate().is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn dbm_round_trip(log_mw in -12.0f64..12.0) {
                let mw = 10f64.powf(log_mw);
                let back = dbm_to_mw(mw_to_dbm(mw).unwrap());
                prop_assert!((back - mw).abs() <= 1e-12 * mw);
            }
        }
    }
}

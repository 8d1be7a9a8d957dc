use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FieldMode, HarvestLocation, SimConfig};
use crate::error::{Error, Result};
use crate::geometry::{place_receiver, sample_ppp_disk, uniform_in_disk, PlanarPoint};
use crate::model::NetworkParams;

/// One drop of the cell plus the battery state that evolves over slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRealization {
    pub bs_at_origin: PlanarPoint,
    pub cell_user: PlanarPoint,
    pub d2d_tx: Vec<PlanarPoint>,
    pub d2d_rx: Vec<PlanarPoint>,
    /// BS distance that drives each transmitter's harvesting.
    pub harvest_distance_m: Vec<f64>,
    /// Whether the pair is measured (its transmitter lies inside the cell).
    pub measured: Vec<bool>,
    /// Mean DL harvest ηP_b·d^(−α) of each transmitter.
    pub mean_harvest_mwslots: Vec<f64>,
    /// Battery E_n^i in mW·sub-slot.
    pub battery_mwslots: Vec<f64>,
    pub rng_stream: u64,
    /// Deployment disk radius of the transmitters.
    pub field_radius_m: f64,
    pub harvest_location: HarvestLocation,
}

impl CellRealization {
    /// Draws a realization with empty batteries.
    pub fn sample<R: Rng + ?Sized>(
        params: &NetworkParams,
        config: &SimConfig,
        rng_stream: u64,
        rng: &mut R,
    ) -> Result<Self> {
        let radius = params.cell_radius_m;
        let field_radius_m = match config.field_mode {
            FieldMode::Cell => radius,
            FieldMode::Extended => config.field_radius_factor * radius,
        };
        let cell_user = uniform_in_disk(radius, rng);
        let d2d_tx = sample_ppp_disk(params.d2d_density_per_m2, field_radius_m, rng)?;
        let d2d_rx = d2d_tx
            .iter()
            .map(|tx| place_receiver(*tx, params.pair_distance_m, rng))
            .collect();
        let harvest_distance_m: Vec<f64> = match config.harvest_location {
            HarvestLocation::Physical => d2d_tx.iter().map(PlanarPoint::norm).collect(),
            HarvestLocation::Decoupled => d2d_tx
                .iter()
                .map(|_| uniform_in_disk(radius, rng).norm())
                .collect(),
        };
        let mean_harvest_mwslots = harvest_distance_m
            .iter()
            .map(|&d| params.mean_harvest_at(d))
            .collect::<Result<Vec<_>>>()?;
        let measured = d2d_tx.iter().map(|p| p.norm() <= radius).collect();
        let battery_mwslots = vec![0.0; d2d_tx.len()];
        let state = CellRealization {
            bs_at_origin: PlanarPoint::ORIGIN,
            cell_user,
            d2d_tx,
            d2d_rx,
            harvest_distance_m,
            mean_harvest_mwslots,
            measured,
            battery_mwslots,
            rng_stream,
            field_radius_m,
            harvest_location: config.harvest_location,
        };
        state.check_geometry(params)?;
        Ok(state)
    }

    /// Moves every pair to a fresh uniform position in the field while
    /// keeping its battery. Under physical harvesting the harvest distance
    /// follows the new position; under decoupled harvesting it is kept.
    pub fn reposition_pairs<R: Rng + ?Sized>(
        &mut self,
        params: &NetworkParams,
        rng: &mut R,
    ) -> Result<()> {
        let radius = params.cell_radius_m;
        for i in 0..self.d2d_tx.len() {
            let tx = uniform_in_disk(self.field_radius_m, rng);
            self.d2d_tx[i] = tx;
            self.d2d_rx[i] = place_receiver(tx, params.pair_distance_m, rng);
            self.measured[i] = tx.norm() <= radius;
            if self.harvest_location == HarvestLocation::Physical {
                self.harvest_distance_m[i] = tx.norm();
                self.mean_harvest_mwslots[i] = params.mean_harvest_at(tx.norm())?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.d2d_tx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d2d_tx.is_empty()
    }

    pub(crate) fn check_geometry(&self, params: &NetworkParams) -> Result<()> {
        for (i, (tx, rx)) in self.d2d_tx.iter().zip(&self.d2d_rx).enumerate() {
            if (tx.distance(rx) - params.pair_distance_m).abs() > 1e-9 * params.pair_distance_m {
                return Err(Error::Invariant(format!("pair {i} is not at distance r_d")));
            }
            if tx.norm() > self.field_radius_m * (1.0 + 1e-12) {
                return Err(Error::Invariant(format!(
                    "transmitter {i} outside the field"
                )));
            }
            if !(self.harvest_distance_m[i] > 0.0) {
                return Err(Error::Invariant(format!("transmitter {i} sits on the BS")));
            }
        }
        Ok(())
    }
}

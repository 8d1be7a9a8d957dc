//! Slot-level Monte Carlo of the TDD protocol.
//!
//! Each time slot is a DL sub-slot, in which every D2D transmitter harvests
//! from the BS, followed by an UL sub-slot, in which the cellular user and
//! the admitted D2D transmitters share the channel. Every link gain is an
//! independent unit-mean exponential redrawn each sub-slot.

mod estimate;
mod laplace;
mod slot;
mod state;

pub use estimate::{estimate_metrics, run_trial, TrialStats};
pub use laplace::empirical_laplace_functional;
pub use slot::{run_dl_subslot, run_slot, run_ul_subslot_atp, run_ul_subslot_ftp, SlotOutcome};
pub use state::CellRealization;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where D2D transmitters are deployed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    /// Only inside the cell disk.
    #[default]
    Cell,
    /// On a larger disk, so that measured receivers inside the cell see
    /// interference from all directions. Only pairs whose transmitter lies
    /// in the cell are measured.
    Extended,
}

/// Which BS distance drives a transmitter's harvesting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarvestLocation {
    /// The transmitter's own distance to the BS.
    #[default]
    Physical,
    /// An independent uniform distance in the cell, so that being operable
    /// is independent of position and active transmitters stay a
    /// homogeneous process.
    Decoupled,
}

/// Which positions are redrawn at the start of every slot. Batteries stay
/// attached to their node when the node moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionRedraw {
    /// The layout is frozen for the whole trial.
    #[default]
    Static,
    /// Only the cellular user is redrawn.
    CellUser,
    /// The cellular user and every D2D pair are redrawn, so that every slot
    /// sees a fresh spatial configuration (a high-mobility limit).
    All,
}

impl PositionRedraw {
    pub fn cell_user(self) -> bool {
        self != PositionRedraw::Static
    }

    pub fn d2d_pairs(self) -> bool {
        self == PositionRedraw::All
    }
}

/// Deferral rule of ATP sensing. Backoffs are processed in increasing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentionRule {
    /// Defer when any operable contender with an earlier backoff is sensed
    /// above the threshold.
    #[default]
    EarlierContender,
    /// Defer only when an already admitted transmitter is sensed.
    AdmittedOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Time slots per trial, including burn-in.
    pub slots: usize,
    pub burn_in: usize,
    pub trials: usize,
    pub seed: u64,
    pub field_mode: FieldMode,
    /// Radius of the extended field in cell radii.
    pub field_radius_factor: f64,
    pub harvest_location: HarvestLocation,
    pub redraw: PositionRedraw,
    pub contention: ContentionRule,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            slots: 10_500,
            burn_in: 500,
            trials: 10,
            seed: 1,
            field_mode: FieldMode::Cell,
            field_radius_factor: 3.0,
            harvest_location: HarvestLocation::Physical,
            redraw: PositionRedraw::Static,
            contention: ContentionRule::EarlierContender,
        }
    }
}

impl SimConfig {
    /// Settings under which the simulator reproduces the modeling
    /// assumptions of the analysis: interference from the whole plane,
    /// operability independent of position, and a fresh layout in every
    /// slot so that slot averages are averages over the point process.
    pub fn validation(self) -> Self {
        SimConfig {
            field_mode: FieldMode::Extended,
            harvest_location: HarvestLocation::Decoupled,
            redraw: PositionRedraw::All,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots <= self.burn_in {
            return Err(Error::Config(format!(
                "slots ({}) must exceed burn_in ({})",
                self.slots, self.burn_in
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.field_mode == FieldMode::Extended && !(self.field_radius_factor >= 1.0) {
            return Err(Error::Config(format!(
                "field_radius_factor must be >= 1, got {}",
                self.field_radius_factor
            )));
        }
        Ok(())
    }

    pub fn measured_slots(&self) -> usize {
        self.slots - self.burn_in
    }
}

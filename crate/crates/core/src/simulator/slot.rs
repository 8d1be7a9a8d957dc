use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::{CellRealization, ContentionRule, PositionRedraw};
use crate::error::{Error, Result};
use crate::geometry::{uniform_in_disk, PlanarPoint};
use crate::model::{path_gain_sq, NetworkParams, SchemeConfig};

/// What happened in one slot.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SlotOutcome {
    /// X_{n,o}: battery at or above E_th at the start of the UL sub-slot.
    pub operable_flags: Vec<bool>,
    /// X_{n,o}·X_{n,t}: operable and transmitting.
    pub transmit_flags: Vec<bool>,
    /// ATP backoff t_s^i of operable transmitters (NaN otherwise); empty
    /// under FTP.
    pub backoffs: Vec<f64>,
    /// ATP: strongest sensed power from the contenders each operable
    /// transmitter checked before deciding (0 if none in range).
    pub sensed_peak_mw: Vec<f64>,
    /// Γ_b at the BS.
    pub sinr_bs: f64,
    /// Γ_i for every measured transmitting pair, keyed by pair index.
    pub sinr_d2d: Vec<(usize, f64)>,
    /// H_n^i harvested in the preceding DL sub-slot.
    pub harvested_mwslots: Vec<f64>,
    /// Energy drawn from each battery in the UL sub-slot.
    pub spent_mwslots: Vec<f64>,
}

#[inline]
fn fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

/// DL sub-slot: every battery gains ηP_b·|h|²·d^(−α).
pub fn run_dl_subslot<R: Rng + ?Sized>(state: &mut CellRealization, rng: &mut R) -> Vec<f64> {
    state
        .mean_harvest_mwslots
        .iter()
        .zip(state.battery_mwslots.iter_mut())
        .map(|(&mean, battery)| {
            let h = mean * fading(rng);
            *battery += h;
            h
        })
        .collect()
}

fn operable_set(params: &NetworkParams, state: &CellRealization) -> Vec<bool> {
    state
        .battery_mwslots
        .iter()
        .map(|&e| e >= params.energy_threshold_mwslots)
        .collect()
}

fn debit(state: &mut CellRealization, spent: &[f64]) -> Result<()> {
    for (i, (battery, &s)) in state.battery_mwslots.iter_mut().zip(spent).enumerate() {
        *battery -= s;
        if *battery < 0.0 {
            return Err(Error::Invariant(format!(
                "battery of transmitter {i} went negative ({battery})"
            )));
        }
    }
    Ok(())
}

/// SINR at the BS and at every measured receiver whose transmitter is
/// active.
fn measure_sinr<R: Rng + ?Sized>(
    params: &NetworkParams,
    state: &CellRealization,
    transmitters: &[usize],
    rng: &mut R,
) -> (f64, Vec<(usize, f64)>) {
    let alpha = params.path_loss_exponent;
    let pd = params.d2d_power_mw;
    let pc = params.cell_user_power_mw;
    let n0 = params.noise_power_mw;
    let cu = state.cell_user;

    let signal = pc * fading(rng) * path_gain_sq(cu.distance_sq(&PlanarPoint::ORIGIN), alpha);
    let interference: f64 = transmitters
        .iter()
        .map(|&j| {
            let d2 = state.d2d_tx[j].distance_sq(&PlanarPoint::ORIGIN);
            pd * fading(rng) * path_gain_sq(d2, alpha)
        })
        .sum();
    let sinr_bs = signal / (interference + n0);

    let link_gain = path_gain_sq(params.pair_distance_m * params.pair_distance_m, alpha);
    let mut sinr_d2d = Vec::new();
    for &i in transmitters {
        if !state.measured[i] {
            continue;
        }
        let rx = state.d2d_rx[i];
        let signal = pd * fading(rng) * link_gain;
        let mut interference = pc * fading(rng) * path_gain_sq(cu.distance_sq(&rx), alpha);
        for &j in transmitters {
            if j != i {
                interference +=
                    pd * fading(rng) * path_gain_sq(state.d2d_tx[j].distance_sq(&rx), alpha);
            }
        }
        sinr_d2d.push((i, signal / (interference + n0)));
    }
    (sinr_bs, sinr_d2d)
}

/// FTP UL sub-slot: each operable transmitter transmits with probability
/// `p_t` and pays P_d.
pub fn run_ul_subslot_ftp<R: Rng + ?Sized>(
    params: &NetworkParams,
    state: &mut CellRealization,
    p_t: f64,
    rng: &mut R,
) -> Result<SlotOutcome> {
    let n = state.len();
    let operable_flags = operable_set(params, state);
    let transmit_flags: Vec<bool> = operable_flags
        .iter()
        .map(|&op| op && rng.random::<f64>() < p_t)
        .collect();
    let spent: Vec<f64> = transmit_flags
        .iter()
        .map(|&t| if t { params.d2d_power_mw } else { 0.0 })
        .collect();
    debit(state, &spent)?;
    let transmitters: Vec<usize> = (0..n).filter(|&i| transmit_flags[i]).collect();
    let (sinr_bs, sinr_d2d) = measure_sinr(params, state, &transmitters, rng);
    Ok(SlotOutcome {
        operable_flags,
        transmit_flags,
        backoffs: Vec::new(),
        sensed_peak_mw: Vec::new(),
        sinr_bs,
        sinr_d2d,
        harvested_mwslots: Vec::new(),
        spent_mwslots: spent,
    })
}

/// Uniform bucket grid over the deployment disk for range queries during
/// sensing. Buckets are at least as wide as the sensing cutoff, so the
/// 3×3 neighbourhood of a bucket covers every point within the cutoff.
struct SensingGrid {
    origin: f64,
    width: f64,
    side: usize,
    buckets: Vec<Vec<usize>>,
}

impl SensingGrid {
    const MAX_SIDE: usize = 256;

    fn new(field_radius: f64, cutoff: f64) -> Self {
        let span = 2.0 * field_radius;
        let side = if cutoff.is_finite() && cutoff > 0.0 {
            ((span / cutoff).floor() as usize).clamp(1, Self::MAX_SIDE)
        } else if cutoff == 0.0 {
            Self::MAX_SIDE
        } else {
            1
        };
        SensingGrid {
            origin: -field_radius,
            width: span / side as f64,
            side,
            buckets: vec![Vec::new(); side * side],
        }
    }

    fn coord(&self, v: f64) -> usize {
        (((v - self.origin) / self.width).floor().max(0.0) as usize).min(self.side - 1)
    }

    fn insert(&mut self, p: &PlanarPoint, id: usize) {
        let (bx, by) = (self.coord(p.x_m), self.coord(p.y_m));
        self.buckets[by * self.side + bx].push(id);
    }

    fn neighbours(&self, p: &PlanarPoint) -> impl Iterator<Item = usize> + '_ {
        let (bx, by) = (self.coord(p.x_m), self.coord(p.y_m));
        let xs = bx.saturating_sub(1)..=(bx + 1).min(self.side - 1);
        let ys = by.saturating_sub(1)..=(by + 1).min(self.side - 1);
        ys.flat_map(move |y| xs.clone().map(move |x| y * self.side + x))
            .flat_map(move |b| self.buckets[b].iter().copied())
    }
}

/// Sensing probability beyond this exponent is below e^(−40) and the pair
/// is not drawn at all.
const SENSING_CUTOFF_EXPONENT: f64 = 40.0;

/// ATP UL sub-slot.
///
/// Each operable transmitter draws a backoff t ~ U[0, 1]; in increasing
/// backoff order a candidate defers if it receives at least β_th from any
/// transmitter it has to respect under `rule`. Sensing gains are reciprocal
/// and drawn once per pair per slot. Operable transmitters pay
/// P_s·t·T_s; transmitters additionally pay P_d·(1 − t·T_s).
pub fn run_ul_subslot_atp<R: Rng + ?Sized>(
    params: &NetworkParams,
    state: &mut CellRealization,
    beta_th_mw: f64,
    rule: ContentionRule,
    rng: &mut R,
) -> Result<SlotOutcome> {
    let n = state.len();
    let alpha = params.path_loss_exponent;
    let pd = params.d2d_power_mw;
    let ts = params.sense_window;
    let operable_flags = operable_set(params, state);

    let mut backoffs = vec![f64::NAN; n];
    let mut order = Vec::new();
    for i in 0..n {
        if operable_flags[i] {
            backoffs[i] = rng.random::<f64>();
            order.push(i);
        }
    }
    // stable sort: equal backoffs keep index order
    order.sort_by(|&a, &b| backoffs[a].total_cmp(&backoffs[b]));

    // received power P_d·g·d^(−α) ≥ β needs g ≥ β·d^α/P_d
    let cutoff = (SENSING_CUTOFF_EXPONENT * pd / beta_th_mw).powf(1.0 / alpha);
    let cutoff_sq = cutoff * cutoff;
    let mut grid = SensingGrid::new(state.field_radius_m, cutoff);
    let mut transmit_flags = vec![false; n];
    let mut sensed_peak_mw = vec![0.0; n];

    for &i in &order {
        let p = state.d2d_tx[i];
        let mut blocked = false;
        let mut peak = 0.0f64;
        for j in grid.neighbours(&p) {
            let d2 = p.distance_sq(&state.d2d_tx[j]);
            if d2 > cutoff_sq {
                continue;
            }
            let received = pd * fading(rng) * path_gain_sq(d2, alpha);
            peak = peak.max(received);
            if received >= beta_th_mw {
                blocked = true;
                break;
            }
        }
        sensed_peak_mw[i] = peak;
        transmit_flags[i] = !blocked;
        if rule == ContentionRule::EarlierContender || !blocked {
            grid.insert(&p, i);
        }
    }

    let spent: Vec<f64> = (0..n)
        .map(|i| {
            if !operable_flags[i] {
                return 0.0;
            }
            let sense = params.sense_power_mw * backoffs[i] * ts;
            if transmit_flags[i] {
                sense + pd * (1.0 - backoffs[i] * ts)
            } else {
                sense
            }
        })
        .collect();
    debit(state, &spent)?;
    let transmitters: Vec<usize> = (0..n).filter(|&i| transmit_flags[i]).collect();
    let (sinr_bs, sinr_d2d) = measure_sinr(params, state, &transmitters, rng);
    Ok(SlotOutcome {
        operable_flags,
        transmit_flags,
        backoffs,
        sensed_peak_mw,
        sinr_bs,
        sinr_d2d,
        harvested_mwslots: Vec::new(),
        spent_mwslots: spent,
    })
}

/// One DL + UL slot. `redraw` selects which positions are drawn afresh:
/// D2D pairs move before the DL sub-slot, the cellular user before the UL
/// sub-slot.
pub fn run_slot<R: Rng + ?Sized>(
    params: &NetworkParams,
    state: &mut CellRealization,
    scheme: &SchemeConfig,
    rule: ContentionRule,
    redraw: PositionRedraw,
    rng: &mut R,
) -> Result<SlotOutcome> {
    if redraw.d2d_pairs() {
        state.reposition_pairs(params, rng)?;
    }
    let harvested = run_dl_subslot(state, rng);
    if redraw.cell_user() {
        state.cell_user = uniform_in_disk(params.cell_radius_m, rng);
    }
    let mut outcome = match *scheme {
        SchemeConfig::Ftp { p_t } => run_ul_subslot_ftp(params, state, p_t, rng)?,
        SchemeConfig::Atp { beta_th_mw } => {
            run_ul_subslot_atp(params, state, beta_th_mw, rule, rng)?
        }
    };
    outcome.harvested_mwslots = harvested;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dbm_to_mw;
    use crate::simulator::SimConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_pairs(params: &NetworkParams, battery: f64) -> CellRealization {
        let d2d_tx = vec![PlanarPoint::new(10.0, 0.0), PlanarPoint::new(-30.0, 5.0)];
        let d2d_rx = d2d_tx
            .iter()
            .map(|p| PlanarPoint::new(p.x_m + params.pair_distance_m, p.y_m))
            .collect();
        let harvest_distance_m: Vec<f64> = d2d_tx.iter().map(PlanarPoint::norm).collect();
        CellRealization {
            bs_at_origin: PlanarPoint::ORIGIN,
            cell_user: PlanarPoint::new(0.0, 50.0),
            mean_harvest_mwslots: harvest_distance_m
                .iter()
                .map(|&d| params.mean_harvest_at(d).unwrap())
                .collect(),
            harvest_distance_m,
            d2d_tx,
            d2d_rx,
            measured: vec![true, true],
            battery_mwslots: vec![battery; 2],
            rng_stream: 0,
            field_radius_m: params.cell_radius_m,
            harvest_location: crate::simulator::HarvestLocation::Physical,
        }
    }

    #[test]
    fn zero_efficiency_never_charges() {
        let params = NetworkParams {
            harvest_efficiency: 0.0,
            ..NetworkParams::default()
        };
        let mut state = two_pairs(&params, 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let h = run_dl_subslot(&mut state, &mut rng);
            assert!(h.iter().all(|&x| x == 0.0));
        }
        assert_eq!(state.battery_mwslots, vec![0.25, 0.25]);
    }

    #[test]
    fn unit_distance_harvest_mean() {
        let params = NetworkParams {
            harvest_efficiency: 1.0,
            ..NetworkParams::default()
        };
        let mut state = two_pairs(&params, 0.0);
        state.mean_harvest_mwslots = vec![params.mean_harvest_at(1.0).unwrap(); 2];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 200_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += run_dl_subslot(&mut state, &mut rng)[0];
        }
        let mean = sum / n as f64;
        let sigma = params.bs_power_mw / (n as f64).sqrt();
        assert!((mean - params.bs_power_mw).abs() < 4.0 * sigma);
    }

    #[test]
    fn ftp_without_transmissions_sees_only_noise() {
        let params = NetworkParams::default();
        let mut state = two_pairs(&params, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // p_t → 0: the comparison U < p_t never holds
        let out = run_ul_subslot_ftp(&params, &mut state, f64::MIN_POSITIVE, &mut rng).unwrap();
        assert!(out.operable_flags.iter().all(|&o| o));
        assert!(out.transmit_flags.iter().all(|&t| !t));
        assert!(out.sinr_d2d.is_empty());
        assert_eq!(state.battery_mwslots, vec![1.0, 1.0]);
    }

    #[test]
    fn ftp_spends_one_transmission() {
        let params = NetworkParams::default();
        let mut state = two_pairs(&params, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = run_ul_subslot_ftp(&params, &mut state, 1.0, &mut rng).unwrap();
        assert!(out.transmit_flags.iter().all(|&t| t));
        for b in &state.battery_mwslots {
            assert!((b - (0.3 - params.d2d_power_mw)).abs() < 1e-15);
        }
        assert_eq!(out.sinr_d2d.len(), 2);
        assert!(out.sinr_bs > 0.0);
    }

    #[test]
    fn atp_threshold_extremes() {
        let params = NetworkParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let config = SimConfig::default();
        for _ in 0..50 {
            let mut state = CellRealization::sample(&params, &config, 0, &mut rng).unwrap();
            state.battery_mwslots.iter_mut().for_each(|b| *b = 1.0);
            let out = run_ul_subslot_atp(
                &params,
                &mut state,
                1e30,
                ContentionRule::EarlierContender,
                &mut rng,
            )
            .unwrap();
            assert!(out.transmit_flags.iter().all(|&t| t));

            let mut state2 = CellRealization::sample(&params, &config, 0, &mut rng).unwrap();
            state2.battery_mwslots.iter_mut().for_each(|b| *b = 1.0);
            for rule in [
                ContentionRule::EarlierContender,
                ContentionRule::AdmittedOnly,
            ] {
                let mut s = state2.clone();
                let out = run_ul_subslot_atp(&params, &mut s, 1e-300, rule, &mut rng).unwrap();
                let admitted: Vec<usize> =
                    (0..s.len()).filter(|&i| out.transmit_flags[i]).collect();
                assert!(admitted.len() <= 1);
                if let Some(&i) = admitted.first() {
                    let min = out.backoffs.iter().cloned().fold(f64::INFINITY, f64::min);
                    assert_eq!(out.backoffs[i], min);
                }
            }
        }
    }

    #[test]
    fn atp_energy_accounting() {
        let params = NetworkParams::default();
        let mut state = two_pairs(&params, 0.5);
        state.battery_mwslots[1] = 0.01;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let before = state.battery_mwslots.clone();
        let out = run_ul_subslot_atp(
            &params,
            &mut state,
            dbm_to_mw(-72.0),
            ContentionRule::EarlierContender,
            &mut rng,
        )
        .unwrap();
        assert!(out.operable_flags[0] && !out.operable_flags[1]);
        assert!(out.transmit_flags[0] && !out.transmit_flags[1]);
        let t = out.backoffs[0];
        let expected = params.sense_power_mw * t * params.sense_window
            + params.d2d_power_mw * (1.0 - t * params.sense_window);
        assert!((before[0] - state.battery_mwslots[0] - expected).abs() < 1e-15);
        assert_eq!(state.battery_mwslots[1], before[1]);
    }

    #[test]
    fn underflow_is_reported() {
        let params = NetworkParams {
            energy_threshold_mwslots: 0.01,
            ..NetworkParams::default()
        };
        let mut state = two_pairs(&params, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let err = run_ul_subslot_ftp(&params, &mut state, 1.0, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
    }
}

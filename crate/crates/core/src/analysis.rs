//! Closed-form performance model of the FTP and ATP schemes.
//!
//! Every function is pure over [`NetworkParams`]; thresholds are linear
//! SINR ratios and densities are per square meter.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::geometry::pair_distance_pdf_unchecked;
use crate::model::{dbm_to_mw, xi, NetworkParams, SchemeConfig};
use crate::numerics::{integrate_from, integrate_semi_infinite, solve_fixed_point, ChebyshevGrid};
use crate::report::{MetricsReport, ReportMode};

/// Tolerance of the ATP fixed point |π − g(π)|.
pub const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_MAX_ITER: usize = 2000;
/// Success probabilities below this are treated as zero in rate integrals.
const RATE_TAIL_CUTOFF: f64 = 1e-9;

/// Scheme quantities that the outage and rate expressions depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeDerived {
    /// π_o, long-run probability that a transmitter is operable.
    pub operable_prob: f64,
    /// p_t, probability that an operable transmitter transmits.
    pub transmit_prob: f64,
    /// λ_t = λ_d·π_o·p_t.
    pub active_density_per_m2: f64,
    /// Mean protection radius r_p (ATP only, 0 for FTP).
    pub protection_radius_m: f64,
    /// W of the ATP transmission probability (0 for FTP).
    pub w_constant: f64,
    /// |π_o − g(π_o)| at the returned ATP solution (0 for FTP).
    pub fixed_point_residual: f64,
}

/// Outage probabilities over a threshold grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutageCurve {
    pub thresholds: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl OutageCurve {
    pub fn evaluate<F>(thresholds: &[f64], mut outage: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let probabilities = thresholds
            .iter()
            .map(|&g| outage(g))
            .collect::<Result<Vec<_>>>()?;
        Ok(OutageCurve {
            thresholds: thresholds.to_vec(),
            probabilities,
        })
    }
}

/// ∫₀^R min(1, μ r^(−α))·(2r/R²) dr in closed form.
///
/// The crossover radius μ^(1/α) splits the integral; beyond R the
/// integrand is 1 everywhere.
fn operable_fraction(mu: f64, alpha: f64, radius: f64) -> f64 {
    if mu <= 0.0 {
        return 0.0;
    }
    if mu.powf(1.0 / alpha) <= radius {
        alpha * mu.powf(2.0 / alpha) / ((alpha - 2.0) * radius * radius)
            + 2.0 * mu / ((2.0 - alpha) * radius.powf(alpha))
    } else {
        1.0
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie in (0, 1], got {p}")))
    }
}

fn check_threshold(gamma: f64) -> Result<()> {
    if gamma >= 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "SINR threshold must be >= 0, got {gamma}"
        )))
    }
}

/// π_o of the FTP scheme with μ₁ = ηP_b/(P_d·p_t).
pub fn ftp_operable_prob(params: &NetworkParams, p_t: f64) -> Result<f64> {
    check_probability("p_t", p_t)?;
    let mu = params.harvest_efficiency * params.bs_power_mw / (params.d2d_power_mw * p_t);
    Ok(operable_fraction(
        mu,
        params.path_loss_exponent,
        params.cell_radius_m,
    ))
}

pub fn ftp_derive(params: &NetworkParams, p_t: f64) -> Result<SchemeDerived> {
    let operable_prob = ftp_operable_prob(params, p_t)?;
    Ok(SchemeDerived {
        operable_prob,
        transmit_prob: p_t,
        active_density_per_m2: params.d2d_density_per_m2 * operable_prob * p_t,
        protection_radius_m: 0.0,
        w_constant: 0.0,
        fixed_point_residual: 0.0,
    })
}

/// BS outage against a PPP of active D2D transmitters of density
/// `active_density`, averaged over a uniform cellular user.
pub fn bs_outage(
    params: &NetworkParams,
    active_density: f64,
    gamma_b: f64,
    grid: &ChebyshevGrid,
) -> Result<f64> {
    check_threshold(gamma_b)?;
    let alpha = params.path_loss_exponent;
    let delta = 2.0 / alpha;
    let interference = PI
        * active_density
        * xi(alpha)?
        * (params.d2d_power_mw / params.cell_user_power_mw).powf(delta)
        * gamma_b.powf(delta);
    let noise = gamma_b * params.noise_power_mw / params.cell_user_power_mw;
    let success =
        grid.disk_average(|a| (-noise * a.powf(alpha)).exp() * (-interference * a * a).exp());
    Ok((1.0 - success).clamp(0.0, 1.0))
}

pub fn ftp_bs_outage(
    params: &NetworkParams,
    derived: &SchemeDerived,
    gamma_b: f64,
    grid: &ChebyshevGrid,
) -> Result<f64> {
    bs_outage(params, derived.active_density_per_m2, gamma_b, grid)
}

/// BS outage of ATP; the expression only sees λ_t, so it coincides with
/// FTP at equal active density.
pub fn atp_bs_outage(
    params: &NetworkParams,
    derived: &SchemeDerived,
    gamma_b: f64,
    grid: &ChebyshevGrid,
) -> Result<f64> {
    bs_outage(params, derived.active_density_per_m2, gamma_b, grid)
}

/// Probability that a D2D link survives the noise alone.
fn d2d_noise_factor(params: &NetworkParams, gamma_d: f64) -> f64 {
    let signal = params.d2d_power_mw * params.pair_distance_m.powf(-params.path_loss_exponent);
    (-gamma_d * params.noise_power_mw / signal).exp()
}

/// Probability that a D2D link survives the cellular user's interference,
/// averaged over the distance between two uniform points of the cell.
pub fn cellular_interference_factor(
    params: &NetworkParams,
    gamma_d: f64,
    grid: &ChebyshevGrid,
) -> f64 {
    let alpha = params.path_loss_exponent;
    let ratio = gamma_d * params.cell_user_power_mw
        / (params.d2d_power_mw * params.pair_distance_m.powf(-alpha));
    let radius = params.cell_radius_m;
    grid.integrate_diameter(|b| {
        pair_distance_pdf_unchecked(b, radius) / (1.0 + ratio * b.powf(-alpha))
    })
}

fn ftp_d2d_success(
    params: &NetworkParams,
    active_density: f64,
    gamma_d: f64,
    grid: &ChebyshevGrid,
) -> Result<f64> {
    let alpha = params.path_loss_exponent;
    let rd = params.pair_distance_m;
    let d2d = (-PI * active_density * rd * rd * gamma_d.powf(2.0 / alpha) * xi(alpha)?).exp();
    Ok(d2d_noise_factor(params, gamma_d)
        * d2d
        * cellular_interference_factor(params, gamma_d, grid))
}

pub fn ftp_d2d_outage(
    params: &NetworkParams,
    derived: &SchemeDerived,
    gamma_d: f64,
    grid: &ChebyshevGrid,
) -> Result<f64> {
    check_threshold(gamma_d)?;
    let s = ftp_d2d_success(params, derived.active_density_per_m2, gamma_d, grid)?;
    Ok((1.0 - s).clamp(0.0, 1.0))
}

/// ∫₀^∞ S(x)/(1+x) dx for a success probability S, with S below
/// [`RATE_TAIL_CUTOFF`] treated as zero.
fn rate_integral<F>(success: F, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let failure = std::cell::Cell::new(None);
    let value = integrate_semi_infinite(
        |x| match success(x) {
            Ok(s) => {
                let s = s.clamp(0.0, 1.0);
                if s < RATE_TAIL_CUTOFF {
                    0.0
                } else {
                    s / (1.0 + x)
                }
            }
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        },
        rel_tol,
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Average D2D sum-rate of the FTP scheme in the cell (bit/s/Hz).
pub fn ftp_sum_rate(
    params: &NetworkParams,
    derived: &SchemeDerived,
    grid: &ChebyshevGrid,
    rel_tol: f64,
) -> Result<f64> {
    let lt = derived.active_density_per_m2;
    if lt == 0.0 {
        return Ok(0.0);
    }
    let integral = rate_integral(|x| ftp_d2d_success(params, lt, x, grid), rel_tol)?;
    Ok(lt * params.cell_area_m2() / (2.0 * LN_2) * integral)
}

/// r_p = (P_d/β_th)^(1/α)·Γ(1 + 1/α).
pub fn atp_protection_radius(params: &NetworkParams, beta_th_mw: f64) -> Result<f64> {
    check_beta(beta_th_mw)?;
    let alpha = params.path_loss_exponent;
    Ok((params.d2d_power_mw / beta_th_mw).powf(1.0 / alpha) * gamma(1.0 + 1.0 / alpha))
}

/// W = 2πΓ(2/α)λ_d / (α·(β_th/P_d)^(2/α)), the mean number of transmitters
/// an operable node would sense if every node were operable.
pub fn atp_w_constant(params: &NetworkParams, beta_th_mw: f64) -> Result<f64> {
    check_beta(beta_th_mw)?;
    let alpha = params.path_loss_exponent;
    Ok(2.0 * PI * gamma(2.0 / alpha) * params.d2d_density_per_m2
        / (alpha * (beta_th_mw / params.d2d_power_mw).powf(2.0 / alpha)))
}

/// p_t = (1 − e^(−Wπ_o))/(Wπ_o), continued by 1 at Wπ_o = 0.
pub fn atp_transmit_prob(w: f64, pi_o: f64) -> Result<f64> {
    if !(w >= 0.0) {
        return Err(Error::Domain(format!("W must be >= 0, got {w}")));
    }
    if !(0.0..=1.0).contains(&pi_o) {
        return Err(Error::Domain(format!(
            "pi_o must lie in [0, 1], got {pi_o}"
        )));
    }
    Ok(one_minus_exp_ratio(w * pi_o))
}

/// (1 − e^(−x))/x without cancellation near zero.
fn one_minus_exp_ratio(x: f64) -> f64 {
    if x < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

fn check_beta(beta_th_mw: f64) -> Result<()> {
    if beta_th_mw > 0.0 && beta_th_mw.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "protection threshold must be positive, got {beta_th_mw}"
        )))
    }
}

/// Right-hand side of the ATP operable-probability equation, g(π).
pub fn atp_operable_map(params: &NetworkParams, w: f64, pi_o: f64) -> f64 {
    let ts = params.sense_window;
    let p_t = one_minus_exp_ratio(w * pi_o.clamp(0.0, 1.0));
    let spend = params.sense_power_mw * ts / 2.0 + params.d2d_power_mw * (1.0 - ts / 2.0) * p_t;
    let mu = params.harvest_efficiency * params.bs_power_mw / spend;
    operable_fraction(mu, params.path_loss_exponent, params.cell_radius_m)
}

/// Solves the self-consistent ATP operable probability and the quantities
/// that follow from it.
pub fn atp_solve(params: &NetworkParams, beta_th_mw: f64) -> Result<SchemeDerived> {
    let r_p = atp_protection_radius(params, beta_th_mw)?;
    let w = atp_w_constant(params, beta_th_mw)?;
    let fp = solve_fixed_point(
        |pi| atp_operable_map(params, w, pi),
        FIXED_POINT_TOL,
        FIXED_POINT_MAX_ITER,
    )?;
    let operable_prob = fp.value;
    let transmit_prob = one_minus_exp_ratio(w * operable_prob);
    Ok(SchemeDerived {
        operable_prob,
        transmit_prob,
        active_density_per_m2: params.d2d_density_per_m2 * operable_prob * transmit_prob,
        protection_radius_m: r_p,
        w_constant: w,
        fixed_point_residual: fp.residual,
    })
}

/// I = ∫_{r_p²}^∞ dv / (1 + r_d^(−α)·v^(α/2)/γ_d).
///
/// Arctangent closed form for α = 4, adaptive quadrature otherwise.
pub fn atp_interference_integral(
    params: &NetworkParams,
    gamma_d: f64,
    protection_radius_m: f64,
    rel_tol: f64,
) -> Result<f64> {
    check_threshold(gamma_d)?;
    if gamma_d == 0.0 {
        return Ok(0.0);
    }
    let alpha = params.path_loss_exponent;
    let c = params.pair_distance_m.powf(-alpha) / gamma_d;
    let start = protection_radius_m * protection_radius_m;
    if alpha == 4.0 {
        let sc = c.sqrt();
        let tail = if start > 0.0 {
            (1.0 / (sc * start)).atan()
        } else {
            PI / 2.0
        };
        return Ok(tail / sc);
    }
    // Rescale v = c^(−2/α)·w so the integrand is O(1) near the knee.
    let scale = c.powf(-2.0 / alpha);
    let half_alpha = 0.5 * alpha;
    let integral = integrate_from(|w| 1.0 / (1.0 + w.powf(half_alpha)), start / scale, rel_tol)?;
    Ok(scale * integral)
}

fn atp_d2d_success(
    params: &NetworkParams,
    active_density: f64,
    protection_radius_m: f64,
    gamma_d: f64,
    grid: &ChebyshevGrid,
    rel_tol: f64,
) -> Result<f64> {
    let i = atp_interference_integral(params, gamma_d, protection_radius_m, rel_tol)?;
    Ok(d2d_noise_factor(params, gamma_d)
        * (-PI * active_density * i).exp()
        * cellular_interference_factor(params, gamma_d, grid))
}

/// D2D outage of the ATP scheme: interferers form a PPP of density λ_t
/// outside the protection disk around the receiver.
pub fn atp_d2d_outage(
    params: &NetworkParams,
    derived: &SchemeDerived,
    gamma_d: f64,
    grid: &ChebyshevGrid,
    rel_tol: f64,
) -> Result<f64> {
    let s = atp_d2d_success(
        params,
        derived.active_density_per_m2,
        derived.protection_radius_m,
        gamma_d,
        grid,
        rel_tol,
    )?;
    Ok((1.0 - s).clamp(0.0, 1.0))
}

/// Average D2D sum-rate of the ATP scheme; transmissions occupy the
/// sub-slot after the mean sensing time T_s/2.
pub fn atp_sum_rate(
    params: &NetworkParams,
    derived: &SchemeDerived,
    grid: &ChebyshevGrid,
    rel_tol: f64,
) -> Result<f64> {
    let lt = derived.active_density_per_m2;
    if lt == 0.0 {
        return Ok(0.0);
    }
    let rp = derived.protection_radius_m;
    let integral = rate_integral(
        |x| atp_d2d_success(params, lt, rp, x, grid, rel_tol),
        rel_tol,
    )?;
    Ok((1.0 - params.sense_window / 2.0) / 2.0 * lt * params.cell_area_m2() / LN_2 * integral)
}

/// Grid points lo, lo+step, … up to and including hi (within 1e-9·step).
pub fn sweep_points(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!(
            "sweep needs lo <= hi and step > 0, got [{lo}, {hi}] step {step}"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

/// Exhaustive grid maximization; ties go to the smaller argument.
pub fn argmax_on_grid<F>(lo: f64, hi: f64, step: f64, mut f: F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut best: Option<(f64, f64)> = None;
    for x in sweep_points(lo, hi, step)? {
        let v = f(x)?;
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((x, v));
        }
    }
    Ok(best.expect("sweep has at least one point"))
}

/// β_th (dBm) maximizing the ATP sum-rate over a dBm grid.
pub fn optimize_beta_th(
    params: &NetworkParams,
    lo_dbm: f64,
    hi_dbm: f64,
    step_db: f64,
    grid: &ChebyshevGrid,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    argmax_on_grid(lo_dbm, hi_dbm, step_db, |b| {
        let derived = atp_solve(params, dbm_to_mw(b))?;
        atp_sum_rate(params, &derived, grid, rel_tol)
    })
}

/// Derived quantities for either scheme.
pub fn derive(params: &NetworkParams, scheme: &SchemeConfig) -> Result<SchemeDerived> {
    scheme.validate()?;
    match *scheme {
        SchemeConfig::Ftp { p_t } => ftp_derive(params, p_t),
        SchemeConfig::Atp { beta_th_mw } => atp_solve(params, beta_th_mw),
    }
}

/// Outage and rate metrics of `derived` under `scheme`.
pub fn evaluate(
    params: &NetworkParams,
    scheme: &SchemeConfig,
    derived: SchemeDerived,
    gammas_b: &[f64],
    gammas_d: &[f64],
    grid: &ChebyshevGrid,
    rel_tol: f64,
) -> Result<MetricsReport> {
    let (bs, d2d, rate) = match scheme {
        SchemeConfig::Ftp { .. } => (
            OutageCurve::evaluate(gammas_b, |g| ftp_bs_outage(params, &derived, g, grid))?,
            OutageCurve::evaluate(gammas_d, |g| ftp_d2d_outage(params, &derived, g, grid))?,
            ftp_sum_rate(params, &derived, grid, rel_tol)?,
        ),
        SchemeConfig::Atp { .. } => (
            OutageCurve::evaluate(gammas_b, |g| atp_bs_outage(params, &derived, g, grid))?,
            OutageCurve::evaluate(gammas_d, |g| {
                atp_d2d_outage(params, &derived, g, grid, rel_tol)
            })?,
            atp_sum_rate(params, &derived, grid, rel_tol)?,
        ),
    };
    Ok(MetricsReport {
        mode: ReportMode::Analysis,
        scheme: *scheme,
        derived,
        bs_outage: bs,
        d2d_outage: d2d,
        sum_rate: rate,
        errors: None,
        n_samples: 0,
        n_d2d_samples: 0,
    })
}

/// Full analytical report for one configuration.
pub fn analyze(
    params: &NetworkParams,
    scheme: &SchemeConfig,
    gammas_b: &[f64],
    gammas_d: &[f64],
    grid: &ChebyshevGrid,
    rel_tol: f64,
) -> Result<MetricsReport> {
    params.validate()?;
    let derived = derive(params, scheme)?;
    evaluate(params, scheme, derived, gammas_b, gammas_d, grid, rel_tol)
}

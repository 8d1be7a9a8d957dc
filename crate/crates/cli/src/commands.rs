//! The three subcommands, as library functions returning their tables.

use d2d_eh::analysis::{derive, evaluate};
use d2d_eh::numerics::{chebyshev_grid, ChebyshevGrid};
use d2d_eh::simulator::{estimate_metrics, SimConfig};
use d2d_eh::MetricsReport;
use log::info;
use rayon::prelude::*;

use crate::config::{gammas_linear, ExperimentConfig, ResolvedPoint};
use crate::error::CliError;
use crate::output::PointReport;

fn context(config: &ExperimentConfig, point: &ResolvedPoint) -> String {
    match point.sweep_value {
        Some(v) => format!("{} = {v}", config.sweep_name()),
        None => "single point".to_string(),
    }
}

fn grid_for(config: &ExperimentConfig, point: &ResolvedPoint) -> Result<ChebyshevGrid, CliError> {
    chebyshev_grid(config.quadrature.order, point.params.cell_radius_m)
        .map_err(|e| CliError::Config(format!("quadrature: {e}")))
}

/// Analytical report of one point. `lambda_t_scale` multiplies the active
/// density before the outage and rate metrics are evaluated; it is 1 in
/// normal use and exists so that validation can be shown to reject a
/// wrong model.
fn analyze_point(
    config: &ExperimentConfig,
    point: &ResolvedPoint,
    lambda_t_scale: f64,
) -> Result<MetricsReport, CliError> {
    let ctx = context(config, point);
    let wrap = |e| CliError::from_model(e, &ctx);
    let grid = grid_for(config, point)?;
    let gammas = gammas_linear(&point.gammas_db);
    point.params.validate().map_err(wrap)?;
    let mut derived = derive(&point.params, &point.scheme).map_err(wrap)?;
    derived.active_density_per_m2 *= lambda_t_scale;
    evaluate(
        &point.params,
        &point.scheme,
        derived,
        &gammas,
        &gammas,
        &grid,
        config.quadrature.rel_tol,
    )
    .map_err(wrap)
}

fn simulate_point(
    config: &ExperimentConfig,
    sim: &SimConfig,
    point: &ResolvedPoint,
) -> Result<MetricsReport, CliError> {
    let ctx = context(config, point);
    let wrap = |e| CliError::from_model(e, &ctx);
    point.params.validate_for_simulation().map_err(wrap)?;
    let gammas = gammas_linear(&point.gammas_db);
    estimate_metrics(&point.params, &point.scheme, sim, &gammas, &gammas).map_err(wrap)
}

pub fn analyze(config: &ExperimentConfig) -> Result<Vec<PointReport>, CliError> {
    let points = config.points()?;
    info!(
        "analyze: {} point(s), scheme {}",
        points.len(),
        config.scheme.to_scheme().name()
    );
    points
        .par_iter()
        .map(|point| {
            Ok(PointReport {
                sweep_value: point.sweep_value,
                gammas_db: point.gammas_db.clone(),
                report: analyze_point(config, point, 1.0)?,
            })
        })
        .collect()
}

/// Sweep points run one after the other; the trials of each point run in
/// parallel.
pub fn simulate(config: &ExperimentConfig) -> Result<Vec<PointReport>, CliError> {
    let points = config.points()?;
    info!(
        "simulate: {} point(s), {} trial(s) x {} slot(s), seed {}",
        points.len(),
        config.sim.trials,
        config.sim.slots,
        config.sim.seed
    );
    points
        .iter()
        .map(|point| {
            Ok(PointReport {
                sweep_value: point.sweep_value,
                gammas_db: point.gammas_db.clone(),
                report: simulate_point(config, &config.sim, point)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The simulation produced no samples for this metric (for example no
    /// operable transmitter ever existed), so there is nothing to compare.
    Skip,
}

impl CheckStatus {
    pub fn label(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skip => "skip",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub sweep_value: Option<f64>,
    pub metric: &'static str,
    pub gamma_db: Option<f64>,
    pub analysis: f64,
    pub simulation: f64,
    pub abs_diff: f64,
    /// Half width of the normal 95% interval of the simulated value.
    pub ci95_half_width: f64,
    pub tolerance: f64,
    pub status: CheckStatus,
}

/// Options of `validate` beyond the experiment file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    /// Factor applied to the analytical active density (1 = no change).
    pub lambda_t_scale: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            lambda_t_scale: 1.0,
        }
    }
}

fn check(
    sweep_value: Option<f64>,
    metric: &'static str,
    gamma_db: Option<f64>,
    analysis: f64,
    simulation: f64,
    stderr: f64,
    tolerance: f64,
) -> ValidationRow {
    let abs_diff = (analysis - simulation).abs();
    let status = if simulation.is_nan() {
        CheckStatus::Skip
    } else if abs_diff <= tolerance {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    ValidationRow {
        sweep_value,
        metric,
        gamma_db,
        analysis,
        simulation,
        abs_diff,
        ci95_half_width: 1.96 * stderr,
        tolerance,
        status,
    }
}

/// Compares analysis with a simulation run under the validation settings
/// (extended field, position-independent harvesting, fresh layout per
/// slot).
pub fn validate(
    config: &ExperimentConfig,
    options: ValidationOptions,
) -> Result<Vec<ValidationRow>, CliError> {
    let points = config.points()?;
    let sim = config.sim.validation();
    let tol = config.validate;
    info!(
        "validate: {} point(s), {} trial(s) x {} slot(s) on a {}R field",
        points.len(),
        sim.trials,
        sim.slots,
        sim.field_radius_factor
    );
    let mut rows = Vec::new();
    for point in &points {
        let ana = analyze_point(config, point, options.lambda_t_scale)?;
        let emp = simulate_point(config, &sim, point)?;
        let err = emp
            .errors
            .clone()
            .ok_or_else(|| CliError::Numerical("simulation returned no standard errors".into()))?;
        let v = point.sweep_value;
        rows.push(check(
            v,
            "pi_o",
            None,
            ana.derived.operable_prob,
            emp.derived.operable_prob,
            err.operable_prob,
            tol.probability_abs,
        ));
        rows.push(check(
            v,
            "p_t",
            None,
            ana.derived.transmit_prob,
            emp.derived.transmit_prob,
            err.transmit_prob,
            tol.probability_abs,
        ));
        for (k, &g) in point.gammas_db.iter().enumerate() {
            rows.push(check(
                v,
                "bs_outage",
                Some(g),
                ana.bs_outage.probabilities[k],
                emp.bs_outage.probabilities[k],
                err.bs_outage[k],
                tol.outage_abs,
            ));
        }
        for (k, &g) in point.gammas_db.iter().enumerate() {
            rows.push(check(
                v,
                "d2d_outage",
                Some(g),
                ana.d2d_outage.probabilities[k],
                emp.d2d_outage.probabilities[k],
                err.d2d_outage[k],
                tol.outage_abs,
            ));
        }
        rows.push(check(
            v,
            "sum_rate",
            None,
            ana.sum_rate,
            emp.sum_rate,
            err.sum_rate,
            tol.sum_rate_rel * ana.sum_rate.abs(),
        ));
    }
    Ok(rows)
}

pub fn all_passed(rows: &[ValidationRow]) -> bool {
    rows.iter().all(|r| r.status != CheckStatus::Fail)
}

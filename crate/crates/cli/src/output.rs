//! CSV emission. Every table has a fixed header; numbers are written in
//! scientific notation with a fixed number of digits, which keeps the
//! output independent of locale and byte-identical across replays.

use std::io::Write;

use d2d_eh::MetricsReport;

use crate::commands::ValidationRow;
use crate::error::CliError;

pub const ANALYSIS_COLUMNS: [&str; 11] = [
    "sweep_param",
    "sweep_value",
    "pi_o",
    "p_t",
    "lambda_t",
    "r_p_m",
    "W",
    "gamma_db",
    "bs_outage",
    "d2d_outage",
    "sum_rate",
];

pub const SIMULATION_EXTRA_COLUMNS: [&str; 8] = [
    "pi_o_stderr",
    "p_t_stderr",
    "lambda_t_stderr",
    "bs_outage_stderr",
    "d2d_outage_stderr",
    "sum_rate_stderr",
    "n_samples",
    "n_d2d_samples",
];

pub const VALIDATION_COLUMNS: [&str; 10] = [
    "sweep_param",
    "sweep_value",
    "metric",
    "gamma_db",
    "analysis",
    "simulation",
    "abs_diff",
    "ci95_half_width",
    "tolerance",
    "status",
];

pub fn fmt_value(value: f64, precision: usize) -> String {
    if value.is_nan() {
        "NaN".to_string()
    } else {
        format!("{value:.precision$e}")
    }
}

fn fmt_optional(value: Option<f64>, precision: usize) -> String {
    value.map_or_else(String::new, |v| fmt_value(v, precision))
}

/// One evaluated sweep point.
#[derive(Debug, Clone)]
pub struct PointReport {
    pub sweep_value: Option<f64>,
    pub gammas_db: Vec<f64>,
    pub report: MetricsReport,
}

pub fn write_metrics<W: Write>(
    sink: W,
    sweep_param: &str,
    points: &[PointReport],
    precision: usize,
) -> Result<(), CliError> {
    let simulated = points.iter().any(|p| p.report.errors.is_some());
    let mut writer = csv::Writer::from_writer(sink);
    let mut header: Vec<&str> = ANALYSIS_COLUMNS.to_vec();
    if simulated {
        header.extend(SIMULATION_EXTRA_COLUMNS);
    }
    writer.write_record(&header)?;
    let f = |v: f64| fmt_value(v, precision);
    for point in points {
        let r = &point.report;
        for (k, &gamma_db) in point.gammas_db.iter().enumerate() {
            let mut row = vec![
                sweep_param.to_string(),
                fmt_optional(point.sweep_value, precision),
                f(r.derived.operable_prob),
                f(r.derived.transmit_prob),
                f(r.derived.active_density_per_m2),
                f(r.derived.protection_radius_m),
                f(r.derived.w_constant),
                f(gamma_db),
                f(r.bs_outage.probabilities[k]),
                f(r.d2d_outage.probabilities[k]),
                f(r.sum_rate),
            ];
            if simulated {
                let e = r.errors.as_ref().ok_or_else(|| {
                    CliError::Numerical("simulation point without standard errors".into())
                })?;
                row.extend([
                    f(e.operable_prob),
                    f(e.transmit_prob),
                    f(e.active_density_per_m2),
                    f(e.bs_outage[k]),
                    f(e.d2d_outage[k]),
                    f(e.sum_rate),
                    r.n_samples.to_string(),
                    r.n_d2d_samples.to_string(),
                ]);
            }
            writer.write_record(&row)?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn write_validation<W: Write>(
    sink: W,
    sweep_param: &str,
    rows: &[ValidationRow],
    precision: usize,
) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(VALIDATION_COLUMNS)?;
    for r in rows {
        writer.write_record([
            sweep_param.to_string(),
            fmt_optional(r.sweep_value, precision),
            r.metric.to_string(),
            fmt_optional(r.gamma_db, precision),
            fmt_value(r.analysis, precision),
            fmt_value(r.simulation, precision),
            fmt_value(r.abs_diff, precision),
            fmt_value(r.ci95_half_width, precision),
            fmt_value(r.tolerance, precision),
            r.status.label().to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Fixed-width table for the terminal.
pub fn render_validation_table(rows: &[ValidationRow]) -> String {
    let mut out = format!(
        "{:>10} {:<11} {:>7} {:>10} {:>10} {:>9} {:>9} {:>9}  {}\n",
        "point", "metric", "gamma", "analysis", "sim", "|diff|", "ci95", "tol", "result"
    );
    for r in rows {
        let point = r
            .sweep_value
            .map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        let gamma = r
            .gamma_db
            .map_or_else(|| "-".to_string(), |g| format!("{g:.1}"));
        out.push_str(&format!(
            "{:>10} {:<11} {:>7} {:>10.5} {:>10.5} {:>9.5} {:>9.5} {:>9.5}  {}\n",
            point,
            r.metric,
            gamma,
            r.analysis,
            r.simulation,
            r.abs_diff,
            r.ci95_half_width,
            r.tolerance,
            r.status.label()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_are_locale_free() {
        assert_eq!(fmt_value(0.000263419, 3), "2.634e-4");
        assert_eq!(fmt_value(27.8, 2), "2.78e1");
        assert_eq!(fmt_value(f64::NAN, 4), "NaN");
        assert_eq!(fmt_optional(None, 4), "");
    }
}

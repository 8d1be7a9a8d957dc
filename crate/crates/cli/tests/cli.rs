use std::path::{Path, PathBuf};
use std::process::Command;

use d2d_eh::analysis::analyze;
use d2d_eh::model::{db_to_linear, dbm_to_mw};
use d2d_eh::numerics::chebyshev_grid;
use d2d_eh::{NetworkParams, SchemeConfig};
use d2d_eh_cli::commands::{self, all_passed, CheckStatus, ValidationOptions};
use d2d_eh_cli::ExperimentConfig;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_d2d-eh"));
    cmd.env("RUST_LOG", "warn");
    cmd
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

fn header(path: &Path) -> Vec<String> {
    csv::Reader::from_path(path)
        .unwrap()
        .headers()
        .unwrap()
        .iter()
        .map(str::to_string)
        .collect()
}

const FTP: &str = "[scheme]\nvariant = \"ftp\"\np_t = 0.1\n";
const SMALL_SIM: &str = "[sim]\nslots = 1200\nburn_in = 200\ntrials = 2\nseed = 5\n";

#[test]
fn analyze_writes_schema_and_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a.toml",
        &format!("{FTP}[output]\nprecision = 12\n"),
    );
    let out = dir.path().join("a.csv");
    let status = bin()
        .args(["analyze", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        header(&out),
        [
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
            "sum_rate"
        ]
    );
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 5);

    let gammas: Vec<f64> = [-5.0, 0.0, 5.0, 10.0, 15.0]
        .iter()
        .map(|&g| db_to_linear(g))
        .collect();
    let grid = chebyshev_grid(100, 100.0).unwrap();
    let expected = analyze(
        &NetworkParams::default(),
        &SchemeConfig::Ftp { p_t: 0.1 },
        &gammas,
        &gammas,
        &grid,
        1e-6,
    )
    .unwrap();
    for (k, row) in rows.iter().enumerate() {
        let value = |i: usize| row[i].parse::<f64>().unwrap();
        assert!((value(2) - expected.derived.operable_prob).abs() < 1e-11);
        assert!((value(8) - expected.bs_outage.probabilities[k]).abs() < 1e-11);
        assert!((value(9) - expected.d2d_outage.probabilities[k]).abs() < 1e-11);
        assert!((value(10) - expected.sum_rate).abs() < 1e-9 * expected.sum_rate);
    }
}

#[test]
fn resolved_config_is_stored_next_to_csv_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "r.toml", FTP);
    let out = dir.path().join("nested").join("r.csv");
    let status = bin()
        .args(["analyze", "--seed", "99", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let resolved = dir.path().join("nested").join("r.config.toml");
    let config = ExperimentConfig::load(&resolved).unwrap();
    assert_eq!(config.sim.seed, 99);
    assert_eq!(config.network.bs_power_dbm, 44.0);
    assert_eq!(config.quadrature.order, 100);
}

#[test]
fn single_point_sweep_gives_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.toml",
        &format!("{FTP}[sweep]\nparameter = \"p_t\"\nstart = 0.3\nstop = 0.3\nstep = 0.1\n[thresholds]\ngamma_db = [0.0]\n"),
    );
    let out = dir.path().join("s.csv");
    assert!(bin()
        .arg("analyze")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "p_t");
    assert!((rows[0][1].parse::<f64>().unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn fig3_sweep_is_ordered_and_decreasing() {
    let dir = tempfile::tempdir().unwrap();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/fig3_eta03.toml");
    let out = dir.path().join("fig3.csv");
    assert!(bin()
        .arg("analyze")
        .arg("--config")
        .arg(&root)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 19);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap()))
        .collect();
    for w in pts.windows(2) {
        assert!(w[1].0 > w[0].0);
        assert!(w[1].1 <= w[0].1);
    }
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", &format!("{FTP}{SMALL_SIM}"));
    let mut outputs = Vec::new();
    for name in ["m1.csv", "m2.csv"] {
        let out = dir.path().join(name);
        assert!(bin()
            .arg("simulate")
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap()
            .success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let head = header(&dir.path().join("m1.csv"));
    for col in [
        "pi_o_stderr",
        "bs_outage_stderr",
        "n_samples",
        "n_d2d_samples",
    ] {
        assert!(head.iter().any(|h| h == col), "missing {col}");
    }

    let other = dir.path().join("m3.csv");
    assert!(bin()
        .args(["simulate", "--seed", "6", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&other)
        .status()
        .unwrap()
        .success());
    assert_ne!(std::fs::read(&other).unwrap(), outputs[0]);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "[scheme]\nvariant = \"ftp\"\np_t = 1.5\n",
        "[scheme]\nvariant = \"csma\"\n",
        &format!("{FTP}[network]\ncell_radius_m = -1.0\n"),
        &format!("{FTP}[sim]\nslots = 10\nburn_in = 10\n"),
        &format!("{FTP}[unknown]\nx = 1\n"),
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("bad{i}.toml"), text);
        let code = bin()
            .arg("analyze")
            .arg("--config")
            .arg(&cfg)
            .output()
            .unwrap()
            .status
            .code();
        assert_eq!(code, Some(2), "case {i}: {text}");
    }
    let missing = bin()
        .args(["analyze", "--config", "/nonexistent/x.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn validate_without_harvesting_passes_trivially() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.toml",
        &format!("{FTP}{SMALL_SIM}[network]\nharvest_efficiency = 0.0\n"),
    );
    let out = dir.path().join("v.csv");
    let output = bin()
        .arg("validate")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let rows = csv_rows(&out);
    let pi_o = rows.iter().find(|r| &r[2] == "pi_o").unwrap();
    assert_eq!(pi_o[4].parse::<f64>().unwrap(), 0.0);
    assert_eq!(pi_o[5].parse::<f64>().unwrap(), 0.0);
    assert!(String::from_utf8_lossy(&output.stdout).contains("metric"));
}

#[test]
fn corrupted_active_density_fails_validation() {
    let text = format!(
        "{FTP}[sim]\nslots = 3200\nburn_in = 200\ntrials = 2\nseed = 11\n[thresholds]\ngamma_db = [0.0, 5.0]\n"
    );
    let config = ExperimentConfig::from_toml_str(&text).unwrap();
    let honest = commands::validate(&config, ValidationOptions::default()).unwrap();
    assert!(all_passed(&honest), "{honest:#?}");
    let corrupted = commands::validate(
        &config,
        ValidationOptions {
            lambda_t_scale: 2.0,
        },
    )
    .unwrap();
    assert!(!all_passed(&corrupted));
    assert!(corrupted
        .iter()
        .any(|r| r.metric == "bs_outage" && r.status == CheckStatus::Fail));
}

#[test]
fn failed_validation_exits_with_4() {
    // A deliberately wrong tolerance of zero cannot be met by a finite run.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "z.toml",
        &format!("{FTP}{SMALL_SIM}[validate]\nprobability_abs = 0.0\noutage_abs = 0.0\nsum_rate_rel = 0.0\n"),
    );
    let output = bin()
        .arg("validate")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
}

#[test]
fn atp_sweep_converts_dbm() {
    let text = "[scheme]\nvariant = \"atp\"\nbeta_th_dbm = -72.0\n[sweep]\nparameter = \"beta_th_dbm\"\nstart = -80\nstop = -60\nstep = 10\n";
    let config = ExperimentConfig::from_toml_str(text).unwrap();
    let points = config.points().unwrap();
    assert_eq!(points.len(), 3);
    match points[1].scheme {
        SchemeConfig::Atp { beta_th_mw } => {
            assert!((beta_th_mw / dbm_to_mw(-70.0) - 1.0).abs() < 1e-12)
        }
        _ => panic!("expected atp"),
    }
    let report = commands::analyze(&config).unwrap();
    let p_t: Vec<f64> = report
        .iter()
        .map(|p| p.report.derived.transmit_prob)
        .collect();
    assert!(p_t[0] < p_t[1] && p_t[1] < p_t[2]);
}

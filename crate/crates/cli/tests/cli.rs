use std::fs;
use std::path::Path;
use std::process::Command as Proc;

use spinamp_cli::output::read_frequency_curve;
use spinamp_cli::{parse_config, run_command, Command};
use spinamp_core::fano::fit_fano;
use spinamp_core::FitOptions;

fn spinamp(args: &[&str], cwd: &Path) -> std::process::Output {
    Proc::new(env!("CARGO_BIN_EXE_spinamp"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn summary(path: &Path) -> toml::Table {
    fs::read_to_string(path).unwrap().parse().unwrap()
}

fn result_f64(t: &toml::Table, key: &str) -> f64 {
    t["result"][key]
        .as_float()
        .unwrap_or_else(|| panic!("{key} missing"))
}

#[test]
fn every_command_runs_on_empty_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "").unwrap();
    for cmd in [
        "eigen",
        "sweep-freq",
        "sweep-theta",
        "sweep-field",
        "decoherence",
        "budget",
        "integrate",
    ] {
        let out = spinamp(&[cmd, "--config", "c.toml", "--out", "out"], dir.path());
        assert!(
            out.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let stem = cmd.replace('-', "_");
        for suffix in ["_summary.toml", "_config.toml", ".csv"] {
            assert!(
                dir.path()
                    .join("out")
                    .join(format!("{stem}{suffix}"))
                    .exists(),
                "{stem}{suffix}"
            );
        }
    }
}

#[test]
fn eigen_reports_special_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config("", &[]).unwrap();
    run_command(Command::Eigen, &cfg, dir.path()).unwrap();
    let s = summary(&dir.path().join("eigen_summary.toml"));
    assert!((result_f64(&s, "strong_damping_field_mg") + 3.0).abs() < 0.3);
    assert!((result_f64(&s, "self_compensation_field_mg") + 3.008).abs() < 1e-12);
    assert!(s["result"]["lam_plus"].as_array().unwrap().len() == 2);
    assert_eq!(s["envelope"]["command"].as_str(), Some("eigen"));
}

#[test]
fn fit_of_written_sweep_matches_direct_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config("", &[]).unwrap();
    run_command(Command::SweepFreq, &cfg, dir.path()).unwrap();
    let csv = dir.path().join("sweep_freq.csv");

    let model = cfg.model().unwrap();
    let r = cfg.resolve().unwrap();
    let curve =
        spinamp_core::sweep_frequency(&model, &r.drive, &cfg.omega_grid(&model).unwrap()).unwrap();
    let direct = fit_fano(&curve, None, &FitOptions::default()).unwrap();

    let parsed = read_frequency_curve(&csv).unwrap();
    assert_eq!(parsed.len(), curve.len());
    for (a, b) in parsed.points.iter().zip(&curve.points) {
        assert_eq!(a.readout, b.readout);
    }

    let fit_cfg = parse_config(
        &format!("[fit]\ninput = {:?}\n", csv.display().to_string()),
        &[],
    )
    .unwrap();
    run_command(Command::Fit, &fit_cfg, dir.path()).unwrap();
    let s = summary(&dir.path().join("fit_summary.toml"));
    let q = result_f64(&s, "q");
    assert!(
        (q / direct.profile.q - 1.0).abs() < 1e-6,
        "{q} vs {}",
        direct.profile.q
    );
}

#[test]
fn dense_fit_curve_contains_extrema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config("[system]\nbz = -60.0\n", &[]).unwrap();
    run_command(Command::SweepFreq, &cfg, dir.path()).unwrap();
    let csv = dir.path().join("sweep_freq.csv");
    let fit_cfg = parse_config(
        &format!("[fit]\ninput = {:?}\n", csv.display().to_string()),
        &[],
    )
    .unwrap();
    run_command(Command::Fit, &fit_cfg, dir.path()).unwrap();

    let s = summary(&dir.path().join("fit_summary.toml"));
    let (peak, trough) = (
        result_f64(&s, "amplification_hz"),
        result_f64(&s, "deamplification_hz"),
    );
    let mut rdr = csv::Reader::from_path(dir.path().join("fit_dense.csv")).unwrap();
    let rows: Vec<(f64, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    let main_rows = csv::Reader::from_path(dir.path().join("fit.csv"))
        .unwrap()
        .records()
        .count();
    assert!(rows.len() >= 10 * main_rows);
    let max = rows.iter().cloned().fold(
        (0.0, f64::NEG_INFINITY),
        |a, b| if b.1 > a.1 { b } else { a },
    );
    let min = rows
        .iter()
        .cloned()
        .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    assert!((max.0 / peak - 1.0).abs() < 1e-12, "{} vs {peak}", max.0);
    assert!(
        (min.0 / trough - 1.0).abs() < 1e-12,
        "{} vs {trough}",
        min.0
    );
}

#[test]
fn budget_reports_about_54_db() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config("", &[]).unwrap();
    run_command(Command::Budget, &cfg, dir.path()).unwrap();
    let s = summary(&dir.path().join("budget_summary.toml"));
    let db = s["result"]["amplification"]["gain_db"].as_float().unwrap();
    assert!((db - 54.0).abs() < 0.5, "{db}");
}

#[test]
fn failures_are_one_line_and_leave_no_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[system]\nbzz = 1\n").unwrap();
    let out = spinamp(
        &["eigen", "--config", "bad.toml", "--out", "out"],
        dir.path(),
    );
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error kind=config command=eigen"), "{err}");
    assert!(err.contains("system.bzz"));

    fs::write(
        dir.path().join("c.toml"),
        "[fit]\ninput = \"missing.csv\"\n",
    )
    .unwrap();
    let out = spinamp(&["fit", "--config", "c.toml", "--out", "out"], dir.path());
    assert!(!out.status.success());
    let left: Vec<_> = fs::read_dir(dir.path().join("out"))
        .map(|d| d.collect())
        .unwrap_or_default();
    assert!(left.is_empty(), "{left:?}");

    let out = spinamp(
        &["fit", "--config", "missing.toml", "--out", "out"],
        dir.path(),
    );
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error kind=io"));
}

#[test]
fn fit_needs_an_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config("", &[]).unwrap();
    assert!(run_command(Command::Fit, &cfg, dir.path()).is_err());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn echoed_config_reproduces_payload() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(
        "[system]\nbz = -20.0\n[sweep.freq]\ncount = 300\ndense = 300\n",
        &[],
    )
    .unwrap();
    run_command(Command::SweepFreq, &cfg, &dir.path().join("a")).unwrap();
    let echo = fs::read_to_string(dir.path().join("a/sweep_freq_config.toml")).unwrap();
    let again = parse_config(&echo, &[]).unwrap();
    run_command(Command::SweepFreq, &again, &dir.path().join("b")).unwrap();
    assert_eq!(
        fs::read(dir.path().join("a/sweep_freq.csv")).unwrap(),
        fs::read(dir.path().join("b/sweep_freq.csv")).unwrap()
    );
}

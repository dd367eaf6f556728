//! One function per command: each turns a resolved configuration into CSV
//! tables and a summary table.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use spinamp_core::fano::{amplification_factor, fit_fano, FitOptions};
use spinamp_core::lm::LmOptions;
use spinamp_core::model::{ep_metrics, strong_damping_field, EpStatus};
use spinamp_core::sensing::{
    amplified, deamplification_suppression, deamplified, decoherence_vs_field, SensitivityReport,
};
use spinamp_core::{
    amp_deamp_separation, eigenmodes, normalize_response, optimal_theta, self_compensation_field,
    steady_state, sweep_frequency, sweep_theta, time_domain, transduce_pseudo_field, DriveMode,
    GradientModel, NoiseKind, TimeDomainOptions,
};
use toml::{Table as Toml, Value};

use crate::config::{to_hz, Resolved, RunConfig};
use crate::error::CliError;
use crate::output::{num, plot_tables, Outputs, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eigen,
    SweepFreq,
    SweepTheta,
    SweepField,
    Fit,
    Decoherence,
    Budget,
    Integrate,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Eigen,
        Command::SweepFreq,
        Command::SweepTheta,
        Command::SweepField,
        Command::Fit,
        Command::Decoherence,
        Command::Budget,
        Command::Integrate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::SweepFreq => "sweep-freq",
            Command::SweepTheta => "sweep-theta",
            Command::SweepField => "sweep-field",
            Command::Fit => "fit",
            Command::Decoherence => "decoherence",
            Command::Budget => "budget",
            Command::Integrate => "integrate",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }

    fn stem(self) -> String {
        self.name().replace('-', "_")
    }
}

/// Everything a command produced, before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct Payload {
    /// (file name, table); the first is the main payload.
    pub tables: Vec<(String, Table)>,
    pub summary: Toml,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: Toml,
}

fn put(t: &mut Toml, key: &str, v: impl Into<Value>) {
    t.insert(key.to_string(), v.into());
}

fn pos_max(values: &[f64]) -> usize {
    (0..values.len())
        .max_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0)
}

fn pos_min(values: &[f64]) -> usize {
    (0..values.len())
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0)
}

fn drive_summary(r: &Resolved) -> Toml {
    let mut t = Toml::new();
    put(&mut t, "theta_rad", r.drive.theta);
    put(&mut t, "theta_is_optimal", r.theta_was_optimal);
    put(&mut t, "amplitude_mg", r.drive.amplitude);
    put(
        &mut t,
        "mode",
        match r.drive.mode {
            DriveMode::Magnetic => "magnetic",
            DriveMode::PseudoAlkali => "pseudo_a",
            DriveMode::PseudoNoble => "pseudo_b",
        },
    );
    t
}

fn eigen(cfg: &RunConfig, r: &Resolved) -> Result<Payload, CliError> {
    let m = &r.model;
    let e = eigenmodes(m);
    let mut s = Toml::new();
    put(&mut s, "bz_mg", m.bz());
    put(&mut s, "larmor_alkali_hz", to_hz(m.omega_a()));
    put(&mut s, "larmor_noble_hz", to_hz(m.omega_b()));
    put(&mut s, "coupling_per_s", m.coupling());
    put(&mut s, "delta_per_s", m.delta());
    put(&mut s, "beta_per_s", m.beta());
    put(&mut s, "lam_plus", vec![e.lam_plus.re, e.lam_plus.im]);
    put(&mut s, "lam_minus", vec![e.lam_minus.re, e.lam_minus.im]);
    for (key, mode) in [("alkali_mode", e.alkali()), ("noble_mode", e.noble())] {
        let mut t = Toml::new();
        put(&mut t, "freq_hz", to_hz(mode.frequency));
        put(&mut t, "rate_per_s", mode.rate);
        put(&mut t, "coherence_time_s", 1.0 / mode.rate);
        s.insert(key.into(), Value::Table(t));
    }
    match strong_damping_field(m) {
        Ok(b) => put(&mut s, "strong_damping_field_mg", b),
        Err(err) => put(&mut s, "strong_damping_field_mg", err.to_string()),
    }
    put(
        &mut s,
        "self_compensation_field_mg",
        self_compensation_field(m),
    );
    put(&mut s, "eta", amplification_factor(m)?);
    put(&mut s, "optimal_theta_rad", optimal_theta(m, m.bz()));
    put(
        &mut s,
        "amp_deamp_separation_hz",
        to_hz(amp_deamp_separation(m)),
    );

    let report = ep_metrics(m, &cfg.ep_deltas(m)?)?;
    let mut ep = Toml::new();
    put(
        &mut ep,
        "status",
        match report.status {
            EpStatus::Reachable => "reachable",
            EpStatus::Unreachable => "unreachable",
        },
    );
    put(&mut ep, "native_coupling_to_beta", report.native_ratio);
    put(
        &mut ep,
        "tuned_rate_a_per_s",
        report.tuned_alkali_relaxation,
    );
    if let Some(slope) = report.slope {
        put(&mut ep, "log_log_slope", slope);
    }
    s.insert("exceptional_point".into(), Value::Table(ep));

    let mut t = Table::new(&["delta_per_s", "splitting_per_s", "enhancement"]);
    for row in &report.rows {
        t.push_nums(&[row.delta, row.splitting, row.enhancement]);
    }
    Ok(Payload {
        tables: vec![("eigen.csv".into(), t)],
        summary: s,
    })
}

fn sweep_freq(cfg: &RunConfig, r: &Resolved) -> Result<Payload, CliError> {
    let m = &r.model;
    let grid = cfg.omega_grid(m)?;
    let curve = sweep_frequency(m, &r.drive, &grid)?;
    let norm = normalize_response(m, &r.drive, &curve, r.ref_omega)?;
    let reference = norm.normalization.expect("normalized").reference_value;

    let mut t = Table::new(&[
        "freq_hz",
        "readout_re",
        "readout_im",
        "amplitude",
        "in_phase",
        "normalized",
        "power",
        "a_pos_re",
        "a_pos_im",
        "b_pos_re",
        "b_pos_im",
        "a_neg_re",
        "a_neg_im",
        "b_neg_re",
        "b_neg_im",
    ]);
    let mut signal = Vec::with_capacity(grid.len());
    for (w, p) in grid.iter().zip(&curve.points) {
        let sig = p.demodulate(r.demodulation) / reference;
        signal.push(sig);
        t.push_nums(&[
            to_hz(*w),
            p.readout.re,
            p.readout.im,
            p.amplitude(),
            p.in_phase(),
            sig,
            p.readout.norm_sqr(),
            p.positive[0].re,
            p.positive[0].im,
            p.positive[1].re,
            p.positive[1].im,
            p.negative[0].re,
            p.negative[0].im,
            p.negative[1].re,
            p.negative[1].im,
        ]);
    }

    let amps: Vec<f64> = norm.amplitudes();
    let (kp, kt) = (pos_max(&amps), pos_min(&amps));
    let e = eigenmodes(m);
    let mut s = drive_summary(r);
    put(&mut s, "points", grid.len() as i64);
    put(&mut s, "reference_freq_hz", to_hz(r.ref_omega));
    put(&mut s, "reference_amplitude", reference);
    put(&mut s, "eta", amplification_factor(m)?);
    put(&mut s, "noble_freq_hz", to_hz(e.noble().frequency));
    put(&mut s, "noble_rate_per_s", e.noble().rate);
    put(&mut s, "peak_freq_hz", to_hz(grid[kp]));
    put(&mut s, "peak_normalized", amps[kp]);
    put(&mut s, "trough_freq_hz", to_hz(grid[kt]));
    put(&mut s, "trough_normalized", amps[kt]);
    put(
        &mut s,
        "separation_grid_hz",
        to_hz((grid[kp] - grid[kt]).abs()),
    );
    put(
        &mut s,
        "separation_formula_hz",
        to_hz(amp_deamp_separation(m)),
    );
    if r.drive.mode != DriveMode::Magnetic {
        let at = r.drive.with_omega(e.noble().frequency.abs());
        put(
            &mut s,
            "transduction_gain_at_resonance",
            transduce_pseudo_field(m, &at)?,
        );
    }
    Ok(Payload {
        tables: vec![("sweep_freq.csv".into(), t)],
        summary: s,
    })
}

fn sweep_theta_cmd(cfg: &RunConfig, r: &Resolved) -> Result<Payload, CliError> {
    let m = &r.model;
    let thetas = cfg.theta_grid()?;
    let grid = cfg.omega_grid(m)?;
    let sweep = sweep_theta(m, &r.drive, &thetas, &grid, r.ref_omega)?;
    let mut t = Table::new(&["theta_rad", "min_normalized", "freq_at_min_hz"]);
    for ((th, v), w) in sweep
        .theta
        .iter()
        .zip(&sweep.minima)
        .zip(&sweep.omega_at_min)
    {
        t.push_nums(&[*th, *v, to_hz(*w)]);
    }
    let (best, value) = sweep.best();
    let mut s = Toml::new();
    put(&mut s, "best_theta_rad", best);
    put(&mut s, "best_min_normalized", value);
    put(&mut s, "optimal_theta_rad", optimal_theta(m, m.bz()));
    put(&mut s, "theta_step_rad", (thetas[1] - thetas[0]).abs());
    put(
        &mut s,
        "max_min_normalized",
        sweep.minima.iter().cloned().fold(0.0, f64::max),
    );
    Ok(Payload {
        tables: vec![("sweep_theta.csv".into(), t)],
        summary: s,
    })
}

fn sweep_field(cfg: &RunConfig, r: &Resolved) -> Result<Payload, CliError> {
    let fields = cfg.field_grid()?;
    let rows = fields
        .par_iter()
        .map(|&bz| {
            let m = r.model.with_bz(bz)?;
            let e = eigenmodes(&m);
            Ok([
                bz,
                to_hz(e.alkali().frequency),
                e.alkali().rate,
                to_hz(e.noble().frequency),
                e.noble().rate,
                amplification_factor(&m)?,
                optimal_theta(&m, bz),
            ])
        })
        .collect::<Result<Vec<_>, spinamp_core::Error>>()?;
    let mut t = Table::new(&[
        "bz_mg",
        "alkali_freq_hz",
        "alkali_rate_per_s",
        "noble_freq_hz",
        "noble_rate_per_s",
        "eta",
        "optimal_theta_rad",
    ]);
    for row in &rows {
        t.push_nums(row);
    }
    let etas: Vec<f64> = rows.iter().map(|r| r[5]).collect();
    let k = pos_max(&etas);
    let mut s = Toml::new();
    put(&mut s, "points", rows.len() as i64);
    put(&mut s, "max_eta", etas[k]);
    put(&mut s, "max_eta_bz_mg", rows[k][0]);
    put(
        &mut s,
        "self_compensation_field_mg",
        self_compensation_field(&r.model),
    );
    Ok(Payload {
        tables: vec![("sweep_field.csv".into(), t)],
        summary: s,
    })
}

fn decoherence(cfg: &RunConfig, r: &Resolved) -> Result<Payload, CliError> {
    let m = &r.model;
    let fields = cfg.field_grid()?;
    let with = decoherence_vs_field(m, &fields, &r.gradient)?;
    let without = decoherence_vs_field(m, &fields, &GradientModel::disabled())?;
    let mut t = Table::new(&["bz_mg", "rate_per_s", "time_s", "time_no_gradient_s"]);
    for k in 0..fields.len() {
        t.push_nums(&[fields[k], with.rate[k], with.time[k], without.time[k]]);
    }
    let mut s = Toml::new();
    put(&mut s, "gradient_enabled", r.gradient.enabled);
    put(&mut s, "epsilon_g", r.gradient.epsilon_g);
    put(&mut s, "tau_c_s", r.gradient.tau_c);
    let (bmin, tmin) = with.minimum();
    put(&mut s, "min_time_s", tmin);
    put(&mut s, "min_time_bz_mg", bmin);
    for (key, keep) in [("positive", 1.0), ("negative", -1.0)] {
        let idx: Vec<usize> = (0..fields.len())
            .filter(|&k| fields[k] * keep > 0.0)
            .collect();
        if let Some(&k) = idx
            .iter()
            .max_by(|&&a, &&b| with.time[a].total_cmp(&with.time[b]))
        {
            put(&mut s, &format!("max_time_{key}_s"), with.time[k]);
            put(&mut s, &format!("max_time_{key}_bz_mg"), fields[k]);
        }
    }
    put(&mut s, "plateau_time_s", 1.0 / m.noble().relaxation);
    if let Ok(b) = strong_damping_field(m) {
        put(&mut s, "strong_damping_field_mg", b);
    }
    Ok(Payload {
        tables: vec![("decoherence.csv".into(), t)],
        summary: s,
    })
}

fn fit(cfg: &RunConfig, r: &Resolved) -> Result<Payload, CliError> {
    let input = cfg
        .fit
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("fit.input is required for the fit command".into()))?;
    let curve = crate::output::read_frequency_curve(input)?;
    let opts = FitOptions {
        lm: LmOptions {
            max_iter: cfg.fit.max_iter,
            ..LmOptions::default()
        },
        window_widths: (cfg.fit.window_widths > 0.0).then_some(cfg.fit.window_widths),
    };
    let fit = fit_fano(&curve, None, &opts)?;
    let (main, dense) = plot_tables(&curve, Some(&fit))?;
    let p = fit.profile;
    let mut s = Toml::new();
    put(&mut s, "q", p.q);
    put(&mut s, "center_hz", to_hz(p.center));
    put(&mut s, "width_per_s", p.width);
    put(&mut s, "scale_a", p.scale_a);
    put(&mut s, "offset_b", p.offset_b);
    put(&mut s, "deamplification_hz", to_hz(p.trough()));
    if let Some(peak) = p.peak() {
        put(&mut s, "amplification_hz", to_hz(peak));
    }
    put(&mut s, "residual_norm", fit.residual_norm);
    put(&mut s, "iterations", fit.iterations as i64);
    put(&mut s, "converged", fit.converged);
    put(&mut s, "samples", fit.samples as i64);
    put(
        &mut s,
        "covariance",
        fit.covariance
            .iter()
            .map(|row| row.to_vec())
            .collect::<Vec<_>>(),
    );
    put(&mut s, "eta_model", amplification_factor(&r.model)?);
    put(&mut s, "input", input.display().to_string());
    let mut tables = vec![("fit.csv".into(), main)];
    if let Some(d) = dense {
        tables.push(("fit_dense.csv".into(), d));
    }
    Ok(Payload { tables, summary: s })
}

fn report_table(rep: &SensitivityReport, extra: (&str, f64)) -> Toml {
    let mut t = Toml::new();
    put(&mut t, extra.0, extra.1);
    put(&mut t, "gain_db", rep.gain_db);
    put(
        &mut t,
        "effective_sensitivity_ft",
        rep.effective_sensitivity,
    );
    put(&mut t, "energy_resolution_ev", rep.energy_resolution);
    t
}

fn budget(cfg: &RunConfig, r: &Resolved) -> Result<Payload, CliError> {
    let m = &r.model;
    let eta = amplification_factor(m)?;
    let amp = amplified(&r.budget, eta)?;
    let drive = r.drive.with_mode(DriveMode::Magnetic);
    let suppression = deamplification_suppression(m, &drive, &cfg.omega_grid(m)?, r.ref_omega)?;
    let deamp = deamplified(&r.budget, suppression)?;

    let mut t = Table::new(&[
        "name",
        "kind",
        "level_ft",
        "amplification_ft",
        "deamplification_ft",
    ]);
    for e in &r.budget.entries {
        let (a, d) = match e.kind {
            NoiseKind::NonInteracting => (e.level / eta, e.level),
            NoiseKind::FieldLike => (e.level, e.level / suppression),
        };
        let kind = match e.kind {
            NoiseKind::NonInteracting => "non_interacting",
            NoiseKind::FieldLike => "field_like",
        };
        t.push(vec![
            e.name.clone(),
            kind.into(),
            num(e.level),
            num(a),
            num(d),
        ]);
    }
    let mut s = Toml::new();
    put(&mut s, "theta_rad", r.drive.theta);
    s.insert(
        "amplification".into(),
        Value::Table(report_table(&amp, ("eta", eta))),
    );
    s.insert(
        "deamplification".into(),
        Value::Table(report_table(&deamp, ("suppression", suppression))),
    );
    Ok(Payload {
        tables: vec![("budget.csv".into(), t)],
        summary: s,
    })
}

fn integrate(cfg: &RunConfig, r: &Resolved) -> Result<Payload, CliError> {
    let i = &cfg.integrate;
    let opts = TimeDomainOptions {
        t_start: i.t_start,
        t_end: i.t_end,
        dt_out: i.dt,
        method: i.method,
        ..TimeDomainOptions::new(i.t_end, i.dt)
    };
    let ts = time_domain(&r.model, &r.drive, &opts)?;
    let mut t = Table::new(&["t_s", "a_re", "a_im", "b_re", "b_im", "readout"]);
    for k in 0..ts.t.len() {
        t.push_nums(&[
            ts.t[k],
            ts.a[k].re,
            ts.a[k].im,
            ts.b[k].re,
            ts.b[k].im,
            ts.readout[k],
        ]);
    }
    let mut s = drive_summary(r);
    put(&mut s, "freq_hz", to_hz(r.drive.omega));
    put(&mut s, "samples", ts.t.len() as i64);
    let method = match ts.method {
        spinamp_core::Propagation::Auto => "auto",
        spinamp_core::Propagation::ClosedForm => "closed_form",
        spinamp_core::Propagation::Integrator => "integrator",
    };
    put(&mut s, "method", method);
    put(
        &mut s,
        "steady_state_amplitude",
        steady_state(&r.model, &r.drive)?.amplitude(),
    );
    Ok(Payload {
        tables: vec![("integrate.csv".into(), t)],
        summary: s,
    })
}

/// Computes a command's tables and summary without touching the filesystem.
pub fn compute(cmd: Command, cfg: &RunConfig) -> Result<Payload, CliError> {
    let r = cfg.resolve()?;
    match cmd {
        Command::Eigen => eigen(cfg, &r),
        Command::SweepFreq => sweep_freq(cfg, &r),
        Command::SweepTheta => sweep_theta_cmd(cfg, &r),
        Command::SweepField => sweep_field(cfg, &r),
        Command::Fit => fit(cfg, &r),
        Command::Decoherence => decoherence(cfg, &r),
        Command::Budget => budget(cfg, &r),
        Command::Integrate => integrate(cfg, &r),
    }
}

/// Runs `cmd` and writes its payload, `<cmd>_summary.toml` and the echoed
/// `<cmd>_config.toml` into `out_dir`. On failure nothing is left behind.
pub fn run_command(cmd: Command, cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome, CliError> {
    let payload = compute(cmd, cfg)?;
    let mut out = Outputs::new(out_dir)?;
    let stem = cmd.stem();
    let mut names = Vec::new();
    for (name, table) in &payload.tables {
        out.write(name, &table.to_csv())?;
        names.push(Value::String(name.clone()));
    }
    let config_name = format!("{stem}_config.toml");
    out.write(&config_name, &cfg.to_toml())?;

    let mut envelope = Toml::new();
    put(&mut envelope, "tool", "spinamp");
    put(&mut envelope, "version", env!("CARGO_PKG_VERSION"));
    put(&mut envelope, "command", cmd.name());
    put(&mut envelope, "timestamp", chrono::Utc::now().to_rfc3339());
    put(&mut envelope, "config", config_name);
    put(&mut envelope, "payload", Value::Array(names));
    let rate_convention = match cfg.system.rate_convention {
        spinamp_core::RateConvention::Angular => "angular",
        spinamp_core::RateConvention::Cyclic => "cyclic",
    };
    put(&mut envelope, "rate_convention", rate_convention);
    let mut doc = Toml::new();
    doc.insert("envelope".into(), Value::Table(envelope));
    doc.insert("result".into(), Value::Table(payload.summary.clone()));
    let text = toml::to_string(&doc).map_err(|e| CliError::Config(e.to_string()))?;
    out.write(&format!("{stem}_summary.toml"), &text)?;

    Ok(RunOutcome {
        files: out.commit(),
        summary: payload.summary,
    })
}

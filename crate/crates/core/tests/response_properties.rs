mod common;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::Rng;
use spinamp_core::fano::fit_fano;
use spinamp_core::response::{normalized_minimum, reference_amplitude, resonance_grid};
use spinamp_core::{
    eigenmodes, normalize_response, optimal_theta, reference, steady_state, sweep_frequency,
    time_domain, DriveMode, DriveSpec, FitOptions, Propagation, TimeDomainOptions,
};

fn any_mode(k: u8) -> DriveMode {
    match k % 3 {
        0 => DriveMode::Magnetic,
        1 => DriveMode::PseudoAlkali,
        _ => DriveMode::PseudoNoble,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn response_is_linear_in_amplitude(
        seed in any::<u64>(),
        c in 1e-3f64..1e3,
        omega in 0.0f64..1e3,
        theta in 0.0f64..PI,
        mode in 0u8..3,
    ) {
        let m = common::any_model(&mut common::rng(seed));
        let d = DriveSpec::new(1.0, omega, theta, any_mode(mode)).unwrap();
        let base = steady_state(&m, &d).unwrap();
        let scaled = steady_state(&m, &DriveSpec { amplitude: c, ..d }).unwrap();
        let pairs = base.positive.iter().zip(&scaled.positive)
            .chain(base.negative.iter().zip(&scaled.negative))
            .chain(std::iter::once((&base.readout, &scaled.readout)));
        for (x, y) in pairs {
            prop_assert!((x * c - y).norm() <= 1e-12 * (x * c).norm().max(1e-300));
        }
    }

    #[test]
    fn free_evolution_never_gains_energy(
        seed in any::<u64>(),
        re0 in -1.0f64..1.0, im0 in -1.0f64..1.0,
        re1 in -1.0f64..1.0, im1 in -1.0f64..1.0,
    ) {
        let m = common::gentle_model(&mut common::rng(seed));
        let d = DriveSpec::new(0.0, 0.0, 0.0, DriveMode::Magnetic).unwrap();
        let mut opts = TimeDomainOptions::new(2.0, 0.01);
        opts.initial = [C64::new(re0, im0), C64::new(re1, im1)];
        let ts = time_domain(&m, &d, &opts).unwrap();
        let energy: Vec<f64> = ts.a.iter().zip(&ts.b).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect();
        let e0 = energy[0].max(1e-300);
        for w in energy.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * e0);
        }
    }
}

/// `r(t) = Re(R e^{iωt})` demodulated from one period of samples.
fn demodulate(ts: &spinamp_core::TimeSeries, omega: f64) -> C64 {
    let n = ts.t.len() as f64;
    ts.t.iter()
        .zip(&ts.readout)
        .map(|(t, r)| C64::from_polar(2.0 * r / n, -omega * t))
        .sum()
}

#[test]
fn closed_form_matches_integrator_after_settling() {
    let mut r = common::rng(11);
    for _ in 0..12 {
        let m = common::gentle_model(&mut r);
        let omega = r.random_range(0.5..50.0);
        let d = DriveSpec::new(1.0, omega, r.random_range(0.0..PI), DriveMode::Magnetic).unwrap();
        let e = eigenmodes(&m);
        let settle = 20.0 / e.lam_plus.im.min(e.lam_minus.im);
        let period = TAU / omega;
        let n = 64;
        let opts = |method| TimeDomainOptions {
            t_start: settle,
            t_end: settle + period * (n - 1) as f64 / n as f64,
            dt_out: period / n as f64,
            initial: [C64::new(0.0, 0.0); 2],
            method,
        };
        let want = steady_state(&m, &d).unwrap();
        for method in [Propagation::ClosedForm, Propagation::Integrator] {
            let ts = time_domain(&m, &d, &opts(method)).unwrap();
            assert_eq!(ts.t.len(), n);
            let got = demodulate(&ts, omega);
            assert!(
                (got.norm() / want.amplitude() - 1.0).abs() < 1e-6,
                "{method:?}: {} vs {}",
                got.norm(),
                want.amplitude()
            );
        }
    }
}

#[test]
fn flat_far_from_resonance() {
    let m = reference::model().with_bz(-30.0).unwrap();
    let d = DriveSpec::new(1.0, 0.0, optimal_theta(&m, m.bz()), DriveMode::Magnetic).unwrap();
    let slope = |w: f64| {
        let h = 1e-6 * w.max(1.0);
        let a = steady_state(&m, &d.with_omega(w + h)).unwrap().amplitude();
        let b = steady_state(&m, &d.with_omega(w - h)).unwrap().amplitude();
        ((a - b) / (2.0 * h)).abs()
    };
    let grid = resonance_grid(&m, 2000, 2000).unwrap();
    let peak_slope = grid.iter().map(|w| slope(*w)).fold(0.0, f64::max);
    let threshold = 10.0 * (m.coupling() + m.omega_b().abs());
    for k in 0..50 {
        let w = threshold * (1.0 + k as f64);
        assert!(slope(w) < 1e-3 * peak_slope, "omega {w}");
    }
}

#[test]
fn normalized_peak_is_close_to_fitted_q() {
    let m = reference::model().with_bz(-60.0).unwrap();
    let theta = optimal_theta(&m, m.bz());
    let d = DriveSpec::new(1.0, 0.0, theta, DriveMode::Magnetic).unwrap();
    let grid = resonance_grid(&m, 1500, 1500).unwrap();
    let curve = sweep_frequency(&m, &d, &grid).unwrap();
    let fit = fit_fano(&curve, None, &FitOptions::default()).unwrap();
    let norm = normalize_response(&m, &d, &curve, TAU * reference::REFERENCE_FREQ_HZ).unwrap();
    let peak = norm.amplitudes().into_iter().fold(0.0, f64::max);
    assert!(
        (peak / fit.profile.q.abs() - 1.0).abs() < 0.05,
        "peak {peak}, q {}",
        fit.profile.q
    );
}

#[test]
fn deep_minimum_on_optimal_direction() {
    let m = reference::model().with_bz(-60.0).unwrap();
    let d = DriveSpec::new(1.0, 0.0, optimal_theta(&m, m.bz()), DriveMode::Magnetic).unwrap();
    let r = reference_amplitude(&m, &d, TAU * reference::REFERENCE_FREQ_HZ).unwrap();
    let grid = resonance_grid(&m, 1500, 200).unwrap();
    let (_, min) = normalized_minimum(&m, &d, &grid, r).unwrap();
    assert!(min < 0.01, "min {min}");
}

#[test]
fn sweep_order_independent_of_thread_count() {
    let m = reference::model();
    let d = DriveSpec::new(1.0, 0.0, 1.0, DriveMode::Magnetic).unwrap();
    let grid = resonance_grid(&m, 500, 500).unwrap();
    let par = sweep_frequency(&m, &d, &grid).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let seq = pool.install(|| sweep_frequency(&m, &d, &grid).unwrap());
    assert_eq!(par, seq);
}

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spinamp_core::{EnsembleParams, SystemModel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

fn signed(r: &mut ChaCha8Rng) -> f64 {
    if r.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// Any valid model: magnitudes spread over decades, species signs random
/// but with `γ·λM ≥ 0` per species so the readout and drives are defined.
pub fn any_model(r: &mut ChaCha8Rng) -> SystemModel {
    let sa = signed(r);
    let sb = signed(r);
    let ga = sa * 10f64.powf(r.random_range(1.0..4.0));
    let gb = sb * 10f64.powf(r.random_range(-1.0..2.0));
    let fa = sa * 10f64.powf(r.random_range(-3.0..0.0));
    let fb = sb * 10f64.powf(r.random_range(-1.0..1.0));
    let rate_a = 10f64.powf(r.random_range(0.0..4.5));
    let rate_b = 10f64.powf(r.random_range(-3.0..0.0));
    let bz = r.random_range(-200.0..200.0);
    SystemModel::new(
        EnsembleParams::new(ga, rate_a, fa).unwrap(),
        EnsembleParams::new(gb, rate_b, fb).unwrap(),
        r.random_range(10.0..1000.0),
        bz,
    )
    .unwrap()
}

/// Small, well-damped models an explicit integrator handles quickly:
/// every rate and frequency within about two decades of 1 s⁻¹.
pub fn gentle_model(r: &mut ChaCha8Rng) -> SystemModel {
    let sa = signed(r);
    let sb = signed(r);
    let ga = sa * r.random_range(1.0..20.0);
    let gb = sb * r.random_range(0.5..5.0);
    let fa = sa * r.random_range(1e-4..2e-3);
    let fb = sb * r.random_range(0.1..3.0);
    let m = SystemModel::new(
        EnsembleParams::new(ga, r.random_range(2.0..100.0), fa).unwrap(),
        EnsembleParams::new(gb, r.random_range(0.2..5.0), fb).unwrap(),
        50.0,
        r.random_range(-5.0..5.0),
    )
    .unwrap();
    m
}

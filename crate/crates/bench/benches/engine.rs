use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use spinamp_core::fano::fit_fano;
use spinamp_core::response::resonance_grid;
use spinamp_core::{
    eigenmodes, reference, steady_state, sweep_frequency, DriveMode, DriveSpec, FitOptions,
};

fn engine(c: &mut Criterion) {
    let model = reference::model().with_bz(-60.0).unwrap();
    let theta = spinamp_core::optimal_theta(&model, model.bz());
    let drive = DriveSpec::new(1e-6, 60.0, theta, DriveMode::Magnetic).unwrap();
    let grid = resonance_grid(&model, 400, 200).unwrap();

    c.bench_function("eigenmodes", |b| b.iter(|| eigenmodes(black_box(&model))));
    c.bench_function("steady_state", |b| {
        b.iter(|| steady_state(black_box(&model), black_box(&drive)))
    });
    c.bench_function("sweep_frequency_600", |b| {
        b.iter(|| sweep_frequency(black_box(&model), &drive, &grid).unwrap())
    });
    let curve = sweep_frequency(&model, &drive, &grid).unwrap();
    c.bench_function("fit_fano_600", |b| {
        b.iter(|| fit_fano(black_box(&curve), None, &FitOptions::default()).unwrap())
    });
}

criterion_group!(benches, engine);
criterion_main!(benches);

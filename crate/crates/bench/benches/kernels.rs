use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use slabwave::energy::{compute_layer, reduced_energy, Potential, SymbolSource};
use slabwave::extension::{apply_la_flux, band_limited_trace, solve_extension};
use slabwave::symbol::{symbol_ode_oracle, symbol_value};
use slabwave::{FractionalParams, SlabGrid};

fn symbol(c: &mut Criterion) {
    let mut group = c.benchmark_group("symbol");
    for s in [0.25, 0.5, 0.75] {
        let p = FractionalParams::from_s(s).unwrap();
        let xs: Vec<f64> = (0..200)
            .map(|i| 1e-3 * 5e4f64.powf(i as f64 / 199.0))
            .collect();
        group.bench_with_input(BenchmarkId::new("closed_form_200", s), &p, |b, p| {
            b.iter(|| {
                xs.iter()
                    .map(|&x| symbol_value(black_box(x), p).unwrap())
                    .sum::<f64>()
            })
        });
        group.bench_with_input(BenchmarkId::new("ode_oracle_my1025", s), &p, |b, p| {
            b.iter(|| symbol_ode_oracle(black_box(3.0), p, 1025).unwrap())
        });
    }
    group.finish();
}

fn extension(c: &mut Criterion) {
    let p = FractionalParams::from_s(0.5).unwrap();
    let mut group = c.benchmark_group("extension");
    for (dim, nx, my) in [(1, 256, 129), (2, 64, 65)] {
        let g = Arc::new(SlabGrid::for_params(dim, 20.0, nx, my, &p).unwrap());
        let u = band_limited_trace(g, 6, 1).unwrap();
        let id = format!("{dim}d_nx{nx}_my{my}");
        group.bench_function(BenchmarkId::new("solve", &id), |b| {
            b.iter(|| solve_extension(black_box(&u), &p).unwrap())
        });
        group.bench_function(BenchmarkId::new("flux", &id), |b| {
            b.iter(|| apply_la_flux(black_box(&u), &p).unwrap())
        });
    }
    group.finish();
}

fn minimization(c: &mut Criterion) {
    let p = FractionalParams::from_s(0.5).unwrap();
    let g = SlabGrid::for_params(1, 80.0, 1024, 128, &p).unwrap();
    let op = SymbolSource::ClosedForm.operator(&g, &p).unwrap();
    let layer = compute_layer(&p, &g, 1e-10).unwrap();
    let pot = Potential::double_well();
    let mut group = c.benchmark_group("minimization");
    group.bench_function("reduced_energy_1d_1024", |b| {
        b.iter(|| reduced_energy(black_box(&layer.trace), &op, &pot))
    });
    group.sample_size(10);
    group.bench_function("compute_layer_1d_1024", |b| {
        b.iter(|| compute_layer(&p, &g, 1e-10).unwrap())
    });
    group.finish();
}

criterion_group!(benches, symbol, extension, minimization);
criterion_main!(benches);

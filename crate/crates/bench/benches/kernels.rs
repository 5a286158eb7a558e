use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use kerrlab::codebook::Scheme;
use kerrlab::dispersion::disperse;
use kerrlab::perturbation::{chi, si};
use kerrlab::ssfm::{propagate, LinkSpec, StepPolicy};
use kerrlab::txrx::{modulate, ChannelPlan, PulseShape, SymbolFrame};
use kerrlab::{normalize, PhysicalParams, SampledSignal};
use num_complex::Complex64;

fn launch(symbols: usize, amplitude: f64) -> SampledSignal {
    let plan = ChannelPlan::new(2, symbols, 16, 1.0, PulseShape::Sinc).unwrap();
    let scheme = Scheme::iud(64).unwrap();
    let rows = (0..5)
        .map(|k| {
            scheme
                .symbols(symbols, k)
                .unwrap()
                .into_iter()
                .map(|a| a * amplitude)
                .collect()
        })
        .collect();
    let frame = SymbolFrame::new(2, 0, rows).unwrap();
    modulate(&frame, &plan).unwrap()
}

fn special(c: &mut Criterion) {
    c.bench_function("si/1000 points", |b| {
        b.iter(|| (0..1000).map(|i| si(black_box(-100.0 + 0.2 * i as f64))).sum::<f64>())
    });
}

fn coefficients(c: &mut Criterion) {
    let mut g = c.benchmark_group("chi");
    g.sample_size(20);
    for (k, j) in [(1, 0), (1, 50), (2, 400)] {
        g.bench_function(format!("k={k} j={j} z=54"), |b| b.iter(|| chi(k, black_box(j), 54.25).unwrap()));
    }
    g.finish();
}

fn linear(c: &mut Criterion) {
    let s = launch(2565, 0.1);
    c.bench_function("disperse/41040 samples", |b| b.iter(|| disperse(black_box(&s), 54.25).unwrap()));
    let zero = SampledSignal::periodic(vec![Complex64::default(); 1 << 12], 0.125, 0.0).unwrap();
    c.bench_function("disperse/4096 zeros", |b| b.iter(|| disperse(black_box(&zero), 1.0).unwrap()));
}

fn split_step(c: &mut Criterion) {
    let map = normalize(&PhysicalParams::from_engineering(-21.7, 1.3, 50.0)).unwrap();
    let s = launch(513, 0.05);
    let link = LinkSpec::ideal(10.0, map);
    let policy = StepPolicy::default();
    let mut g = c.benchmark_group("ssfm");
    g.sample_size(10);
    g.bench_function("10 km, 5 channels, 513 symbols", |b| {
        b.iter(|| propagate(black_box(&s), &link, &policy, 0).unwrap())
    });
    g.finish();
}

criterion_group!(benches, special, coefficients, linear, split_step);
criterion_main!(benches);

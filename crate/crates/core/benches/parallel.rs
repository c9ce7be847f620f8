use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use roughflow::continuity::{weak_terms, ParticleMeasure};
use roughflow::fbm::{FbmSampler, FbmSpec};
use roughflow::flow::compose_lift;
use roughflow::flow::drift::SineDrift;
use roughflow::flow::solve_flow;
use roughflow::flow::stack::{eta_preset, Shifted};
use roughflow::par;
use roughflow::rough_path::TimeGrid;
use roughflow::sewing::cumulative_rough_integral;

fn modes() -> [(&'static str, Option<usize>); 2] {
    [("pool", None), ("single", Some(1))]
}

fn run<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(n) => par::with_threads(n, f),
        None => f(),
    }
}

fn sampling(c: &mut Criterion) {
    let g = TimeGrid::dyadic(1.0, 8).unwrap();
    let sampler = FbmSampler::new(FbmSpec::new(0.3, 2, g, 1).unwrap()).unwrap();
    let mut group = c.benchmark_group("fbm_sample_many");
    for (name, threads) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(threads, || black_box(sampler.sample_many(64))))
        });
    }
    group.finish();
}

fn flow_solve(c: &mut Criterion) {
    let g = TimeGrid::dyadic(1.0, 8).unwrap();
    let x = FbmSampler::new(FbmSpec::new(0.3, 1, g.clone(), 2).unwrap())
        .unwrap()
        .sample();
    let mu = ParticleMeasure::gaussian(1, 0.5, 256).unwrap();
    let b = SineDrift {
        dim: 1,
        amplitude: 1.0,
    };
    let mut group = c.benchmark_group("solve_flow");
    for (name, threads) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |bch| {
            bch.iter(|| {
                run(threads, || {
                    black_box(solve_flow(&b, &g, &x, mu.points(), 4).unwrap())
                })
            })
        });
    }
    group.finish();
}

fn rough_integration(c: &mut Criterion) {
    let g = TimeGrid::dyadic(1.0, 8).unwrap();
    let x = FbmSampler::new(FbmSpec::new(0.3, 1, g.clone(), 3).unwrap())
        .unwrap()
        .sample();
    let mu = ParticleMeasure::gaussian(1, 0.5, 64).unwrap();
    let flow = solve_flow(
        &SineDrift {
            dim: 1,
            amplitude: 1.0,
        },
        &g,
        &x,
        mu.points(),
        4,
    )
    .unwrap();
    let lift = Arc::new(flow.fine_driver_lift(3).unwrap());
    let eta = eta_preset("gauss-bump-1", 1, 4).unwrap();
    let grad = Shifted {
        inner: eta.as_ref(),
        shift: 1,
    };
    let y = compose_lift(&grad, &flow, &lift, 0).unwrap();
    let mut group = c.benchmark_group("rough_integration");
    for (name, threads) in modes() {
        group.bench_function(BenchmarkId::new("cumulative", name), |b| {
            b.iter(|| {
                run(threads, || {
                    black_box(cumulative_rough_integral(&y, 0.28).unwrap())
                })
            })
        });
        group.bench_function(BenchmarkId::new("weak_terms", name), |b| {
            b.iter(|| {
                run(threads, || {
                    black_box(weak_terms(&mu, &flow, &lift, eta.as_ref(), 0.28, 1.0).unwrap())
                })
            })
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = sampling, flow_solve, rough_integration
}
criterion_main!(benches);

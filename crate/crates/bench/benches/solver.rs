use std::hint::black_box;
use criterion::{criterion_group, criterion_main, Criterion};

use cone_fixpoint::certificate::{default_witnesses, verify_certificate};
use cone_fixpoint::contraction::spectral_norm;
use cone_fixpoint::engine::run;
use cone_fixpoint::{problems, Matrix, StoppingRule, TolerancePolicy};

fn run_benchmark(c: &mut Criterion) {
    let mut group = c.benchmark_group("run");
    for name in ["AFFINE_1D", "ROTATION_2D", "KEPLER", "NEAR_ONE"] {
        let p = problems::builtin(name).unwrap();
        let rule = StoppingRule::a_priori(1e-10);
        group.bench_function(name, |b| b.iter(|| run(black_box(&p.spec), black_box(&p.x0), &rule).unwrap()));
    }
    group.finish();
}

fn verify_benchmark(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_certificate");
    for name in ["ROTATION_2D", "NEAR_ONE"] {
        let p = problems::builtin(name).unwrap();
        let trace = run(&p.spec, &p.x0, &StoppingRule::a_priori(1e-10)).unwrap();
        let witnesses = default_witnesses(&trace, 0).unwrap();
        let tol = TolerancePolicy::default();
        group.bench_function(name, |b| {
            b.iter(|| verify_certificate(black_box(&trace), black_box(&witnesses), &tol).unwrap())
        });
    }
    group.finish();
}

fn spectral_norm_benchmark(c: &mut Criterion) {
    let rows: Vec<Vec<f64>> = (0..8)
        .map(|i| (0..8).map(|j| ((i * 8 + j) as f64 * 0.37).sin() / 8.0).collect())
        .collect();
    let a = Matrix::from_rows(rows).unwrap();
    c.bench_function("spectral_norm_8x8", |b| b.iter(|| spectral_norm(black_box(&a), 1e-12).unwrap()));
}

criterion_group!(benches, run_benchmark, verify_benchmark, spectral_norm_benchmark);
criterion_main!(benches);

//! Sequential vs parallel throughput on the two hot paths: the
//! allocation-marginalized data log likelihood (the inner loop of every
//! node update) and density-grid evaluation.
//!
//! Run with `cargo bench -p sbamix`; the parallel cases need the default
//! `parallel` feature.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sbamix::gibbs::{run_chain, FitConfig, GridSpec, SliceParams, Variant};
use sbamix::kernels::{self, KernelKind};
use sbamix::measure::Domain;
use sbamix::prior::{draw_parsimonious, NodeLaw, NodeLawFamily, ScaleLaw};

fn synthetic_mixing(n: usize) -> sbamix::prior::JointDiscreteMeasure {
    let family = NodeLawFamily::homogeneous(
        Domain::real_line(),
        n,
        NodeLaw::Normal { mean: 0.0, sd: 2.0 },
    )
    .unwrap();
    let scale = ScaleLaw::InverseGamma {
        shape: 2.0,
        rate: 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    draw_parsimonious(&family, &scale, &mut rng).unwrap()
}

fn synthetic_data(d: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    use rand_distr::Distribution;
    let normal = rand_distr::Normal::new(0.0, 1.5).unwrap();
    (0..d).map(|_| normal.sample(&mut rng)).collect()
}

fn bench_marginal_loglik(c: &mut Criterion) {
    let mixing = synthetic_mixing(4);
    let mut group = c.benchmark_group("marginal_loglik");
    for d in [256usize, 4096, 65_536] {
        let data = synthetic_data(d);
        group.bench_with_input(BenchmarkId::new("seq", d), &data, |b, data| {
            b.iter(|| {
                kernels::marginal_loglik_seq(KernelKind::Gaussian, black_box(&mixing), data)
                    .unwrap()
            })
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("par", d), &data, |b, data| {
            b.iter(|| {
                kernels::marginal_loglik_par(KernelKind::Gaussian, black_box(&mixing), data)
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_density_grid(c: &mut Criterion) {
    let mixing = synthetic_mixing(4);
    let grid: Vec<f64> = (0..10_000).map(|k| -6.0 + 12.0 * k as f64 / 9_999.0).collect();
    let mut group = c.benchmark_group("density_grid");
    group.bench_function("auto", |b| {
        b.iter(|| kernels::density_grid(KernelKind::Gaussian, black_box(&mixing), &grid).unwrap())
    });
    group.finish();
}

fn bench_gibbs_sweeps(c: &mut Criterion) {
    let n = 4;
    let cfg = FitConfig {
        kernel: KernelKind::Gaussian,
        variant: Variant::Parsimonious,
        n,
        family: NodeLawFamily::homogeneous(
            Domain::real_line(),
            n,
            NodeLaw::Normal { mean: 0.0, sd: 3.0 },
        )
        .unwrap(),
        scale_prior: ScaleLaw::InverseGamma {
            shape: 0.5,
            rate: 1.5,
        },
        iterations: 220,
        burn_in: 20,
        thin: 10,
        seed: 11,
        slice: SliceParams::default(),
        grid: GridSpec {
            lo: -6.0,
            hi: 6.0,
            count: 100,
        },
    };
    let data = synthetic_data(82);
    let mut group = c.benchmark_group("gibbs");
    group.sample_size(10);
    group.bench_function("chain_220_sweeps_d82", |b| {
        b.iter(|| run_chain(black_box(&cfg), black_box(&data)).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_marginal_loglik,
    bench_density_grid,
    bench_gibbs_sweeps
);
criterion_main!(benches);

//! Kernels and a full forward pass on the default rayon pool versus a
//! one-thread pool. Build with `--no-default-features` to time the serial
//! fallback without rayon at all; both groups then measure the same code.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nanomvg::config::RunConfig;
use nanomvg::layers::{conv2d, ConvParams};
use nanomvg::params::{load_conv, ConvSpec, Generator};
use nanomvg::tmdf::deform_conv_with_offsets;
use nanomvg::{is_parallel, FeatureMap, InitMode, NanoMvg, TokenSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::ThreadPool;

fn random_map(shape: [usize; 4], seed: u64) -> FeatureMap {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    FeatureMap::from_fn(shape, |_, _, _, _| r.gen_range(-1.0..1.0))
}

fn pools() -> Vec<(String, ThreadPool)> {
    let all = rayon::current_num_threads();
    let mut out = vec![("1-thread".to_string(), rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap())];
    if all > 1 {
        out.push((format!("{all}-threads"), rayon::ThreadPoolBuilder::new().num_threads(all).build().unwrap()));
    }
    out
}

fn conv(p: &ConvParams, x: &FeatureMap) -> FeatureMap {
    conv2d(x, p).unwrap()
}

fn bench_conv(c: &mut Criterion) {
    let mut g = c.benchmark_group(format!("conv3x3_64ch_80px/parallel={}", is_parallel()));
    let mut src = Generator::new(1, InitMode::Random);
    let p = load_conv(&mut src, "c", ConvSpec::dense(64, 64, 3, 1)).unwrap();
    let x = random_map([1, 64, 80, 80], 2);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(&name), |b| b.iter(|| pool.install(|| conv(&p, &x))));
    }
    g.finish();
}

fn bench_deform(c: &mut Criterion) {
    let mut g = c.benchmark_group(format!("deform3x3_32ch_40px/parallel={}", is_parallel()));
    let mut src = Generator::new(3, InitMode::Random);
    let main = load_conv(&mut src, "m", ConvSpec::dense(32, 32, 3, 1)).unwrap();
    let x = random_map([1, 32, 40, 40], 4);
    let offsets = random_map([1, 18, 40, 40], 5);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(&name), |b| {
            b.iter(|| pool.install(|| deform_conv_with_offsets(&x, &offsets, &main).unwrap()))
        });
    }
    g.finish();
}

fn bench_forward(c: &mut Criterion) {
    let mut g = c.benchmark_group(format!("forward_64px/parallel={}", is_parallel()));
    g.sample_size(20);
    let cfg = RunConfig {
        input_size: 64,
        ..RunConfig::default()
    };
    let (model, _) = NanoMvg::generate(&cfg, 7, InitMode::Random).unwrap();
    let image = random_map([1, 3, 64, 64], 8).map(|v| v.abs());
    let radar = random_map([1, 3, 64, 64], 9);
    let tokens = vec![TokenSequence::all_pad(cfg.encoder.text_len)];
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(&name), |b| {
            b.iter(|| pool.install(|| model.forward(&image, &radar, &tokens).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_conv, bench_deform, bench_forward);
criterion_main!(benches);

//! Throughput of the per-clip pipelines on a 1-thread pool versus all
//! cores. Per-clip work is dispatched through the crate's executor, so
//! the 1-thread row approximates the sequential fallback while the wide
//! row shows the rayon speedup. Built without the `parallel` feature the
//! executor ignores the pool and both rows coincide, measuring the
//! sequential build itself.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sebbs::model::{ClassParams, ClipTracks, GroundTruth, HyperParams};
use sebbs::synth::{self, SynthSpec};
use sebbs::tuning::{self, CorpusDetections, Grid, Method, Metric};
use sebbs::{metrics, EvalConfig, Gamma};

fn corpus(n_clips: usize) -> (ClipTracks, GroundTruth) {
    let spec = SynthSpec {
        n_clips,
        clip_duration: 10.0,
        frame_width: 0.05,
        classes: vec!["a".into(), "b".into(), "c".into()],
        event_rate: 0.5,
        peak_heights: vec![0.9, 0.4],
        ramp_width: 0.4,
        noise_amplitude: 0.15,
        event_len_range: (0.7, 1.2),
        min_gap: 0.8,
        seed: 99,
    };
    synth::generate(&spec).expect("bench corpus generates")
}

fn csebb_params() -> HyperParams {
    let mut params = HyperParams::new();
    for class in ["a", "b", "c"] {
        params.classes.insert(
            class.into(),
            ClassParams {
                tau: Some(0.48),
                gamma: Some(Gamma::relative(2.0)),
                ..ClassParams::default()
            },
        );
    }
    params
}

fn pool_sizes() -> Vec<usize> {
    let wide = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(4);
    if wide > 1 {
        vec![1, wide]
    } else {
        vec![1]
    }
}

fn with_pool<R>(threads: usize, f: impl FnOnce() -> R + Send) -> R
where
    R: Send,
{
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("pool builds")
        .install(f)
}

fn bench_convert(c: &mut Criterion) {
    let (tracks, _) = corpus(48);
    let params = csebb_params();
    let mut group = c.benchmark_group("convert_csebb_48_clips");
    for threads in pool_sizes() {
        group.bench_with_input(
            BenchmarkId::new("threads", threads),
            &threads,
            |b, &threads| {
                b.iter(|| {
                    with_pool(threads, || {
                        tuning::convert_corpus(&tracks, Method::Csebb, &params).unwrap()
                    })
                })
            },
        );
    }
    group.finish();
}

fn bench_operating_points(c: &mut Criterion) {
    let (tracks, gt) = corpus(48);
    let dets = tuning::convert_corpus(&tracks, Method::Csebb, &csebb_params()).unwrap();
    let candidates = tuning::corpus_candidates(&dets);
    let cfg = EvalConfig::default();
    let sebbs = match &dets {
        CorpusDetections::Sebbs(s) => s,
        CorpusDetections::Tracks(_) => unreachable!("csebb produces boxes"),
    };
    let mut group = c.benchmark_group("operating_points_full_sweep");
    for threads in pool_sizes() {
        group.bench_with_input(
            BenchmarkId::new("threads", threads),
            &threads,
            |b, &threads| {
                b.iter(|| {
                    with_pool(threads, || {
                        metrics::operating_points(
                            &metrics::DetectionInput::Sebbs(sebbs),
                            &gt,
                            &cfg,
                            &candidates,
                        )
                        .unwrap()
                    })
                })
            },
        );
    }
    group.finish();
}

fn bench_grid_search(c: &mut Criterion) {
    let (tracks, gt) = corpus(24);
    let grid = Grid {
        metric: Metric::Psds1,
        ..Grid::default()
    };
    let cfg = EvalConfig::default();
    let mut group = c.benchmark_group("grid_search_csebb_24_clips");
    group.sample_size(10).measurement_time(Duration::from_secs(8));
    for threads in pool_sizes() {
        group.bench_with_input(
            BenchmarkId::new("threads", threads),
            &threads,
            |b, &threads| {
                b.iter(|| {
                    with_pool(threads, || {
                        tuning::grid_search(&tracks, &gt, &grid, Method::Csebb, &cfg).unwrap()
                    })
                })
            },
        );
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_convert,
    bench_operating_points,
    bench_grid_search
);
criterion_main!(benches);

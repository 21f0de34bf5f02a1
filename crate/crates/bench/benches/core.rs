use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use dsmn::autodiff::{Adam, Graph, Tensor};
use dsmn::floorplan;
use dsmn::geometry::{count_intersections, oracle::brute_force_count};
use dsmn::models::{floorplan_example, Architecture, Example, Model, ModelConfig, Task, Vocab};
use dsmn::seed::child_rng;
use dsmn::shapes::sample_scene;
use dsmn::training::batch_loss;
use std::hint::black_box;

fn geometry(c: &mut Criterion) {
    let mut rng = child_rng(0, &[]);
    let scenes: Vec<_> = (0..64).map(|_| sample_scene(&mut rng).unwrap()).collect();
    c.bench_function("count_intersections x64", |b| {
        b.iter(|| scenes.iter().map(|s| count_intersections(black_box(s)).unwrap()).sum::<usize>())
    });
    c.bench_function("brute_force_count", |b| b.iter(|| brute_force_count(black_box(&scenes[0]), 1e-3)));
}

fn generation(c: &mut Criterion) {
    c.bench_function("floorplan generate_dataset 100", |b| b.iter(|| floorplan::generate_dataset(black_box(100), 7).unwrap()));
    let mut rng = child_rng(1, &[]);
    let s = floorplan::generate_sample(&mut rng).unwrap();
    c.bench_function("floorplan visual channels 32", |b| b.iter(|| s.visual(black_box(32)).unwrap()));
}

fn kernels(c: &mut Criterion) {
    let x = Tensor::full(&[32, 16, 8, 8], 0.5);
    let w = Tensor::full(&[16, 16, 3, 3], 0.1);
    c.bench_function("conv2d forward+backward 32x16x8x8", |b| {
        b.iter(|| {
            let mut g = Graph::new(false, 0);
            let xv = g.input(x.clone());
            let wv = g.input(w.clone());
            let y = g.conv2d(xv, wv, 1, 1).unwrap();
            let s = g.sum(y);
            g.backward(s).unwrap()
        })
    });
    let a = Tensor::full(&[64, 128], 0.5);
    let m = Tensor::full(&[128, 128], 0.25);
    c.bench_function("matmul forward+backward 64x128x128", |b| {
        b.iter(|| {
            let mut g = Graph::new(false, 0);
            let av = g.input(a.clone());
            let mv = g.input(m.clone());
            let y = g.matmul(av, mv).unwrap();
            let s = g.sum(y);
            g.backward(s).unwrap()
        })
    });
}

fn batch(n: usize, res: usize) -> Vec<Example> {
    let vocab = Vocab::floorplan();
    floorplan::generate_dataset(n, 3)
        .unwrap()
        .iter()
        .map(|s| floorplan_example(s, &vocab, Some(res)).unwrap())
        .collect()
}

fn models(c: &mut Criterion) {
    let ex = batch(32, 16);
    let refs: Vec<&Example> = ex.iter().collect();
    let mut group = c.benchmark_group("train step, batch 32");
    group.sample_size(10);
    for arch in [Architecture::Dsmn, Architecture::DmnPlus, Architecture::Lstm1] {
        let cfg = ModelConfig { dim: 32, res: 16, ..ModelConfig::new(Task::FloorPlan, arch) };
        let model = Model::new(cfg, 5).unwrap();
        let supervised = vec![arch == Architecture::Dsmn; refs.len()];
        group.bench_function(arch.name(), |b| {
            b.iter_batched(
                || {
                    let m = model.clone();
                    let opt = Adam::new(&m.store, 1e-3);
                    (m, opt)
                },
                |(mut m, mut opt)| {
                    let mut g = Graph::new(true, 9);
                    let f = m.forward(&mut g, &refs).unwrap();
                    let loss = batch_loss(&mut g, &f, &refs, &supervised, 0.5).unwrap();
                    let grads = g.backward(loss).unwrap().into_params();
                    opt.step(&mut m.store, &grads).unwrap();
                    m
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, geometry, generation, kernels, models);
criterion_main!(benches);

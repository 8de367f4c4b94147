use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use ngik_bench::desk_mlp_model;
use ngik_core::solvers::noise_batch;
use std::hint::black_box;

fn bench_network(c: &mut Criterion) {
    let (chain, model) = desk_mlp_model();
    let configs = ngik_bench::random_configs(&chain, 1, 9);
    let pose = ngik_core::fk(&chain, &configs[0]);

    c.bench_function("mlp_desk_single_solve", |b| {
        b.iter(|| black_box(model.solve_batch(black_box(&[pose]), &[])))
    });

    // Generator with 500 noise draws, the multi-solution protocol's batch.
    let (mut gnet, noise_dim) =
        ngik_core::neural::gan_preset(ngik_core::neural::Workspace::Small, chain.dof(), 0.1);
    gnet.init_uniform(5);
    let gan = ngik_core::neural::NeuralModel {
        net: gnet,
        normalizer: model.normalizer.clone(),
        kind: ngik_core::neural::ModelKind::Gan,
        noise_dim,
        chain_hash: chain.digest(),
        rng_seed: 5,
    };
    let noise = noise_batch(11, 500, noise_dim);
    let poses = vec![pose; 500];
    let mut group = c.benchmark_group("gan_desk");
    group.throughput(Throughput::Elements(500));
    group.bench_function("gan_desk_500_samples", |b| {
        b.iter(|| black_box(gan.solve_batch(black_box(&poses), &noise)))
    });
    group.finish();

    // Training-shaped forward/backward pass.
    let targets: Vec<ngik_core::Pose> = ngik_bench::random_configs(&chain, 64, 21)
        .iter()
        .map(|cfg| ngik_core::fk(&chain, cfg))
        .collect();
    let goals = ngik_core::goals::GoalSet::desk_default(chain.dof());
    c.bench_function("cycle_loss_batch64", |b| {
        b.iter(|| {
            black_box(ngik_core::training::cycle_loss(
                &chain,
                &model.net,
                &model.normalizer,
                black_box(&targets),
                &[],
                0,
                &goals,
            ))
        })
    });
}

criterion_group!(benches, bench_network);
criterion_main!(benches);

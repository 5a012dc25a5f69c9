use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use dopplerstyle_core::eval::{image_embedding, tsne, DetectorConfig, TsneConfig};
use dopplerstyle_core::neuralnet::{classifier_train, LabeledImage, TrainConfig};
use dopplerstyle_core::simulator::{activity_profile, simulate_clean, synthesize_return, SimConfig};
use dopplerstyle_core::spectra::stft;
use dopplerstyle_core::styletransfer::{gram, loss_and_gradient, StyleTarget, StyleTransferConfig};
use dopplerstyle_core::{ActivityId, FeatureNetwork};

fn signal_chain(c: &mut Criterion) {
    let sim = SimConfig::default();
    let profile = activity_profile(ActivityId::WalkBackAndForth, 1.0, 3).unwrap();
    let iq = synthesize_return(&profile, &sim.radar).unwrap();
    c.bench_function("synthesize_return", |b| b.iter(|| synthesize_return(black_box(&profile), &sim.radar)));
    c.bench_function("stft", |b| b.iter(|| stft(black_box(&iq), &sim.stft)));
    c.bench_function("simulate_clean", |b| b.iter(|| simulate_clean(ActivityId::WalkBackAndForth, 1.0, &sim, black_box(3))));
}

fn style_transfer(c: &mut Criterion) {
    let sim = SimConfig::default();
    let content = simulate_clean(ActivityId::WalkBackAndForth, 1.0, &sim, 1).unwrap();
    let style = simulate_clean(ActivityId::WalkToFall, 1.0, &sim, 2).unwrap();
    let net = FeatureNetwork::new(1);
    let cfg = StyleTransferConfig::default();
    let target = StyleTarget::new(&net, &content, &style, &cfg).unwrap();
    let x = content.to_f64();
    c.bench_function("loss_and_gradient_100x100", |b| {
        b.iter(|| loss_and_gradient(&net, &target, &cfg, black_box(&x)))
    });
    let (acts, _) = net.forward(&x, content.rows(), content.cols()).unwrap();
    let f = acts.get(cfg.content_layer);
    c.bench_function("gram_conv2_1", |b| b.iter(|| gram(black_box(f))));
}

fn classifier(c: &mut Criterion) {
    let sim = SimConfig::default();
    let set: Vec<LabeledImage> = ActivityId::ALL
        .iter()
        .flat_map(|&a| (0..2).map(move |k| (a, k)))
        .map(|(a, k)| LabeledImage { image: simulate_clean(a, 1.0, &sim, k).unwrap(), label: a.index() })
        .collect();
    let cfg = TrainConfig { epochs: 1, batch_size: 10, ..Default::default() };
    let mut g = c.benchmark_group("classifier");
    g.sample_size(10);
    g.bench_function("train_epoch_20_images", |b| b.iter(|| classifier_train(black_box(&set), &cfg)));
    g.finish();
}

fn evaluation(c: &mut Criterion) {
    let sim = SimConfig::default();
    let img = simulate_clean(ActivityId::WalkBackAndForth, 1.0, &sim, 1).unwrap();
    let det = DetectorConfig::default();
    c.bench_function("image_embedding", |b| b.iter(|| image_embedding(black_box(&img), &det)));
    let x: Vec<Vec<f64>> = (0..100).map(|i| (0..16).map(|j| ((i * 31 + j * 7) % 13) as f64 + (i / 50) as f64 * 20.0).collect()).collect();
    let cfg = TsneConfig { iterations: 100, perplexity: 10.0, ..Default::default() };
    let mut g = c.benchmark_group("tsne");
    g.sample_size(10);
    g.bench_function("tsne_100_points_100_iters", |b| b.iter(|| tsne(black_box(&x), &cfg)));
    g.finish();
}

criterion_group!(benches, signal_chain, style_transfer, classifier, evaluation);
criterion_main!(benches);

//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints one PASS/FAIL line; the process fails if any criterion fails.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p dopplerstyle-core --test acceptance -- 1 2 4`.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::Rng as _;
use rand_distr::StandardNormal;

use dopplerstyle_core::eval::{kmeans, silhouette, tsne, DetectorConfig, Domain, TsneConfig};
use dopplerstyle_core::harness::{
    build_datasets, curve_point, curves_csv, embed_bundle, mean_accuracy, summary_csv, sweep,
    BenchmarkConfig, CaseReport, CurveRow, DatasetBundle, Scheme,
};
use dopplerstyle_core::neuralnet::gradcheck::check_gradient;
use dopplerstyle_core::neuralnet::{Activations, Tap, Tensor};
use dopplerstyle_core::rng;
use dopplerstyle_core::simulator::{
    awgn_noise, random_env, simulate_clean, simulate_measured, synthesize_return, ActivityProfile, Ease, RangePath,
    ScattererTrack, SimConfig,
};
use dopplerstyle_core::spectra::stft;
use dopplerstyle_core::styletransfer::{
    content_loss, gram, loss_and_gradient, ncc, style_loss, total_loss, transfer, StyleTarget,
};
use dopplerstyle_core::{ActivityId, FeatureNetwork, ImageGrid, StyleTransferConfig};

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_image(rows: usize, cols: usize, seed: u64) -> ImageGrid {
    let mut r = rng::stream(seed, &[0xacce]);
    ImageGrid::new(rows, cols, (0..rows * cols).map(|_| r.random::<f32>()).collect()).unwrap()
}

fn gradient_correctness() -> Check {
    let net = FeatureNetwork::new(1);
    let parts = [("content", 1.0, 0.0), ("style", 0.0, 1.0), ("total", 1e-3, 1.0)];
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut kinks = 0;
    for i in 0..20u64 {
        let (c, s) = (random_image(16, 16, 3 * i), random_image(16, 16, 3 * i + 1));
        let x = random_image(16, 16, 3 * i + 2).to_f64();
        for &(name, alpha, beta) in &parts {
            let cfg = StyleTransferConfig { alpha, beta, ..Default::default() };
            let target = StyleTarget::new(&net, &c, &s, &cfg).map_err(|e| e.to_string())?;
            let (_, g) = loss_and_gradient(&net, &target, &cfg, &x).map_err(|e| e.to_string())?;
            let r = check_gradient(&g, &x, 1e-4, 1e-3, |p| loss_and_gradient(&net, &target, &cfg, p).unwrap().0.total);
            kinks += r.kinks;
            let w = worst.entry(name).or_insert(0.0);
            *w = w.max(r.max_relative_error);
        }
    }
    let max = worst.values().copied().fold(0.0, f64::max);
    ensure(max <= 1e-3, format!("20 instances, max relative error {worst:?}, {kinks} kink coordinates"))
}

fn single(v: f64) -> Activations {
    let mut taps = vec![Tensor::from_vec(1, 1, 1, vec![v]).unwrap()];
    for tap in &Tap::ALL[1..] {
        taps.push(Tensor::zeros(1, 1, tap.width()));
    }
    Activations::from_tensors(taps).unwrap()
}

fn loss_oracles() -> Check {
    let mut errs: Vec<f64> = Vec::new();
    let mut diff = |got: f64, want: f64| errs.push((got - want).abs());

    let g = gram(&Tensor::from_vec(1, 2, 2, vec![1.0, 0.0, 0.0, 2.0]).unwrap());
    for (got, want) in g.values().iter().zip([1.0, 0.0, 0.0, 4.0]) {
        diff(*got, want);
    }
    diff(gram(&Tensor::from_vec(1, 2, 1, vec![1.0, 2.0]).unwrap()).values()[0], 5.0);
    for v in gram(&Tensor::<f64>::zeros(3, 3, 4)).values() {
        diff(*v, 0.0);
    }

    let (l, gr) = content_loss(&single(3.0), &single(1.0), &[Tap::Conv1_1]).map_err(|e| e.to_string())?;
    diff(l, 4.0);
    diff(gr.get(Tap::Conv1_1).unwrap().data()[0], 4.0);
    let (l, gr) = content_loss(&single(0.4), &single(0.4), &[Tap::Conv1_1]).map_err(|e| e.to_string())?;
    diff(l, 0.0);
    diff(gr.get(Tap::Conv1_1).unwrap().data()[0], 0.0);

    let (l, _) = style_loss(&single(2f64.sqrt()), &single(0.0), &[(Tap::Conv1_1, 1.0)]).map_err(|e| e.to_string())?;
    diff(l, 4.0);
    let (l, _) = style_loss(&single(0.9), &single(0.9), &[(Tap::Conv1_1, 1.0)]).map_err(|e| e.to_string())?;
    diff(l, 0.0);

    diff(total_loss(2.0, 5.0, 1e-3, 1.0).unwrap().total, 5.002);
    diff(total_loss(2.0, 5.0, 0.0, 1.0).unwrap().total, 5.0);
    diff(total_loss(2.0, 5.0, 1e-3, 0.0).unwrap().total, 0.002);

    let max = errs.iter().copied().fold(0.0, f64::max);
    ensure(max <= 1e-9, format!("{} hand values, max abs error {max:e}", errs.len()))
}

fn convergence() -> Check {
    let sim = SimConfig::default();
    let net = FeatureNetwork::new(1);
    let cfg = StyleTransferConfig::default();
    let ci = StyleTransferConfig { iterations: 300, ..cfg.clone() };
    let mut full_ok = 0;
    let mut ci_ok = 0;
    let mut ratios = Vec::new();
    for (i, &activity) in ActivityId::ALL.iter().enumerate() {
        let seed = 100 + i as u64;
        let content = simulate_clean(activity, 1.0, &sim, seed).map_err(|e| e.to_string())?;
        let duration = dopplerstyle_core::simulator::activity_profile(activity, 1.0, seed + 50).unwrap().duration_s;
        let env = random_env(duration, seed);
        let style = simulate_measured(activity, 1.0, &sim, &env, seed + 50).map_err(|e| e.to_string())?;
        let pair = StyleTransferConfig { seed, ..cfg.clone() };
        let r = transfer(&content, &style, &net, &pair).map_err(|e| e.to_string())?;
        let ratio = r.trace.last().unwrap().total / r.trace[0].total;
        let r300 = transfer(&content, &style, &net, &StyleTransferConfig { seed, ..ci.clone() }).unwrap();
        let ratio300 = r300.trace.last().unwrap().total / r300.trace[0].total;
        full_ok += usize::from(ratio <= 0.10);
        ci_ok += usize::from(ratio300 <= 0.30);
        ratios.push(format!("{:.3}/{:.3}", ratio, ratio300));
    }
    let img = simulate_clean(ActivityId::WalkBackAndForth, 1.0, &sim, 7).map_err(|e| e.to_string())?;
    let own = transfer(&img, &img, &net, &cfg).map_err(|e| e.to_string())?;
    let self_ncc = ncc(&own.output, &img).map_err(|e| e.to_string())?;
    ensure(
        full_ok >= 9 && ci_ok >= 9 && self_ncc >= 0.95,
        format!(
            "final/initial total (2500/300 iters) [{}]; {full_ok}/10 <= 10%, {ci_ok}/10 <= 30%; self-style NCC {self_ncc:.4}",
            ratios.join(" ")
        ),
    )
}

fn doppler_physics() -> Check {
    let sim = SimConfig::default();
    let mut worst_bins = 0usize;
    for v in [0.5, 1.0, 2.0] {
        let duration = 1.5;
        let path = RangePath::new(vec![(0.0, 4.0), (duration, 4.0 - v * duration)], Ease::Linear).unwrap();
        let profile = ActivityProfile {
            activity: ActivityId::WalkBackAndForth,
            tracks: vec![ScattererTrack { path, offset_m: 0.0, oscillations: vec![], rcs_amp: 1.0 }],
            duration_s: duration,
        };
        let spec = stft(&synthesize_return(&profile, &sim.radar).unwrap(), &sim.stft).unwrap();
        let expect = spec.nearest_row(sim.radar.doppler_hz(v));
        for col in 0..spec.cols() {
            worst_bins = worst_bins.max(spec.column_argmax(col).abs_diff(expect));
        }
    }
    let mut worst_db = 0.0f64;
    for (i, snr) in [0.0, 10.0, 20.0].into_iter().enumerate() {
        let img = simulate_clean(ActivityId::ALL[i], 1.0, &sim, i as u64).unwrap();
        let noise = awgn_noise(&img, snr, 9 + i as u64).unwrap();
        let p_noise = noise.iter().map(|n| n * n).sum::<f64>() / noise.len() as f64;
        let measured = 10.0 * (img.mean_square() / p_noise).log10();
        worst_db = worst_db.max((measured - snr).abs());
    }
    ensure(
        worst_bins <= 1 && worst_db <= 0.5,
        format!("ridge off by at most {worst_bins} bin(s); AWGN SNR error at most {worst_db:.3} dB"),
    )
}

fn table_ordering(bundle: &DatasetBundle) -> Check {
    let e = embed_bundle(bundle, &Domain::ALL, &DetectorConfig::default(), &TsneConfig::default())
        .map_err(|e| e.to_string())?;
    let t = &e.table;
    let d = |dom| t.mean_of(dom).unwrap();
    let (styled, clean, awgn, patch) = (d(Domain::Styled), d(Domain::Clean), d(Domain::Awgn), d(Domain::Patch));
    let per_activity = ActivityId::ALL
        .iter()
        .filter(|&&a| t.get(a, Domain::Styled).unwrap() < t.get(a, Domain::Clean).unwrap())
        .count();
    ensure(
        styled < awgn && styled < patch && styled < clean && per_activity >= 8,
        format!(
            "mean distance styled {styled:.2}, clean {clean:.2}, awgn {awgn:.2}, patch {patch:.2}; \
             styled < clean for {per_activity}/10 activities"
        ),
    )
}

fn case1_floor(case1: &[CaseReport]) -> Check {
    let (m, sd) = mean_accuracy(case1);
    let accs: Vec<String> = case1.iter().map(|r| format!("{:.1}", r.accuracy)).collect();
    ensure(m >= 85.0, format!("TMTM accuracy {m:.2} ± {sd:.2} over seeds [{}]", accs.join(", ")))
}

fn curve_orderings(reports: &[CaseReport], case1: &[CaseReport]) -> Check {
    let base = mean_accuracy(case1).0;
    let pt = |scheme, domain, s| curve_point(reports, scheme, domain, s);
    let s_values = [20.0, 40.0, 60.0, 80.0, 100.0];

    let aug60 = pt(Scheme::Augmentation, Domain::Styled, 60.0);
    let a = aug60 - base >= 2.0;

    let mut b = true;
    let mut b_detail = Vec::new();
    for scheme in Scheme::ALL {
        for s in s_values {
            let (st, cl) = (pt(scheme, Domain::Styled, s), pt(scheme, Domain::Clean, s));
            b &= st >= cl;
            b_detail.push(format!("{}{}:{st:.1}/{cl:.1}", &scheme.name()[..3], s));
        }
    }

    let rep80 = pt(Scheme::Replacement, Domain::Styled, 80.0);
    let c = (rep80 - base).abs() <= 3.0;

    let clean: Vec<f64> = [0.0].iter().chain(&s_values).map(|&s| pt(Scheme::Replacement, Domain::Clean, s)).collect();
    let d = (0..clean.len()).all(|i| (i + 1..clean.len()).all(|j| clean[j] <= clean[i] + 2.0));

    let detail = format!(
        "(a) aug styled s60 {aug60:.2} vs case 1 {base:.2}: {}; (b) styled/clean {}: {}; \
         (c) rep styled s80 {rep80:.2}: {}; (d) rep clean curve {:?}: {}",
        pf(a),
        b_detail.join(" "),
        pf(b),
        pf(c),
        clean.iter().map(|v| format!("{v:.1}")).collect::<Vec<_>>(),
        pf(d)
    );
    ensure(a && b && c && d, detail)
}

fn pf(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn determinism_cfg() -> BenchmarkConfig {
    BenchmarkConfig { seeds: vec![0], s_values: vec![0.0, 60.0], ..BenchmarkConfig::ci() }
}

/// One CI-profile pipeline: bundle files, sweep reports and the embedding
/// table, all written under `dir`.
fn pipeline(dir: &Path) -> dopplerstyle_core::Result<()> {
    let cfg = determinism_cfg();
    let bundle = build_datasets(&cfg, 42)?;
    bundle.write(dir.join("bundle"))?;
    let reports = sweep(&bundle, &cfg)?;
    let rows: Vec<CurveRow> = reports.iter().map(CurveRow::from).collect();
    std::fs::write(dir.join("curves.csv"), curves_csv(&rows))?;
    std::fs::write(dir.join("summary.csv"), summary_csv(&rows))?;
    for (i, r) in reports.iter().enumerate() {
        std::fs::write(dir.join(format!("confusion_{i}.csv")), r.confusion.to_csv())?;
    }
    let tsne_cfg = TsneConfig { perplexity: 10.0, iterations: 300, ..Default::default() };
    let e = embed_bundle(&bundle, &Domain::ALL, &DetectorConfig::default(), &tsne_cfg)?;
    std::fs::write(dir.join("table.csv"), e.table.to_csv())?;
    Ok(())
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let key = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(key, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Check {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path()).map_err(|e| e.to_string())?;
    pipeline(b.path()).map_err(|e| e.to_string())?;
    let (fa, fb) = (files(a.path()), files(b.path()));
    let sgrm = fa.keys().filter(|k| k.ends_with(".sgrm")).count();
    let csv = fa.keys().filter(|k| k.ends_with(".csv")).count();
    let differing: Vec<&String> = fa.keys().filter(|k| fa.get(*k) != fb.get(*k)).collect();
    ensure(
        fa.len() == fb.len() && differing.is_empty() && sgrm > 0 && csv > 0,
        format!("{sgrm} SGRM and {csv} CSV files compared, {} differ", differing.len()),
    )
}

fn tsne_sanity() -> Check {
    let mut r = rng::stream(5, &[0x7e5e]);
    let mut x = Vec::new();
    for k in 0..2 {
        for _ in 0..60 {
            x.push((0..10).map(|_| 8.0 * k as f64 + r.sample::<f64, _>(StandardNormal)).collect::<Vec<f64>>());
        }
    }
    let res = tsne(&x, &TsneConfig::default()).map_err(|e| e.to_string())?;
    let nonneg = res.kl.iter().all(|&k| k >= 0.0);
    let worst_rise = res.kl[250..].windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let coords: Vec<Vec<f64>> = res.coords.iter().map(|c| c.to_vec()).collect();
    let km = kmeans(&coords, 2, 0, 100).map_err(|e| e.to_string())?;
    let sil = silhouette(&coords, &km.assignments).map_err(|e| e.to_string())?;
    ensure(
        nonneg && worst_rise <= 1e-6 && sil >= 0.5,
        format!(
            "KL >= 0 at all {} iterations: {nonneg}; largest rise after 250 {worst_rise:.2e}; silhouette {sil:.3}",
            res.kl.len()
        ),
    )
}

struct Desk {
    bundle: DatasetBundle,
    case1: Vec<CaseReport>,
    reports: Vec<CaseReport>,
}

fn desk() -> dopplerstyle_core::Result<Desk> {
    let cfg = BenchmarkConfig { domains: vec![Domain::Styled, Domain::Clean], ..BenchmarkConfig::desk() };
    let bundle = build_datasets(&cfg, 0)?;
    let reports = sweep(&bundle, &cfg)?;
    // s = 0 points are the measured-only baseline
    let case1: Vec<CaseReport> = reports
        .iter()
        .filter(|r| r.s == 0.0 && r.scheme == Scheme::Replacement && r.domain == Domain::Styled)
        .map(|r| CaseReport { case_id: 1, ..r.clone() })
        .collect();
    Ok(Desk { bundle, case1, reports })
}

fn get_desk(slot: &mut Option<Result<Desk, String>>) -> Result<&Desk, String> {
    slot.get_or_insert_with(|| desk().map_err(|e| e.to_string())).as_ref().map_err(Clone::clone)
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: u32| selected.is_empty() || selected.contains(&n);
    let mut desk_data: Option<Result<Desk, String>> = None;

    let names = [
        "gradient correctness",
        "loss-formula oracles",
        "style-transfer convergence",
        "Doppler physics and AWGN SNR",
        "centroid-distance ordering",
        "case 1 accuracy floor",
        "replacement/augmentation curve orderings",
        "pipeline determinism",
        "t-SNE sanity",
    ];
    let mut failed = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let n = i as u32 + 1;
        if !wanted(n) {
            continue;
        }
        let start = Instant::now();
        let outcome = match n {
            1 => gradient_correctness(),
            2 => loss_oracles(),
            3 => convergence(),
            4 => doppler_physics(),
            5 => get_desk(&mut desk_data).and_then(|d| table_ordering(&d.bundle)),
            6 => get_desk(&mut desk_data).and_then(|d| case1_floor(&d.case1)),
            7 => get_desk(&mut desk_data).and_then(|d| curve_orderings(&d.reports, &d.case1)),
            8 => determinism(),
            _ => tsne_sanity(),
        };
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n} ({name}): PASS [{secs:.1}s] {detail}"),
            Err(detail) => {
                println!("criterion {n} ({name}): FAIL [{secs:.1}s] {detail}");
                failed.push(n);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}

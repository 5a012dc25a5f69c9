use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dopplerstyle_core::eval::{DetectorConfig, Domain, TsneConfig};
use dopplerstyle_core::harness::{
    build_datasets, curves_csv, embed_bundle, history_csv, parse_curves_csv, report_file_stem, run_case,
    summary_csv, sweep, BenchmarkConfig, CaseReport, CurveRow, DatasetBundle, Scheme,
};
use dopplerstyle_core::neuralnet::FeatureNetwork;
use dopplerstyle_core::spectra::{load_sgram, save_sgram, write_pgm};
use dopplerstyle_core::styletransfer::{image_seed, transfer, Init, StyleTransferConfig};
use dopplerstyle_core::ActivityId;

mod plot;

#[derive(Parser)]
#[command(name = "dopplerstyle", version, about = "Micro-Doppler signature synthesis and style-transfer benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start from the reduced CI profile instead of the full defaults.
    #[arg(long)]
    ci_profile: bool,
    /// key=value config file applied on top of the profile.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra key=value overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn benchmark_config(&self) -> Result<BenchmarkConfig> {
        let mut cfg = if self.ci_profile { BenchmarkConfig::ci() } else { BenchmarkConfig::default() };
        if let Some(path) = &self.config {
            cfg.load_kv(path).with_context(|| format!("reading {}", path.display()))?;
        }
        for kv in &self.overrides {
            cfg.apply_kv(kv)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build every domain of a dataset bundle and write it as SGRM files.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Style-transfer one content image, or every .sgrm in a directory.
    Stylize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        content: PathBuf,
        #[arg(long)]
        style: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        alpha_beta_ratio: f64,
        /// Defaults to the profile's style_iterations.
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long, default_value = "white_noise")]
        init: Init,
        #[arg(long)]
        out: PathBuf,
        /// Loss trace CSV (a directory in batch mode).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Also write the output as a PGM raster.
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// SURF embeddings, t-SNE cloud and centroid-distance table of a bundle.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate the classifier over cases and s-sweeps.
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// Existing bundle; built from the master seed when absent.
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// Run only this case (1 to 5) instead of the full sweep.
        #[arg(long)]
        case: Option<u8>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge curve CSVs, summarise them and draw figure rasters.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long = "curves", required = true)]
        curves: Vec<PathBuf>,
        /// Bundle to draw sample signatures from.
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { common, out } => simulate(&common, &out),
        Command::Stylize { common, content, style, alpha_beta_ratio, iters, init, out, trace, pgm } => {
            let cfg = common.benchmark_config()?;
            let st = StyleTransferConfig {
                alpha: alpha_beta_ratio,
                beta: 1.0,
                iterations: iters.unwrap_or(cfg.style_iterations),
                init,
                seed: common.seed,
                ..Default::default()
            };
            let net = FeatureNetwork::with_input_scale(cfg.net_seed, cfg.input_scale);
            stylize(&net, &st, &content, &style, &out, trace.as_deref(), pgm.as_deref())
        }
        Command::Embed { common, bundle, out } => embed(&common, &bundle, &out),
        Command::Benchmark { common, bundle, case, out } => benchmark(&common, bundle.as_deref(), case, &out),
        Command::Report { common, curves, bundle, out } => report(&common, &curves, bundle.as_deref(), &out),
    }
}

fn simulate(common: &Common, out: &Path) -> Result<()> {
    let cfg = common.benchmark_config()?;
    let bundle = build_datasets(&cfg, common.seed)?;
    bundle.write(out)?;
    fs::write(out.join("config.kv"), cfg.to_kv())?;
    eprintln!("wrote {} images per domain to {}", bundle.items(Domain::Measured).len(), out.display());
    Ok(())
}

fn sgrm_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "sgrm"));
    files.sort();
    Ok(files)
}

fn stylize(
    net: &FeatureNetwork,
    st: &StyleTransferConfig,
    content: &Path,
    style: &Path,
    out: &Path,
    trace: Option<&Path>,
    pgm: Option<&Path>,
) -> Result<()> {
    let style_img = load_sgram(style)?;
    if !content.is_dir() {
        let result = transfer(&load_sgram(content)?, &style_img, net, st)?;
        save_sgram(&result.output, out)?;
        if let Some(t) = trace {
            fs::write(t, result.trace_csv())?;
        }
        if let Some(p) = pgm {
            write_pgm(&result.output, p)?;
        }
        let (first, last) = (result.trace[0].total, result.trace.last().unwrap().total);
        eprintln!("total loss {first:.4e} -> {last:.4e} ({:.2}%)", 100.0 * last / first);
        return Ok(());
    }
    fs::create_dir_all(out)?;
    if let Some(t) = trace {
        fs::create_dir_all(t)?;
    }
    if let Some(p) = pgm {
        fs::create_dir_all(p)?;
    }
    for (i, path) in sgrm_files(content)?.iter().enumerate() {
        let cfg = StyleTransferConfig { seed: image_seed(st.seed, i), ..st.clone() };
        let result = transfer(&load_sgram(path)?, &style_img, net, &cfg)?;
        let stem = path.file_stem().unwrap().to_string_lossy();
        save_sgram(&result.output, out.join(format!("{stem}.sgrm")))?;
        if let Some(t) = trace {
            fs::write(t.join(format!("{stem}.csv")), result.trace_csv())?;
        }
        if let Some(p) = pgm {
            write_pgm(&result.output, p.join(format!("{stem}.pgm")))?;
        }
        eprintln!("{stem}: done");
    }
    Ok(())
}

fn embed(common: &Common, bundle_dir: &Path, out: &Path) -> Result<()> {
    let cfg = common.benchmark_config()?;
    let bundle = DatasetBundle::read(bundle_dir)?;
    let tsne_cfg = TsneConfig {
        perplexity: cfg.perplexity,
        iterations: cfg.tsne_iterations,
        seed: common.seed,
        ..Default::default()
    };
    let domains: Vec<Domain> = Domain::ALL.into_iter().filter(|&d| !bundle.items(d).is_empty()).collect();
    let e = embed_bundle(&bundle, &domains, &DetectorConfig::default(), &tsne_cfg)?;
    fs::create_dir_all(out)?;

    let mut csv = String::from("id,activity,domain");
    for i in 0..e.features.first().map_or(0, Vec::len) {
        csv += &format!(",f{i}");
    }
    csv.push('\n');
    for (i, (p, f)) in e.cloud.points.iter().zip(&e.features).enumerate() {
        csv += &format!("{i},{},{}", p.activity.number(), p.domain);
        for v in f {
            csv += &format!(",{v}");
        }
        csv.push('\n');
    }
    fs::write(out.join("embeddings.csv"), csv)?;
    fs::write(out.join("cloud.csv"), e.cloud.to_csv())?;
    fs::write(out.join("table.csv"), e.table.to_csv())?;
    let kl: String = e.kl.iter().enumerate().map(|(i, k)| format!("{i},{k:e}\n")).collect();
    fs::write(out.join("kl.csv"), format!("iter,kl\n{kl}"))?;
    for a in ActivityId::ALL {
        write_pgm(&e.cloud.scatter_raster(a, 256)?, out.join(format!("scatter_a{:02}.pgm", a.number())))?;
    }
    eprint!("{}", e.table.to_csv());
    Ok(())
}

fn write_reports(reports: &[CaseReport], out: &Path) -> Result<()> {
    fs::create_dir_all(out.join("confusion"))?;
    fs::create_dir_all(out.join("history"))?;
    let rows: Vec<CurveRow> = reports.iter().map(CurveRow::from).collect();
    fs::write(out.join("curves.csv"), curves_csv(&rows))?;
    fs::write(out.join("summary.csv"), summary_csv(&rows))?;
    for r in reports {
        let stem = report_file_stem(r);
        fs::write(out.join("confusion").join(format!("{stem}.csv")), r.confusion.to_csv())?;
        fs::write(out.join("history").join(format!("{stem}.csv")), history_csv(&r.history))?;
    }
    fs::write(out.join("reports.json"), serde_json::to_string_pretty(reports)? + "\n")?;
    Ok(())
}

fn benchmark(common: &Common, bundle_dir: Option<&Path>, case: Option<u8>, out: &Path) -> Result<()> {
    let cfg = common.benchmark_config()?;
    let bundle = match bundle_dir {
        Some(dir) => DatasetBundle::read(dir)?,
        None => build_datasets(&cfg, common.seed)?,
    };
    let reports = match case {
        None => sweep(&bundle, &cfg)?,
        Some(1) => cfg
            .seeds
            .iter()
            .map(|&seed| run_case(1, &bundle, &cfg, Scheme::Replacement, 0.0, seed))
            .collect::<Result<_, _>>()?,
        Some(id @ 2..=5) => {
            let mut reports = Vec::new();
            for &scheme in &cfg.schemes {
                for &s in &cfg.s_values {
                    for &seed in &cfg.seeds {
                        reports.push(run_case(id, &bundle, &cfg, scheme, s, seed)?);
                    }
                }
            }
            reports
        }
        Some(other) => bail!("case must be 1 to 5, got {other}"),
    };
    write_reports(&reports, out)?;
    let rows: Vec<CurveRow> = reports.iter().map(CurveRow::from).collect();
    eprint!("{}", summary_csv(&rows));
    Ok(())
}

fn report(common: &Common, curves: &[PathBuf], bundle_dir: Option<&Path>, out: &Path) -> Result<()> {
    let mut rows = Vec::new();
    for path in curves {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        rows.extend(parse_curves_csv(&text)?);
    }
    rows.sort_by(|a, b| {
        (a.scheme, a.domain, a.seed).cmp(&(b.scheme, b.domain, b.seed)).then(a.s.total_cmp(&b.s))
    });
    rows.dedup_by(|a, b| (a.scheme, a.domain, a.seed, a.s.to_bits()) == (b.scheme, b.domain, b.seed, b.s.to_bits()));
    fs::create_dir_all(out)?;
    fs::write(out.join("curves.csv"), curves_csv(&rows))?;
    fs::write(out.join("summary.csv"), summary_csv(&rows))?;
    for scheme in Scheme::ALL {
        if let Some(img) = plot::accuracy_curves(&rows, scheme, 240) {
            write_pgm(&img, out.join(format!("curves_{scheme}.pgm")))?;
        }
    }
    if let Some(dir) = bundle_dir {
        let bundle = DatasetBundle::read(dir)?;
        let montage = plot::signature_montage(&bundle, common.seed)?;
        write_pgm(&montage, out.join("signatures.pgm"))?;
    }
    Ok(())
}

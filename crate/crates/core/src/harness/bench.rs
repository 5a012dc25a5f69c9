use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::compose::{compose_augmentation, compose_replacement};
use super::config::{BenchmarkConfig, Scheme};
use super::dataset::{DatasetBundle, Item};
use crate::error::{Error, Result};
use crate::eval::Domain;
use crate::neuralnet::{classifier_evaluate, classifier_train, ConfusionMatrix, LabeledImage, TrainConfig, TrainHistory};
use crate::rng::{self, tag};

/// Synthetic domain used by cases 2 to 5.
pub fn case_domain(case_id: u8) -> Result<Option<Domain>> {
    match case_id {
        1 => Ok(None),
        2 => Ok(Some(Domain::Styled)),
        3 => Ok(Some(Domain::Clean)),
        4 => Ok(Some(Domain::Awgn)),
        5 => Ok(Some(Domain::Patch)),
        other => Err(Error::invalid(format!("case id {other} outside 1..=5"))),
    }
}

pub fn domain_case(domain: Domain) -> u8 {
    match domain {
        Domain::Measured => 1,
        Domain::Styled => 2,
        Domain::Clean => 3,
        Domain::Awgn => 4,
        Domain::Patch => 5,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case_id: u8,
    pub scheme: Scheme,
    pub domain: Domain,
    pub s: f64,
    pub seed: u64,
    pub confusion: ConfusionMatrix,
    /// Overall test accuracy in percent.
    pub accuracy: f64,
    pub history: TrainHistory,
    pub train_size: usize,
}

/// Training set for a scheme, domain and share. Synthetic items are taken
/// only from training-split indices.
pub fn training_set(bundle: &DatasetBundle, scheme: Scheme, domain: Domain, s: f64) -> Result<Vec<Item>> {
    let measured = bundle.items(Domain::Measured);
    let meas_train: Vec<Item> = bundle.train.iter().map(|&i| measured[i].clone()).collect();
    if domain == Domain::Measured || s == 0.0 {
        return Ok(meas_train);
    }
    let synth_all = bundle.items(domain);
    if synth_all.len() != measured.len() {
        return Err(Error::invalid(format!("domain {domain} is missing from the bundle")));
    }
    let synth: Vec<Item> = bundle.train.iter().map(|&i| synth_all[i].clone()).collect();
    match scheme {
        Scheme::Replacement => compose_replacement(&meas_train, &synth, s),
        Scheme::Augmentation => compose_augmentation(&meas_train, &synth, s),
    }
}

fn labeled(items: &[Item]) -> Vec<LabeledImage> {
    items.iter().map(|i| LabeledImage { image: i.image.clone(), label: i.activity.index() }).collect()
}

fn train_config(cfg: &BenchmarkConfig, seed: u64) -> TrainConfig {
    TrainConfig {
        lr: cfg.lr,
        batch_size: cfg.batch_size,
        epochs: cfg.epochs,
        seed: rng::derive(seed, &[tag::TRAIN]),
        ..Default::default()
    }
}

fn run(
    bundle: &DatasetBundle,
    cfg: &BenchmarkConfig,
    case_id: u8,
    scheme: Scheme,
    domain: Domain,
    s: f64,
    seed: u64,
) -> Result<CaseReport> {
    let train = training_set(bundle, scheme, domain, s)?;
    let test_ids = bundle.test_ids();
    if train.iter().any(|i| i.domain == Domain::Measured && test_ids.contains(&i.index)) {
        return Err(Error::invalid("a measured test item leaked into training"));
    }
    let measured = bundle.items(Domain::Measured);
    let test: Vec<Item> = bundle.test.iter().map(|&i| measured[i].clone()).collect();
    let (model, history) = classifier_train(&labeled(&train), &train_config(cfg, seed))?;
    let eval = classifier_evaluate(&model, &labeled(&test))?;
    Ok(CaseReport {
        case_id,
        scheme,
        domain,
        s,
        seed,
        confusion: eval.confusion,
        accuracy: eval.accuracy,
        history,
        train_size: train.len(),
    })
}

/// Case 1 trains on measured data only; cases 2 to 5 mix in their domain
/// with `scheme` at share `s`. The test set is always the measured test
/// split.
pub fn run_case(
    case_id: u8,
    bundle: &DatasetBundle,
    cfg: &BenchmarkConfig,
    scheme: Scheme,
    s: f64,
    seed: u64,
) -> Result<CaseReport> {
    match case_domain(case_id)? {
        None => run(bundle, cfg, 1, scheme, Domain::Measured, 0.0, seed),
        Some(domain) => run(bundle, cfg, case_id, scheme, domain, s, seed),
    }
}

/// Every scheme x domain x s x seed in `cfg`. Points with `s = 0` train on
/// the measured split alone and are run once per seed.
pub fn sweep(bundle: &DatasetBundle, cfg: &BenchmarkConfig) -> Result<Vec<CaseReport>> {
    let mut jobs = Vec::new();
    for &scheme in &cfg.schemes {
        for &domain in &cfg.domains {
            for &s in &cfg.s_values {
                for &seed in &cfg.seeds {
                    jobs.push((scheme, domain, s, seed));
                }
            }
        }
    }
    let baseline: BTreeMap<u64, CaseReport> = cfg
        .seeds
        .par_iter()
        .map(|&seed| Ok((seed, run_case(1, bundle, cfg, Scheme::Replacement, 0.0, seed)?)))
        .collect::<Result<_>>()?;
    jobs.par_iter()
        .map(|&(scheme, domain, s, seed)| {
            if s == 0.0 {
                let base = &baseline[&seed];
                return Ok(CaseReport { case_id: domain_case(domain), scheme, domain, ..base.clone() });
            }
            run(bundle, cfg, domain_case(domain), scheme, domain, s, seed)
        })
        .collect()
}

/// Mean and population standard deviation of the accuracies matching a
/// filter.
pub fn mean_accuracy<'a>(reports: impl IntoIterator<Item = &'a CaseReport>) -> (f64, f64) {
    let acc: Vec<f64> = reports.into_iter().map(|r| r.accuracy).collect();
    if acc.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = acc.iter().sum::<f64>() / acc.len() as f64;
    let v = acc.iter().map(|a| (a - m).powi(2)).sum::<f64>() / acc.len() as f64;
    (m, v.sqrt())
}

/// 3-seed mean accuracy of one curve point.
pub fn curve_point(reports: &[CaseReport], scheme: Scheme, domain: Domain, s: f64) -> f64 {
    mean_accuracy(reports.iter().filter(|r| r.scheme == scheme && r.domain == domain && r.s == s)).0
}

/// One line of a curve CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub scheme: Scheme,
    pub domain: Domain,
    pub s: f64,
    pub seed: u64,
    pub accuracy: f64,
}

impl From<&CaseReport> for CurveRow {
    fn from(r: &CaseReport) -> Self {
        Self { scheme: r.scheme, domain: r.domain, s: r.s, seed: r.seed, accuracy: r.accuracy }
    }
}

const CURVE_HEADER: &str = "scheme,domain,s,seed,accuracy";

/// `scheme,domain,s,seed,accuracy` rows.
pub fn curves_csv<'a>(rows: impl IntoIterator<Item = &'a CurveRow>) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{:.4}", r.scheme, r.domain, r.s, r.seed, r.accuracy).unwrap();
    }
    out
}

pub fn parse_curves_csv(text: &str) -> Result<Vec<CurveRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(CURVE_HEADER) {
        return Err(Error::invalid(format!("curve CSV must start with {CURVE_HEADER:?}")));
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let num = |i: usize| -> Result<f64> {
                f[i].parse().map_err(|_| Error::invalid(format!("bad number {:?} in {line:?}", f[i])))
            };
            if f.len() != 5 {
                return Err(Error::invalid(format!("expected 5 fields in {line:?}")));
            }
            Ok(CurveRow {
                scheme: Scheme::parse(f[0])?,
                domain: Domain::parse(f[1])?,
                s: num(2)?,
                seed: f[3].parse().map_err(|_| Error::invalid(format!("bad seed in {line:?}")))?,
                accuracy: num(4)?,
            })
        })
        .collect()
}

/// Seed mean and population standard deviation per (scheme, domain, s).
pub fn summary_csv(rows: &[CurveRow]) -> String {
    let mut groups: BTreeMap<(Scheme, Domain, u64), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.scheme, r.domain, r.s.to_bits())).or_default().push(r.accuracy);
    }
    let mut keys: Vec<_> = groups.keys().copied().collect();
    keys.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(f64::from_bits(a.2).total_cmp(&f64::from_bits(b.2))));
    let mut out = String::from("scheme,domain,s,mean,std,runs\n");
    for k in keys {
        let acc = &groups[&k];
        let m = acc.iter().sum::<f64>() / acc.len() as f64;
        let sd = (acc.iter().map(|a| (a - m).powi(2)).sum::<f64>() / acc.len() as f64).sqrt();
        writeln!(out, "{},{},{},{m:.4},{sd:.4},{}", k.0, k.1, f64::from_bits(k.2), acc.len()).unwrap();
    }
    out
}

pub fn report_file_stem(r: &CaseReport) -> String {
    format!("case{}_{}_{}_s{}_seed{}", r.case_id, r.scheme, r.domain, r.s, r.seed)
}

/// Training curve as `epoch,loss,accuracy`.
pub fn history_csv(h: &TrainHistory) -> String {
    let mut out = String::from("epoch,loss,accuracy\n");
    for (e, (l, a)) in h.loss.iter().zip(&h.accuracy).enumerate() {
        writeln!(out, "{},{l:.6},{a:.6}", e + 1).unwrap();
    }
    out
}

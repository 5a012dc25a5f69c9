use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::BenchmarkConfig;
use crate::error::{Error, Result};
use crate::eval::Domain;
use crate::neuralnet::FeatureNetwork;
use crate::rng::{self, tag};
use crate::simulator::{
    activity_profile, add_awgn_image, apply_patch_noise, fit_patch_noise, random_env, simulate_clean, simulate_measured, ActivityId,
    SimConfig,
};
use crate::spectra::{load_sgram, save_sgram, ImageGrid};
use crate::styletransfer::{batch_stylize, Init, StyleTransferConfig};

/// One image of the benchmark. `index` is shared by the items generated
/// from the same kinematic draw in every domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub index: usize,
    pub activity: ActivityId,
    pub domain: Domain,
    pub seed: u64,
    pub image: ImageGrid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub activity_id: usize,
    pub domain: Domain,
    pub seed: u64,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub master_seed: u64,
    pub per_activity: usize,
    /// Measured indices in the training split, ascending.
    pub train: Vec<usize>,
    /// Measured index used as style exemplar, per activity number.
    pub exemplars: BTreeMap<usize, usize>,
    pub entries: Vec<ManifestEntry>,
}

/// Every domain's images plus the measured train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub master_seed: u64,
    pub per_activity: usize,
    pub domains: BTreeMap<Domain, Vec<Item>>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub exemplars: BTreeMap<ActivityId, usize>,
}

/// Seed and subject scale of the `k`-th recording of `activity`.
fn draw(master: u64, activity: ActivityId, k: usize) -> (u64, f64) {
    let seed = rng::derive(master, &[tag::IMAGE, activity.number() as u64, k as u64]);
    let mut r = rng::stream(master, &[tag::SUBJECT, activity.number() as u64, k as u64]);
    (seed, r.random_range(0.8..=1.2))
}

/// Stratified split of `labels` into train and test positions: per
/// activity, `round(fraction * count)` items (at least one, at most
/// `count - 1`) go to training.
pub fn split(labels: &[ActivityId], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("split fraction {fraction} outside (0, 1)")));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for activity in ActivityId::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == activity).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 2 {
            return Err(Error::CannotStratify(activity.number()));
        }
        let mut r = rng::stream(seed, &[tag::SPLIT, activity.number() as u64]);
        idx.shuffle(&mut r);
        let n_train = ((fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn build_datasets(cfg: &BenchmarkConfig, master_seed: u64) -> Result<DatasetBundle> {
    cfg.validate()?;
    let sim = SimConfig::default();
    let draws: Vec<(usize, ActivityId, u64, f64)> = ActivityId::ALL
        .iter()
        .flat_map(|&a| (0..cfg.per_activity).map(move |k| (a, k)))
        .enumerate()
        .map(|(index, (a, k))| {
            let (seed, scale) = draw(master_seed, a, k);
            (index, a, seed, scale)
        })
        .collect();

    let pair: Vec<(Item, Item)> = draws
        .par_iter()
        .map(|&(index, activity, seed, scale)| {
            let duration = activity_profile(activity, scale, seed)?.duration_s;
            let env = random_env(duration, rng::derive(seed, &[tag::ENV]));
            let measured = simulate_measured(activity, scale, &sim, &env, seed)?;
            let clean = simulate_clean(activity, scale, &sim, seed)?;
            let item = |domain, image| Item { index, activity, domain, seed, image };
            Ok((item(Domain::Measured, measured), item(Domain::Clean, clean)))
        })
        .collect::<Result<_>>()?;
    let (measured, clean): (Vec<Item>, Vec<Item>) = pair.into_iter().unzip();

    let labels: Vec<ActivityId> = measured.iter().map(|i| i.activity).collect();
    let (train, test) = split(&labels, cfg.split, rng::derive(master_seed, &[tag::SPLIT]))?;

    let awgn = clean
        .par_iter()
        .map(|c| {
            let image = add_awgn_image(&c.image, cfg.awgn_snr_db, c.seed)?;
            Ok(Item { domain: Domain::Awgn, image, ..c.clone() })
        })
        .collect::<Result<Vec<_>>>()?;

    let train_measured: Vec<ImageGrid> = train.iter().map(|&i| measured[i].image.clone()).collect();
    let model = fit_patch_noise(&train_measured, cfg.patch_quantile, cfg.patch_tile)?;
    let patch = clean
        .par_iter()
        .map(|c| {
            let image = apply_patch_noise(&c.image, &model, cfg.patch_gain, c.seed)?;
            Ok(Item { domain: Domain::Patch, image, ..c.clone() })
        })
        .collect::<Result<Vec<_>>>()?;

    // one exemplar per activity, drawn from the measured training split
    let mut exemplars = BTreeMap::new();
    for activity in ActivityId::ALL {
        let pool: Vec<usize> = train.iter().copied().filter(|&i| measured[i].activity == activity).collect();
        let mut r = rng::stream(master_seed, &[tag::STYLE, activity.number() as u64]);
        exemplars.insert(activity, pool[r.random_range(0..pool.len())]);
    }
    let style_images: BTreeMap<ActivityId, ImageGrid> =
        exemplars.iter().map(|(&a, &i)| (a, measured[i].image.clone())).collect();
    let net = FeatureNetwork::with_input_scale(cfg.net_seed, cfg.input_scale);
    let st = StyleTransferConfig {
        iterations: cfg.style_iterations,
        init: Init::WhiteNoise,
        seed: rng::derive(master_seed, &[tag::STYLE]),
        ..Default::default()
    };
    let content: Vec<(ActivityId, ImageGrid)> = clean.iter().map(|c| (c.activity, c.image.clone())).collect();
    let styled = batch_stylize(&content, &style_images, &net, &st)?
        .into_iter()
        .zip(&clean)
        .map(|((_, result), c)| Item { domain: Domain::Styled, image: result.output, ..c.clone() })
        .collect();

    let domains = BTreeMap::from([
        (Domain::Measured, measured),
        (Domain::Clean, clean),
        (Domain::Awgn, awgn),
        (Domain::Patch, patch),
        (Domain::Styled, styled),
    ]);
    Ok(DatasetBundle { master_seed, per_activity: cfg.per_activity, domains, train, test, exemplars })
}

fn file_name(item: &Item) -> String {
    format!("{}/a{:02}_{:04}.sgrm", item.domain, item.activity.number(), item.index)
}

impl DatasetBundle {
    pub fn items(&self, domain: Domain) -> &[Item] {
        self.domains.get(&domain).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Ids of measured items that must never be trained on.
    pub fn test_ids(&self) -> BTreeSet<usize> {
        self.test.iter().copied().collect()
    }

    pub fn manifest(&self) -> Manifest {
        let entries = self
            .domains
            .values()
            .flatten()
            .map(|it| ManifestEntry {
                path: file_name(it),
                activity_id: it.activity.number(),
                domain: it.domain,
                seed: it.seed,
                index: it.index,
            })
            .collect();
        Manifest {
            master_seed: self.master_seed,
            per_activity: self.per_activity,
            train: self.train.clone(),
            exemplars: self.exemplars.iter().map(|(a, &i)| (a.number(), i)).collect(),
            entries,
        }
    }

    /// Write every image as SGRM plus `manifest.json` under `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        for d in self.domains.keys() {
            std::fs::create_dir_all(dir.join(d.name()))?;
        }
        for it in self.domains.values().flatten() {
            save_sgram(&it.image, dir.join(file_name(it)))?;
        }
        let json = serde_json::to_string_pretty(&self.manifest())?;
        std::fs::write(dir.join("manifest.json"), json + "\n")?;
        Ok(())
    }

    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
        let mut domains: BTreeMap<Domain, Vec<Item>> = BTreeMap::new();
        for e in &manifest.entries {
            let item = Item {
                index: e.index,
                activity: ActivityId::from_number(e.activity_id)?,
                domain: e.domain,
                seed: e.seed,
                image: load_sgram(dir.join(&e.path))?,
            };
            domains.entry(e.domain).or_default().push(item);
        }
        for items in domains.values_mut() {
            items.sort_by_key(|i| i.index);
        }
        let n = manifest.per_activity * ActivityId::ALL.len();
        let train_set: BTreeSet<usize> = manifest.train.iter().copied().collect();
        let test = (0..n).filter(|i| !train_set.contains(i)).collect();
        let exemplars = manifest
            .exemplars
            .iter()
            .map(|(&a, &i)| Ok((ActivityId::from_number(a)?, i)))
            .collect::<Result<_>>()?;
        Ok(Self {
            master_seed: manifest.master_seed,
            per_activity: manifest.per_activity,
            domains,
            train: manifest.train,
            test,
            exemplars,
        })
    }
}

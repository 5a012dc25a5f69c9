use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Domain;

/// How synthetic data enters the training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Swap measured items for synthetic ones, keeping the size.
    Replacement,
    /// Append synthetic items to the measured ones.
    Augmentation,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::Replacement, Scheme::Augmentation];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Replacement => "replacement",
            Scheme::Augmentation => "augmentation",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    /// Images per activity in every domain.
    pub per_activity: usize,
    /// Fraction of each activity's measured items used for training.
    pub split: f64,
    /// Synthetic share in percent.
    pub s_values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    /// Synthetic domains swept.
    pub domains: Vec<Domain>,
    /// Classifier seeds; each run's split and data are fixed by the master seed.
    pub seeds: Vec<u64>,
    pub style_iterations: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub awgn_snr_db: f64,
    pub patch_quantile: f64,
    pub patch_tile: (usize, usize),
    pub patch_gain: f64,
    pub net_seed: u64,
    pub input_scale: f64,
    pub perplexity: f64,
    pub tsne_iterations: usize,
    pub ci_profile: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            per_activity: 60,
            split: 0.5,
            s_values: vec![0.0, 20.0, 40.0, 60.0, 80.0, 100.0],
            schemes: Scheme::ALL.to_vec(),
            domains: vec![Domain::Styled, Domain::Clean, Domain::Awgn, Domain::Patch],
            seeds: vec![0, 1, 2],
            style_iterations: 2500,
            epochs: 100,
            batch_size: 64,
            lr: 0.001,
            awgn_snr_db: 10.0,
            patch_quantile: 0.25,
            patch_tile: (10, 10),
            patch_gain: 1.0,
            net_seed: 1,
            input_scale: crate::neuralnet::DEFAULT_INPUT_SCALE,
            perplexity: 30.0,
            tsne_iterations: 1000,
            ci_profile: false,
        }
    }
}

impl BenchmarkConfig {
    /// Reduced counts and iterations for continuous integration.
    pub fn ci() -> Self {
        Self { per_activity: 6, style_iterations: 300, epochs: 20, ci_profile: true, ..Self::default() }
    }

    /// Desk-scale profile: enough images per activity for stable orderings
    /// while stylizing at the CI iteration count.
    pub fn desk() -> Self {
        Self { per_activity: 20, style_iterations: 300, epochs: 80, batch_size: 16, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.per_activity < 2 {
            return bad(format!("per_activity = {} must be >= 2", self.per_activity));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return bad(format!("split = {} must be in (0, 1)", self.split));
        }
        if self.s_values.iter().any(|s| !(0.0..=100.0).contains(s)) {
            return bad("s_values must lie in [0, 100]".into());
        }
        if self.seeds.is_empty() || self.schemes.is_empty() {
            return bad("seeds and schemes must be non-empty".into());
        }
        if self.domains.contains(&Domain::Measured) {
            return bad("measured is not a synthetic domain".into());
        }
        if self.style_iterations == 0 || self.epochs == 0 || self.batch_size == 0 {
            return bad("style_iterations, epochs and batch_size must be >= 1".into());
        }
        if !(self.patch_quantile > 0.0 && self.patch_quantile < 1.0) || !(0.0..=1.0).contains(&self.patch_gain) {
            return bad("patch_quantile must be in (0, 1) and patch_gain in [0, 1]".into());
        }
        if !(self.input_scale > 0.0 && self.lr > 0.0 && self.perplexity > 0.0) {
            return bad("input_scale, lr and perplexity must be > 0".into());
        }
        Ok(())
    }

    /// Apply one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim().parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
        }
        fn list<T>(v: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
            v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect()
        }
        let v = value.trim();
        match key.trim() {
            "per_activity" => self.per_activity = num(key, v)?,
            "split" => self.split = num(key, v)?,
            "s_values" => self.s_values = list(v, |s| num(key, s))?,
            "schemes" => self.schemes = list(v, Scheme::parse)?,
            "domains" => self.domains = list(v, |s| Domain::parse(s).map_err(|e| Error::Config(e.to_string())))?,
            "seeds" => self.seeds = list(v, |s| num(key, s))?,
            "style_iterations" => self.style_iterations = num(key, v)?,
            "epochs" => self.epochs = num(key, v)?,
            "batch_size" => self.batch_size = num(key, v)?,
            "lr" => self.lr = num(key, v)?,
            "awgn_snr_db" => self.awgn_snr_db = num(key, v)?,
            "patch_quantile" => self.patch_quantile = num(key, v)?,
            "patch_tile_rows" => self.patch_tile.0 = num(key, v)?,
            "patch_tile_cols" => self.patch_tile.1 = num(key, v)?,
            "patch_gain" => self.patch_gain = num(key, v)?,
            "net_seed" => self.net_seed = num(key, v)?,
            "input_scale" => self.input_scale = num(key, v)?,
            "perplexity" => self.perplexity = num(key, v)?,
            "tsne_iterations" => self.tsne_iterations = num(key, v)?,
            "ci_profile" => self.ci_profile = num(key, v)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Parse `key=value` lines on top of `self`; `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {line:?}", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn load_kv(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.apply_kv(&std::fs::read_to_string(path)?)
    }

    pub fn to_kv(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        format!(
            "per_activity={}\nsplit={}\ns_values={}\nschemes={}\ndomains={}\nseeds={}\nstyle_iterations={}\nepochs={}\n\
             batch_size={}\nlr={}\nawgn_snr_db={}\npatch_quantile={}\npatch_tile_rows={}\npatch_tile_cols={}\n\
             patch_gain={}\nnet_seed={}\ninput_scale={}\nperplexity={}\ntsne_iterations={}\nci_profile={}\n",
            self.per_activity,
            self.split,
            join(self.s_values.iter().map(|s| s.to_string()).collect()),
            join(self.schemes.iter().map(|s| s.to_string()).collect()),
            join(self.domains.iter().map(|s| s.to_string()).collect()),
            join(self.seeds.iter().map(|s| s.to_string()).collect()),
            self.style_iterations,
            self.epochs,
            self.batch_size,
            self.lr,
            self.awgn_snr_db,
            self.patch_quantile,
            self.patch_tile.0,
            self.patch_tile.1,
            self.patch_gain,
            self.net_seed,
            self.input_scale,
            self.perplexity,
            self.tsne_iterations,
            self.ci_profile,
        )
    }
}

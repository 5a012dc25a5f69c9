//! Benchmark pipeline: dataset bundles, training compositions, the five
//! cases, s-sweeps and report files.

mod bench;
mod compose;
mod config;
mod dataset;
mod embed;

pub use bench::{
    case_domain, curve_point, curves_csv, domain_case, history_csv, mean_accuracy, parse_curves_csv, report_file_stem,
    run_case, summary_csv, sweep, training_set, CaseReport, CurveRow,
};
pub use compose::{compose_augmentation, compose_replacement, synthetic_count};
pub use config::{BenchmarkConfig, Scheme};
pub use dataset::{build_datasets, split, DatasetBundle, Item, Manifest, ManifestEntry};
pub use embed::{embed_bundle, standardize, BundleEmbedding};

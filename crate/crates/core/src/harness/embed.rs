use rayon::prelude::*;

use super::dataset::DatasetBundle;
use crate::error::Result;
use crate::eval::{
    centroid_distance_table, image_embedding, tsne, CloudPoint, DetectorConfig, DistanceTable, Domain,
    EmbeddingCloud, TsneConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BundleEmbedding {
    /// 128-d pooled descriptor per image, in cloud order.
    pub features: Vec<Vec<f64>>,
    pub cloud: EmbeddingCloud,
    pub table: DistanceTable,
    /// KL divergence per t-SNE iteration.
    pub kl: Vec<f64>,
}

/// Z-scores each column over the rows; constant columns become zero.
pub fn standardize(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len() as f64;
    let dims = x.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; dims];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; dims];
    for row in x {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m).powi(2) / n;
        }
    }
    x.iter()
        .map(|row| {
            row.iter()
                .zip(mean.iter().zip(&var))
                .map(|(v, (m, s))| if *s > 1e-24 { (v - m) / s.sqrt() } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Describes every image of `domains`, embeds the z-scored descriptors
/// jointly with t-SNE and tabulates centroid distances to the measured
/// domain.
pub fn embed_bundle(
    bundle: &DatasetBundle,
    domains: &[Domain],
    detector: &DetectorConfig,
    tsne_cfg: &TsneConfig,
) -> Result<BundleEmbedding> {
    let items: Vec<_> = domains.iter().flat_map(|&d| bundle.items(d)).collect();
    let features: Vec<Vec<f64>> = items.par_iter().map(|it| image_embedding(&it.image, detector)).collect();
    let result = tsne(&standardize(&features), tsne_cfg)?;
    let points = items
        .iter()
        .zip(&result.coords)
        .map(|(it, &xy)| CloudPoint { xy, activity: it.activity, domain: it.domain })
        .collect();
    let cloud = EmbeddingCloud { points };
    let table = centroid_distance_table(&cloud)?;
    Ok(BundleEmbedding { features, cloud, table, kl: result.kl })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_columns() {
        let x = vec![vec![1.0, 5.0, 2.0], vec![3.0, 5.0, 4.0], vec![5.0, 5.0, 9.0]];
        let z = standardize(&x);
        for c in 0..3 {
            let col: Vec<f64> = z.iter().map(|r| r[c]).collect();
            let m = col.iter().sum::<f64>() / 3.0;
            let v = col.iter().map(|a| (a - m).powi(2)).sum::<f64>() / 3.0;
            assert!(m.abs() < 1e-12);
            assert!(if c == 1 { v == 0.0 } else { (v - 1.0).abs() < 1e-12 });
        }
        assert!((z[0][0] + 1.224744871391589).abs() < 1e-12);
    }
}

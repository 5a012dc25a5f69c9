use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after seeding and after each Lloyd
    /// iteration.
    pub wcss: Vec<f64>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(k, c)| (k, dist2(p, c)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// k-means++ seeding followed by Lloyd iterations until the assignment
/// stops changing or `max_iters` is reached. An emptied cluster keeps its
/// previous centroid.
pub fn kmeans(x: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<KMeansResult> {
    if k == 0 || k > x.len() {
        return Err(Error::invalid(format!("k = {k} must be in 1..={}", x.len())));
    }
    let mut r = rng::stream(seed, &[0x6b6d]);
    let mut centroids = vec![x[r.random_range(0..x.len())].clone()];
    while centroids.len() < k {
        let d: Vec<f64> = x.iter().map(|p| nearest(p, &centroids).1).collect();
        let total: f64 = d.iter().sum();
        let next = if total == 0.0 {
            r.random_range(0..x.len())
        } else {
            let mut u = r.random::<f64>() * total;
            let mut pick = x.len() - 1;
            for (i, di) in d.iter().enumerate() {
                if u < *di {
                    pick = i;
                    break;
                }
                u -= di;
            }
            pick
        };
        centroids.push(x[next].clone());
    }
    let assign = |centroids: &[Vec<f64>]| -> (Vec<usize>, f64) {
        let mut wcss = 0.0;
        let a = x
            .iter()
            .map(|p| {
                let (k, d) = nearest(p, centroids);
                wcss += d;
                k
            })
            .collect();
        (a, wcss)
    };
    let (mut assignments, w0) = assign(&centroids);
    let mut wcss = vec![w0];
    for _ in 0..max_iters {
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = x.iter().zip(&assignments).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            if members.is_empty() {
                continue;
            }
            for (d, v) in centroid.iter_mut().enumerate() {
                *v = members.iter().map(|m| m[d]).sum::<f64>() / members.len() as f64;
            }
        }
        let (next, w) = assign(&centroids);
        wcss.push(w);
        if next == assignments {
            break;
        }
        assignments = next;
    }
    Ok(KMeansResult { assignments, centroids, wcss })
}

/// Mean silhouette coefficient of a labelled point set.
pub fn silhouette(x: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if x.len() != labels.len() || x.len() < 2 {
        return Err(Error::invalid("silhouette needs at least two labelled points"));
    }
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..x.len() {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..x.len() {
            if i != j {
                sums[labels[j]] += dist2(&x[i], &x[j]).sqrt();
                counts[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if counts[own] == 0 {
            continue; // singleton clusters score zero
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            total += (b - a) / a.max(b);
        }
    }
    Ok(total / x.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_centroid_is_the_mean() {
        let x = vec![vec![0.0, 0.0], vec![2.0, 0.0]];
        let r = kmeans(&x, 1, 0, 300).unwrap();
        assert_eq!(r.centroids[0], vec![1.0, 0.0]);
        assert!(kmeans(&x, 3, 0, 300).is_err());
    }

    #[test]
    fn separated_pairs_split_cleanly() {
        let x = vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![10.0, 10.0], vec![10.0, 10.1]];
        for seed in 0..10 {
            let r = kmeans(&x, 2, seed, 300).unwrap();
            assert_eq!(r.assignments[0], r.assignments[1]);
            assert_eq!(r.assignments[2], r.assignments[3]);
            assert_ne!(r.assignments[0], r.assignments[2]);
        }
    }

    #[test]
    fn wcss_never_increases_and_more_clusters_help() {
        use rand::Rng;
        let mut r = rng::stream(1, &[2]);
        let x: Vec<Vec<f64>> = (0..200).map(|_| vec![r.random::<f64>() * 10.0, r.random::<f64>()]).collect();
        let k1 = kmeans(&x, 1, 4, 300).unwrap();
        let k2 = kmeans(&x, 2, 4, 300).unwrap();
        for w in k2.wcss.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        assert!(k2.wcss.last().unwrap() <= k1.wcss.last().unwrap());
    }

    #[test]
    fn silhouette_of_separated_clusters() {
        let x = vec![vec![0.0], vec![0.1], vec![5.0], vec![5.1]];
        let s = silhouette(&x, &[0, 0, 1, 1]).unwrap();
        assert!(s > 0.95);
        assert!(silhouette(&x, &[0, 1, 0, 1]).unwrap() < 0.0);
    }
}

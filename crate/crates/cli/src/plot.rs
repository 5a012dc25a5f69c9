//! Small grayscale rasters for reports.

use std::collections::BTreeMap;

use anyhow::Result;
use dopplerstyle_core::eval::Domain;
use dopplerstyle_core::harness::{CurveRow, DatasetBundle, Scheme};
use dopplerstyle_core::spectra::ImageGrid;
use dopplerstyle_core::ActivityId;

fn shade(domain: Domain) -> f32 {
    match domain {
        Domain::Styled => 0.0,
        Domain::Clean => 0.35,
        Domain::Awgn => 0.55,
        Domain::Patch => 0.75,
        Domain::Measured => 0.2,
    }
}

fn line(px: &mut [f32], side: usize, (x0, y0): (f64, f64), (x1, y1): (f64, f64), v: f32) {
    let steps = ((x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize).max(1);
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let (x, y) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let (c, r) = (x.round() as isize, y.round() as isize);
        for (dr, dc) in [(0, 0), (1, 0), (0, 1)] {
            let (rr, cc) = (r + dr, c + dc);
            if rr >= 0 && cc >= 0 && (rr as usize) < side && (cc as usize) < side {
                px[rr as usize * side + cc as usize] = v;
            }
        }
    }
}

/// Seed-mean accuracy against s, one polyline per domain; the y axis spans
/// the observed accuracy range. `None` when the scheme has no rows.
pub fn accuracy_curves(rows: &[CurveRow], scheme: Scheme, side: usize) -> Option<ImageGrid> {
    let mut means: BTreeMap<Domain, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.scheme == scheme) {
        means.entry(r.domain).or_default().entry(r.s.to_bits()).or_default().push(r.accuracy);
    }
    if means.is_empty() {
        return None;
    }
    let curves: BTreeMap<Domain, Vec<(f64, f64)>> = means
        .into_iter()
        .map(|(d, pts)| {
            let mut v: Vec<(f64, f64)> =
                pts.into_iter().map(|(s, a)| (f64::from_bits(s), a.iter().sum::<f64>() / a.len() as f64)).collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            (d, v)
        })
        .collect();
    let all = curves.values().flatten();
    let lo = all.clone().map(|p| p.1).fold(f64::INFINITY, f64::min).floor() - 1.0;
    let hi = all.map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil() + 1.0;
    let margin = side as f64 * 0.08;
    let span = side as f64 - 2.0 * margin;
    let to_px = |s: f64, a: f64| (margin + s / 100.0 * span, margin + (hi - a) / (hi - lo) * span);
    let mut px = vec![1.0f32; side * side];
    line(&mut px, side, to_px(0.0, lo), to_px(100.0, lo), 0.6);
    line(&mut px, side, to_px(0.0, lo), to_px(0.0, hi), 0.6);
    for (d, pts) in &curves {
        for w in pts.windows(2) {
            line(&mut px, side, to_px(w[0].0, w[0].1), to_px(w[1].0, w[1].1), shade(*d));
        }
    }
    ImageGrid::new(side, side, px).ok()
}

/// One signature per activity (columns) and domain (rows). `pick` selects
/// which recording of each activity is shown.
pub fn signature_montage(bundle: &DatasetBundle, pick: u64) -> Result<ImageGrid> {
    let domains: Vec<Domain> = Domain::ALL.into_iter().filter(|&d| !bundle.items(d).is_empty()).collect();
    let first = &bundle.items(domains[0])[0].image;
    let (h, w, gap) = (first.rows(), first.cols(), 2);
    let cols = ActivityId::ALL.len() * (w + gap) - gap;
    let rows = domains.len() * (h + gap) - gap;
    let mut px = vec![1.0f32; rows * cols];
    for (di, &d) in domains.iter().enumerate() {
        for (ai, &a) in ActivityId::ALL.iter().enumerate() {
            let items: Vec<_> = bundle.items(d).iter().filter(|i| i.activity == a).collect();
            if items.is_empty() {
                continue;
            }
            let img = &items[(pick as usize) % items.len()].image;
            for r in 0..h.min(img.rows()) {
                for c in 0..w.min(img.cols()) {
                    px[(di * (h + gap) + r) * cols + ai * (w + gap) + c] = img.get(r, c);
                }
            }
        }
    }
    Ok(ImageGrid::new(rows, cols, px)?)
}

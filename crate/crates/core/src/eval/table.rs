use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::ActivityId;
use crate::spectra::ImageGrid;

/// Origin of an image in the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Measured,
    Clean,
    Awgn,
    Patch,
    Styled,
}

impl Domain {
    pub const ALL: [Domain; 5] = [Domain::Measured, Domain::Clean, Domain::Awgn, Domain::Patch, Domain::Styled];
    /// Domains compared against the measured centroid, in table order.
    pub const SYNTHETIC: [Domain; 4] = [Domain::Clean, Domain::Awgn, Domain::Patch, Domain::Styled];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Measured => "measured",
            Domain::Clean => "clean",
            Domain::Awgn => "awgn",
            Domain::Patch => "patch",
            Domain::Styled => "styled",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Domain::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown domain {s:?}")))
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub xy: [f64; 2],
    pub activity: ActivityId,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmbeddingCloud {
    pub points: Vec<CloudPoint>,
}

impl EmbeddingCloud {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,activity,domain,x,y\n");
        for (i, p) in self.points.iter().enumerate() {
            writeln!(s, "{i},{},{},{},{}", p.activity.number(), p.domain, p.xy[0], p.xy[1]).unwrap();
        }
        s
    }

    /// Scatter plot of one activity's points; each domain gets its own
    /// gray level on a white background.
    pub fn scatter_raster(&self, activity: ActivityId, side: usize) -> Result<ImageGrid> {
        if side < 8 {
            return Err(Error::invalid("scatter raster needs side >= 8"));
        }
        let pts: Vec<&CloudPoint> = self.points.iter().filter(|p| p.activity == activity).collect();
        let mut px = vec![1.0f32; side * side];
        if pts.is_empty() {
            return ImageGrid::new(side, side, px);
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &pts {
            for k in 0..2 {
                lo[k] = lo[k].min(p.xy[k]);
                hi[k] = hi[k].max(p.xy[k]);
            }
        }
        let margin = 2.0;
        let span = |k: usize| (hi[k] - lo[k]).max(1e-12);
        for p in &pts {
            let level = match p.domain {
                Domain::Measured => 0.0,
                Domain::Clean => 0.7,
                Domain::Awgn => 0.5,
                Domain::Patch => 0.35,
                Domain::Styled => 0.2,
            };
            let c = margin + (p.xy[0] - lo[0]) / span(0) * (side as f64 - 1.0 - 2.0 * margin);
            let r = margin + (hi[1] - p.xy[1]) / span(1) * (side as f64 - 1.0 - 2.0 * margin);
            let (r, c) = (r.round() as i64, c.round() as i64);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if (0..side as i64).contains(&rr) && (0..side as i64).contains(&cc) {
                        px[rr as usize * side + cc as usize] = level;
                    }
                }
            }
        }
        ImageGrid::new(side, side, px)
    }
}

/// Distances from the measured centroid to each synthetic domain's
/// centroid, per activity, in the embedding plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceTable {
    /// Columns follow [`Domain::SYNTHETIC`].
    pub rows: Vec<(ActivityId, [f64; 4])>,
    pub mean: [f64; 4],
}

impl DistanceTable {
    pub fn get(&self, activity: ActivityId, domain: Domain) -> Option<f64> {
        let col = Domain::SYNTHETIC.iter().position(|&d| d == domain)?;
        self.rows.iter().find(|(a, _)| *a == activity).map(|(_, v)| v[col])
    }

    pub fn mean_of(&self, domain: Domain) -> Option<f64> {
        Domain::SYNTHETIC.iter().position(|&d| d == domain).map(|c| self.mean[c])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("activity,clean,awgn,patch,styled\n");
        for (a, v) in &self.rows {
            writeln!(s, "{},{:.4},{:.4},{:.4},{:.4}", a.number(), v[0], v[1], v[2], v[3]).unwrap();
        }
        let m = self.mean;
        writeln!(s, "mean,{:.4},{:.4},{:.4},{:.4}", m[0], m[1], m[2], m[3]).unwrap();
        s
    }
}

fn centroid(cloud: &EmbeddingCloud, activity: ActivityId, domain: Domain) -> Result<[f64; 2]> {
    let mut sum = [0.0; 2];
    let mut n = 0usize;
    for p in cloud.points.iter().filter(|p| p.activity == activity && p.domain == domain) {
        sum[0] += p.xy[0];
        sum[1] += p.xy[1];
        n += 1;
    }
    if n == 0 {
        return Err(Error::MissingPair { activity: activity.number(), domain: domain.name().into() });
    }
    Ok([sum[0] / n as f64, sum[1] / n as f64])
}

pub fn centroid_distance_table(cloud: &EmbeddingCloud) -> Result<DistanceTable> {
    let mut rows = Vec::with_capacity(ActivityId::ALL.len());
    for activity in ActivityId::ALL {
        let m = centroid(cloud, activity, Domain::Measured)?;
        let mut v = [0.0; 4];
        for (k, d) in Domain::SYNTHETIC.into_iter().enumerate() {
            let c = centroid(cloud, activity, d)?;
            v[k] = ((c[0] - m[0]).powi(2) + (c[1] - m[1]).powi(2)).sqrt();
        }
        rows.push((activity, v));
    }
    let mut mean = [0.0; 4];
    for (_, v) in &rows {
        for k in 0..4 {
            mean[k] += v[k] / rows.len() as f64;
        }
    }
    Ok(DistanceTable { rows, mean })
}

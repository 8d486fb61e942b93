use serde::{Deserialize, Serialize};

use super::grid::SpatialGrid;
use super::plane::{ransac_plane, PlaneConfig};
use crate::error::{Error, Result};
use crate::geom::{centroid, Plane, PointCloud, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit direction.
    pub dir: Vec3,
}

impl Ray {
    pub fn through_origin(dir: Vec3) -> Self {
        Self {
            origin: Vec3::zeros(),
            dir: dir.normalize(),
        }
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        let d = p - self.origin;
        (d - self.dir * d.dot(&self.dir)).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentConfig {
    pub plane: PlaneConfig,
    /// Fraction of region points that must fit the RANSAC plane before it
    /// is treated as table and removed.
    pub plane_min_fraction: f64,
    /// Single-linkage radius, meters.
    pub cluster_radius: f64,
    /// Length scale of the prior-ray preference, meters.
    pub prior_scale: f64,
    pub outlier_k: usize,
    pub outlier_std: f64,
    pub min_points: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            plane: PlaneConfig::default(),
            plane_min_fraction: 0.2,
            cluster_radius: 0.02,
            prior_scale: 0.05,
            outlier_k: 8,
            outlier_std: 2.0,
            min_points: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub cloud: PointCloud,
    /// Indices into the region cloud, ascending.
    pub indices: Vec<usize>,
}

fn check(stage: &'static str, idx: &[usize], cfg: &SegmentConfig) -> Result<()> {
    if idx.len() < cfg.min_points {
        return Err(Error::SegmentationEmpty {
            stage,
            remaining: idx.len(),
        });
    }
    Ok(())
}

/// Plane removal, Euclidean clustering, prior-ray cluster choice and
/// statistical outlier removal. The output is a subset of `region`.
pub fn segment_object(
    region: &PointCloud,
    prior: &Ray,
    plane: Option<&Plane>,
    cfg: &SegmentConfig,
    seed: u64,
) -> Result<Segmentation> {
    let pts = &region.points;
    let all: Vec<usize> = (0..pts.len()).collect();
    check("input", &all, cfg)?;

    let off_plane: Vec<usize> = match plane {
        Some(pl) => all
            .into_iter()
            .filter(|&i| pl.signed_distance(&pts[i]).abs() >= cfg.plane.band)
            .collect(),
        None => match ransac_plane(pts, &cfg.plane, seed) {
            Some(fit) if fit.inliers.len() as f64 > cfg.plane_min_fraction * pts.len() as f64 => {
                let mut drop = vec![false; pts.len()];
                fit.inliers.iter().for_each(|&i| drop[i] = true);
                all.into_iter().filter(|&i| !drop[i]).collect()
            }
            _ => all,
        },
    };
    check("plane", &off_plane, cfg)?;

    let cluster = best_cluster(pts, &off_plane, prior, cfg);
    check("cluster", &cluster, cfg)?;

    let kept = remove_outliers(pts, &cluster, cfg);
    check("outliers", &kept, cfg)?;

    Ok(Segmentation {
        cloud: super::object_cloud(kept.iter().map(|&i| pts[i]).collect()),
        indices: kept,
    })
}

fn best_cluster(pts: &[Vec3], idx: &[usize], prior: &Ray, cfg: &SegmentConfig) -> Vec<usize> {
    let sub: Vec<Vec3> = idx.iter().map(|&i| pts[i]).collect();
    let mut grid = SpatialGrid::new(&sub, cfg.cluster_radius);
    let mut claimed = vec![false; sub.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for seed in 0..sub.len() {
        if claimed[seed] {
            continue;
        }
        // The seed is within the radius of itself, so the first take claims it.
        let mut members = Vec::new();
        grid.take_within(&sub[seed], cfg.cluster_radius, &mut members);
        let mut head = 0;
        while head < members.len() {
            let p = sub[members[head]];
            head += 1;
            grid.take_within(&p, cfg.cluster_radius, &mut members);
        }
        members.iter().for_each(|&j| claimed[j] = true);
        members.sort_unstable();
        clusters.push(members);
    }
    let score = |c: &Vec<usize>| {
        let pts: Vec<Vec3> = c.iter().map(|&j| sub[j]).collect();
        let d = prior.distance(&centroid(&pts).unwrap_or_default());
        c.len() as f64 * (-d / cfg.prior_scale).exp()
    };
    let best = clusters
        .iter()
        .map(|c| (score(c), c))
        .max_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1[0].cmp(&a.1[0])));
    let mut out: Vec<usize> = best.map(|(_, c)| c.iter().map(|&j| idx[j]).collect()).unwrap_or_default();
    out.sort_unstable();
    out
}

fn remove_outliers(pts: &[Vec3], idx: &[usize], cfg: &SegmentConfig) -> Vec<usize> {
    if idx.len() <= cfg.outlier_k {
        return idx.to_vec();
    }
    let sub: Vec<Vec3> = idx.iter().map(|&i| pts[i]).collect();
    // Finer cells than the clustering grid keep the neighbor scan small.
    let grid = SpatialGrid::new(&sub, cfg.cluster_radius / 3.0);
    let means: Vec<f64> = (0..sub.len())
        .map(|i| {
            let d = grid.knn_distances(i, cfg.outlier_k);
            d.iter().sum::<f64>() / d.len().max(1) as f64
        })
        .collect();
    let n = means.len() as f64;
    let mu = means.iter().sum::<f64>() / n;
    let sd = (means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / n).sqrt();
    let limit = mu + cfg.outlier_std * sd;
    idx.iter().zip(&means).filter(|(_, m)| **m <= limit).map(|(i, _)| *i).collect()
}

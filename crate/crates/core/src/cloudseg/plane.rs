use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::geom::{backproject, fit_plane, CameraIntrinsics, DepthMap, Pixel, Plane, Vec3};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlaneConfig {
    pub iterations: usize,
    /// Inlier half-width, meters.
    pub band: f64,
    /// Pixel stride when sampling a full frame.
    pub stride: u32,
}

impl Default for PlaneConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            band: 0.008,
            stride: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFit {
    pub plane: Plane,
    pub inliers: Vec<usize>,
}

/// Seeded three-point RANSAC followed by a least-squares refit on the
/// consensus set. The returned plane faces the camera origin.
pub fn ransac_plane(points: &[Vec3], cfg: &PlaneConfig, seed: u64) -> Option<PlaneFit> {
    if points.len() < 3 {
        return None;
    }
    let mut r = rng::rng(seed);
    let inliers_of = |pl: &Plane| -> Vec<usize> {
        (0..points.len())
            .filter(|&i| pl.signed_distance(&points[i]).abs() < cfg.band)
            .collect()
    };
    let mut best: Option<(Plane, usize)> = None;
    for _ in 0..cfg.iterations {
        let s = index::sample(&mut r, points.len(), 3);
        let (a, b, c) = (points[s.index(0)], points[s.index(1)], points[s.index(2)]);
        let n = (b - a).cross(&(c - a));
        if n.norm() < 1e-12 {
            continue;
        }
        let pl = Plane::from_point_normal(&a, &n);
        let count = points.iter().filter(|p| pl.signed_distance(p).abs() < cfg.band).count();
        if best.as_ref().is_none_or(|(_, c)| count > *c) {
            best = Some((pl, count));
        }
    }
    let (coarse, _) = best?;
    let inliers = inliers_of(&coarse);
    let support: Vec<Vec3> = inliers.iter().map(|&i| points[i]).collect();
    let plane = fit_plane(&support).unwrap_or(coarse).facing_origin();
    let refined = inliers_of(&plane);
    let inliers = if refined.len() >= inliers.len() { refined } else { inliers };
    Some(PlaneFit { plane, inliers })
}

/// Dominant plane of a full depth frame (the table in a tabletop scene).
pub fn estimate_table_plane(depth: &DepthMap, k: &CameraIntrinsics, cfg: &PlaneConfig, seed: u64) -> Option<Plane> {
    let stride = cfg.stride.max(1);
    let pixels: Vec<Pixel> = (0..depth.height)
        .step_by(stride as usize)
        .flat_map(|v| (0..depth.width).step_by(stride as usize).map(move |u| Pixel::new(u, v)))
        .collect();
    let cloud = backproject(depth, k, &pixels).ok()?;
    ransac_plane(&cloud.points, cfg, rng::derive_seed(seed, &[rng::stream::PLANE])).map(|f| f.plane)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_scene, render, SceneConfig};

    #[test]
    fn recovers_rendered_table() {
        let scene = generate_scene(&SceneConfig::default(), 11).unwrap();
        let r = render(&scene);
        let est = estimate_table_plane(&r.frame.depth, scene.intrinsics(), &PlaneConfig::default(), 3).unwrap();
        let gt = scene.table_plane;
        assert!(est.normal.dot(&gt.normal) > 0.9999, "{est:?} vs {gt:?}");
        assert!((est.offset - gt.offset).abs() < 0.002);
    }

    #[test]
    fn too_few_points() {
        assert!(ransac_plane(&[Vec3::zeros(), Vec3::x()], &PlaneConfig::default(), 0).is_none());
    }
}

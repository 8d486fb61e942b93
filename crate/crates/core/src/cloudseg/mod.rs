//! Depth cropping, corruption strategies and geometric object segmentation.

mod grid;
mod plane;
mod segment;

pub use plane::{estimate_table_plane, ransac_plane, PlaneConfig, PlaneFit};
pub use segment::{segment_object, Ray, SegmentConfig, Segmentation};

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{CameraIntrinsics, DepthMap, Pixel, PointCloud, Provenance, Vec3};
use crate::raster::{BBox, Mask};
use crate::rng;
use crate::scene::CropMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropSpec {
    pub mode: CropMode,
    pub pixels: Vec<Pixel>,
    pub source_id: u32,
}

impl CropSpec {
    pub fn new(mode: CropMode, pixels: Vec<Pixel>, source_id: u32) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Self {
            mode,
            pixels,
            source_id,
        })
    }

    pub fn from_bbox(b: &BBox, source_id: u32) -> Result<Self> {
        Self::new(CropMode::Bbox, b.pixels(), source_id)
    }

    pub fn from_mask(m: &Mask, source_id: u32) -> Result<Self> {
        Self::new(CropMode::Mask, m.pixels(), source_id)
    }

    /// Viewing ray through the mean crop pixel.
    pub fn prior_ray(&self, k: &CameraIntrinsics) -> Ray {
        let n = self.pixels.len() as f64;
        let (su, sv) = self
            .pixels
            .iter()
            .fold((0.0, 0.0), |(a, b), p| (a + p.u as f64, b + p.v as f64));
        Ray::through_origin(k.ray(su / n, sv / n))
    }
}

/// Back-projected crop together with the source pixel of every point.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionCloud {
    pub cloud: PointCloud,
    pub pixels: Vec<Pixel>,
}

/// Same ordering and skipping rules as [`crate::geom::backproject`].
pub fn crop_region(depth: &DepthMap, k: &CameraIntrinsics, crop: &CropSpec) -> Result<RegionCloud> {
    let cloud = crate::geom::backproject(depth, k, &crop.pixels)?;
    let mut pixels = crop.pixels.clone();
    pixels.sort_unstable_by_key(Pixel::row_major);
    pixels.dedup();
    pixels.retain(|p| depth.get(*p) > 0.0);
    debug_assert_eq!(pixels.len(), cloud.len());
    Ok(RegionCloud { cloud, pixels })
}

/// Per-side outward expansion ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl Expansion {
    pub fn uniform(r: f64) -> Self {
        Self {
            left: r,
            top: r,
            right: r,
            bottom: r,
        }
    }

    /// Each side drawn from U[0, rho_max].
    pub fn sample(rho_max: f64, r: &mut rng::Rng) -> Self {
        let mut s = || if rho_max > 0.0 { r.random_range(0.0..=rho_max) } else { 0.0 };
        Self {
            left: s(),
            top: s(),
            right: s(),
            bottom: s(),
        }
    }
}

pub fn expand_bbox(b: &BBox, rho: &Expansion, width: u32, height: u32) -> BBox {
    let (w, h) = (b.w as f64, b.h as f64);
    let x1 = (b.x as f64 - rho.left * w).floor().max(0.0);
    let y1 = (b.y as f64 - rho.top * h).floor().max(0.0);
    let x2 = (b.x2() as f64 + rho.right * w).ceil().min(width as f64);
    let y2 = (b.y2() as f64 + rho.bottom * h).ceil().min(height as f64);
    BBox::new(x1 as u32, y1 as u32, (x2 - x1) as u32, (y2 - y1) as u32)
}

/// Disk dilation: a pixel is set when an input pixel lies within Euclidean
/// distance `r`.
pub fn dilate_mask(m: &Mask, r: u32) -> Mask {
    if r == 0 {
        return m.clone();
    }
    let ri = r as i64;
    let offsets: Vec<(i64, i64)> = (-ri..=ri)
        .flat_map(|dv| (-ri..=ri).map(move |du| (du, dv)))
        .filter(|(du, dv)| du * du + dv * dv <= ri * ri)
        .collect();
    let mut out = m.clone();
    for p in m.pixels() {
        for (du, dv) in &offsets {
            let (u, v) = (p.u as i64 + du, p.v as i64 + dv);
            if u >= 0 && v >= 0 && u < m.width as i64 && v < m.height as i64 {
                out.set(Pixel::new(u as u32, v as u32), true);
            }
        }
    }
    out
}

/// Per-axis Gaussian point noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mean: [f64; 3],
    pub sigma: [f64; 3],
}

impl NoiseSpec {
    pub fn isotropic(sigma: f64) -> Self {
        Self {
            mean: [0.0; 3],
            sigma: [sigma; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma.iter().chain(&self.mean).any(|v| !v.is_finite()) || self.sigma.iter().any(|s| *s < 0.0) {
            return Err(Error::Config("noise sigma must be finite and >= 0".into()));
        }
        Ok(())
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::isotropic(0.001)
    }
}

pub fn add_noise(cloud: &PointCloud, n: &NoiseSpec, seed: u64) -> Result<PointCloud> {
    n.validate()?;
    let mut r = rng::rng(seed);
    let normals = [0, 1, 2].map(|i| Normal::new(n.mean[i], n.sigma[i]).expect("validated"));
    let points = cloud
        .points
        .iter()
        .map(|p| {
            let d = Vec3::new(normals[0].sample(&mut r), normals[1].sample(&mut r), normals[2].sample(&mut r));
            p + d
        })
        .collect();
    Ok(PointCloud::new(points, cloud.provenance))
}

/// Convenience: region cloud with provenance reset for object output.
pub(crate) fn object_cloud(points: Vec<Vec3>) -> PointCloud {
    PointCloud::new(points, Provenance::Object)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expand_examples() {
        let b = BBox::new(10, 10, 20, 20);
        assert_eq!(expand_bbox(&b, &Expansion::uniform(0.5), 320, 240), BBox::new(0, 0, 40, 40));
        assert_eq!(expand_bbox(&b, &Expansion::uniform(0.0), 320, 240), b);
        assert_eq!(
            expand_bbox(&BBox::new(300, 200, 20, 40), &Expansion::uniform(50.0), 320, 240),
            BBox::new(0, 0, 320, 240)
        );
    }

    #[test]
    fn dilate_examples() {
        let m = Mask::from_pixels(10, 10, &[Pixel::new(5, 5)]);
        assert_eq!(dilate_mask(&m, 0), m);
        let d = dilate_mask(&m, 1);
        assert_eq!(d.count(), 5);
        assert!(!d.get(Pixel::new(6, 6)));
        let corner = Mask::from_pixels(10, 10, &[Pixel::new(0, 0)]);
        assert_eq!(dilate_mask(&corner, 1).count(), 3);
    }

    #[test]
    fn noise_statistics() {
        let cloud = PointCloud::new(vec![Vec3::new(0.1, 0.2, 1.0); 100_000], Provenance::Region);
        let same = add_noise(&cloud, &NoiseSpec::isotropic(0.0), 1).unwrap();
        assert_eq!(same, cloud);
        let a = add_noise(&cloud, &NoiseSpec::default(), 7).unwrap();
        assert_eq!(a, add_noise(&cloud, &NoiseSpec::default(), 7).unwrap());
        for axis in 0..3 {
            let d: Vec<f64> = a.points.iter().zip(&cloud.points).map(|(p, q)| p[axis] - q[axis]).collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
            assert!((var.sqrt() - 0.001).abs() < 1e-4, "axis {axis}: {}", var.sqrt());
        }
        assert!(add_noise(&cloud, &NoiseSpec::isotropic(-1.0), 0).is_err());
    }

    #[test]
    fn crop_region_keeps_pixel_alignment() {
        let k = CameraIntrinsics::default();
        let mut depth = DepthMap::filled(k.width, k.height, 1.0);
        depth.values[5 * k.width as usize + 4] = 0.0;
        let crop = CropSpec::from_bbox(&BBox::new(2, 3, 4, 4), 0).unwrap();
        let rc = crop_region(&depth, &k, &crop).unwrap();
        assert_eq!(rc.cloud.len(), 15);
        assert!(!rc.pixels.contains(&Pixel::new(4, 5)));
        assert!(CropSpec::new(CropMode::Mask, vec![], 0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn operators_are_monotone(
            x in 0u32..300, y in 0u32..220, w in 1u32..40, h in 1u32..40,
            rho in 0.0f64..2.0, r in 0u32..5,
            px in proptest::collection::vec((0u32..32, 0u32..24), 1..30),
        ) {
            let b = BBox::new(x, y, w.min(320 - x), h.min(240 - y));
            let e = expand_bbox(&b, &Expansion::uniform(rho), 320, 240);
            proptest::prop_assert!(e.x <= b.x && e.y <= b.y && e.x2() >= b.x2() && e.y2() >= b.y2());
            let pixels: Vec<Pixel> = px.iter().map(|(u, v)| Pixel::new(*u, *v)).collect();
            let m = Mask::from_pixels(32, 24, &pixels);
            proptest::prop_assert!(dilate_mask(&m, r).is_superset_of(&m));
        }
    }
}

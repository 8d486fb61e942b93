//! Category-level pose and size from a segmented object cloud using
//! per-category parametric fits on the supporting plane.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{centroid, covariance, sorted_eigen, Mat3, Plane, PointCloud, Pose, Vec3};
use crate::scene::{Category, ShapeParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymmetryClass {
    None,
    /// Continuous rotational symmetry about a canonical-frame axis.
    Axial { axis: Vec3 },
}

impl SymmetryClass {
    pub fn of(category: Category) -> Self {
        if category.is_axial() {
            SymmetryClass::Axial { axis: Vec3::y() }
        } else {
            SymmetryClass::None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate {
    pub pose: Pose,
    pub size: Vec3,
    pub category: Category,
    pub symmetry: SymmetryClass,
    /// Fitted primitive in the canonical frame.
    pub shape: ShapeParams,
    /// RMS distance from the points to the fitted primitive, meters.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoseConfig {
    /// Take the up axis and base height from the table plane when given.
    pub use_plane_prior: bool,
    /// Camera-frame vertical used to pick the axis when no plane is used.
    pub vertical_prior: Vec3,
    /// Where the observing camera sits; 180-degree ambiguities and unseen
    /// handles are resolved relative to it.
    pub viewpoint: Vec3,
    pub min_points: usize,
    /// Points this close to the top (fraction of height) count as cap.
    pub cap_band: f64,
    pub radial_percentile: f64,
    pub height_percentile: f64,
    /// Radius multiple beyond which mug points are treated as handle.
    pub handle_factor: f64,
    pub handle_min_points: usize,
    /// Handle reach, as a fraction of the body radius, when the handle is
    /// not visible.
    pub default_handle_reach: f64,
    /// Handle width as a fraction of the body radius.
    pub handle_width: f64,
    pub handle_span: [f64; 2],
    pub trim_iterations: usize,
}

impl Default for PoseConfig {
    fn default() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            use_plane_prior: true,
            vertical_prior: Vec3::new(0.0, -s, -s),
            viewpoint: Vec3::zeros(),
            min_points: 30,
            cap_band: 0.05,
            radial_percentile: 0.95,
            height_percentile: 0.99,
            handle_factor: 1.15,
            handle_min_points: 5,
            default_handle_reach: 0.75,
            handle_width: 0.35,
            handle_span: [0.15, 0.85],
            trim_iterations: 4,
        }
    }
}

/// Linear-interpolated quantile of an unsorted slice.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Object-centered vertical frame: heights along `up`, plane coordinates
/// along `e1`, `e2`.
struct Frame {
    origin: Vec3,
    up: Vec3,
    e1: Vec3,
    e2: Vec3,
}

impl Frame {
    fn new(origin: Vec3, up: Vec3) -> Self {
        let seed = if up.x.abs() < 0.9 { Vec3::x() } else { Vec3::z() };
        let e1 = (seed - up * seed.dot(&up)).normalize();
        let e2 = up.cross(&e1);
        Self { origin, up, e1, e2 }
    }

    fn local(&self, p: &Vec3) -> (f64, f64, f64) {
        let d = p - self.origin;
        (d.dot(&self.e1), d.dot(&self.e2), d.dot(&self.up))
    }

    fn world(&self, x: f64, y: f64, h: f64) -> Vec3 {
        self.origin + self.e1 * x + self.e2 * y + self.up * h
    }

    fn dir(&self, x: f64, y: f64) -> Vec3 {
        (self.e1 * x + self.e2 * y).normalize()
    }

    fn horizontal(&self, v: &Vec3) -> [f64; 2] {
        [v.dot(&self.e1), v.dot(&self.e2)]
    }
}

/// Circle `x^2 + y^2 + D x + E y + F(h) = 0` with `F` polynomial in height.
#[derive(Debug, Clone, Copy)]
struct CircleFit {
    center: [f64; 2],
    f: [f64; 3],
}

impl CircleFit {
    fn radius_at(&self, h: f64) -> f64 {
        let c2 = self.center[0].powi(2) + self.center[1].powi(2);
        let f = self.f[0] + self.f[1] * h + self.f[2] * h * h;
        (c2 - f).max(0.0).sqrt()
    }

    fn radial(&self, p: &[f64; 3]) -> f64 {
        ((p[0] - self.center[0]).powi(2) + (p[1] - self.center[1]).powi(2)).sqrt()
    }
}

/// Algebraic least-squares circle fit; `order` is the degree of `F(h)`.
fn fit_circle(pts: &[[f64; 3]], order: usize) -> Option<CircleFit> {
    const N: usize = 5;
    let n = 3 + order;
    let mut ata = SMatrix::<f64, N, N>::zeros();
    let mut atb = SVector::<f64, N>::zeros();
    for p in pts {
        let row = [p[0], p[1], 1.0, p[2], p[2] * p[2]];
        let b = -(p[0] * p[0] + p[1] * p[1]);
        for i in 0..n {
            atb[i] += row[i] * b;
            for j in 0..n {
                ata[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in n..N {
        ata[(i, i)] = 1.0;
    }
    let sol = ata.lu().solve(&atb)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(CircleFit {
        center: [-sol[0] / 2.0, -sol[1] / 2.0],
        f: [sol[2], sol[3], sol[4]],
    })
}

/// Circle fit with iterative trimming of points far from the surface.
fn robust_circle(pts: &[[f64; 3]], order: usize, iterations: usize) -> Option<(CircleFit, Vec<[f64; 3]>)> {
    let mut kept = pts.to_vec();
    let mut fit = fit_circle(&kept, order)?;
    for _ in 0..iterations {
        let res: Vec<f64> = pts.iter().map(|p| (fit.radial(p) - fit.radius_at(p[2])).abs()).collect();
        let scale = 1.4826 * percentile(&res, 0.5);
        let limit = (3.0 * scale).max(1e-4 * fit.radius_at(0.0).max(1e-3));
        let next: Vec<[f64; 3]> = pts.iter().zip(&res).filter(|(_, r)| **r <= limit).map(|(p, _)| *p).collect();
        if next.len() < 3 + order || next.len() == kept.len() {
            break;
        }
        kept = next;
        fit = fit_circle(&kept, order)?;
    }
    Some((fit, kept))
}

fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Minimum-area enclosing rectangle: (unit axis, center, extent along axis,
/// extent across).
fn min_area_rect(pts: &[[f64; 2]], fallback_axis: [f64; 2]) -> ([f64; 2], [f64; 2], f64, f64) {
    let hull = convex_hull(pts.to_vec());
    let mut axes: Vec<[f64; 2]> = vec![fallback_axis];
    for i in 0..hull.len() {
        let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let n = (dx * dx + dy * dy).sqrt();
        if n > 1e-12 {
            axes.push([dx / n, dy / n]);
        }
    }
    let src = if hull.len() >= 3 { &hull } else { pts };
    let mut best = (f64::INFINITY, fallback_axis, [0.0; 2], 0.0, 0.0);
    for ax in axes {
        let perp = [-ax[1], ax[0]];
        let (mut lo_a, mut hi_a, mut lo_b, mut hi_b) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in src {
            let a = p[0] * ax[0] + p[1] * ax[1];
            let b = p[0] * perp[0] + p[1] * perp[1];
            lo_a = lo_a.min(a);
            hi_a = hi_a.max(a);
            lo_b = lo_b.min(b);
            hi_b = hi_b.max(b);
        }
        let area = (hi_a - lo_a) * (hi_b - lo_b);
        if area < best.0 - 1e-15 {
            let (ca, cb) = ((lo_a + hi_a) / 2.0, (lo_b + hi_b) / 2.0);
            let center = [ca * ax[0] + cb * perp[0], ca * ax[1] + cb * perp[1]];
            best = (area, ax, center, hi_a - lo_a, hi_b - lo_b);
        }
    }
    (best.1, best.2, best.3, best.4)
}

/// Least-squares line `d = a + b h` with median-absolute-deviation trimming.
fn robust_line(samples: &[(f64, f64)], iterations: usize) -> Option<(f64, f64)> {
    let fit = |pts: &[(f64, f64)]| -> Option<(f64, f64)> {
        let n = pts.len() as f64;
        let (mh, md) = pts.iter().fold((0.0, 0.0), |(a, b), (h, d)| (a + h / n, b + d / n));
        let shh: f64 = pts.iter().map(|(h, _)| (h - mh).powi(2)).sum();
        let shd: f64 = pts.iter().map(|(h, d)| (h - mh) * (d - md)).sum();
        let b = if shh > 1e-18 { shd / shh } else { 0.0 };
        (pts.len() >= 2).then_some((md - b * mh, b))
    };
    let mut line = fit(samples)?;
    for _ in 0..iterations {
        let res: Vec<f64> = samples.iter().map(|(h, d)| (d - line.0 - line.1 * h).abs()).collect();
        let limit = (3.0 * 1.4826 * percentile(&res, 0.5)).max(1e-6);
        let kept: Vec<(f64, f64)> = samples.iter().zip(&res).filter(|(_, r)| **r <= limit).map(|(s, _)| *s).collect();
        if kept.len() < 2 || kept.len() == samples.len() {
            break;
        }
        line = fit(&kept)?;
    }
    Some(line)
}

/// Bowl: center from the rim of the visible top cap, then a linear radius
/// profile along the height from the side points.
fn fit_bowl(local: &[[f64; 3]], cap_limit: f64, top: f64, base: f64, cfg: &PoseConfig) -> Result<([f64; 2], ShapeParams)> {
    let failed = || Error::DegenerateInput("circle fit failed".into());
    let side: Vec<[f64; 3]> = local.iter().filter(|p| p[2] < cap_limit).copied().collect();
    let side = if side.len() >= 10 { side } else { local.to_vec() };
    let rim = convex_hull(local.iter().filter(|p| p[2] >= cap_limit).map(|p| [p[0], p[1]]).collect());
    let center = if rim.len() >= 8 {
        let rim3: Vec<[f64; 3]> = rim.iter().map(|p| [p[0], p[1], 0.0]).collect();
        fit_circle(&rim3, 0).ok_or_else(failed)?.center
    } else {
        robust_circle(&side, 2, cfg.trim_iterations).ok_or_else(failed)?.0.center
    };
    let radial = |p: &[f64; 3]| ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
    let profile: Vec<(f64, f64)> = side.iter().map(|p| (p[2], radial(p))).collect();
    let (a, b) = robust_line(&profile, cfg.trim_iterations).ok_or_else(failed)?;
    let model = |h: f64| (a + b * h).max(1e-6);
    let band = top - 0.25 * (top - base);
    let scaled: Vec<f64> = side
        .iter()
        .filter(|p| p[2] >= band)
        .map(|p| radial(p) * model(top) / model(p[2]))
        .collect();
    let top_radius = if scaled.len() >= 5 { percentile(&scaled, cfg.radial_percentile) } else { model(top) }.max(1e-4);
    let bottom_radius = (model(base) * top_radius / model(top)).clamp(1e-4, top_radius);
    Ok((
        center,
        ShapeParams::Frustum {
            bottom_radius,
            top_radius,
            height: top - base,
        },
    ))
}

fn mean_direction(pts: &[[f64; 3]], center: &[f64; 2]) -> [f64; 2] {
    let (sx, sy) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + p[0] - center[0], b + p[1] - center[1]));
    let n = (sx * sx + sy * sy).sqrt().max(1e-12);
    [sx / n, sy / n]
}

/// Body circle of a mug with the handle sector excluded. Starts from the rim
/// of the top cap, which the handle never reaches. Returns the fit, the
/// handle points and the body radius.
fn fit_mug_body(local: &[[f64; 3]], cap_limit: f64, cfg: &PoseConfig) -> Result<(CircleFit, Vec<[f64; 3]>, f64)> {
    let failed = || Error::DegenerateInput("circle fit failed".into());
    let side: Vec<[f64; 3]> = local.iter().filter(|p| p[2] < cap_limit).copied().collect();
    let side = if side.len() >= 10 { side } else { local.to_vec() };
    let cap: Vec<[f64; 2]> = local.iter().filter(|p| p[2] >= cap_limit).map(|p| [p[0], p[1]]).collect();
    let rim = convex_hull(cap);
    let mut fit = if rim.len() >= 8 {
        let rim3: Vec<[f64; 3]> = rim.iter().map(|p| [p[0], p[1], 0.0]).collect();
        fit_circle(&rim3, 0).ok_or_else(failed)?
    } else {
        robust_circle(&side, 0, cfg.trim_iterations).ok_or_else(failed)?.0
    };
    let mut handle = Vec::new();
    for _ in 0..2 {
        let r = fit.radius_at(0.0);
        handle = side.iter().filter(|p| fit.radial(p) > cfg.handle_factor * r).copied().collect();
        let sector = (handle.len() >= cfg.handle_min_points).then(|| {
            let d = mean_direction(&handle, &fit.center);
            let half = handle
                .iter()
                .map(|p| angle_from(p, &fit.center, &d))
                .fold(0.0, f64::max);
            (d, half + cfg.handle_width.min(0.5))
        });
        let body: Vec<[f64; 3]> = side
            .iter()
            .filter(|p| fit.radial(p) <= cfg.handle_factor * r)
            .filter(|p| sector.is_none_or(|(d, half)| angle_from(p, &fit.center, &d) > half))
            .copied()
            .collect();
        if body.len() < 10 {
            break;
        }
        fit = robust_circle(&body, 0, cfg.trim_iterations).ok_or_else(failed)?.0;
    }
    let r = fit.radius_at(0.0);
    let body: Vec<f64> = local
        .iter()
        .map(|p| fit.radial(p))
        .filter(|d| *d <= cfg.handle_factor * r)
        .collect();
    let radius = percentile(&body, cfg.radial_percentile);
    Ok((fit, handle, radius))
}

/// Bisector of the handle's angular extent. Unlike the mean, it is not pulled
/// toward whichever side face of the handle is visible.
fn handle_direction(handle: &[[f64; 3]], c: &[f64; 2]) -> [f64; 2] {
    let d = mean_direction(handle, c);
    let (lo, hi) = handle.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let (x, y) = (p[0] - c[0], p[1] - c[1]);
        let a = (d[0] * y - d[1] * x).atan2(d[0] * x + d[1] * y);
        (lo.min(a), hi.max(a))
    });
    let mid = (lo + hi) / 2.0;
    let (cs, sn) = (mid.cos(), mid.sin());
    [d[0] * cs - d[1] * sn, d[0] * sn + d[1] * cs]
}

fn angle_from(p: &[f64; 3], c: &[f64; 2], d: &[f64; 2]) -> f64 {
    let (x, y) = (p[0] - c[0], p[1] - c[1]);
    (d[0] * y - d[1] * x).atan2(d[0] * x + d[1] * y).abs()
}

fn rotation_from(x: Vec3, y: Vec3) -> Mat3 {
    let z = x.cross(&y);
    Mat3::from_columns(&[x, y, z])
}

/// Category-level pose and size from an object cloud.
pub fn estimate_pose(
    obj: &PointCloud,
    category: Category,
    plane: Option<&Plane>,
    cfg: &PoseConfig,
) -> Result<PoseEstimate> {
    let pts = &obj.points;
    if pts.len() < cfg.min_points {
        return Err(Error::InsufficientPoints {
            got: pts.len(),
            need: cfg.min_points,
        });
    }
    let mean = centroid(pts).ok_or(Error::EmptyInput)?;
    let eig = sorted_eigen(&covariance(pts, &mean));
    if eig[1].0 <= 1e-12 * eig[2].0.max(1e-300) {
        return Err(Error::DegenerateInput("point covariance has rank < 2".into()));
    }

    // Up axis and the height of the supporting surface.
    let plane = plane.filter(|_| cfg.use_plane_prior);
    let (frame, base_override) = match plane {
        Some(pl) => {
            // Orient the normal toward the viewer, who sits above the table.
            let up = if pl.signed_distance(&cfg.viewpoint) >= 0.0 { pl.normal } else { -pl.normal };
            let foot = mean - pl.normal * pl.signed_distance(&mean);
            (Frame::new(foot, up), Some(0.0))
        }
        None => {
            let prior = cfg.vertical_prior.normalize();
            let (_, axis) = eig
                .iter()
                .max_by(|a, b| a.1.dot(&prior).abs().total_cmp(&b.1.dot(&prior).abs()))
                .copied()
                .expect("three eigenpairs");
            let up = if axis.dot(&prior) >= 0.0 { axis } else { -axis };
            (Frame::new(mean, up), None)
        }
    };
    let local: Vec<[f64; 3]> = pts
        .iter()
        .map(|p| {
            let (x, y, h) = frame.local(p);
            [x, y, h]
        })
        .collect();
    let heights: Vec<f64> = local.iter().map(|p| p[2]).collect();
    let top = percentile(&heights, cfg.height_percentile);
    let base = base_override.unwrap_or_else(|| percentile(&heights, 1.0 - cfg.height_percentile));
    let height = top - base;
    if height <= 0.0 {
        return Err(Error::DegenerateInput("object has no extent along the up axis".into()));
    }
    let mid = (top + base) / 2.0;
    let cap_limit = top - cfg.cap_band * height;
    let view = {
        let v = frame.horizontal(&(cfg.viewpoint - mean));
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        if n > 1e-12 { [v[0] / n, v[1] / n] } else { [0.0, -1.0] }
    };

    let (rotation, center2, shape) = match category {
        Category::Bottle | Category::Can => {
            let side: Vec<[f64; 3]> = local.iter().filter(|p| p[2] < cap_limit).copied().collect();
            let side = if side.len() >= 10 { side } else { local.clone() };
            let (fit, _) = robust_circle(&side, 0, cfg.trim_iterations)
                .ok_or_else(|| Error::DegenerateInput("circle fit failed".into()))?;
            let radial: Vec<f64> = local.iter().map(|p| fit.radial(p)).collect();
            let shape = ShapeParams::Cylinder {
                radius: percentile(&radial, cfg.radial_percentile),
                height,
            };
            let z = frame.dir(view[0], view[1]);
            (rotation_from(frame.up.cross(&z), frame.up), fit.center, shape)
        }
        Category::Bowl => {
            let (center, shape) = fit_bowl(&local, cap_limit, top, base, cfg)?;
            let z = frame.dir(view[0], view[1]);
            (rotation_from(frame.up.cross(&z), frame.up), center, shape)
        }
        Category::Mug => {
            let (fit, handle, radius) = fit_mug_body(&local, cap_limit, cfg)?;
            let (dir, reach) = if handle.len() >= cfg.handle_min_points {
                let dir = handle_direction(&handle, &fit.center);
                let outer = handle.iter().map(|p| fit.radial(p)).fold(0.0, f64::max);
                (dir, (outer - radius).max(0.0))
            } else {
                ([-view[0], -view[1]], cfg.default_handle_reach * radius)
            };
            let x = frame.dir(dir[0], dir[1]);
            let center = [fit.center[0] + dir[0] * reach / 2.0, fit.center[1] + dir[1] * reach / 2.0];
            let shape = ShapeParams::Mug {
                radius,
                height,
                handle_reach: reach,
                handle_width: cfg.handle_width * radius,
                handle_span: cfg.handle_span,
            };
            (rotation_from(x, frame.up), center, shape)
        }
        Category::Laptop | Category::Camera => {
            let flat: Vec<[f64; 2]> = local.iter().map(|p| [p[0], p[1]]).collect();
            let pca = {
                let m: Vec<Vec3> = flat.iter().map(|p| Vec3::new(p[0], p[1], 0.0)).collect();
                let c = centroid(&m).unwrap_or_default();
                let [_, _, (_, v)] = sorted_eigen(&covariance(&m, &c));
                [v.x, v.y]
            };
            let (axis, center, along, across) = min_area_rect(&flat, pca);
            // Canonical x is the long side for both box categories.
            let (mut xa, width, depth) = if along >= across {
                (axis, along, across)
            } else {
                ([-axis[1], axis[0]], across, along)
            };
            // z = x × up must face the viewer.
            let x3 = frame.dir(xa[0], xa[1]);
            let z3 = x3.cross(&frame.up);
            if z3.dot(&frame.dir(view[0], view[1])) < 0.0 {
                xa = [-xa[0], -xa[1]];
            }
            let shape = ShapeParams::Cuboid { width, height, depth };
            (rotation_from(frame.dir(xa[0], xa[1]), frame.up), center, shape)
        }
    };

    let translation = frame.world(center2[0], center2[1], mid);
    let pose = Pose::new(rotation, translation);
    let residual = (pts
        .iter()
        .map(|p| shape.sdf(&pose.inverse_transform_point(p)).powi(2))
        .sum::<f64>()
        / pts.len() as f64)
        .sqrt();
    Ok(PoseEstimate {
        pose,
        size: shape.extents(),
        category,
        symmetry: SymmetryClass::of(category),
        shape,
        residual,
    })
}

/// Dense canonical-frame surface sample of a primitive.
pub fn canonical_template(shape: &ShapeParams) -> PointCloud {
    PointCloud::new(shape.template(), crate::geom::Provenance::Object)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 4.0);
        assert!((percentile(&v, 0.5) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn circle_fit_exact() {
        let pts: Vec<[f64; 3]> = (0..50)
            .map(|i| {
                let a = i as f64 * 0.05;
                [0.3 + 0.04 * a.cos(), -0.1 + 0.04 * a.sin(), 0.01 * i as f64]
            })
            .collect();
        let f = fit_circle(&pts, 0).unwrap();
        assert!((f.center[0] - 0.3).abs() < 1e-9 && (f.center[1] + 0.1).abs() < 1e-9);
        assert!((f.radius_at(0.0) - 0.04).abs() < 1e-9);
        let cone: Vec<[f64; 3]> = (0..200)
            .map(|i| {
                let a = i as f64 * 0.3;
                let h = (i % 20) as f64 * 0.003;
                let r = 0.05 + 0.4 * h;
                [r * a.cos(), r * a.sin(), h]
            })
            .collect();
        let f = fit_circle(&cone, 2).unwrap();
        assert!((f.radius_at(0.03) - 0.062).abs() < 1e-9);
    }

    #[test]
    fn min_rect_of_rotated_rectangle() {
        let th: f64 = 0.4;
        let (c, s) = (th.cos(), th.sin());
        let pts: Vec<[f64; 2]> = (0..=20)
            .flat_map(|i| (0..=10).map(move |j| (i as f64 * 0.01 - 0.1, j as f64 * 0.01 - 0.05)))
            .map(|(a, b)| [1.0 + c * a - s * b, 2.0 + s * a + c * b])
            .collect();
        let (axis, center, along, across) = min_area_rect(&pts, [1.0, 0.0]);
        let (long, short) = if along > across { (along, across) } else { (across, along) };
        assert!((long - 0.2).abs() < 1e-9 && (short - 0.1).abs() < 1e-9);
        assert!((center[0] - 1.0).abs() < 1e-9 && (center[1] - 2.0).abs() < 1e-9);
        let dot = (axis[0] * c + axis[1] * s).abs().max((axis[0] * -s + axis[1] * c).abs());
        assert!((dot - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_points() {
        let cloud = PointCloud::new(vec![Vec3::z(); 10], crate::geom::Provenance::Object);
        let r = estimate_pose(&cloud, Category::Can, None, &PoseConfig::default());
        assert!(matches!(r, Err(Error::InsufficientPoints { got: 10, need: 30 })));
    }

    #[test]
    fn collinear_is_degenerate() {
        let cloud = PointCloud::new(
            (0..40).map(|i| Vec3::new(0.0, 0.0, 1.0 + i as f64 * 0.01)).collect(),
            crate::geom::Provenance::Object,
        );
        let r = estimate_pose(&cloud, Category::Can, None, &PoseConfig::default());
        assert!(matches!(r, Err(Error::DegenerateInput(_))));
    }
}

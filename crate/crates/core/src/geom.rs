//! Pinhole camera, rigid transforms and depth back-projection.
//!
//! Camera frame: +X right, +Y down, +Z forward. Depth is metric Z along the
//! optical axis, with `0.0` marking pixels that have no return.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            fx: 280.0,
            fy: 280.0,
            cx: 160.0,
            cy: 120.0,
            width: 320,
            height: 240,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.cx > 0.0
            && self.cx < self.width as f64
            && self.cy > 0.0
            && self.cy < self.height as f64;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid intrinsics {self:?}")))
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Unit-free ray direction (z = 1) through continuous pixel coordinates.
    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.u < self.width && p.v < self.height
    }
}

/// Integer pixel index: `u` is the column, `v` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pixel {
    pub u: u32,
    pub v: u32,
}

impl Pixel {
    pub fn new(u: u32, v: u32) -> Self {
        Self { u, v }
    }

    /// Row-major ordering key.
    pub fn row_major(&self) -> (u32, u32) {
        (self.v, self.u)
    }
}

/// Rigid transform `p' = R p + t`. Serialized with a row-major rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "PoseRepr", into = "PoseRepr")]
pub struct Pose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl From<Pose> for PoseRepr {
    fn from(p: Pose) -> Self {
        let r = &p.rotation;
        Self {
            rotation: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
            translation: [p.translation.x, p.translation.y, p.translation.z],
        }
    }
}

impl From<PoseRepr> for Pose {
    fn from(p: PoseRepr) -> Self {
        let r = p.rotation;
        Self {
            rotation: Mat3::new(
                r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
            ),
            translation: Vec3::from(p.translation),
        }
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Maps a point from the target frame back into this pose's local frame.
    pub fn inverse_transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation.transpose() * (p - self.translation)
    }

    /// Largest deviation of `RᵀR` from identity and of `det R` from one.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.rotation.transpose() * self.rotation - Mat3::identity();
        let det = (self.rotation.determinant() - 1.0).abs();
        gram.abs().max().max(det)
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.rotation.iter().all(|v| v.is_finite())
            && self.translation.iter().all(|v| v.is_finite())
            && self.orthonormality_error() <= tol
    }
}

pub fn compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

pub fn invert(a: &Pose) -> Pose {
    a.inverse()
}

/// Rotation of `angle` radians about `axis` (need not be normalized).
pub fn axis_angle(axis: &Vec3, angle: f64) -> Mat3 {
    Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle).into_inner()
}

/// Geodesic distance between two rotations, in degrees within [0, 180].
///
/// Equals `acos((tr(A Bᵀ) - 1) / 2)`; evaluated through `atan2` of the sine
/// and cosine parts so it stays accurate near 0 and 180 degrees.
pub fn rotation_angle(a: &Mat3, b: &Mat3) -> f64 {
    let m = a * b.transpose();
    let cos = ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let sin = 0.5
        * Vec3::new(
            m[(2, 1)] - m[(1, 2)],
            m[(0, 2)] - m[(2, 0)],
            m[(1, 0)] - m[(0, 1)],
        )
        .norm();
    sin.atan2(cos).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Region,
    Object,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub provenance: Provenance,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>, provenance: Provenance) -> Self {
        Self { points, provenance }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Vec3> {
        centroid(&self.points)
    }
}

pub fn centroid(points: &[Vec3]) -> Option<Vec3> {
    if points.is_empty() {
        return None;
    }
    let sum = points.iter().fold(Vec3::zeros(), |acc, p| acc + p);
    Some(sum / points.len() as f64)
}

/// Population covariance about `mean`.
pub fn covariance(points: &[Vec3], mean: &Vec3) -> Mat3 {
    let mut c = Mat3::zeros();
    for p in points {
        let d = p - mean;
        c += d * d.transpose();
    }
    c / points.len().max(1) as f64
}

/// Eigenpairs of a symmetric matrix sorted by ascending eigenvalue.
pub fn sorted_eigen(m: &Mat3) -> [(f64, Vec3); 3] {
    let e = nalgebra::SymmetricEigen::new(*m);
    let mut pairs = [0, 1, 2].map(|i| (e.eigenvalues[i], e.eigenvectors.column(i).into_owned()));
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Least-squares plane through points: normal is the smallest-variance axis.
pub fn fit_plane(points: &[Vec3]) -> Option<Plane> {
    let mean = centroid(points)?;
    if points.len() < 3 {
        return None;
    }
    let [(_, n), (l1, _), _] = sorted_eigen(&covariance(points, &mean));
    (l1 > 0.0).then(|| Plane::from_point_normal(&mean, &n))
}

/// Row-major depth grid in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthMap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::Config(format!(
                "depth grid has {} values, expected {}x{}",
                values.len(),
                width,
                height
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("depth values must be finite and >= 0".into()));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: u32, height: u32, z: f64) -> Self {
        Self {
            width,
            height,
            values: vec![z; width as usize * height as usize],
        }
    }

    pub fn get(&self, p: Pixel) -> f64 {
        self.values[p.v as usize * self.width as usize + p.u as usize]
    }
}

/// Back-projects the given pixels into camera-frame points.
///
/// Pixels are visited in row-major order (duplicates collapse) and those
/// with zero depth are skipped.
pub fn backproject(depth: &DepthMap, k: &CameraIntrinsics, pixels: &[Pixel]) -> Result<PointCloud> {
    let mut sorted = pixels.to_vec();
    sorted.sort_unstable_by_key(Pixel::row_major);
    sorted.dedup();
    let mut points = Vec::with_capacity(sorted.len());
    for p in sorted {
        if p.u >= depth.width || p.v >= depth.height {
            return Err(Error::PixelOutOfBounds {
                u: p.u,
                v: p.v,
                width: depth.width,
                height: depth.height,
            });
        }
        let z = depth.get(p);
        if z > 0.0 {
            points.push(Vec3::new(
                (p.u as f64 - k.cx) * z / k.fx,
                (p.v as f64 - k.cy) * z / k.fy,
                z,
            ));
        }
    }
    Ok(PointCloud::new(points, Provenance::Region))
}

/// Projects a camera-frame point to continuous pixel coordinates.
pub fn project(point: &Vec3, k: &CameraIntrinsics) -> Result<(f64, f64)> {
    if point.z <= 0.0 {
        return Err(Error::BehindCamera { z: point.z });
    }
    Ok((
        k.fx * point.x / point.z + k.cx,
        k.fy * point.y / point.z + k.cy,
    ))
}

/// Oriented plane `normal · p + offset = 0` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane {
    pub fn new(normal: Vec3, offset: f64) -> Self {
        let n = normal.norm();
        Self {
            normal: normal / n,
            offset: offset / n,
        }
    }

    pub fn from_point_normal(point: &Vec3, normal: &Vec3) -> Self {
        let n = normal.normalize();
        Self {
            normal: n,
            offset: -n.dot(point),
        }
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) + self.offset
    }

    /// Flips the plane, if needed, so the camera origin lies on the positive side.
    pub fn facing_origin(self) -> Self {
        if self.offset < 0.0 {
            Self {
                normal: -self.normal,
                offset: -self.offset,
            }
        } else {
            self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics {
            fx: 500.0,
            fy: 500.0,
            cx: 160.0,
            cy: 120.0,
            width: 320,
            height: 240,
        }
    }

    #[test]
    fn principal_point_backprojects_onto_axis() {
        let mut d = DepthMap::filled(320, 240, 0.0);
        d.values[120 * 320 + 160] = 0.7;
        let cloud = backproject(&d, &k(), &[Pixel::new(160, 120)]).unwrap();
        assert_eq!(cloud.points, vec![Vec3::new(0.0, 0.0, 0.7)]);
    }

    #[test]
    fn pinhole_arithmetic() {
        let d = DepthMap::filled(320, 240, 1.0);
        let cloud = backproject(&d, &k(), &[Pixel::new(260, 120)]).unwrap();
        assert!((cloud.points[0] - Vec3::new(0.2, 0.0, 1.0)).norm() < 1e-12);
        let (u, v) = project(&Vec3::new(0.2, 0.0, 1.0), &k()).unwrap();
        assert!((u - 260.0).abs() < 1e-12 && (v - 120.0).abs() < 1e-12);
        assert_eq!(project(&Vec3::new(0.0, 0.0, 1.0), &k()).unwrap(), (160.0, 120.0));
    }

    #[test]
    fn zero_depth_is_skipped() {
        let d = DepthMap::filled(320, 240, 0.0);
        let px: Vec<_> = (0..50).map(|i| Pixel::new(i, i)).collect();
        assert!(backproject(&d, &k(), &px).unwrap().is_empty());
    }

    #[test]
    fn out_of_bounds_and_behind_camera() {
        let d = DepthMap::filled(320, 240, 1.0);
        assert!(matches!(
            backproject(&d, &k(), &[Pixel::new(320, 0)]),
            Err(Error::PixelOutOfBounds { .. })
        ));
        assert!(matches!(
            project(&Vec3::new(0.0, 0.0, -0.1), &k()),
            Err(Error::BehindCamera { .. })
        ));
    }

    #[test]
    fn output_follows_row_major_order() {
        let d = DepthMap::filled(320, 240, 1.0);
        let px = [Pixel::new(5, 9), Pixel::new(7, 2), Pixel::new(1, 9), Pixel::new(7, 2)];
        let cloud = backproject(&d, &k(), &px).unwrap();
        assert_eq!(cloud.len(), 3);
        assert!(cloud.points[0].y < cloud.points[1].y);
        assert!(cloud.points[1].x < cloud.points[2].x);
    }

    #[test]
    fn identity_laws() {
        let p = Pose::new(axis_angle(&Vec3::new(1.0, 2.0, 3.0), 0.4), Vec3::new(0.1, -0.2, 0.3));
        assert_eq!(compose(&Pose::identity(), &p), p);
        assert_eq!(invert(&Pose::identity()), Pose::identity());
    }

    #[test]
    fn single_axis_angles() {
        let a = axis_angle(&Vec3::new(0.3, -1.0, 0.2), 1.1);
        for (deg, axis) in [(90.0, Vec3::x()), (180.0, Vec3::y()), (33.0, Vec3::z())] {
            let b = axis_angle(&axis, f64::to_radians(deg)) * a;
            assert!((rotation_angle(&a, &b) - deg).abs() < 1e-6);
        }
        assert_eq!(rotation_angle(&a, &a), 0.0);
    }

    #[test]
    fn pose_serializes_row_major() {
        let mut r = Mat3::identity();
        r[(0, 1)] = 5.0;
        let json = serde_json::to_string(&Pose::new(r, Vec3::zeros())).unwrap();
        assert!(json.starts_with("{\"rotation\":[[1.0,5.0,0.0]"), "{json}");
        let back: Pose = serde_json::from_str(&json).unwrap();
        assert_eq!(back.rotation, r);
    }

    #[test]
    fn plane_orientation() {
        let p = Plane::new(Vec3::new(0.0, 2.0, 0.0), -1.0).facing_origin();
        assert!(p.signed_distance(&Vec3::zeros()) > 0.0);
        assert!((p.signed_distance(&Vec3::new(3.0, 0.5, 1.0))).abs() < 1e-12);
    }
}

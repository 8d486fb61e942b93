//! Deterministic synthetic tabletop scenes and their depth/label renders.

mod export;
mod render;
pub mod shape;

pub use export::{write_color_pgm, write_depth_pgm, SceneFile};
pub use render::{gt_crop, render, CropMode, ObjectRender, RenderedScene, RgbdFrame};
pub use shape::{Category, Color, ShapeParams, TABLE_LABEL, VOID_LABEL};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{axis_angle, project, CameraIntrinsics, Mat3, Plane, Pose, Vec3};
use crate::rng;

/// Camera placement relative to the table: looking down at `pitch_deg` below
/// horizontal, with the optical axis meeting the table `distance` meters away.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraSetup {
    pub intrinsics: CameraIntrinsics,
    pub pitch_deg: f64,
    pub distance: f64,
}

impl Default for CameraSetup {
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics::default(),
            pitch_deg: 45.0,
            distance: 0.9,
        }
    }
}

/// Table-aligned frame in camera coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableFrame {
    /// Where the optical axis meets the table.
    pub anchor: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    /// Along the table, away from the camera.
    pub forward: Vec3,
}

impl TableFrame {
    pub fn new(setup: &CameraSetup) -> Self {
        let th = setup.pitch_deg.to_radians();
        Self {
            anchor: Vec3::new(0.0, 0.0, setup.distance),
            right: Vec3::x(),
            up: Vec3::new(0.0, -th.cos(), -th.sin()),
            forward: Vec3::new(0.0, -th.sin(), th.cos()),
        }
    }

    pub fn plane(&self) -> Plane {
        Plane::from_point_normal(&self.anchor, &self.up)
    }

    /// Camera-frame point at table coordinates `(x, f)` and height `h`.
    pub fn point(&self, x: f64, f: f64, h: f64) -> Vec3 {
        self.anchor + x * self.right + f * self.forward + h * self.up
    }

    /// Table coordinates `(x, f)` of the camera center.
    pub fn camera_xy(&self) -> [f64; 2] {
        let rel = -self.anchor;
        [rel.dot(&self.right), rel.dot(&self.forward)]
    }

    /// Rotation of an upright object with yaw `psi`. Canonical +X maps to
    /// table direction `(cos psi, sin psi)`; at zero yaw canonical +Z faces
    /// the camera.
    pub fn upright(&self, psi: f64) -> Mat3 {
        let base = Mat3::from_columns(&[self.right, self.up, -self.forward]);
        base * axis_angle(&Vec3::y(), psi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn sample(&self, rng: &mut rng::Rng) -> f64 {
        if self.max > self.min {
            rng.random_range(self.min..self.max)
        } else {
            self.min
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapeRanges {
    pub bottle_radius: Range,
    pub bottle_height: Range,
    pub can_radius: Range,
    pub can_height: Range,
    pub bowl_top_radius: Range,
    /// Bottom radius as a fraction of the top radius.
    pub bowl_bottom_ratio: Range,
    pub bowl_height: Range,
    pub mug_radius: Range,
    pub mug_height: Range,
    pub mug_handle_reach: Range,
    pub mug_handle_width: f64,
    pub mug_handle_span: [f64; 2],
    pub laptop_size: [Range; 3],
    pub camera_size: [Range; 3],
}

impl Default for ShapeRanges {
    fn default() -> Self {
        Self {
            bottle_radius: Range::new(0.025, 0.04),
            bottle_height: Range::new(0.16, 0.24),
            can_radius: Range::new(0.03, 0.045),
            can_height: Range::new(0.08, 0.13),
            bowl_top_radius: Range::new(0.06, 0.085),
            bowl_bottom_ratio: Range::new(0.55, 0.75),
            bowl_height: Range::new(0.045, 0.07),
            mug_radius: Range::new(0.035, 0.045),
            mug_height: Range::new(0.08, 0.11),
            mug_handle_reach: Range::new(0.025, 0.035),
            mug_handle_width: 0.014,
            mug_handle_span: [0.15, 0.85],
            laptop_size: [
                Range::new(0.2, 0.26),
                Range::new(0.02, 0.03),
                Range::new(0.14, 0.18),
            ],
            camera_size: [
                Range::new(0.09, 0.13),
                Range::new(0.06, 0.085),
                Range::new(0.045, 0.065),
            ],
        }
    }
}

impl ShapeRanges {
    pub fn sample(&self, category: Category, rng: &mut rng::Rng) -> ShapeParams {
        match category {
            Category::Bottle => ShapeParams::Cylinder {
                radius: self.bottle_radius.sample(rng),
                height: self.bottle_height.sample(rng),
            },
            Category::Can => ShapeParams::Cylinder {
                radius: self.can_radius.sample(rng),
                height: self.can_height.sample(rng),
            },
            Category::Bowl => {
                let top = self.bowl_top_radius.sample(rng);
                ShapeParams::Frustum {
                    bottom_radius: top * self.bowl_bottom_ratio.sample(rng),
                    top_radius: top,
                    height: self.bowl_height.sample(rng),
                }
            }
            Category::Mug => ShapeParams::Mug {
                radius: self.mug_radius.sample(rng),
                height: self.mug_height.sample(rng),
                handle_reach: self.mug_handle_reach.sample(rng),
                handle_width: self.mug_handle_width,
                handle_span: self.mug_handle_span,
            },
            Category::Laptop | Category::Camera => {
                let r = if category == Category::Laptop {
                    &self.laptop_size
                } else {
                    &self.camera_size
                };
                ShapeParams::Cuboid {
                    width: r[0].sample(rng),
                    height: r[1].sample(rng),
                    depth: r[2].sample(rng),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub object_count: usize,
    pub categories: Vec<Category>,
    pub colors: Vec<Color>,
    pub camera: CameraSetup,
    /// Table-plane placement region: `x` across, `f` away from the camera.
    pub table_x: Range,
    pub table_f: Range,
    /// Minimum free distance between footprints. Lower it to force
    /// near-contact scenes.
    pub min_gap: f64,
    /// Boxes are yawed so canonical +Z stays within this angle of the
    /// direction to the camera.
    pub box_yaw_limit_deg: f64,
    pub depth_step: f64,
    pub max_attempts: usize,
    pub shapes: ShapeRanges,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            object_count: 5,
            categories: Category::ALL.to_vec(),
            colors: Color::ALL.to_vec(),
            camera: CameraSetup::default(),
            table_x: Range::new(-0.28, 0.28),
            table_f: Range::new(-0.2, 0.25),
            min_gap: 0.03,
            box_yaw_limit_deg: 70.0,
            depth_step: 0.001,
            max_attempts: 1000,
            shapes: ShapeRanges::default(),
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.object_count) {
            return Err(Error::Config(format!(
                "object_count must be in 1..=8, got {}",
                self.object_count
            )));
        }
        if self.categories.is_empty() || self.colors.is_empty() {
            return Err(Error::Config("categories and colors must be non-empty".into()));
        }
        if self.depth_step < 0.0 || self.min_gap < 0.0 {
            return Err(Error::Config("depth_step and min_gap must be >= 0".into()));
        }
        self.camera.intrinsics.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: u32,
    pub category: Category,
    pub color: Color,
    /// Object-to-camera transform of the canonical frame.
    pub pose: Pose,
    /// Tight canonical extents (x: width, y: height, z: depth).
    pub size: Vec3,
    pub shape: ShapeParams,
}

impl ObjectInstance {
    /// Footprint on the table in `(x, f)` coordinates.
    pub fn footprint(&self, table: &TableFrame) -> Footprint {
        footprint_at(table, &self.pose, &self.shape)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    pub camera: CameraSetup,
    pub table_plane: Plane,
    pub depth_step: f64,
    pub objects: Vec<ObjectInstance>,
}

impl SceneSpec {
    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.camera.intrinsics
    }

    pub fn table(&self) -> TableFrame {
        TableFrame::new(&self.camera)
    }

    pub fn object(&self, id: u32) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }
}

/// Footprint of an upright object on the table plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Footprint {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    /// Rectangle with half extents along local axes, the first rotated by
    /// `angle` from the table x-axis.
    Rect {
        center: [f64; 2],
        half: [f64; 2],
        angle: f64,
    },
}

impl Footprint {
    pub fn center(&self) -> [f64; 2] {
        match *self {
            Footprint::Circle { center, .. } | Footprint::Rect { center, .. } => center,
        }
    }

    fn corners(center: [f64; 2], half: [f64; 2], angle: f64) -> [[f64; 2]; 4] {
        let (s, c) = angle.sin_cos();
        let ax = [c * half[0], s * half[0]];
        let ay = [-s * half[1], c * half[1]];
        [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)].map(|(a, b)| {
            [
                center[0] + a * ax[0] + b * ay[0],
                center[1] + a * ax[1] + b * ay[1],
            ]
        })
    }

    /// Free distance between the two shapes; zero or negative when they touch.
    pub fn distance(&self, other: &Footprint) -> f64 {
        match (*self, *other) {
            (
                Footprint::Circle {
                    center: a,
                    radius: ra,
                },
                Footprint::Circle {
                    center: b,
                    radius: rb,
                },
            ) => ((a[0] - b[0]).hypot(a[1] - b[1])) - ra - rb,
            (Footprint::Circle { center, radius }, Footprint::Rect { center: rc, half, angle })
            | (Footprint::Rect { center: rc, half, angle }, Footprint::Circle { center, radius }) => {
                let (s, c) = angle.sin_cos();
                let (dx, dy) = (center[0] - rc[0], center[1] - rc[1]);
                let local = [(c * dx + s * dy).abs() - half[0], (-s * dx + c * dy).abs() - half[1]];
                let outside = local[0].max(0.0).hypot(local[1].max(0.0));
                outside + local[0].max(local[1]).min(0.0) - radius
            }
            (
                Footprint::Rect {
                    center: ca,
                    half: ha,
                    angle: aa,
                },
                Footprint::Rect {
                    center: cb,
                    half: hb,
                    angle: ab,
                },
            ) => {
                let pa = Self::corners(ca, ha, aa);
                let pb = Self::corners(cb, hb, ab);
                if polygons_overlap(&pa, &pb) {
                    return 0.0;
                }
                let mut d = f64::INFINITY;
                for (poly, other) in [(&pa, &pb), (&pb, &pa)] {
                    for p in poly.iter() {
                        for i in 0..4 {
                            d = d.min(point_segment(*p, other[i], other[(i + 1) % 4]));
                        }
                    }
                }
                d
            }
        }
    }
}

fn point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (a[0] + t * dx - p[0]).hypot(a[1] + t * dy - p[1])
}

/// Separating-axis test for convex quadrilaterals.
fn polygons_overlap(a: &[[f64; 2]; 4], b: &[[f64; 2]; 4]) -> bool {
    for poly in [a, b] {
        for i in 0..4 {
            let e = [poly[(i + 1) % 4][0] - poly[i][0], poly[(i + 1) % 4][1] - poly[i][1]];
            let n = [-e[1], e[0]];
            let proj = |q: &[[f64; 2]; 4]| {
                q.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    let v = p[0] * n[0] + p[1] * n[1];
                    (lo.min(v), hi.max(v))
                })
            };
            let (a0, a1) = proj(a);
            let (b0, b1) = proj(b);
            if a1 < b0 || b1 < a0 {
                return false;
            }
        }
    }
    true
}

fn footprint_at(table: &TableFrame, pose: &Pose, shape: &ShapeParams) -> Footprint {
    let rel = pose.translation - table.anchor;
    let center = [rel.dot(&table.right), rel.dot(&table.forward)];
    let x_axis = pose.rotation.column(0).into_owned();
    let angle = x_axis.dot(&table.forward).atan2(x_axis.dot(&table.right));
    match *shape {
        ShapeParams::Cylinder { radius, .. } => Footprint::Circle { center, radius },
        ShapeParams::Frustum {
            bottom_radius,
            top_radius,
            ..
        } => Footprint::Circle {
            center,
            radius: bottom_radius.max(top_radius),
        },
        _ => {
            let e = shape.extents();
            Footprint::Rect {
                center,
                half: [e.x / 2.0, e.z / 2.0],
                angle,
            }
        }
    }
}

fn corners_in_view(k: &CameraIntrinsics, pose: &Pose, size: &Vec3, margin: f64) -> bool {
    let h = size / 2.0;
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                let p = pose.transform_point(&Vec3::new(sx * h.x, sy * h.y, sz * h.z));
                match project(&p, k) {
                    Ok((u, v))
                        if u >= margin
                            && v >= margin
                            && u <= k.width as f64 - 1.0 - margin
                            && v <= k.height as f64 - 1.0 - margin => {}
                    _ => return false,
                }
            }
        }
    }
    true
}

/// Samples an upright, non-overlapping, fully visible arrangement.
pub fn generate_scene(config: &SceneConfig, seed: u64) -> Result<SceneSpec> {
    config.validate()?;
    let mut rng = rng::rng(seed);
    let table = TableFrame::new(&config.camera);
    let cam_xy = table.camera_xy();

    let drafts: Vec<(Category, Color, ShapeParams)> = (0..config.object_count)
        .map(|_| {
            let category = config.categories[rng.random_range(0..config.categories.len())];
            let color = config.colors[rng.random_range(0..config.colors.len())];
            let shape = config.shapes.sample(category, &mut rng);
            (category, color, shape)
        })
        .collect();

    // Largest footprints go down first.
    let mut order: Vec<usize> = (0..drafts.len()).collect();
    order.sort_by(|&a, &b| {
        let ea = drafts[a].2.extents();
        let eb = drafts[b].2.extents();
        (eb.x * eb.z).total_cmp(&(ea.x * ea.z)).then(a.cmp(&b))
    });

    let mut placed: Vec<Option<(ObjectInstance, Footprint)>> = vec![None; drafts.len()];
    for &i in &order {
        let (category, color, shape) = drafts[i];
        let size = shape.extents();
        let mut found = None;
        for _ in 0..config.max_attempts {
            let x = config.table_x.sample(&mut rng);
            let f = config.table_f.sample(&mut rng);
            let psi = if matches!(category, Category::Laptop | Category::Camera) {
                let to_cam = (cam_xy[1] - f).atan2(cam_xy[0] - x);
                let lim = config.box_yaw_limit_deg.to_radians();
                // canonical +Z sits at angle psi - 90deg
                to_cam + rng.random_range(-lim..=lim) + std::f64::consts::FRAC_PI_2
            } else {
                rng.random_range(0.0..std::f64::consts::TAU)
            };
            let rotation = table.upright(psi);
            // Shift so the canonical origin (extents center) sits above (x, f).
            let pose = Pose::new(rotation, table.point(x, f, size.y / 2.0));
            let fp = footprint_at(&table, &pose, &shape);
            let clear = placed
                .iter()
                .flatten()
                .all(|(_, other)| fp.distance(other) >= config.min_gap);
            if clear && corners_in_view(&config.camera.intrinsics, &pose, &size, 2.0) {
                found = Some((
                    ObjectInstance {
                        id: i as u32,
                        category,
                        color,
                        pose,
                        size,
                        shape,
                    },
                    fp,
                ));
                break;
            }
        }
        match found {
            Some(v) => placed[i] = Some(v),
            None => {
                return Err(Error::PlacementFailed {
                    object: i,
                    attempts: config.max_attempts,
                })
            }
        }
    }

    Ok(SceneSpec {
        seed,
        camera: config.camera,
        table_plane: table.plane().facing_origin(),
        depth_step: config.depth_step,
        objects: placed.into_iter().map(|p| p.expect("placed").0).collect(),
    })
}

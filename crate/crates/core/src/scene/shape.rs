//! Category primitives in the canonical object frame.
//!
//! The canonical frame is centered on the tight extents box, +Y up. Solids of
//! revolution (bottle, can, bowl, mug body) share a conic description whose
//! radius varies linearly with height.

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Bottle,
    Bowl,
    Can,
    Mug,
    Laptop,
    Camera,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Bottle,
        Category::Bowl,
        Category::Can,
        Category::Mug,
        Category::Laptop,
        Category::Camera,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Category::Bottle => "bottle",
            Category::Bowl => "bowl",
            Category::Can => "can",
            Category::Mug => "mug",
            Category::Laptop => "laptop",
            Category::Camera => "camera",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Bottle, bowl and can look the same under rotation about canonical +Y.
    pub fn is_axial(&self) -> bool {
        matches!(self, Category::Bottle | Category::Bowl | Category::Can)
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Red,
    Green,
    Blue,
    Yellow,
}

/// Label stored in the color grid for table pixels.
pub const TABLE_LABEL: u8 = 0;
/// Label for rays that hit nothing.
pub const VOID_LABEL: u8 = 255;

impl Color {
    pub const ALL: [Color; 4] = [Color::Red, Color::Green, Color::Blue, Color::Yellow];

    pub fn name(&self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Yellow => "yellow",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Palette index in the color-label grid (1..=4).
    pub fn label(&self) -> u8 {
        match self {
            Color::Red => 1,
            Color::Green => 2,
            Color::Blue => 3,
            Color::Yellow => 4,
        }
    }

    pub fn from_label(label: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.label() == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeParams {
    Cylinder {
        radius: f64,
        height: f64,
    },
    Frustum {
        bottom_radius: f64,
        top_radius: f64,
        height: f64,
    },
    Cuboid {
        width: f64,
        height: f64,
        depth: f64,
    },
    /// Cylindrical body with a box handle protruding along canonical +X.
    /// The handle spans `handle_span` (fractions of the height from the base).
    Mug {
        radius: f64,
        height: f64,
        handle_reach: f64,
        handle_width: f64,
        handle_span: [f64; 2],
    },
}

/// Solid of revolution about +Y with radius `r0 + r1 * y` for `|y| <= h/2`,
/// centered at `(axis_x, 0)` in the xz-plane.
#[derive(Debug, Clone, Copy)]
struct Conic {
    axis_x: f64,
    r0: f64,
    r1: f64,
    half_h: f64,
}

#[derive(Debug, Clone, Copy)]
struct Cuboid {
    min: Vec3,
    max: Vec3,
}

const EPS: f64 = 1e-12;

impl Conic {
    fn radius_at(&self, y: f64) -> f64 {
        self.r0 + self.r1 * y
    }

    fn ray_entry(&self, o: &Vec3, d: &Vec3) -> Option<f64> {
        let (ty0, ty1) = slab(o.y, d.y, -self.half_h, self.half_h)?;
        let ox = o.x - self.axis_x;
        let k = |t: f64| {
            let x = ox + t * d.x;
            let z = o.z + t * d.z;
            let r = self.radius_at(o.y + t * d.y);
            x * x + z * z - r * r
        };
        // q(t) = a t² + b t + c
        let ry0 = self.r0 + self.r1 * o.y;
        let a = d.x * d.x + d.z * d.z - self.r1 * self.r1 * d.y * d.y;
        let b = 2.0 * (ox * d.x + o.z * d.z - ry0 * self.r1 * d.y);
        let c = ox * ox + o.z * o.z - ry0 * ry0;
        if k(ty0) <= 0.0 {
            return Some(ty0);
        }
        let mut roots = Vec::with_capacity(2);
        if a.abs() < EPS {
            if b.abs() > EPS {
                roots.push(-c / b);
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let s = disc.sqrt();
                let q = -0.5 * (b + b.signum() * s);
                roots.push(q / a);
                if q.abs() > EPS {
                    roots.push(c / q);
                }
            }
        }
        roots.sort_by(f64::total_cmp);
        roots
            .into_iter()
            .find(|t| *t >= ty0 && *t <= ty1 && self.radius_at(o.y + t * d.y) >= 0.0)
    }

    /// Signed distance through the (radial, height) half-plane profile.
    fn sdf(&self, p: &Vec3) -> f64 {
        let rho = ((p.x - self.axis_x).powi(2) + p.z * p.z).sqrt();
        let h = self.half_h;
        let rb = self.radius_at(-h);
        let rt = self.radius_at(h);
        let segs = [
            ((0.0, -h), (rb, -h)),
            ((rb, -h), (rt, h)),
            ((rt, h), (0.0, h)),
        ];
        let dist = segs
            .iter()
            .map(|(a, b)| segment_distance((rho, p.y), *a, *b))
            .fold(f64::INFINITY, f64::min);
        let inside = p.y.abs() <= h && rho <= self.radius_at(p.y);
        if inside {
            -dist
        } else {
            dist
        }
    }
}

impl Cuboid {
    fn centered(half: Vec3) -> Self {
        Self {
            min: -half,
            max: half,
        }
    }

    fn ray_entry(&self, o: &Vec3, d: &Vec3) -> Option<f64> {
        let (x0, x1) = slab(o.x, d.x, self.min.x, self.max.x)?;
        let (y0, y1) = slab(o.y, d.y, self.min.y, self.max.y)?;
        let (z0, z1) = slab(o.z, d.z, self.min.z, self.max.z)?;
        let t0 = x0.max(y0).max(z0);
        let t1 = x1.min(y1).min(z1);
        (t0 <= t1).then_some(t0)
    }

    fn sdf(&self, p: &Vec3) -> f64 {
        let c = (self.min + self.max) / 2.0;
        let half = (self.max - self.min) / 2.0;
        let q = (p - c).abs() - half;
        let outside = q.map(|v| v.max(0.0)).norm();
        outside + q.max().min(0.0)
    }
}

/// Parameter interval in which `o + t d` lies within `[lo, hi]` on one axis.
fn slab(o: f64, d: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if d.abs() < EPS {
        return (o >= lo && o <= hi).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let a = (lo - o) / d;
    let b = (hi - o) / d;
    Some((a.min(b), a.max(b)))
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    (cx * cx + cy * cy).sqrt()
}

impl ShapeParams {
    /// Tight extents `(x, y, z)` of the solid in its canonical frame.
    pub fn extents(&self) -> Vec3 {
        match *self {
            ShapeParams::Cylinder { radius, height } => Vec3::new(2.0 * radius, height, 2.0 * radius),
            ShapeParams::Frustum {
                bottom_radius,
                top_radius,
                height,
            } => {
                let r = bottom_radius.max(top_radius);
                Vec3::new(2.0 * r, height, 2.0 * r)
            }
            ShapeParams::Cuboid {
                width,
                height,
                depth,
            } => Vec3::new(width, height, depth),
            ShapeParams::Mug {
                radius,
                height,
                handle_reach,
                ..
            } => Vec3::new(2.0 * radius + handle_reach, height, 2.0 * radius),
        }
    }

    /// Canonical x-coordinate of the revolution axis, if the shape has one.
    pub fn axis_x(&self) -> Option<f64> {
        match *self {
            ShapeParams::Cylinder { .. } | ShapeParams::Frustum { .. } => Some(0.0),
            ShapeParams::Mug { handle_reach, .. } => Some(-handle_reach / 2.0),
            ShapeParams::Cuboid { .. } => None,
        }
    }

    fn conic(&self) -> Option<Conic> {
        match *self {
            ShapeParams::Cylinder { radius, height } => Some(Conic {
                axis_x: 0.0,
                r0: radius,
                r1: 0.0,
                half_h: height / 2.0,
            }),
            ShapeParams::Frustum {
                bottom_radius,
                top_radius,
                height,
            } => Some(Conic {
                axis_x: 0.0,
                r0: (bottom_radius + top_radius) / 2.0,
                r1: (top_radius - bottom_radius) / height,
                half_h: height / 2.0,
            }),
            ShapeParams::Mug {
                radius,
                height,
                handle_reach,
                ..
            } => Some(Conic {
                axis_x: -handle_reach / 2.0,
                r0: radius,
                r1: 0.0,
                half_h: height / 2.0,
            }),
            ShapeParams::Cuboid { .. } => None,
        }
    }

    fn cuboid(&self) -> Option<Cuboid> {
        match *self {
            ShapeParams::Cuboid {
                width,
                height,
                depth,
            } => Some(Cuboid::centered(Vec3::new(width, height, depth) / 2.0)),
            ShapeParams::Mug {
                radius,
                height,
                handle_reach,
                handle_width,
                handle_span,
            } => {
                let axis_x = -handle_reach / 2.0;
                let base = -height / 2.0;
                Some(Cuboid {
                    min: Vec3::new(axis_x, base + handle_span[0] * height, -handle_width / 2.0),
                    max: Vec3::new(
                        axis_x + radius + handle_reach,
                        base + handle_span[1] * height,
                        handle_width / 2.0,
                    ),
                })
            }
            _ => None,
        }
    }

    /// Distance along the ray `o + t d` (canonical frame) to the first
    /// surface hit, if any.
    pub fn ray_entry(&self, o: &Vec3, d: &Vec3) -> Option<f64> {
        let a = self.conic().and_then(|c| c.ray_entry(o, d)).filter(|t| *t > 0.0);
        let b = self.cuboid().and_then(|c| c.ray_entry(o, d)).filter(|t| *t > 0.0);
        match (a, b) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Signed distance to the solid (negative inside).
    pub fn sdf(&self, p: &Vec3) -> f64 {
        let a = self.conic().map(|c| c.sdf(p));
        let b = self.cuboid().map(|c| c.sdf(p));
        match (a, b) {
            (Some(a), Some(b)) => a.min(b),
            (a, b) => a.or(b).unwrap_or(f64::INFINITY),
        }
    }

    pub fn surface_distance(&self, p: &Vec3) -> f64 {
        self.sdf(p).abs()
    }

    /// Deterministic surface sampling in the canonical frame.
    pub fn template(&self) -> Vec<Vec3> {
        let mut pts = Vec::new();
        if let Some(c) = self.conic() {
            sample_conic(&c, &mut pts);
        }
        if let Some(b) = self.cuboid() {
            let start = pts.len();
            sample_cuboid(&b, &mut pts);
            if let Some(c) = self.conic() {
                // Mug: drop the handle part buried in the body, and body
                // samples inside the handle.
                let (body, handle) = pts.split_at(start);
                let body: Vec<Vec3> = body.iter().copied().filter(|p| b.sdf(p) >= -1e-12).collect();
                let handle: Vec<Vec3> = handle.iter().copied().filter(|p| c.sdf(p) >= -1e-12).collect();
                pts = body.into_iter().chain(handle).collect();
            }
        }
        pts
    }
}

fn sample_conic(c: &Conic, out: &mut Vec<Vec3>) {
    const ANGLES: usize = 96;
    const LEVELS: usize = 24;
    const RINGS: usize = 8;
    let angle = |i: usize| std::f64::consts::TAU * i as f64 / ANGLES as f64;
    for j in 0..=LEVELS {
        let y = -c.half_h + 2.0 * c.half_h * j as f64 / LEVELS as f64;
        let r = c.radius_at(y);
        for i in 0..ANGLES {
            let a = angle(i);
            out.push(Vec3::new(c.axis_x + r * a.cos(), y, r * a.sin()));
        }
    }
    for y in [-c.half_h, c.half_h] {
        let r = c.radius_at(y);
        out.push(Vec3::new(c.axis_x, y, 0.0));
        for k in 1..RINGS {
            let rk = r * k as f64 / RINGS as f64;
            for i in 0..ANGLES {
                let a = angle(i);
                out.push(Vec3::new(c.axis_x + rk * a.cos(), y, rk * a.sin()));
            }
        }
    }
}

fn sample_cuboid(b: &Cuboid, out: &mut Vec<Vec3>) {
    const N: usize = 20;
    let lerp = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / N as f64;
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [b.min[axis], b.max[axis]] {
            for i in 0..=N {
                for j in 0..=N {
                    let mut p = Vec3::zeros();
                    p[axis] = side;
                    p[u] = lerp(b.min[u], b.max[u], i);
                    p[v] = lerp(b.min[v], b.max[v], j);
                    out.push(p);
                }
            }
        }
    }
}

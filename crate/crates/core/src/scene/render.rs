use serde::{Deserialize, Serialize};

use super::shape::{TABLE_LABEL, VOID_LABEL};
use super::SceneSpec;
use crate::error::{Error, Result};
use crate::geom::{CameraIntrinsics, DepthMap, Pixel, Vec3};
use crate::raster::{BBox, Mask};

/// Sentinel in the winner-id grid for table or empty pixels.
pub const NO_OBJECT: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RgbdFrame {
    pub intrinsics: CameraIntrinsics,
    pub depth: DepthMap,
    /// Row-major palette labels (see [`super::Color::label`]).
    pub color: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRender {
    pub id: u32,
    pub mask: Mask,
    pub bbox: Option<BBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedScene {
    pub frame: RgbdFrame,
    /// Row-major id of the nearest object per pixel, [`NO_OBJECT`] elsewhere.
    pub winner: Vec<u32>,
    pub objects: Vec<ObjectRender>,
}

impl RenderedScene {
    pub fn object(&self, id: u32) -> Option<&ObjectRender> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn winner_at(&self, p: Pixel) -> u32 {
        self.winner[p.v as usize * self.frame.intrinsics.width as usize + p.u as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CropMode {
    Bbox,
    Mask,
}

/// Casts one ray per pixel center against every object and the table plane.
pub fn render(scene: &SceneSpec) -> RenderedScene {
    let k = scene.camera.intrinsics;
    let (w, h) = (k.width as usize, k.height as usize);
    let plane = scene.table_plane;

    struct Local {
        rt: crate::geom::Mat3,
        origin: Vec3,
        center: Vec3,
        radius2: f64,
    }
    let locals: Vec<Local> = scene
        .objects
        .iter()
        .map(|o| {
            let rt = o.pose.rotation.transpose();
            Local {
                rt,
                origin: -(rt * o.pose.translation),
                center: o.pose.translation,
                radius2: (o.size.norm() / 2.0 + 1e-6).powi(2),
            }
        })
        .collect();

    let mut depth = vec![0.0; w * h];
    let mut color = vec![VOID_LABEL; w * h];
    let mut winner = vec![NO_OBJECT; w * h];

    for v in 0..h {
        for u in 0..w {
            // z-component is 1, so the ray parameter equals depth.
            let d = k.ray(u as f64, v as f64);
            let mut best = f64::INFINITY;
            let mut label = VOID_LABEL;
            let mut id = NO_OBJECT;
            let denom = plane.normal.dot(&d);
            if denom.abs() > 1e-12 {
                let t = -plane.offset / denom;
                if t > 0.0 {
                    best = t;
                    label = TABLE_LABEL;
                }
            }
            for (o, l) in scene.objects.iter().zip(&locals) {
                // bounding-sphere cull
                let tc = l.center.dot(&d) / d.norm_squared();
                if (l.center - tc * d).norm_squared() > l.radius2 {
                    continue;
                }
                if let Some(t) = o.shape.ray_entry(&l.origin, &(l.rt * d)) {
                    if t < best {
                        best = t;
                        label = o.color.label();
                        id = o.id;
                    }
                }
            }
            let i = v * w + u;
            if best.is_finite() {
                depth[i] = quantize(best, scene.depth_step);
                color[i] = label;
                winner[i] = id;
            }
        }
    }

    let objects = scene
        .objects
        .iter()
        .map(|o| {
            let mut mask = Mask::empty(k.width, k.height);
            for (i, wid) in winner.iter().enumerate() {
                if *wid == o.id {
                    mask.data[i] = true;
                }
            }
            let bbox = mask.bbox();
            ObjectRender { id: o.id, mask, bbox }
        })
        .collect();

    RenderedScene {
        frame: RgbdFrame {
            intrinsics: k,
            depth: DepthMap {
                width: k.width,
                height: k.height,
                values: depth,
            },
            color,
        },
        winner,
        objects,
    }
}

fn quantize(z: f64, step: f64) -> f64 {
    if step > 0.0 {
        ((z / step).round() * step).max(step)
    } else {
        z
    }
}

/// Ground-truth crop pixels of one object.
pub fn gt_crop(rendered: &RenderedScene, id: u32, mode: CropMode) -> Result<Vec<Pixel>> {
    let obj = rendered.object(id).ok_or(Error::UnknownObject(id))?;
    Ok(match mode {
        CropMode::Mask => obj.mask.pixels(),
        CropMode::Bbox => obj.bbox.map(|b| b.pixels()).unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{backproject, Pose};
    use crate::scene::{generate_scene, Category, Color, ObjectInstance, SceneConfig, ShapeParams, TableFrame};

    fn empty_scene() -> SceneSpec {
        let cfg = SceneConfig::default();
        let mut s = generate_scene(&SceneConfig { object_count: 1, ..cfg }, 0).unwrap();
        s.objects.clear();
        s
    }

    fn cylinder_at(scene: &mut SceneSpec, id: u32, x: f64, f: f64, radius: f64, height: f64) {
        let t = scene.table();
        let shape = ShapeParams::Cylinder { radius, height };
        scene.objects.push(ObjectInstance {
            id,
            category: Category::Can,
            color: Color::Red,
            pose: Pose::new(t.upright(0.0), t.point(x, f, height / 2.0)),
            size: shape.extents(),
            shape,
        });
    }

    #[test]
    fn empty_scene_shows_table_only() {
        let s = empty_scene();
        let r = render(&s);
        assert!(r.objects.is_empty());
        assert!(r.frame.color.iter().all(|c| *c == TABLE_LABEL));
        let k = s.camera.intrinsics;
        let all: Vec<Pixel> = (0..k.height)
            .flat_map(|v| (0..k.width).map(move |u| Pixel::new(u, v)))
            .collect();
        let cloud = backproject(&r.frame.depth, &k, &all).unwrap();
        assert_eq!(cloud.len(), all.len());
        let worst = cloud
            .points
            .iter()
            .map(|p| s.table_plane.signed_distance(p).abs())
            .fold(0.0, f64::max);
        assert!(worst < s.depth_step, "{worst}");
    }

    #[test]
    fn centered_cylinder_matches_analytic_hits() {
        let mut s = empty_scene();
        let (radius, height) = (0.04, 0.12);
        cylinder_at(&mut s, 0, 0.0, 0.0, radius, height);
        let r = render(&s);
        let k = s.camera.intrinsics;
        let bb = r.objects[0].bbox.unwrap();
        let (cu, _) = bb.center();
        assert!((cu - k.cx).abs() <= 1.0, "bbox center {cu}");

        // Analytic oracle: intersect pixel rays with the infinite cylinder
        // x² + (p·fwd − f0)² = r² in table coordinates and keep the near root.
        let t = TableFrame::new(&s.camera);
        let axis_base = t.point(0.0, 0.0, 0.0);
        let probes = [(160u32, 0.5f64), (155, 0.4), (165, 0.6), (158, 0.3), (162, 0.7)];
        for (u, frac) in probes {
            let col: Vec<u32> = (bb.y..bb.y2())
                .filter(|v| r.winner_at(Pixel::new(u, *v)) == 0)
                .collect();
            let v = col[(col.len() as f64 * frac) as usize];
            let d = k.ray(u as f64, v as f64);
            // side surface: |(p - base) - ((p - base)·up) up| = r
            let a = d - t.up * d.dot(&t.up);
            let b0 = -axis_base - t.up * (-axis_base).dot(&t.up);
            let (qa, qb, qc) = (a.norm_squared(), 2.0 * a.dot(&b0), b0.norm_squared() - radius * radius);
            let side = (-qb - (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
            // top cap
            let cap_plane = t.plane().signed_distance(&Vec3::zeros()) - height;
            let cap = cap_plane / -t.up.dot(&d);
            let side_height = t.plane().signed_distance(&(side * d));
            let expected = if (0.0..=height).contains(&side_height) {
                side
            } else {
                let p_cap = cap * d;
                let off_axis = (p_cap - axis_base) - t.up * (p_cap - axis_base).dot(&t.up);
                assert!(off_axis.norm() <= radius);
                cap
            };
            let got = r.frame.depth.get(Pixel::new(u, v));
            assert!((got - expected).abs() <= s.depth_step / 2.0 + 1e-9, "({u},{v}) {got} vs {expected}");
        }
    }

    #[test]
    fn nearer_object_wins() {
        let mut s = empty_scene();
        cylinder_at(&mut s, 0, 0.0, 0.15, 0.04, 0.1);
        cylinder_at(&mut s, 1, 0.0, -0.05, 0.05, 0.2);
        let r = render(&s);
        let m0 = &r.objects[0].mask;
        let m1 = &r.objects[1].mask;
        assert!(m0.data.iter().zip(&m1.data).all(|(a, b)| !(*a && *b)));
        // the far, shorter can is fully hidden behind the near tall one along
        // its centerline at mid-height
        let p = crate::geom::project(&s.objects[0].pose.translation, &s.camera.intrinsics).unwrap();
        let px = Pixel::new(p.0.round() as u32, p.1.round() as u32);
        assert_eq!(r.winner_at(px), 1);
        assert!(!m0.get(px));
    }

    #[test]
    fn crops_and_tight_bbox() {
        let cfg = SceneConfig::default();
        let s = generate_scene(&cfg, 21).unwrap();
        let r = render(&s);
        for o in &r.objects {
            let mask_px = gt_crop(&r, o.id, CropMode::Mask).unwrap();
            assert_eq!(mask_px, o.mask.pixels());
            let bbox_px = gt_crop(&r, o.id, CropMode::Bbox).unwrap();
            let bset: std::collections::HashSet<_> = bbox_px.iter().collect();
            assert!(mask_px.iter().all(|p| bset.contains(p)));
            for p in &mask_px {
                assert!(r.frame.depth.get(*p) > 0.0);
            }
            if let Some(b) = o.bbox {
                // shrinking any side drops a mask pixel
                assert!(mask_px.iter().any(|p| p.u == b.x));
                assert!(mask_px.iter().any(|p| p.u == b.x2() - 1));
                assert!(mask_px.iter().any(|p| p.v == b.y));
                assert!(mask_px.iter().any(|p| p.v == b.y2() - 1));
            }
        }
        assert!(matches!(gt_crop(&r, 99, CropMode::Mask), Err(Error::UnknownObject(99))));
    }
}

//! Pose metrics: oriented-box 3D IoU with symmetry handling, rotation and
//! translation errors, threshold accuracies and localization accuracy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{axis_angle, rotation_angle, Mat3, Pose, Vec3};
use crate::posefit::{PoseEstimate, SymmetryClass};
use crate::scene::{Category, ObjectInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub iou_thresholds: Vec<f64>,
    /// (degrees, centimeters) pairs; both must hold.
    pub pose_thresholds: Vec<(f64, f64)>,
    pub symmetry_yaw_samples: usize,
    /// Lines per side of the IoU integration grid.
    pub iou_grid: usize,
    /// Adds a 10 degree / 2 cm column labeled as a grasp proxy.
    pub grasp_proxy: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            iou_thresholds: vec![0.5, 0.75],
            pose_thresholds: vec![(5.0, 2.0), (5.0, 5.0), (10.0, 2.0)],
            symmetry_yaw_samples: 20,
            iou_grid: 50,
            grasp_proxy: false,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iou_thresholds.iter().any(|k| !(*k > 0.0 && *k <= 1.0)) {
            return Err(Error::Config("IoU thresholds must lie in (0, 1]".into()));
        }
        if self.pose_thresholds.iter().any(|(n, m)| !(*n > 0.0 && *m > 0.0)) {
            return Err(Error::Config("pose thresholds must be positive".into()));
        }
        if self.symmetry_yaw_samples < 4 {
            return Err(Error::Config("symmetry_yaw_samples must be >= 4".into()));
        }
        if self.iou_grid < 16 {
            return Err(Error::Config("iou_grid must be >= 16".into()));
        }
        Ok(())
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut cols: Vec<String> = self
            .iou_thresholds
            .iter()
            .map(|k| format!("IoU{}", fmt_num(k * 100.0)))
            .collect();
        cols.extend(
            self.pose_thresholds
                .iter()
                .map(|(n, m)| format!("{}deg{}cm", fmt_num(*n), fmt_num(*m))),
        );
        if self.grasp_proxy {
            cols.push("grasp_proxy_10deg2cm".into());
        }
        cols
    }
}

fn fmt_num(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v}")
    }
}

/// Oriented box: `pose` places the box center, `size` is the full extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub pose: Pose,
    pub size: Vec3,
}

impl OrientedBox {
    pub fn new(pose: Pose, size: Vec3) -> Self {
        Self { pose, size }
    }

    fn corners(&self) -> impl Iterator<Item = Vec3> + '_ {
        (0..8).map(move |i| {
            let s = Vec3::new(
                if i & 1 == 0 { -0.5 } else { 0.5 },
                if i & 2 == 0 { -0.5 } else { 0.5 },
                if i & 4 == 0 { -0.5 } else { 0.5 },
            );
            self.pose.transform_point(&self.size.component_mul(&s))
        })
    }

    /// Parameter interval where `o + t * d` lies inside the box.
    fn clip(&self, o: &Vec3, d: &Vec3) -> Option<(f64, f64)> {
        let rt = self.pose.rotation.transpose();
        let lo = rt * (o - self.pose.translation);
        let ld = rt * d;
        let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..3 {
            let h = self.size[k] / 2.0;
            if ld[k].abs() < 1e-15 {
                if lo[k].abs() > h {
                    return None;
                }
            } else {
                let (a, b) = ((-h - lo[k]) / ld[k], (h - lo[k]) / ld[k]);
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
            }
        }
        (t1 > t0).then_some((t0, t1))
    }
}

/// Box overlap by integrating exact chord lengths along a `grid`x`grid`
/// array of parallel lines over the union's axis-aligned bound.
pub fn box_iou(a: &OrientedBox, b: &OrientedBox, grid: usize) -> f64 {
    let (mut lo, mut hi) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
    for c in a.corners().chain(b.corners()) {
        lo = lo.inf(&c);
        hi = hi.sup(&c);
    }
    let span = hi - lo;
    let dir = Vec3::z();
    let (mut va, mut vb, mut vi) = (0.0, 0.0, 0.0);
    for i in 0..grid {
        let x = lo.x + span.x * (i as f64 + 0.5) / grid as f64;
        for j in 0..grid {
            let y = lo.y + span.y * (j as f64 + 0.5) / grid as f64;
            let o = Vec3::new(x, y, lo.z);
            let ia = a.clip(&o, &dir);
            let ib = b.clip(&o, &dir);
            if let Some((s, e)) = ia {
                va += e - s;
            }
            if let Some((s, e)) = ib {
                vb += e - s;
            }
            if let (Some(p), Some(q)) = (ia, ib) {
                vi += (p.1.min(q.1) - p.0.max(q.0)).max(0.0);
            }
        }
    }
    let union = va + vb - vi;
    if union <= 0.0 {
        0.0
    } else {
        (vi / union).clamp(0.0, 1.0)
    }
}

/// 3D IoU of ground truth and prediction. For axial symmetry the prediction
/// is spun about the ground-truth axis and the best overlap is kept.
pub fn iou3d(
    gt_pose: &Pose,
    gt_size: &Vec3,
    pred_pose: &Pose,
    pred_size: &Vec3,
    symmetry: &SymmetryClass,
    cfg: &MetricConfig,
) -> f64 {
    let gt = OrientedBox::new(*gt_pose, *gt_size);
    match symmetry {
        SymmetryClass::None => box_iou(&gt, &OrientedBox::new(*pred_pose, *pred_size), cfg.iou_grid),
        SymmetryClass::Axial { axis } => {
            let world_axis = (gt_pose.rotation * axis).normalize();
            let n = cfg.symmetry_yaw_samples.max(1);
            let mut angles: Vec<f64> = (0..n).map(|i| std::f64::consts::TAU * i as f64 / n as f64).collect();
            angles.push(aligning_angle(&gt_pose.rotation, &pred_pose.rotation, &world_axis, axis));
            angles
                .into_iter()
                .map(|theta| {
                    let spin = axis_angle(&world_axis, theta);
                    let pose = Pose::new(
                        spin * pred_pose.rotation,
                        gt_pose.translation + spin * (pred_pose.translation - gt_pose.translation),
                    );
                    box_iou(&gt, &OrientedBox::new(pose, *pred_size), cfg.iou_grid)
                })
                .fold(0.0, f64::max)
        }
    }
}

/// Spin about `world_axis` that best lines up the prediction's in-plane
/// canonical axes with the ground truth's.
fn aligning_angle(gt: &Mat3, pred: &Mat3, world_axis: &Vec3, canonical_axis: &Vec3) -> f64 {
    let reference = if canonical_axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::z() };
    let flat = |v: Vec3| v - world_axis * v.dot(world_axis);
    let g = flat(gt * reference);
    let p = flat(pred * reference);
    if g.norm() < 1e-9 || p.norm() < 1e-9 {
        return 0.0;
    }
    let (g, p) = (g.normalize(), p.normalize());
    p.cross(&g).dot(world_axis).atan2(p.dot(&g))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub rotation_deg: f64,
    pub translation_cm: f64,
}

pub fn pose_error(gt: &Pose, pred: &Pose, symmetry: &SymmetryClass) -> PoseError {
    let rotation_deg = match symmetry {
        SymmetryClass::None => rotation_angle(&gt.rotation, &pred.rotation),
        SymmetryClass::Axial { axis } => {
            let a = gt.rotation * axis;
            let b = pred.rotation * axis;
            a.cross(&b).norm().atan2(a.dot(&b)).to_degrees()
        }
    };
    PoseError {
        rotation_deg,
        translation_cm: (pred.translation - gt.translation).norm() * 100.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub id: u32,
    pub pose: Pose,
    pub size: Vec3,
    pub category: Category,
    pub symmetry: SymmetryClass,
}

impl From<&ObjectInstance> for GroundTruth {
    fn from(o: &ObjectInstance) -> Self {
        Self {
            id: o.id,
            pose: o.pose,
            size: o.size,
            category: o.category,
            symmetry: SymmetryClass::of(o.category),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub gt: GroundTruth,
    pub pred: Option<PoseEstimate>,
    pub grounding_correct: bool,
}

/// Per-record quantities the threshold columns are read from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordScore {
    pub iou: f64,
    pub error: PoseError,
}

pub fn score_record(r: &EvalRecord, cfg: &MetricConfig) -> Option<RecordScore> {
    let p = r.pred.as_ref()?;
    Some(RecordScore {
        iou: iou3d(&r.gt.pose, &r.gt.size, &p.pose, &p.size, &r.gt.symmetry, cfg),
        error: pose_error(&r.gt.pose, &p.pose, &r.gt.symmetry),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub label: String,
    pub count: usize,
    /// Percentages in `MetricConfig::column_names` order.
    pub values: Vec<f64>,
    pub localization: f64,
}

impl MetricRow {
    pub fn get(&self, cfg: &MetricConfig, column: &str) -> Option<f64> {
        cfg.column_names().iter().position(|c| c == column).map(|i| self.values[i])
    }
}

/// Threshold accuracies from precomputed scores; `None` counts as a miss.
pub fn aggregate_scores(
    label: &str,
    scores: &[Option<RecordScore>],
    grounding: &[bool],
    cfg: &MetricConfig,
) -> Result<MetricRow> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = scores.len() as f64;
    let pct = |pass: &dyn Fn(&RecordScore) -> bool| {
        100.0 * scores.iter().filter(|s| s.as_ref().is_some_and(pass)).count() as f64 / n
    };
    let mut values: Vec<f64> = cfg.iou_thresholds.iter().map(|k| pct(&|s| s.iou >= *k)).collect();
    for (deg, cm) in &cfg.pose_thresholds {
        values.push(pct(&|s| s.error.rotation_deg < *deg && s.error.translation_cm < *cm));
    }
    if cfg.grasp_proxy {
        values.push(pct(&|s| s.error.rotation_deg <= 10.0 && s.error.translation_cm <= 2.0));
    }
    Ok(MetricRow {
        label: label.to_string(),
        count: scores.len(),
        values,
        localization: localization_from(grounding)?,
    })
}

pub fn aggregate(label: &str, records: &[EvalRecord], cfg: &MetricConfig) -> Result<MetricRow> {
    let scores: Vec<Option<RecordScore>> = records.par_iter().map(|r| score_record(r, cfg)).collect();
    let grounding: Vec<bool> = records.iter().map(|r| r.grounding_correct).collect();
    aggregate_scores(label, &scores, &grounding, cfg)
}

fn localization_from(flags: &[bool]) -> Result<f64> {
    if flags.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(100.0 * flags.iter().filter(|f| **f).count() as f64 / flags.len() as f64)
}

pub fn localization_accuracy(records: &[EvalRecord]) -> Result<f64> {
    localization_from(&records.iter().map(|r| r.grounding_correct).collect::<Vec<_>>())
}

/// CSV with a header row; one row per configuration label.
pub fn rows_to_csv(rows: &[MetricRow], cfg: &MetricConfig) -> String {
    let mut out = String::from("label,count,L_Auc");
    for c in cfg.column_names() {
        out.push(',');
        out.push_str(&c);
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{:.2}", r.label, r.count, r.localization));
        for v in &r.values {
            out.push_str(&format!(",{v:.2}"));
        }
        out.push('\n');
    }
    out
}

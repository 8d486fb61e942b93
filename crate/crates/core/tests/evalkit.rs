use lang6d::evalkit::{box_iou, iou3d, pose_error, MetricConfig, OrientedBox};
use lang6d::geom::{axis_angle, Mat3, Pose, Vec3};
use lang6d::posefit::SymmetryClass;
use lang6d::rng;
use proptest::prelude::*;
use rand::Rng as _;

fn random_box(r: &mut rng::Rng, spread: f64) -> OrientedBox {
    let axis = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
    let rot = axis_angle(&(axis + Vec3::new(0.0, 1e-3, 0.0)), r.random_range(-3.1..3.1));
    let t = Vec3::new(r.random_range(-spread..spread), r.random_range(-spread..spread), r.random_range(-spread..spread));
    let s = Vec3::new(r.random_range(0.03..0.2), r.random_range(0.03..0.2), r.random_range(0.03..0.2));
    OrientedBox::new(Pose::new(rot, t), s)
}

fn inside(b: &OrientedBox, p: &Vec3) -> bool {
    let l = b.pose.inverse_transform_point(p);
    (0..3).all(|k| l[k].abs() <= b.size[k] / 2.0)
}

/// Point-membership count on a regular 3D lattice over a shared cube.
fn lattice_iou(a: &OrientedBox, b: &OrientedBox, n: usize) -> f64 {
    let reach = |x: &OrientedBox| x.pose.translation.abs().max() + x.size.norm() / 2.0;
    let h = reach(a).max(reach(b));
    let (mut ia, mut ib, mut both) = (0usize, 0usize, 0usize);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let f = |q: usize| -h + 2.0 * h * (q as f64 + 0.5) / n as f64;
                let p = Vec3::new(f(i), f(j), f(k));
                let (x, y) = (inside(a, &p), inside(b, &p));
                ia += x as usize;
                ib += y as usize;
                both += (x && y) as usize;
            }
        }
    }
    let union = ia + ib - both;
    if union == 0 {
        0.0
    } else {
        both as f64 / union as f64
    }
}

#[test]
fn chord_integration_matches_lattice_oracle() {
    let mut r = rng::rng(21);
    let mut checked = 0;
    for _ in 0..40 {
        let a = random_box(&mut r, 0.04);
        let b = random_box(&mut r, 0.04);
        let oracle = lattice_iou(&a, &b, 120);
        let got = box_iou(&a, &b, 50);
        assert!((got - oracle).abs() < 0.02, "{got:.4} vs {oracle:.4}");
        checked += (oracle > 0.05) as usize;
    }
    assert!(checked >= 10);
}

#[test]
fn spec_examples() {
    let cfg = MetricConfig::default();
    let id = Pose::identity();
    let s = Vec3::new(0.1, 0.1, 0.1);
    assert!((iou3d(&id, &s, &id, &s, &SymmetryClass::None, &cfg) - 1.0).abs() < 0.02);
    let half = Pose::new(Mat3::identity(), Vec3::new(0.05, 0.0, 0.0));
    assert!((iou3d(&id, &s, &half, &s, &SymmetryClass::None, &cfg) - 1.0 / 3.0).abs() < 0.02);
    let spun = Pose::new(axis_angle(&Vec3::y(), 0.9), Vec3::zeros());
    let tall = Vec3::new(0.06, 0.12, 0.06);
    let axial = SymmetryClass::Axial { axis: Vec3::y() };
    assert!((iou3d(&id, &tall, &spun, &tall, &axial, &cfg) - 1.0).abs() < 0.02);
    let far = Pose::new(Mat3::identity(), Vec3::new(1.0, 0.0, 0.0));
    assert_eq!(iou3d(&id, &s, &far, &s, &SymmetryClass::None, &cfg), 0.0);

    let e = pose_error(&id, &Pose::new(axis_angle(&Vec3::x(), 10f64.to_radians()), Vec3::new(0.0, 0.0, 0.02)), &SymmetryClass::None);
    assert!((e.rotation_deg - 10.0).abs() < 0.5 && (e.translation_cm - 2.0).abs() < 0.01);
}

proptest! {
    #[test]
    fn iou_is_bounded_and_symmetric(seed in any::<u64>()) {
        let mut r = rng::rng(seed);
        let a = random_box(&mut r, 0.1);
        let b = random_box(&mut r, 0.1);
        let ab = box_iou(&a, &b, 50);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - box_iou(&b, &a, 50)).abs() < 0.02);
    }

    #[test]
    fn axial_error_depends_only_on_the_axis(seed in any::<u64>(), yaw in -3.2..3.2f64) {
        let mut r = rng::rng(seed);
        let gt = random_box(&mut r, 0.1).pose;
        let pred = random_box(&mut r, 0.1).pose;
        let axial = SymmetryClass::Axial { axis: Vec3::y() };
        let respun = Pose::new(pred.rotation * axis_angle(&Vec3::y(), yaw), pred.translation);
        let a = pose_error(&gt, &pred, &axial);
        let b = pose_error(&gt, &respun, &axial);
        prop_assert!((a.rotation_deg - b.rotation_deg).abs() < 1e-6);
        prop_assert_eq!(a.translation_cm, b.translation_cm);
    }
}

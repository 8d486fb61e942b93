//! Target selection: score each detection against a structured query with
//! subject, location and relation modules and rank by their weighted mean.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instruct::{LocationTerm, RelationKind, StructuredQuery};
use crate::raster::{BBox, Mask};
use crate::rng::Rng;
use crate::scene::{Category, Color, RenderedScene, SceneSpec};

/// Palette mass per color label, last bin is non-object (table) pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorHistogram(pub [f64; 5]);

impl ColorHistogram {
    pub fn from_labels(labels: impl IntoIterator<Item = u8>) -> Self {
        let mut counts = [0.0; 5];
        let mut total = 0.0;
        for l in labels {
            let bin = Color::from_label(l).map(|c| c.label() as usize - 1).unwrap_or(4);
            counts[bin] += 1.0;
            total += 1.0;
        }
        if total > 0.0 {
            counts.iter_mut().for_each(|c| *c /= total);
        }
        Self(counts)
    }

    pub fn one_hot(color: Color) -> Self {
        let mut h = [0.0; 5];
        h[color.label() as usize - 1] = 1.0;
        Self(h)
    }

    pub fn mass(&self, color: Color) -> f64 {
        self.0[color.label() as usize - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: u32,
    pub category: Category,
    pub bbox: BBox,
    pub mask: Mask,
    pub histogram: ColorHistogram,
    /// Mean valid depth over the mask, meters.
    pub mean_depth: f64,
}

impl Candidate {
    pub fn center_x(&self) -> f64 {
        self.bbox.center().0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageDims {
    pub width: u32,
    pub height: u32,
}

/// Absolute box encoding: normalized corners and relative area.
pub fn location_features(b: &BBox, dims: ImageDims) -> [f64; 5] {
    let (w, h) = (dims.width as f64, dims.height as f64);
    [
        b.x as f64 / w,
        b.y as f64 / h,
        b.x2() as f64 / w,
        b.y2() as f64 / h,
        b.area() as f64 / (w * h),
    ]
}

/// Neighbor encoding relative to `cand`: center offsets over the image size,
/// depth offset in meters, area ratio and a same-category flag.
pub fn relation_features(cand: &Candidate, neighbor: &Candidate, dims: ImageDims) -> [f64; 5] {
    let (cx, cy) = cand.bbox.center();
    let (nx, ny) = neighbor.bbox.center();
    [
        (nx - cx) / dims.width as f64,
        (ny - cy) / dims.height as f64,
        neighbor.mean_depth - cand.mean_depth,
        neighbor.bbox.area() as f64 / cand.bbox.area().max(1) as f64,
        if neighbor.category == cand.category { 1.0 } else { 0.0 },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundingConfig {
    /// Horizontal offset, as a fraction of image width, at which left/right
    /// compatibility saturates.
    pub relation_x_ramp: f64,
    /// Depth offset in meters at which behind/front compatibility saturates.
    pub depth_tau: f64,
    /// Module weights; each is applied only when the query uses the module.
    pub subject_weight: f64,
    pub location_weight: f64,
    pub relation_weight: f64,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        Self {
            relation_x_ramp: 0.1,
            depth_tau: 0.05,
            subject_weight: 1.0,
            location_weight: 1.0,
            relation_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModuleWeights {
    pub subject: f64,
    pub location: f64,
    pub relation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub id: u32,
    pub overall: f64,
    pub subject: f64,
    pub location: f64,
    pub relation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingResult {
    /// Descending by overall score, ties by ascending id.
    pub ranked: Vec<ScoreBreakdown>,
    pub weights: ModuleWeights,
}

impl GroundingResult {
    pub fn best(&self) -> &ScoreBreakdown {
        &self.ranked[0]
    }

    /// Gap between the winner and the runner-up (1 with a single candidate).
    pub fn margin(&self) -> f64 {
        match self.ranked.as_slice() {
            [a, b, ..] => a.overall - b.overall,
            [a] => a.overall,
            [] => 0.0,
        }
    }
}

pub fn subject_score(cand: &Candidate, q: &StructuredQuery) -> f64 {
    if cand.category != q.category {
        return 0.0;
    }
    if q.attributes.is_empty() {
        return 1.0;
    }
    let total: f64 = q
        .attributes
        .iter()
        .map(|a| Color::from_name(a).map_or(0.0, |c| cand.histogram.mass(c)))
        .sum();
    total / q.attributes.len() as f64
}

/// Scene depth range used by the front/back ramps.
pub fn depth_range(cands: &[Candidate]) -> (f64, f64) {
    cands.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
        (lo.min(c.mean_depth), hi.max(c.mean_depth))
    })
}

pub fn location_score(cand: &Candidate, q: &StructuredQuery, dims: ImageDims, depths: (f64, f64)) -> f64 {
    let e = location_features(&cand.bbox, dims);
    let xc = (e[0] + e[2]) / 2.0;
    let span = depths.1 - depths.0;
    let depth_frac = if span > 1e-12 {
        ((cand.mean_depth - depths.0) / span).clamp(0.0, 1.0)
    } else {
        0.5
    };
    q.location_terms
        .iter()
        .map(|t| match t {
            LocationTerm::Left => (1.0 - 2.0 * xc).clamp(0.0, 1.0),
            LocationTerm::Right => (2.0 * xc - 1.0).clamp(0.0, 1.0),
            LocationTerm::Front if span > 1e-12 => 1.0 - depth_frac,
            LocationTerm::BehindArea if span > 1e-12 => depth_frac,
            LocationTerm::Front | LocationTerm::BehindArea => 1.0,
        })
        .product()
}

fn compat(kind: RelationKind, e_rel: &[f64; 5], cfg: &GroundingConfig) -> f64 {
    let r = match kind {
        RelationKind::LeftOf => e_rel[0] / cfg.relation_x_ramp,
        RelationKind::RightOf => -e_rel[0] / cfg.relation_x_ramp,
        RelationKind::Behind => -e_rel[2] / cfg.depth_tau,
        RelationKind::FrontOf => e_rel[2] / cfg.depth_tau,
    };
    r.clamp(0.0, 1.0)
}

/// Best anchor support: max over other candidates of anchor match times
/// geometric compatibility. Zero without a relation or other candidates.
pub fn relation_score(
    cand: &Candidate,
    all: &[Candidate],
    q: &StructuredQuery,
    dims: ImageDims,
    cfg: &GroundingConfig,
) -> f64 {
    let Some(rel) = q.relation.as_deref() else {
        return 0.0;
    };
    all.iter()
        .filter(|a| a.id != cand.id)
        .map(|a| {
            let s = subject_score(a, &rel.anchor);
            if s == 0.0 {
                0.0
            } else {
                s * compat(rel.kind, &relation_features(cand, a, dims), cfg)
            }
        })
        .fold(0.0, f64::max)
}

pub fn ground(
    cands: &[Candidate],
    q: &StructuredQuery,
    dims: ImageDims,
    cfg: &GroundingConfig,
) -> Result<GroundingResult> {
    if cands.is_empty() {
        return Err(Error::NoCandidates);
    }
    let weights = ModuleWeights {
        subject: cfg.subject_weight,
        location: if q.location_terms.is_empty() { 0.0 } else { cfg.location_weight },
        relation: if q.relation.is_some() { cfg.relation_weight } else { 0.0 },
    };
    let wsum = weights.subject + weights.location + weights.relation;
    let depths = depth_range(cands);
    let mut ranked: Vec<ScoreBreakdown> = cands
        .iter()
        .map(|c| {
            let subject = subject_score(c, q);
            let location = if q.location_terms.is_empty() {
                1.0
            } else {
                location_score(c, q, dims, depths)
            };
            let relation = relation_score(c, cands, q, dims, cfg);
            let overall = if wsum > 0.0 {
                (weights.subject * subject + weights.location * location + weights.relation * relation) / wsum
            } else {
                0.0
            };
            ScoreBreakdown {
                id: c.id,
                overall,
                subject,
                location,
                relation,
            }
        })
        .collect();
    ranked.sort_by(|a, b| b.overall.total_cmp(&a.overall).then(a.id.cmp(&b.id)));
    Ok(GroundingResult { ranked, weights })
}

/// Oracle detector: one candidate per visible ground-truth object.
pub fn oracle_candidates(scene: &SceneSpec, rendered: &RenderedScene, min_pixels: usize) -> Vec<Candidate> {
    let labels = &rendered.frame.color;
    let depth = &rendered.frame.depth;
    scene
        .objects
        .iter()
        .filter_map(|o| {
            let r = rendered.object(o.id)?;
            let bbox = r.bbox?;
            let px = r.mask.pixels();
            if px.len() < min_pixels.max(1) {
                return None;
            }
            let w = rendered.frame.intrinsics.width as usize;
            let histogram =
                ColorHistogram::from_labels(px.iter().map(|p| labels[p.v as usize * w + p.u as usize]));
            let zs: Vec<f64> = px.iter().map(|p| depth.get(*p)).filter(|z| *z > 0.0).collect();
            let mean_depth = zs.iter().sum::<f64>() / zs.len().max(1) as f64;
            Some(Candidate {
                id: o.id,
                category: o.category,
                bbox,
                mask: r.mask.clone(),
                histogram,
                mean_depth,
            })
        })
        .collect()
}

/// Detector corruption: per-side box jitter and random category swaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoisyDetector {
    /// Max per-side box shift as a fraction of the box size.
    pub bbox_jitter: f64,
    /// Probability that a detection reports a wrong category.
    pub category_confusion: f64,
}

impl Default for NoisyDetector {
    fn default() -> Self {
        Self {
            bbox_jitter: 0.1,
            category_confusion: 0.05,
        }
    }
}

impl NoisyDetector {
    pub fn apply(&self, cands: &[Candidate], dims: ImageDims, rng: &mut Rng) -> Vec<Candidate> {
        cands
            .iter()
            .map(|c| {
                let mut c = c.clone();
                if self.bbox_jitter > 0.0 {
                    let j = self.bbox_jitter;
                    let (w, h) = (c.bbox.w as f64, c.bbox.h as f64);
                    let mut side = |extent: f64| (rng.random_range(-j..=j) * extent).round();
                    let x1 = (c.bbox.x as f64 + side(w)).clamp(0.0, dims.width as f64 - 1.0);
                    let y1 = (c.bbox.y as f64 + side(h)).clamp(0.0, dims.height as f64 - 1.0);
                    let x2 = (c.bbox.x2() as f64 + side(w)).clamp(x1 + 1.0, dims.width as f64);
                    let y2 = (c.bbox.y2() as f64 + side(h)).clamp(y1 + 1.0, dims.height as f64);
                    c.bbox = BBox::new(x1 as u32, y1 as u32, (x2 - x1) as u32, (y2 - y1) as u32);
                }
                if rng.random::<f64>() < self.category_confusion {
                    let others: Vec<Category> =
                        Category::ALL.into_iter().filter(|k| *k != c.category).collect();
                    c.category = others[rng.random_range(0..others.len())];
                }
                c
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instruct::StructuredQuery as Q;

    const DIMS: ImageDims = ImageDims {
        width: 320,
        height: 240,
    };

    fn cand(id: u32, category: Category, x: u32, depth: f64, hist: [f64; 5]) -> Candidate {
        Candidate {
            id,
            category,
            bbox: BBox::new(x, 100, 20, 20),
            mask: Mask::empty(1, 1),
            histogram: ColorHistogram(hist),
            mean_depth: depth,
        }
    }

    const RED: [f64; 5] = [1.0, 0.0, 0.0, 0.0, 0.0];
    const BLUE: [f64; 5] = [0.0, 0.0, 1.0, 0.0, 0.0];
    const YELLOW: [f64; 5] = [0.0, 0.0, 0.0, 1.0, 0.0];

    #[test]
    fn subject_gate_and_histogram_mass() {
        let bowl = cand(0, Category::Bowl, 10, 1.0, RED);
        assert_eq!(subject_score(&bowl, &Q::new(Category::Mug)), 0.0);
        let mug = cand(1, Category::Mug, 10, 1.0, RED);
        assert_eq!(subject_score(&mug, &Q::new(Category::Mug).with_attribute("red")), 1.0);
        let mixed = cand(2, Category::Mug, 10, 1.0, [0.8, 0.0, 0.0, 0.2, 0.0]);
        assert_eq!(subject_score(&mixed, &Q::new(Category::Mug).with_attribute("red")), 0.8);
        assert_eq!(subject_score(&mixed, &Q::new(Category::Mug).with_attribute("shiny")), 0.0);
    }

    #[test]
    fn location_ramp_endpoints() {
        let q = Q::new(Category::Mug).with_location(LocationTerm::Left);
        let mut c = cand(0, Category::Mug, 0, 1.0, RED);
        c.bbox = BBox::new(0, 0, 0, 10); // center x = 0
        assert_eq!(location_score(&c, &q, DIMS, (1.0, 1.0)), 1.0);
        c.bbox = BBox::new(150, 0, 20, 10); // center x = W/2
        assert_eq!(location_score(&c, &q, DIMS, (1.0, 1.0)), 0.0);
        let none = Q::new(Category::Mug);
        let r = ground(&[c], &none, DIMS, &GroundingConfig::default()).unwrap();
        assert_eq!(r.ranked[0].location, 1.0);
        assert_eq!(r.weights.location, 0.0);
    }

    #[test]
    fn relation_ramps() {
        let cfg = GroundingConfig::default();
        let q = Q::new(Category::Mug).with_relation(RelationKind::LeftOf, Q::new(Category::Bowl));
        let anchor = cand(1, Category::Bowl, 100, 1.0, RED);
        let left = cand(0, Category::Mug, 68, 1.0, RED); // 32 px = 0.1 W left
        assert_eq!(relation_score(&left, &[left.clone(), anchor.clone()], &q, DIMS, &cfg), 1.0);
        let same = cand(0, Category::Mug, 100, 1.0, RED);
        assert_eq!(relation_score(&same, &[same.clone(), anchor.clone()], &q, DIMS, &cfg), 0.0);
        assert_eq!(relation_score(&left, &[left.clone()], &q, DIMS, &cfg), 0.0);

        let behind = Q::new(Category::Mug).with_relation(RelationKind::Behind, Q::new(Category::Bowl));
        let far = cand(0, Category::Mug, 100, 1.025, RED);
        let s = relation_score(&far, &[far.clone(), anchor.clone()], &behind, DIMS, &cfg);
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn relation_takes_best_matching_anchor() {
        // Enumerate anchors by hand: only the yellow mug matches the anchor
        // query, so its compatibility is the score even though the blue mug
        // sits in a better position.
        let cfg = GroundingConfig::default();
        let q = Q::new(Category::Bowl)
            .with_relation(RelationKind::LeftOf, Q::new(Category::Mug).with_attribute("yellow"));
        let target = cand(0, Category::Bowl, 100, 1.0, BLUE);
        let yellow = cand(1, Category::Mug, 116, 1.0, YELLOW);
        let blue = cand(2, Category::Mug, 200, 1.0, BLUE);
        let all = [target.clone(), yellow, blue];
        let expected = [(1u32, 1.0 * (16.0 / 32.0)), (2, 0.0 * 1.0)]
            .iter()
            .map(|(_, v)| *v)
            .fold(0.0, f64::max);
        assert!((relation_score(&target, &all, &q, DIMS, &cfg) - expected).abs() < 1e-12);
    }

    #[test]
    fn ground_ranks_and_breaks_ties() {
        let cfg = GroundingConfig::default();
        let one = [cand(4, Category::Mug, 10, 1.0, RED)];
        let r = ground(&one, &Q::new(Category::Mug), DIMS, &cfg).unwrap();
        assert_eq!((r.best().id, r.best().overall), (4, 1.0));

        let q = Q::new(Category::Mug).with_attribute("red");
        let cands = [cand(0, Category::Mug, 10, 1.0, BLUE), cand(1, Category::Mug, 90, 1.0, RED)];
        // brute-force table: (subject) blue 0, red 1
        let r = ground(&cands, &q, DIMS, &cfg).unwrap();
        assert_eq!(r.ranked.iter().map(|s| s.id).collect::<Vec<_>>(), vec![1, 0]);

        let miss = ground(&cands, &Q::new(Category::Laptop), DIMS, &cfg).unwrap();
        assert_eq!(miss.best().overall, 0.0);
        assert_eq!(miss.best().id, 0);

        assert!(matches!(ground(&[], &q, DIMS, &cfg), Err(Error::NoCandidates)));
    }

    #[test]
    fn weighted_sum_uses_presence() {
        let cfg = GroundingConfig::default();
        let q = Q::new(Category::Mug)
            .with_location(LocationTerm::Right)
            .with_relation(RelationKind::FrontOf, Q::new(Category::Bowl));
        let target = cand(0, Category::Mug, 300, 1.0, RED);
        let anchor = cand(1, Category::Bowl, 10, 1.1, RED);
        let r = ground(&[target, anchor], &q, DIMS, &cfg).unwrap();
        let s = r.ranked.iter().find(|s| s.id == 0).unwrap();
        assert!((s.overall - (s.subject + s.location + s.relation) / 3.0).abs() < 1e-12);
        assert_eq!(s.relation, 1.0);
    }

    #[test]
    fn features_in_unit_range() {
        let e = location_features(&BBox::new(0, 0, 320, 240), DIMS);
        assert_eq!(e, [0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    proptest::proptest! {
        #[test]
        fn rescaling_histograms_keeps_ranking(
            masses in proptest::collection::vec(0.01f64..1.0, 2..6),
            factor in 0.1f64..10.0,
        ) {
            let cfg = GroundingConfig::default();
            let q = Q::new(Category::Mug).with_attribute("red");
            let make = |scale: f64| -> Vec<Candidate> {
                masses.iter().enumerate().map(|(i, m)| {
                    let raw = [m * scale, (1.0 - m) * scale, 0.0, 0.0, 0.0];
                    let total: f64 = raw.iter().sum();
                    cand(i as u32, Category::Mug, 10 * i as u32, 1.0, raw.map(|v| v / total))
                }).collect()
            };
            let a = ground(&make(1.0), &q, DIMS, &cfg).unwrap();
            let b = ground(&make(factor), &q, DIMS, &cfg).unwrap();
            let ids = |r: &GroundingResult| r.ranked.iter().map(|s| s.id).collect::<Vec<_>>();
            proptest::prop_assert_eq!(ids(&a), ids(&b));
        }

        #[test]
        fn more_matching_mass_never_lowers_rank(
            masses in proptest::collection::vec(0.0f64..1.0, 2..6),
            bump in 0.0f64..1.0,
        ) {
            let cfg = GroundingConfig::default();
            let q = Q::new(Category::Mug).with_attribute("red");
            let build = |m0: f64| -> Vec<Candidate> {
                masses.iter().enumerate().map(|(i, m)| {
                    let m = if i == 0 { m0 } else { *m };
                    cand(i as u32, Category::Mug, 10 * i as u32, 1.0, [m, 1.0 - m, 0.0, 0.0, 0.0])
                }).collect()
            };
            let rank = |r: &GroundingResult| r.ranked.iter().position(|s| s.id == 0).unwrap();
            let before = ground(&build(masses[0]), &q, DIMS, &cfg).unwrap();
            let after = ground(&build((masses[0] + bump).min(1.0)), &q, DIMS, &cfg).unwrap();
            proptest::prop_assert!(rank(&after) <= rank(&before));
        }
    }
}

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Instruction, Lexicon, Prefix, RelationKind, StructuredQuery};
use crate::error::{Error, Result};
use crate::grounding::{self, Candidate, GroundingConfig, ImageDims};
use crate::rng;
use crate::scene::{RenderedScene, SceneSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptionKind {
    /// Category only.
    A,
    /// Color and category.
    B,
    /// Category and a relation to a category-only anchor.
    C,
    /// Color, category and a relation to a colored anchor.
    D,
}

impl DescriptionKind {
    pub const ALL: [DescriptionKind; 4] = [Self::A, Self::B, Self::C, Self::D];

    pub fn name(&self) -> &'static str {
        match self {
            Self::A => "a",
            Self::B => "b",
            Self::C => "c",
            Self::D => "d",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Description {
    pub instruction: Instruction,
    pub query: StructuredQuery,
    pub kind: DescriptionKind,
    pub prefix: Prefix,
}

/// Builds verified-unambiguous instructions for a target object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Describer {
    pub lexicon: Lexicon,
    pub grounding: GroundingConfig,
    /// Required score gap between the target and the runner-up.
    pub min_margin: f64,
    /// Minimum relation score the target itself must reach, so emitted
    /// relations are true and not merely discriminative.
    pub min_relation: f64,
    /// Objects with fewer visible pixels are not described or used as anchors.
    pub min_pixels: usize,
}

impl Default for Describer {
    fn default() -> Self {
        Self {
            lexicon: Lexicon::default(),
            grounding: GroundingConfig::default(),
            min_margin: 0.2,
            min_relation: 0.75,
            min_pixels: 30,
        }
    }
}

impl Describer {
    pub fn new(lexicon: Lexicon) -> Self {
        Self {
            lexicon,
            ..Self::default()
        }
    }

    /// Prefix drawn uniformly from the lexicon's list.
    pub fn describe(
        &self,
        scene: &SceneSpec,
        rendered: &RenderedScene,
        target: u32,
        kind: DescriptionKind,
        seed: u64,
    ) -> Result<Description> {
        let mut r = rng::rng(seed);
        if self.lexicon.prefixes.is_empty() {
            return Err(Error::GenerationFailed("lexicon has no prefixes".into()));
        }
        let prefix = self.lexicon.prefixes[r.random_range(0..self.lexicon.prefixes.len())].clone();
        self.build(scene, rendered, target, kind, &prefix, &mut r)
    }

    pub fn describe_with_prefix(
        &self,
        scene: &SceneSpec,
        rendered: &RenderedScene,
        target: u32,
        kind: DescriptionKind,
        prefix: &Prefix,
        seed: u64,
    ) -> Result<Description> {
        let mut r = rng::rng(seed);
        self.build(scene, rendered, target, kind, prefix, &mut r)
    }

    fn build(
        &self,
        scene: &SceneSpec,
        rendered: &RenderedScene,
        target: u32,
        kind: DescriptionKind,
        prefix: &Prefix,
        r: &mut rng::Rng,
    ) -> Result<Description> {
        let obj = scene.object(target).ok_or(Error::UnknownObject(target))?;
        let cands = grounding::oracle_candidates(scene, rendered, self.min_pixels);
        if !cands.iter().any(|c| c.id == target) {
            return Err(Error::GenerationFailed(format!("object {target} is not visible enough")));
        }
        let dims = ImageDims {
            width: rendered.frame.intrinsics.width,
            height: rendered.frame.intrinsics.height,
        };
        let base = StructuredQuery::new(obj.category);
        let colored = base.clone().with_attribute(obj.color.name());

        let mut options: Vec<StructuredQuery> = match kind {
            DescriptionKind::A => vec![base],
            DescriptionKind::B => vec![colored],
            DescriptionKind::C | DescriptionKind::D => {
                let mut out = Vec::new();
                for a in cands.iter().filter(|c| c.id != target) {
                    let anchor_obj = scene.object(a.id).ok_or(Error::UnknownObject(a.id))?;
                    for rel in RelationKind::ALL {
                        let q = if kind == DescriptionKind::C {
                            base.clone().with_relation(rel, StructuredQuery::new(anchor_obj.category))
                        } else {
                            colored.clone().with_relation(
                                rel,
                                StructuredQuery::new(anchor_obj.category).with_attribute(anchor_obj.color.name()),
                            )
                        };
                        out.push(q);
                    }
                }
                out.shuffle(r);
                out
            }
        };
        let Some(query) = options.drain(..).find(|q| self.verify(&cands, q, target, dims)) else {
            return Err(Error::GenerationFailed(format!(
                "no unambiguous kind ({}) description for object {target}",
                kind.name()
            )));
        };
        let text = self.render_text(&query, prefix);
        Ok(Description {
            instruction: Instruction {
                text,
                gt_target_id: Some(target),
            },
            query,
            kind,
            prefix: prefix.clone(),
        })
    }

    fn verify(&self, cands: &[Candidate], q: &StructuredQuery, target: u32, dims: ImageDims) -> bool {
        let Ok(res) = grounding::ground(cands, q, dims, &self.grounding) else {
            return false;
        };
        let best = res.best();
        best.id == target
            && best.subject == 1.0
            && (q.relation.is_none() || best.relation >= self.min_relation)
            && (res.ranked.len() == 1 || res.margin() >= self.min_margin)
    }

    fn noun_phrase(&self, q: &StructuredQuery) -> String {
        let mut words: Vec<String> = q.attributes.clone();
        words.push(self.lexicon.category_word(q.category).to_string());
        if let Some(rel) = &q.relation {
            words.push(self.lexicon.relation_phrase(rel.kind));
            words.push("the".into());
            words.push(self.noun_phrase(&rel.anchor));
        }
        words.join(" ")
    }

    pub fn render_text(&self, q: &StructuredQuery, prefix: &Prefix) -> String {
        let (lead, trail) = prefix.split();
        let np = self.noun_phrase(q);
        let mut text = String::from(lead);
        if !prefix.ends_with_article(&self.lexicon) {
            text.push_str(" the");
        }
        text.push(' ');
        text.push_str(&np);
        if !trail.is_empty() {
            text.push(' ');
            text.push_str(trail);
        }
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Pose;
    use crate::instruct::parse;
    use crate::scene::{generate_scene, render, Category, Color, ObjectInstance, SceneConfig};

    fn scene_with(objs: &[(Category, Color, f64, f64)]) -> (SceneSpec, RenderedScene) {
        let cfg = SceneConfig::default();
        let mut scene = generate_scene(&SceneConfig { object_count: 1, ..cfg.clone() }, 1).unwrap();
        let table = scene.table();
        let mut r = rng::rng(9);
        scene.objects = objs
            .iter()
            .enumerate()
            .map(|(i, (cat, color, x, f))| {
                let shape = cfg.shapes.sample(*cat, &mut r);
                let size = shape.extents();
                let pose = Pose::new(table.upright(0.0), table.point(*x, *f, size.y / 2.0));
                ObjectInstance {
                    id: i as u32,
                    category: *cat,
                    color: *color,
                    pose,
                    size,
                    shape,
                }
            })
            .collect();
        let rendered = render(&scene);
        (scene, rendered)
    }

    #[test]
    fn unique_category_kind_a() {
        let (s, r) = scene_with(&[(Category::Mug, Color::Red, 0.0, 0.0), (Category::Bowl, Color::Blue, 0.15, 0.0)]);
        let d = Describer::default();
        let p = Prefix("Give me {}".into());
        let out = d.describe_with_prefix(&s, &r, 0, DescriptionKind::A, &p, 0).unwrap();
        assert_eq!(out.instruction.text, "Give me the mug");
        assert_eq!(out.instruction.gt_target_id, Some(0));
    }

    #[test]
    fn blue_bowl_behind_yellow_mug() {
        let (s, r) = scene_with(&[
            (Category::Bowl, Color::Blue, 0.0, 0.2),
            (Category::Mug, Color::Yellow, 0.0, -0.1),
            (Category::Bowl, Color::Blue, 0.2, -0.1),
        ]);
        let d = Describer::default();
        let p = Prefix("Pass me {}".into());
        let out = d.describe_with_prefix(&s, &r, 0, DescriptionKind::D, &p, 0).unwrap();
        assert_eq!(out.instruction.text, "Pass me the blue bowl behind the yellow mug");
        assert_eq!(parse(&out.instruction, &d.lexicon).unwrap(), out.query);
    }

    #[test]
    fn identical_pair_is_ambiguous() {
        let (s, r) = scene_with(&[(Category::Mug, Color::Red, -0.1, 0.0), (Category::Mug, Color::Red, 0.1, 0.0)]);
        let d = Describer::default();
        for kind in [DescriptionKind::A, DescriptionKind::B] {
            assert!(matches!(d.describe(&s, &r, 0, kind, 3), Err(Error::GenerationFailed(_))));
        }
    }

    #[test]
    fn article_from_prefix_is_not_doubled() {
        let d = Describer::default();
        let q = StructuredQuery::new(Category::Mug).with_attribute("red");
        assert_eq!(d.render_text(&q, &Prefix("Please give me a {}".into())), "Please give me a red mug");
        assert_eq!(d.render_text(&q, &Prefix("Hand {} to me".into())), "Hand the red mug to me");
    }

    #[test]
    fn unknown_target_errors() {
        let (s, r) = scene_with(&[(Category::Mug, Color::Red, 0.0, 0.0)]);
        let d = Describer::default();
        assert!(matches!(d.describe(&s, &r, 7, DescriptionKind::A, 0), Err(Error::UnknownObject(7))));
    }

    #[test]
    fn prefixes_cover_the_list() {
        let (s, r) = scene_with(&[(Category::Mug, Color::Red, 0.0, 0.0)]);
        let d = Describer::default();
        let seen: std::collections::BTreeSet<String> = (0..200)
            .map(|seed| d.describe(&s, &r, 0, DescriptionKind::A, seed).unwrap().prefix.0)
            .collect();
        assert_eq!(seen.len(), d.lexicon.prefixes.len());
    }
}

mod common;

use lang6d::grounding::{ground, oracle_candidates, ImageDims};
use lang6d::instruct::{parse, Describer, DescriptionKind, Instruction};
use proptest::prelude::*;

#[test]
fn generated_utterances_round_trip_and_ground() {
    let describer = Describer::default();
    assert_eq!(describer.lexicon.prefixes.len(), 6);
    let grid = common::utterance_grid(&describer, 10);
    assert_eq!(grid.len(), 6 * 4 * 10);
    for u in &grid {
        let d = &u.description;
        assert!(!d.instruction.text.trim().is_empty());
        let q = parse(&d.instruction, &describer.lexicon).unwrap();
        assert_eq!(q, d.query, "{:?}", d.instruction.text);
        if let Some(rel) = &q.relation {
            assert!(rel.anchor.relation.is_none(), "anchor nested");
        }

        let shouted = Instruction::new(format!("  {}  ", d.instruction.text.to_uppercase().replace(' ', "   ")));
        assert_eq!(parse(&shouted, &describer.lexicon).unwrap(), q);

        let cands = oracle_candidates(&u.scene, &u.rendered, describer.min_pixels);
        let dims = ImageDims {
            width: u.rendered.frame.intrinsics.width,
            height: u.rendered.frame.intrinsics.height,
        };
        let res = ground(&cands, &q, dims, &describer.grounding).unwrap();
        assert_eq!(Some(res.best().id), d.instruction.gt_target_id, "{:?}", d.instruction.text);
        assert_eq!(res, ground(&cands, &q, dims, &describer.grounding).unwrap());
        for w in res.ranked.windows(2) {
            assert!(w[0].overall > w[1].overall || (w[0].overall == w[1].overall && w[0].id < w[1].id));
        }
        for b in &res.ranked {
            for s in [b.overall, b.subject, b.location, b.relation] {
                assert!((0.0..=1.0).contains(&s));
            }
        }
    }
}

#[test]
fn kinds_have_their_components() {
    let describer = Describer::default();
    let prefix = &describer.lexicon.prefixes[0];
    for seed in 0..20 {
        for kind in DescriptionKind::ALL {
            let q = common::utterance(&describer, seed, kind, prefix).description.query;
            match kind {
                DescriptionKind::A => assert!(q.attributes.is_empty() && q.location_terms.is_empty() && q.relation.is_none()),
                DescriptionKind::B => assert!(!q.attributes.is_empty() && q.relation.is_none()),
                DescriptionKind::C => {
                    let anchor = &q.relation.as_ref().expect("relation").anchor;
                    assert!(q.attributes.is_empty() && anchor.attributes.is_empty());
                }
                DescriptionKind::D => {
                    let anchor = &q.relation.as_ref().expect("relation").anchor;
                    assert!(!q.attributes.is_empty() && !anchor.attributes.is_empty());
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn articles_never_matter(seed in 0u64..200, kind_i in 0usize..4, prefix_i in 0usize..6) {
        let describer = Describer::default();
        let prefix = &describer.lexicon.prefixes[prefix_i];
        let d = common::utterance(&describer, seed, DescriptionKind::ALL[kind_i], prefix).description;
        let bare: Vec<&str> = d
            .instruction
            .text
            .split_whitespace()
            .filter(|t| !describer.lexicon.is_article(&t.to_lowercase()))
            .collect();
        let stripped = Instruction::new(bare.join(" "));
        prop_assert_eq!(parse(&stripped, &describer.lexicon).unwrap(), d.query);
    }
}

#![allow(dead_code)]

use std::collections::HashMap;

use lang6d::instruct::{Describer, Description, DescriptionKind, Prefix};
use lang6d::rng;
use lang6d::scene::{generate_scene, render, RenderedScene, SceneConfig, SceneSpec};

pub struct Utterance {
    pub scene: SceneSpec,
    pub rendered: RenderedScene,
    pub description: Description,
}

/// First describable object of the first scene (derived from `seed`) that
/// has one, for the given kind and prefix.
pub fn utterance(describer: &Describer, seed: u64, kind: DescriptionKind, prefix: &Prefix) -> Utterance {
    utterance_cached(describer, seed, kind, prefix, &mut HashMap::new())
}

type Cache = HashMap<u64, Option<(SceneSpec, RenderedScene)>>;

fn utterance_cached(
    describer: &Describer,
    seed: u64,
    kind: DescriptionKind,
    prefix: &Prefix,
    cache: &mut Cache,
) -> Utterance {
    for attempt in 0..50u64 {
        let s = rng::derive_seed(seed, &[attempt]);
        let entry = cache.entry(s).or_insert_with(|| {
            generate_scene(&SceneConfig::default(), s)
                .ok()
                .map(|scene| {
                    let rendered = render(&scene);
                    (scene, rendered)
                })
        });
        let Some((scene, rendered)) = entry else { continue };
        for o in &scene.objects {
            if let Ok(d) = describer.describe_with_prefix(scene, rendered, o.id, kind, prefix, s) {
                return Utterance {
                    scene: scene.clone(),
                    rendered: rendered.clone(),
                    description: d,
                };
            }
        }
    }
    panic!("no {} description for seed {seed}", kind.name());
}

/// Every prefix x kind x seed combination, in that nesting order.
pub fn utterance_grid(describer: &Describer, seeds: u64) -> Vec<Utterance> {
    let mut cache = Cache::new();
    let mut out = Vec::new();
    for prefix in &describer.lexicon.prefixes {
        for kind in DescriptionKind::ALL {
            for seed in 0..seeds {
                out.push(utterance_cached(describer, seed, kind, prefix, &mut cache));
            }
        }
    }
    out
}

use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DetectorConfig, InputMode, PlaneSource, RunConfig};
use crate::cloudseg::{self, CropSpec, Expansion, NoiseSpec};
use crate::error::{Error, Result};
use crate::evalkit::{self, EvalRecord, GroundTruth, MetricRow, RecordScore};
use crate::geom::{Plane, PointCloud, Provenance};
use crate::grounding::{self, Candidate, GroundingResult, ImageDims};
use crate::instruct::{self, Describer, Description, DescriptionKind, Instruction, Lexicon, StructuredQuery};
use crate::posefit::{self, PoseEstimate};
use crate::rng::{self, stream};
use crate::scene::{self, CropMode, RenderedScene, SceneSpec};

/// Everything about a scene that does not depend on the crop, corruption,
/// segmentation or pose settings.
#[derive(Debug, Clone)]
pub struct PreparedScene {
    pub index: usize,
    pub seed: u64,
    pub scene: SceneSpec,
    pub rendered: RenderedScene,
    pub plane: Option<Plane>,
    pub candidates: Vec<Candidate>,
    pub descriptions: Vec<Description>,
    /// (target, kind) pairs for which no unambiguous description exists.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneIssue {
    pub index: usize,
    pub seed: u64,
    pub error: String,
}

/// Scenes shared by runs whose scene-side settings agree.
#[derive(Debug, Clone)]
pub struct SceneCorpus {
    key: String,
    pub scenes: Vec<PreparedScene>,
    pub failed: Vec<SceneIssue>,
}

/// Fields that determine the prepared scenes.
fn corpus_key(cfg: &RunConfig) -> String {
    serde_json::json!({
        "seed": cfg.seed,
        "scene_count": cfg.scene_count,
        "scene": cfg.scene,
        "instructions": cfg.instructions,
        "detector": cfg.detector,
        "grounding": cfg.grounding,
        "plane_source": cfg.plane_source,
        "plane": cfg.plane,
    })
    .to_string()
}

pub fn scene_seed(run_seed: u64, index: usize) -> u64 {
    rng::derive_seed(run_seed, &[stream::SCENE, index as u64])
}

fn kind_index(k: DescriptionKind) -> u64 {
    DescriptionKind::ALL.iter().position(|x| *x == k).unwrap_or(0) as u64
}

impl SceneCorpus {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        let describer = describer(cfg)?;
        let results: Vec<std::result::Result<PreparedScene, SceneIssue>> = (0..cfg.scene_count)
            .into_par_iter()
            .map(|i| prepare_scene(cfg, &describer, i))
            .collect();
        let mut scenes = Vec::new();
        let mut failed = Vec::new();
        for r in results {
            match r {
                Ok(s) => scenes.push(s),
                Err(e) => failed.push(e),
            }
        }
        Ok(Self {
            key: corpus_key(cfg),
            scenes,
            failed,
        })
    }

    pub fn matches(&self, cfg: &RunConfig) -> bool {
        self.key == corpus_key(cfg)
    }

    pub fn describer_lexicon(cfg: &RunConfig) -> Result<Lexicon> {
        match &cfg.instructions.lexicon {
            Some(p) => Lexicon::load(p),
            None => Ok(Lexicon::default()),
        }
    }
}

fn describer(cfg: &RunConfig) -> Result<Describer> {
    Ok(Describer {
        lexicon: SceneCorpus::describer_lexicon(cfg)?,
        grounding: cfg.grounding,
        min_margin: cfg.instructions.min_margin,
        min_relation: cfg.instructions.min_relation,
        min_pixels: cfg.instructions.min_pixels,
    })
}

impl PreparedScene {
    /// Scene `index` of `cfg`'s corpus, built on its own.
    pub fn prepare(cfg: &RunConfig, index: usize) -> Result<Self> {
        cfg.validate()?;
        prepare_scene(cfg, &describer(cfg)?, index).map_err(|i| Error::DegenerateInput(i.error))
    }
}

fn prepare_scene(cfg: &RunConfig, describer: &Describer, index: usize) -> std::result::Result<PreparedScene, SceneIssue> {
    let seed = scene_seed(cfg.seed, index);
    let issue = |e: Error| SceneIssue {
        index,
        seed,
        error: e.to_string(),
    };
    let scene = scene::generate_scene(&cfg.scene, seed).map_err(issue)?;
    let rendered = scene::render(&scene);
    let plane = match cfg.plane_source {
        PlaneSource::Estimated => {
            cloudseg::estimate_table_plane(&rendered.frame.depth, scene.intrinsics(), &cfg.plane, seed)
        }
        PlaneSource::GroundTruth => Some(scene.table_plane),
        PlaneSource::None => None,
    };
    let oracle = grounding::oracle_candidates(&scene, &rendered, cfg.instructions.min_pixels);
    let candidates = match &cfg.detector {
        DetectorConfig::Oracle => oracle,
        DetectorConfig::Noisy(d) => {
            let mut r = rng::derived_rng(seed, &[stream::DETECTOR]);
            d.apply(&oracle, dims(&rendered), &mut r)
        }
    };
    let mut descriptions = Vec::new();
    let mut skipped = 0;
    for obj in &scene.objects {
        for &kind in &cfg.instructions.kinds {
            let s = rng::derive_seed(seed, &[stream::DESCRIPTION, obj.id as u64, kind_index(kind)]);
            match describer.describe(&scene, &rendered, obj.id, kind, s) {
                Ok(d) => descriptions.push(d),
                Err(Error::GenerationFailed(_)) => skipped += 1,
                Err(e) => return Err(issue(e)),
            }
        }
    }
    Ok(PreparedScene {
        index,
        seed,
        scene,
        rendered,
        plane,
        candidates,
        descriptions,
        skipped,
    })
}

fn dims(r: &RenderedScene) -> ImageDims {
    ImageDims {
        width: r.frame.intrinsics.width,
        height: r.frame.intrinsics.height,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SegmentationOutcome {
    Skipped,
    Kept { points: usize },
    Failed { error: String },
}

/// Stage that ended a record early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub scene: usize,
    /// Position within the scene.
    pub index: usize,
    pub seed: u64,
    pub kind: DescriptionKind,
    pub instruction: Instruction,
    pub query: Option<StructuredQuery>,
    pub grounding: Option<GroundingResult>,
    pub selected: Option<u32>,
    pub crop_mode: Option<CropMode>,
    pub region_points: usize,
    pub segmentation: SegmentationOutcome,
    pub estimate: Option<PoseEstimate>,
    pub error: Option<StageError>,
    pub eval: EvalRecord,
    pub score: Option<RecordScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub label: String,
    pub config_hash: String,
    pub seed: u64,
    pub scenes: usize,
    pub records: usize,
    pub skipped_descriptions: usize,
    pub failed_scenes: Vec<SceneIssue>,
    pub version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub prepare_s: f64,
    pub records_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub meta: RunMeta,
    pub records: Vec<Record>,
    pub timings: Timings,
}

impl RunResult {
    pub fn eval_records(&self) -> Vec<EvalRecord> {
        self.records.iter().map(|r| r.eval.clone()).collect()
    }

    /// Overall metric row labeled with the run label.
    pub fn summary(&self, cfg: &RunConfig) -> Result<MetricRow> {
        summarize(&self.meta.label, &self.records, cfg)
    }
}

pub fn summarize(label: &str, records: &[Record], cfg: &RunConfig) -> Result<MetricRow> {
    let scores: Vec<Option<RecordScore>> = records.iter().map(|r| r.score).collect();
    let flags: Vec<bool> = records.iter().map(|r| r.eval.grounding_correct).collect();
    evalkit::aggregate_scores(label, &scores, &flags, &cfg.metrics)
}

/// Builds the scene corpus and runs the pipeline on it.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunResult> {
    cfg.validate()?;
    with_threads(cfg, || {
        let t = Instant::now();
        let corpus = SceneCorpus::build(cfg)?;
        let prepare_s = t.elapsed().as_secs_f64();
        let mut res = run_prepared(cfg, &corpus)?;
        res.timings.prepare_s = prepare_s;
        Ok(res)
    })
}

/// Runs on an existing corpus, which must have been built with matching
/// scene-side settings.
pub fn run_with_corpus(cfg: &RunConfig, corpus: &SceneCorpus) -> Result<RunResult> {
    cfg.validate()?;
    with_threads(cfg, || run_prepared(cfg, corpus))
}

pub(crate) fn with_threads<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(f),
        None => f(),
    }
}

fn run_prepared(cfg: &RunConfig, corpus: &SceneCorpus) -> Result<RunResult> {
    if !corpus.matches(cfg) {
        return Err(Error::Config("scene corpus was built with different scene settings".into()));
    }
    let lexicon = SceneCorpus::describer_lexicon(cfg)?;
    let t = Instant::now();
    let per_scene: Vec<Vec<Record>> = corpus
        .scenes
        .par_iter()
        .map(|s| {
            s.descriptions
                .iter()
                .enumerate()
                .map(|(i, d)| process(cfg, &lexicon, s, i, d))
                .collect()
        })
        .collect();
    let records: Vec<Record> = per_scene.into_iter().flatten().collect();
    Ok(RunResult {
        meta: RunMeta {
            label: cfg.label.clone(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            scenes: corpus.scenes.len(),
            records: records.len(),
            skipped_descriptions: corpus.scenes.iter().map(|s| s.skipped).sum(),
            failed_scenes: corpus.failed.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        records,
        timings: Timings {
            prepare_s: 0.0,
            records_s: t.elapsed().as_secs_f64(),
        },
    })
}

/// One generated instruction through every stage, scored against its target.
fn process(cfg: &RunConfig, lexicon: &Lexicon, s: &PreparedScene, index: usize, d: &Description) -> Record {
    let seed = rng::derive_seed(s.seed, &[index as u64]);
    let target = d.instruction.gt_target_id.expect("generator sets the target");
    let gt = GroundTruth::from(s.scene.object(target).expect("target exists"));
    let loc = localize(cfg, lexicon, s, &d.instruction, seed);
    let grounding_correct = loc
        .grounding
        .as_ref()
        .is_some_and(|g| g.best().overall > 0.0 && g.best().id == target);
    let eval = EvalRecord {
        gt,
        pred: loc.estimate.clone(),
        grounding_correct,
    };
    let score = evalkit::score_record(&eval, &cfg.metrics);
    Record {
        scene: s.index,
        index,
        seed,
        kind: d.kind,
        instruction: d.instruction.clone(),
        query: loc.query,
        grounding: loc.grounding,
        selected: loc.selected,
        crop_mode: loc.crop_mode,
        region_points: loc.region_points,
        segmentation: loc.segmentation,
        estimate: loc.estimate,
        error: loc.error,
        eval,
        score,
    }
}

/// Stage outputs for one instruction; later fields stay empty after a
/// stage error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub query: Option<StructuredQuery>,
    pub grounding: Option<GroundingResult>,
    pub selected: Option<u32>,
    pub crop_mode: Option<CropMode>,
    pub region_points: usize,
    pub segmentation: SegmentationOutcome,
    pub estimate: Option<PoseEstimate>,
    pub error: Option<StageError>,
}

/// Parse, grounding, crop, corruption, segmentation and pose for one
/// instruction. `seed` drives the crop, noise and segmentation streams.
pub fn localize(cfg: &RunConfig, lexicon: &Lexicon, s: &PreparedScene, instruction: &Instruction, seed: u64) -> Localization {
    let mut loc = Localization {
        query: None,
        grounding: None,
        selected: None,
        crop_mode: None,
        region_points: 0,
        segmentation: SegmentationOutcome::Skipped,
        estimate: None,
        error: None,
    };
    if let Err((stage, e)) = run_stages(cfg, lexicon, s, instruction, seed, &mut loc) {
        loc.error = Some(StageError {
            stage: stage.to_string(),
            message: e.to_string(),
        });
    }
    loc
}

fn run_stages(
    cfg: &RunConfig,
    lexicon: &Lexicon,
    s: &PreparedScene,
    instruction: &Instruction,
    seed: u64,
    rec: &mut Localization,
) -> std::result::Result<(), (&'static str, Error)> {
    let query = instruct::parse(instruction, lexicon).map_err(|e| ("parse", e))?;
    rec.query = Some(query.clone());

    let res = grounding::ground(&s.candidates, &query, dims(&s.rendered), &cfg.grounding).map_err(|e| ("ground", e))?;
    let best = *res.best();
    rec.grounding = Some(res);
    rec.selected = Some(best.id);
    let cand = s
        .candidates
        .iter()
        .find(|c| c.id == best.id)
        .expect("ranked ids come from the candidates");

    let k = s.scene.intrinsics();
    let mode = match cfg.input_mode {
        InputMode::Bbox => CropMode::Bbox,
        InputMode::Mask => CropMode::Mask,
        InputMode::BboxMask => {
            if rng::derived_rng(seed, &[stream::STRATEGY]).random_bool(0.5) {
                CropMode::Bbox
            } else {
                CropMode::Mask
            }
        }
    };
    rec.crop_mode = Some(mode);
    let crop = match mode {
        CropMode::Bbox => {
            let mut r = rng::derived_rng(seed, &[stream::CROP]);
            let rho = Expansion::sample(cfg.corruption.bbox_expand, &mut r);
            CropSpec::from_bbox(&cloudseg::expand_bbox(&cand.bbox, &rho, k.width, k.height), cand.id)
        }
        CropMode::Mask => CropSpec::from_mask(&cloudseg::dilate_mask(&cand.mask, cfg.corruption.mask_dilation), cand.id),
    }
    .map_err(|e| ("crop", e))?;

    let region = cloudseg::crop_region(&s.rendered.frame.depth, k, &crop).map_err(|e| ("crop", e))?;
    let mut cloud = region.cloud;
    if cfg.corruption.noise_sigma > 0.0 {
        let noise = NoiseSpec::isotropic(cfg.corruption.noise_sigma);
        cloud = cloudseg::add_noise(&cloud, &noise, rng::derive_seed(seed, &[stream::NOISE])).map_err(|e| ("noise", e))?;
    }
    rec.region_points = cloud.len();

    let object = if cfg.segmentation {
        match cloudseg::segment_object(
            &cloud,
            &crop.prior_ray(k),
            s.plane.as_ref(),
            &cfg.segment,
            rng::derive_seed(seed, &[stream::SEGMENT]),
        ) {
            Ok(seg) => {
                rec.segmentation = SegmentationOutcome::Kept { points: seg.cloud.len() };
                seg.cloud
            }
            Err(e) => {
                rec.segmentation = SegmentationOutcome::Failed { error: e.to_string() };
                return Err(("segment", e));
            }
        }
    } else {
        PointCloud::new(cloud.points, Provenance::Object)
    };

    let est = posefit::estimate_pose(&object, cand.category, s.plane.as_ref(), &cfg.pose).map_err(|e| ("pose", e))?;
    rec.estimate = Some(est);
    Ok(())
}

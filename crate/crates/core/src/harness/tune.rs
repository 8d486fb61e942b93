use serde::{Deserialize, Serialize};

use super::config::{RunConfig, Strategy};
use super::pipeline::{run_with_corpus, with_threads, SceneCorpus};
use crate::cloudseg::SegmentConfig;
use crate::error::{Error, Result};
use crate::evalkit::MetricRow;
use crate::rng::{self, stream};

/// Segmentation thresholds to search. Every combination is tried in
/// order, radius outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneGrid {
    pub cluster_radius: Vec<f64>,
    pub outlier_std: Vec<f64>,
    /// Column of the summary row to maximize.
    pub objective: String,
}

impl Default for TuneGrid {
    fn default() -> Self {
        Self {
            cluster_radius: vec![0.01, 0.02, 0.03],
            outlier_std: vec![1.0, 2.0, 3.0],
            objective: "5deg2cm".into(),
        }
    }
}

impl TuneGrid {
    pub fn candidates(&self, base: &SegmentConfig) -> Vec<SegmentConfig> {
        self.cluster_radius
            .iter()
            .flat_map(|&r| {
                self.outlier_std.iter().map(move |&s| SegmentConfig {
                    cluster_radius: r,
                    outlier_std: s,
                    ..*base
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub best: SegmentConfig,
    /// Objective value of every candidate, in grid order.
    pub trials: Vec<(SegmentConfig, f64)>,
}

/// Picks the thresholds that maximize the objective on `cfg`'s corpus.
/// Ties keep the earlier candidate.
pub fn tune_segmentation(cfg: &RunConfig, grid: &TuneGrid) -> Result<Tuning> {
    cfg.validate()?;
    if !cfg.metrics.column_names().contains(&grid.objective) {
        return Err(Error::Config(format!("unknown objective column {:?}", grid.objective)));
    }
    let candidates = grid.candidates(&cfg.segment);
    if candidates.is_empty() {
        return Err(Error::Config("tuning grid is empty".into()));
    }
    with_threads(cfg, || {
        let corpus = SceneCorpus::build(cfg)?;
        let mut trials = Vec::with_capacity(candidates.len());
        for seg in candidates {
            let c = RunConfig {
                segmentation: true,
                segment: seg,
                threads: None,
                ..cfg.clone()
            };
            let row = run_with_corpus(&c, &corpus)?.summary(&c)?;
            let v = row.get(&c.metrics, &grid.objective).unwrap_or(0.0);
            trials.push((seg, v));
        }
        let best = trials
            .iter()
            .fold(None::<&(SegmentConfig, f64)>, |acc, t| match acc {
                Some(a) if a.1 >= t.1 => Some(a),
                _ => Some(t),
            })
            .map(|t| t.0)
            .expect("at least one trial");
        Ok(Tuning { best, trials })
    })
}

pub struct Transfer {
    pub tunings: Vec<Tuning>,
    pub rows: Vec<MetricRow>,
}

/// For each strategy, tunes segmentation on a corpus corrupted that way
/// (`tune_scenes` scenes, independent seed), then evaluates the tuned
/// pipeline on `eval`'s corpus and input condition.
pub fn strategy_transfer(eval: &RunConfig, strategies: &[Strategy], tune_scenes: usize, grid: &TuneGrid) -> Result<Transfer> {
    eval.validate()?;
    with_threads(eval, || {
        let corpus = SceneCorpus::build(eval)?;
        transfer_with_corpus(eval, &corpus, strategies, tune_scenes, grid)
    })
}

/// [`strategy_transfer`] evaluated on an already built corpus.
pub fn transfer_with_corpus(
    eval: &RunConfig,
    corpus: &SceneCorpus,
    strategies: &[Strategy],
    tune_scenes: usize,
    grid: &TuneGrid,
) -> Result<Transfer> {
    if !corpus.matches(eval) {
        return Err(Error::Config("scene corpus was built with different scene settings".into()));
    }
    let mut tunings = Vec::new();
    let mut rows = Vec::new();
    for s in strategies {
        let (input_mode, corruption) = s.apply(&eval.strategy_levels);
        let tune_cfg = RunConfig {
            seed: rng::derive_seed(eval.seed, &[stream::TUNE]),
            scene_count: tune_scenes,
            input_mode,
            corruption,
            threads: None,
            ..eval.clone()
        };
        let t = tune_segmentation(&tune_cfg, grid)?;
        let c = RunConfig {
            label: format!("strategy={} tuned", s.name()),
            segmentation: true,
            segment: t.best,
            threads: None,
            ..eval.clone()
        };
        rows.push(run_with_corpus(&c, corpus)?.summary(&c)?);
        tunings.push(t);
    }
    Ok(Transfer { tunings, rows })
}

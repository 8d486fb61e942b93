//! Configuration, end-to-end runs, ablations and result files.

mod ablate;
mod config;
mod io;
mod pipeline;
mod tune;

pub use ablate::{ablate, expand, Ablation, AblationAxes};
pub use config::{
    Corruption, DetectorConfig, InputMode, InstructionConfig, PlaneSource, RunConfig, Strategy, SEED_ENV,
};
pub use io::{
    category_rows, evaluate_records, read_records, records_jsonl, scene_rows, write_run, META_FILE, RECORDS_FILE,
    SCENES_FILE, SUMMARY_FILE, TIMINGS_FILE,
};
pub use pipeline::{
    localize, run_pipeline, run_with_corpus, scene_seed, summarize, Localization, PreparedScene, Record, RunMeta, RunResult, SceneCorpus,
    SceneIssue, SegmentationOutcome, StageError, Timings,
};
pub use tune::{strategy_transfer, transfer_with_corpus, tune_segmentation, Transfer, TuneGrid, Tuning};

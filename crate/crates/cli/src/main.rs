//! `lang6d` command-line driver.
//!
//! Exit status is 2 for configuration errors, 1 for other fatal errors and
//! 0 otherwise; per-record stage failures are written to the records.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use lang6d::evalkit::{self, iou3d, pose_error, GroundTruth};
use lang6d::grounding::NoisyDetector;
use lang6d::harness::{
    self, ablate, localize, read_records, AblationAxes, DetectorConfig, InputMode, PreparedScene, RunConfig, SceneCorpus,
    Strategy,
};
use lang6d::instruct::Instruction;
use lang6d::scene::{self, SceneFile};
use lang6d::{rng, Error};

#[derive(Parser)]
#[command(name = "lang6d", version, about = "Language-guided 6-DoF object localization on synthetic tabletop scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write scene JSON plus depth and color PGM renders.
    GenScenes(GenArgs),
    /// Run the full pipeline and write records and summaries.
    Run(RunArgs),
    /// Run one configuration per combination of the given axes.
    Ablate(AblateArgs),
    /// Recompute metrics from a records file.
    Eval(EvalArgs),
    /// Localize one instruction in one scene and print every stage.
    Demo(DemoArgs),
}

#[derive(Args)]
struct Common {
    /// JSON or TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured and environment seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    scenes: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Estimate the up axis from the cloud instead of the table plane.
    #[arg(long)]
    no_plane_prior: bool,
}

impl Common {
    /// File, then `LANG6D_SEED`, then flags.
    fn load(&self) -> lang6d::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply_env()?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.scenes {
            cfg.scene_count = n;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        if self.no_plane_prior {
            cfg.pose.use_plane_prior = false;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "scenes")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    /// bbox, mask or bbox+mask.
    #[arg(long)]
    input_mode: Option<String>,
    /// on or off.
    #[arg(long)]
    seg: Option<String>,
    /// oracle or noisy.
    #[arg(long)]
    detector: Option<String>,
    /// Applies a corruption strategy: bbox, mask, bbox+mask or bbox+mask+noise.
    #[arg(long)]
    strategy: Option<String>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "ablation")]
    out: PathBuf,
    /// Comma-separated input modes.
    #[arg(long, value_delimiter = ',')]
    input_mode: Vec<String>,
    /// Comma-separated on/off values.
    #[arg(long, value_delimiter = ',')]
    seg: Vec<String>,
    /// Comma-separated strategies.
    #[arg(long, value_delimiter = ',')]
    strategies: Vec<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// records.jsonl written by `run`.
    records: PathBuf,
    /// Configuration holding the metric thresholds.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "eval")]
    label: String,
    /// Also print one row per category.
    #[arg(long)]
    by_category: bool,
}

#[derive(Args)]
struct DemoArgs {
    #[command(flatten)]
    common: Common,
    /// Scene index within the seeded corpus.
    #[arg(long, default_value_t = 0)]
    scene: usize,
    /// Instruction text; a generated one when absent.
    #[arg(long)]
    instruction: Option<String>,
}

fn config_err(msg: String) -> anyhow::Error {
    Error::Config(msg).into()
}

fn parse_switch(s: &str) -> anyhow::Result<bool> {
    match s {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(config_err(format!("expected on or off, got {s:?}"))),
    }
}

fn parse_mode(s: &str) -> anyhow::Result<InputMode> {
    InputMode::from_name(s).ok_or_else(|| config_err(format!("unknown input mode {s:?}")))
}

fn parse_strategy(s: &str) -> anyhow::Result<Strategy> {
    Strategy::from_name(s).ok_or_else(|| config_err(format!("unknown strategy {s:?}")))
}

fn gen_scenes(args: &GenArgs) -> anyhow::Result<()> {
    let cfg = args.common.load()?;
    cfg.validate()?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for i in 0..cfg.scene_count {
        let seed = harness::scene_seed(cfg.seed, i);
        let spec = match scene::generate_scene(&cfg.scene, seed) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("scene {i}: {e}");
                continue;
            }
        };
        let rendered = scene::render(&spec);
        let stem = format!("scene_{i:04}");
        let doc = serde_json::to_string_pretty(&SceneFile::new(&spec, &rendered))?;
        std::fs::write(args.out.join(format!("{stem}.json")), doc)?;
        scene::write_depth_pgm(&args.out.join(format!("{stem}_depth.pgm")), &rendered.frame.depth)?;
        let k = &rendered.frame.intrinsics;
        scene::write_color_pgm(&args.out.join(format!("{stem}_color.pgm")), k.width, k.height, &rendered.frame.color)?;
    }
    println!("wrote {} scenes to {}", cfg.scene_count, args.out.display());
    Ok(())
}

fn run(args: &RunArgs) -> anyhow::Result<()> {
    let mut cfg = args.common.load()?;
    if let Some(l) = &args.label {
        cfg.label = l.clone();
    }
    if let Some(m) = &args.input_mode {
        cfg.input_mode = parse_mode(m)?;
    }
    if let Some(s) = &args.strategy {
        (cfg.input_mode, cfg.corruption) = parse_strategy(s)?.apply(&cfg.strategy_levels);
    }
    if let Some(s) = &args.seg {
        cfg.segmentation = parse_switch(s)?;
    }
    match args.detector.as_deref() {
        None => {}
        Some("oracle") => cfg.detector = DetectorConfig::Oracle,
        Some("noisy") => cfg.detector = DetectorConfig::Noisy(NoisyDetector::default()),
        Some(d) => return Err(config_err(format!("unknown detector {d:?}"))),
    }
    if let Some(o) = &args.out {
        cfg.output = Some(o.clone());
    }
    let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out").join(&cfg.label));
    let result = harness::run_pipeline(&cfg)?;
    harness::write_run(&out, &result, &cfg)?;
    let row = result.summary(&cfg)?;
    print!("{}", evalkit::rows_to_csv(&[row], &cfg.metrics));
    eprintln!(
        "{} records, {} skipped descriptions, {} failed scenes -> {}",
        result.meta.records,
        result.meta.skipped_descriptions,
        result.meta.failed_scenes.len(),
        out.display()
    );
    Ok(())
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

fn run_ablation(args: &AblateArgs) -> anyhow::Result<()> {
    let cfg = args.common.load()?;
    let axes = AblationAxes {
        input_modes: args.input_mode.iter().map(|s| parse_mode(s)).collect::<anyhow::Result<_>>()?,
        segmentation: args.seg.iter().map(|s| parse_switch(s)).collect::<anyhow::Result<_>>()?,
        strategies: args.strategies.iter().map(|s| parse_strategy(s)).collect::<anyhow::Result<_>>()?,
    };
    let ab = ablate(&cfg, &axes)?;
    for (c, r) in ab.configs.iter().zip(&ab.runs) {
        harness::write_run(&args.out.join(sanitize(&c.label)), r, c)?;
    }
    let table = evalkit::rows_to_csv(&ab.rows, &cfg.metrics);
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("ablation.csv"), &table)?;
    print!("{table}");
    Ok(())
}

fn eval(args: &EvalArgs) -> anyhow::Result<()> {
    let cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.metrics.validate()?;
    let records = read_records(&args.records).with_context(|| format!("reading {}", args.records.display()))?;
    if records.is_empty() {
        bail!("{} holds no records", args.records.display());
    }
    let rows = if args.by_category {
        harness::category_rows(&args.label, &records, &cfg)?
    } else {
        vec![harness::evaluate_records(&args.label, &records, &cfg.metrics)?]
    };
    print!("{}", evalkit::rows_to_csv(&rows, &cfg.metrics));
    Ok(())
}

fn demo(args: &DemoArgs) -> anyhow::Result<()> {
    let cfg = args.common.load()?;
    let s = PreparedScene::prepare(&cfg, args.scene)?;
    println!("scene {} (seed {})", s.index, s.seed);
    for o in &s.scene.objects {
        let t = o.pose.translation;
        println!(
            "  #{} {} {} at ({:.3}, {:.3}, {:.3})",
            o.id,
            o.color.name(),
            o.category.name(),
            t.x,
            t.y,
            t.z
        );
    }
    let instruction = match &args.instruction {
        Some(text) => Instruction::new(text.clone()),
        None => match s.descriptions.first() {
            Some(d) => d.instruction.clone(),
            None => bail!("scene {} has no generated instruction; pass --instruction", s.index),
        },
    };
    println!("instruction: {:?}", instruction.text);
    let lexicon = SceneCorpus::describer_lexicon(&cfg)?;
    let loc = localize(&cfg, &lexicon, &s, &instruction, rng::derive_seed(s.seed, &[0]));
    if let Some(q) = &loc.query {
        println!("query: {}", serde_json::to_string(q)?);
    }
    if let Some(g) = &loc.grounding {
        println!(
            "weights: subject {:.0} location {:.0} relation {:.0}",
            g.weights.subject, g.weights.location, g.weights.relation
        );
        println!("  id  overall  subject  location  relation");
        for b in &g.ranked {
            println!(
                "  {:>2}  {:7.3}  {:7.3}  {:8.3}  {:8.3}",
                b.id, b.overall, b.subject, b.location, b.relation
            );
        }
    }
    if let Some(m) = loc.crop_mode {
        println!("crop: {m:?}, {} points, segmentation {:?}", loc.region_points, loc.segmentation);
    }
    if let Some(e) = &loc.error {
        println!("stopped at {}: {}", e.stage, e.message);
    }
    if let (Some(est), Some(id)) = (&loc.estimate, loc.selected) {
        let t = est.pose.translation;
        let r = est.pose.rotation;
        println!("pose of #{id} ({}):", est.category.name());
        println!("  t = ({:.4}, {:.4}, {:.4}) m", t.x, t.y, t.z);
        for i in 0..3 {
            println!("  R[{i}] = ({:7.4}, {:7.4}, {:7.4})", r[(i, 0)], r[(i, 1)], r[(i, 2)]);
        }
        println!("  size = ({:.4}, {:.4}, {:.4}) m, residual {:.4}", est.size.x, est.size.y, est.size.z, est.residual);
        if let Some(obj) = s.scene.object(id) {
            let gt = GroundTruth::from(obj);
            let err = pose_error(&gt.pose, &est.pose, &gt.symmetry);
            let iou = iou3d(&gt.pose, &gt.size, &est.pose, &est.size, &gt.symmetry, &cfg.metrics);
            println!(
                "  vs ground truth: {:.2} deg, {:.2} cm, IoU {:.3}",
                err.rotation_deg, err.translation_cm, iou
            );
        }
    }
    Ok(())
}

fn is_config_error(e: &anyhow::Error) -> bool {
    matches!(e.downcast_ref::<Error>(), Some(Error::Config(_)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::GenScenes(a) => gen_scenes(a),
        Command::Run(a) => run(a),
        Command::Ablate(a) => run_ablation(a),
        Command::Eval(a) => eval(a),
        Command::Demo(a) => demo(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_config_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

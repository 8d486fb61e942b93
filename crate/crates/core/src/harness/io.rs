use std::collections::BTreeMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use super::config::RunConfig;
use super::pipeline::{summarize, Record, RunResult};
use crate::error::{Error, Result};
use crate::evalkit::{self, rows_to_csv, MetricConfig, MetricRow};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SCENES_FILE: &str = "scenes.csv";
pub const META_FILE: &str = "meta.json";
pub const TIMINGS_FILE: &str = "timings.json";

/// One JSON document per line.
pub fn records_jsonl(records: &[Record]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

/// Overall row followed by one row per ground-truth category.
pub fn category_rows(label: &str, records: &[Record], cfg: &RunConfig) -> Result<Vec<MetricRow>> {
    let mut rows = vec![summarize(label, records, cfg)?];
    let mut groups: BTreeMap<&str, Vec<Record>> = BTreeMap::new();
    for r in records {
        groups.entry(r.eval.gt.category.name()).or_default().push(r.clone());
    }
    for (cat, recs) in groups {
        rows.push(summarize(&format!("{label} category={cat}"), &recs, cfg)?);
    }
    Ok(rows)
}

pub fn scene_rows(label: &str, records: &[Record], cfg: &RunConfig) -> Result<Vec<MetricRow>> {
    let mut groups: BTreeMap<usize, Vec<Record>> = BTreeMap::new();
    for r in records {
        groups.entry(r.scene).or_default().push(r.clone());
    }
    groups
        .into_iter()
        .map(|(s, recs)| summarize(&format!("{label} scene={s:04}"), &recs, cfg))
        .collect()
}

fn write(path: &Path, text: &str) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Writes records, per-category and per-scene summaries, metadata with the
/// config, and timings in their own file.
pub fn write_run(dir: &Path, result: &RunResult, cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write(&dir.join(RECORDS_FILE), &records_jsonl(&result.records)?)?;
    if !result.records.is_empty() {
        let label = &result.meta.label;
        write(
            &dir.join(SUMMARY_FILE),
            &rows_to_csv(&category_rows(label, &result.records, cfg)?, &cfg.metrics),
        )?;
        write(
            &dir.join(SCENES_FILE),
            &rows_to_csv(&scene_rows(label, &result.records, cfg)?, &cfg.metrics),
        )?;
    }
    let meta = serde_json::json!({ "meta": result.meta, "config": cfg });
    write(&dir.join(META_FILE), &serde_json::to_string_pretty(&meta)?)?;
    write(&dir.join(TIMINGS_FILE), &serde_json::to_string_pretty(&result.timings)?)?;
    Ok(())
}

/// Recomputes metrics from stored ground truth and predictions.
pub fn evaluate_records(label: &str, records: &[Record], metrics: &MetricConfig) -> Result<MetricRow> {
    let evals: Vec<_> = records.iter().map(|r| r.eval.clone()).collect();
    evalkit::aggregate(label, &evals, metrics)
}

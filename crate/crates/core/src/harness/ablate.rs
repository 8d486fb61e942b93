use serde::{Deserialize, Serialize};

use super::config::{InputMode, RunConfig, Strategy};
use super::pipeline::{run_with_corpus, with_threads, RunResult, SceneCorpus};
use crate::error::{Error, Result};
use crate::evalkit::MetricRow;

/// Values to sweep; an empty axis keeps the base setting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationAxes {
    pub input_modes: Vec<InputMode>,
    pub segmentation: Vec<bool>,
    /// Sets both input mode and corruption, so it cannot be combined with
    /// `input_modes`.
    pub strategies: Vec<Strategy>,
}

pub struct Ablation {
    pub configs: Vec<RunConfig>,
    pub runs: Vec<RunResult>,
    pub rows: Vec<MetricRow>,
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

/// Cartesian product of the axes, labeled, in a fixed order: strategy or
/// input mode outermost, then segmentation.
pub fn expand(base: &RunConfig, axes: &AblationAxes) -> Result<Vec<RunConfig>> {
    if !axes.input_modes.is_empty() && !axes.strategies.is_empty() {
        return Err(Error::Config("input-mode and strategy axes are mutually exclusive".into()));
    }
    let mut firsts: Vec<(Option<String>, RunConfig)> = Vec::new();
    if !axes.strategies.is_empty() {
        for s in &axes.strategies {
            let (mode, corruption) = s.apply(&base.strategy_levels);
            let cfg = RunConfig {
                input_mode: mode,
                corruption,
                ..base.clone()
            };
            firsts.push((Some(format!("strategy={}", s.name())), cfg));
        }
    } else if !axes.input_modes.is_empty() {
        for m in &axes.input_modes {
            let cfg = RunConfig {
                input_mode: *m,
                ..base.clone()
            };
            firsts.push((Some(format!("input={}", m.name())), cfg));
        }
    } else {
        firsts.push((None, base.clone()));
    }
    let mut out = Vec::new();
    for (label, cfg) in firsts {
        if axes.segmentation.is_empty() {
            let mut c = cfg;
            c.label = label.unwrap_or_else(|| base.label.clone());
            out.push(c);
        } else {
            for seg in &axes.segmentation {
                let mut c = cfg.clone();
                c.segmentation = *seg;
                let seg_label = format!("seg={}", on_off(*seg));
                c.label = match &label {
                    Some(l) => format!("{l} {seg_label}"),
                    None => seg_label,
                };
                out.push(c);
            }
        }
    }
    Ok(out)
}

/// One run per axis combination over a shared scene corpus.
pub fn ablate(base: &RunConfig, axes: &AblationAxes) -> Result<Ablation> {
    base.validate()?;
    let configs = expand(base, axes)?;
    with_threads(base, || {
        let corpus = SceneCorpus::build(base)?;
        let mut runs = Vec::with_capacity(configs.len());
        let mut rows = Vec::with_capacity(configs.len());
        for c in &configs {
            let r = run_with_corpus(&RunConfig { threads: None, ..c.clone() }, &corpus)?;
            rows.push(r.summary(c)?);
            runs.push(r);
        }
        Ok(Ablation {
            configs: configs.clone(),
            runs,
            rows,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_shapes() {
        let base = RunConfig::default();
        let two_by_two = AblationAxes {
            input_modes: vec![InputMode::Bbox, InputMode::Mask],
            segmentation: vec![false, true],
            ..Default::default()
        };
        let c = expand(&base, &two_by_two).unwrap();
        let labels: Vec<&str> = c.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, ["input=bbox seg=off", "input=bbox seg=on", "input=mask seg=off", "input=mask seg=on"]);

        let strategies = AblationAxes {
            strategies: Strategy::ALL.to_vec(),
            ..Default::default()
        };
        let c = expand(&base, &strategies).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c[3].corruption.noise_sigma, 0.001);
        assert_eq!(c[0].input_mode, InputMode::Bbox);

        let none = expand(&base, &AblationAxes::default()).unwrap();
        assert_eq!(none, vec![base.clone()]);

        let both = AblationAxes {
            input_modes: vec![InputMode::Bbox],
            strategies: vec![Strategy::Mask],
            ..Default::default()
        };
        assert!(expand(&base, &both).is_err());
    }
}

//! Experiment configuration and on-disk artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{load_csv, Dataset, TypeHints};
use crate::error::{Error, Result};
use crate::hrc::{self, apply_recipe, convergence, CrossRecipe, EpisodeSummary, RewardVariant, RunConfig, SearchMode, StepLog};
use crate::metrics::ClassificationMetrics;

pub const REPORT_FILE: &str = "run_report.json";
pub const STEPS_FILE: &str = "steps.jsonl";
pub const RECIPE_FILE: &str = "recipe.json";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
const CONVERGENCE_HEADER: &str = "episode,best_acc,last_change_step";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMode {
    #[default]
    Hrc,
    HrcStar,
    HrcHash,
    HrcBang,
    /// Baseline only: the original features, no search.
    Raw,
}

impl ExperimentMode {
    pub fn search(self) -> Option<SearchMode> {
        match self {
            Self::Hrc => Some(SearchMode::Hrc),
            Self::HrcStar => Some(SearchMode::HrcStar),
            Self::HrcHash => Some(SearchMode::HrcHash),
            Self::HrcBang => Some(SearchMode::HrcBang),
            Self::Raw => None,
        }
    }
}

impl std::str::FromStr for ExperimentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::arg(format!("unknown mode '{s}' (expected hrc, hrc_star, hrc_hash, hrc_bang or raw)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    pub label: String,
    #[serde(default)]
    pub type_hints: TypeHints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub mode: ExperimentMode,
    /// Reward terms to keep; the others get weight zero.
    #[serde(default = "default_variant")]
    pub reward_variant: RewardVariant,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_variant() -> RewardVariant {
    RewardVariant::AccRvRd
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Reads a JSON config. A relative data path is taken relative to the
    /// config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        if cfg.data.path.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.data.path = dir.join(&cfg.data.path);
            }
        }
        Ok(cfg)
    }

    /// Run settings with the mode applied and the variant's disabled reward
    /// terms zeroed.
    pub fn effective_run(&self) -> RunConfig {
        let mut run = self.run.clone();
        if let Some(mode) = self.mode.search() {
            run.mode = mode;
        }
        let mask = self.reward_variant.weights();
        let w = &mut run.weights;
        for (v, m) in [
            (&mut w.w1, mask.w1),
            (&mut w.w2, mask.w2),
            (&mut w.w3, mask.w3),
            (&mut w.w4, mask.w4),
            (&mut w.w5, mask.w5),
            (&mut w.w6, mask.w6),
        ] {
            *v *= m;
        }
        run
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: ExperimentMode,
    pub reward_variant: RewardVariant,
    pub seed: u64,
    pub n_samples: usize,
    pub raw: ClassificationMetrics<f64>,
    /// Metrics of the remembered best set; absent in raw mode.
    pub best: Option<ClassificationMetrics<f64>>,
    pub best_n_features: Option<usize>,
    pub best_crosses: Option<Vec<String>>,
    /// `[episode, step]` of the last improvement.
    pub best_found_at: Option<(usize, usize)>,
    pub evaluations: Option<usize>,
    pub episodes: Option<Vec<EpisodeSummary>>,
}

/// Everything an experiment writes, held in memory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub report: RunReport,
    pub steps: Vec<StepLog>,
    pub recipe: Option<CrossRecipe>,
}

impl Artifacts {
    /// Writes the artifacts into `dir`, creating it if needed. On failure
    /// every file written so far is removed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let result = self.write_all(dir, &mut written);
        if result.is_err() {
            for p in &written {
                let _ = fs::remove_file(p);
            }
        }
        result.map(|()| written)
    }

    fn write_all(&self, dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
        let mut put = |name: &str, body: &str| -> Result<()> {
            let p = dir.join(name);
            written.push(p.clone());
            fs::write(&p, body).map_err(|e| Error::io(&p, e))
        };
        put(REPORT_FILE, &(serde_json::to_string_pretty(&self.report)? + "\n"))?;
        if self.report.mode != ExperimentMode::Raw {
            put(STEPS_FILE, &steps_to_jsonl(&self.steps)?)?;
            put(CONVERGENCE_FILE, &convergence_csv(&self.steps))?;
        }
        if let Some(recipe) = &self.recipe {
            put(RECIPE_FILE, &(recipe.to_json()? + "\n"))?;
        }
        Ok(())
    }
}

fn to_f64_metrics<T: crate::scalar::Scalar>(m: &ClassificationMetrics<T>) -> ClassificationMetrics<f64> {
    ClassificationMetrics {
        accuracy: m.accuracy.as_f64(),
        precision: m.precision.as_f64(),
        recall: m.recall.as_f64(),
        f_measure: m.f_measure.as_f64(),
    }
}

/// Runs the configured experiment on an already loaded dataset.
pub fn run_on(cfg: &ExperimentConfig, data: &Dataset) -> Result<Artifacts> {
    let run = cfg.effective_run();
    let base = |raw| RunReport {
        mode: cfg.mode,
        reward_variant: cfg.reward_variant,
        seed: run.seed,
        n_samples: data.n_samples(),
        raw,
        best: None,
        best_n_features: None,
        best_crosses: None,
        best_found_at: None,
        evaluations: None,
        episodes: None,
    };
    if cfg.mode == ExperimentMode::Raw {
        let (raw, _, _) = hrc::raw_baseline::<f64>(&run, data)?;
        return Ok(Artifacts { report: base(raw), steps: Vec::new(), recipe: None });
    }
    let out = hrc::run::<f64>(&run, data)?;
    let report = RunReport {
        best: Some(to_f64_metrics(&out.best.metrics)),
        best_n_features: Some(out.best.feature_set.len()),
        best_crosses: Some(out.best.recipe.crosses.iter().map(|c| c.name.clone()).collect()),
        best_found_at: out.best.changed_at,
        evaluations: Some(out.evaluations),
        episodes: Some(out.episodes),
        ..base(out.raw)
    };
    Ok(Artifacts { report, steps: out.steps, recipe: Some(out.best.recipe) })
}

/// Loads the data, runs, and writes the artifacts to `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Artifacts> {
    cfg.effective_run().validate()?;
    let data = load_csv(&cfg.data.path, &cfg.data.label, &cfg.data.type_hints)?;
    let artifacts = run_on(cfg, &data)?;
    artifacts.write(&cfg.out)?;
    Ok(artifacts)
}

pub fn steps_to_jsonl(steps: &[StepLog]) -> Result<String> {
    let mut out = String::new();
    for s in steps {
        out.push_str(&serde_json::to_string(s)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses a step log; blank lines are ignored.
pub fn parse_steps(text: &str) -> Result<Vec<StepLog>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(Some(i + 1), e.to_string())))
        .collect()
}

pub fn convergence_csv(steps: &[StepLog]) -> String {
    let mut out = String::from(CONVERGENCE_HEADER);
    out.push('\n');
    for row in convergence(steps) {
        out.push_str(&format!("{},{},{}\n", row.episode, row.best_acc, row.last_change_step));
    }
    out
}

/// Reads a step log file and writes its convergence CSV.
pub fn emit_convergence(steps_path: &Path, out_path: &Path) -> Result<()> {
    let text = fs::read_to_string(steps_path).map_err(|e| Error::io(steps_path, e))?;
    let steps = parse_steps(&text)?;
    fs::write(out_path, convergence_csv(&steps)).map_err(|e| Error::io(out_path, e))
}

/// Hashed bucket ids of every generated feature, one column per feature,
/// followed by the label column.
pub fn transformed_csv(recipe: &CrossRecipe, data: &Dataset) -> Result<Vec<u8>> {
    let set = apply_recipe(recipe, data)?;
    let hashed: Vec<Vec<u32>> = set.features().iter().map(|f| f.hashed(recipe.hash)).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Invariant(format!("csv output: {e}"));
    let mut header: Vec<&str> = set.features().iter().map(|f| f.name.as_str()).collect();
    header.push(&recipe.label);
    w.write_record(&header).map_err(csv_err)?;
    for (i, label) in data.labels().iter().enumerate() {
        let mut record: Vec<String> = hashed.iter().map(|c| c[i].to_string()).collect();
        record.push(label.clone());
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Invariant(format!("csv output: {e}")))?;
    w.into_inner().map_err(|e| Error::Invariant(format!("csv output: {e}")))
}

/// Applies a recipe file to a CSV file and writes the transformed CSV.
pub fn apply_files(recipe_path: &Path, data_path: &Path, out_path: &Path) -> Result<()> {
    let recipe = CrossRecipe::load(recipe_path)?;
    let data = load_csv(data_path, &recipe.label, &recipe.type_hints())?;
    let bytes = transformed_csv(&recipe, &data)?;
    let mut f = fs::File::create(out_path).map_err(|e| Error::io(out_path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(out_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hrc::RewardWeights;

    fn cfg_json(extra: &str) -> String {
        format!(r#"{{"data": {{"path": "d.csv", "label": "y"}}{extra}}}"#)
    }

    #[test]
    fn config_defaults_and_overrides() {
        let cfg: ExperimentConfig = serde_json::from_str(&cfg_json("")).unwrap();
        assert_eq!(cfg.mode, ExperimentMode::Hrc);
        assert_eq!(cfg.reward_variant, RewardVariant::AccRvRd);
        assert_eq!(cfg.run, RunConfig::default());
        assert_eq!(cfg.effective_run().weights, RewardWeights::default());

        let cfg: ExperimentConfig = serde_json::from_str(&cfg_json(
            r#", "mode": "hrc_star", "reward_variant": "rv", "run": {"episodes": 2, "weights": {"w2": 3.0}}"#,
        ))
        .unwrap();
        let run = cfg.effective_run();
        assert_eq!(run.mode, SearchMode::HrcStar);
        assert_eq!(run.episodes, 2);
        assert_eq!(run.steps_per_episode, 70);
        assert_eq!(run.weights, RewardWeights { w1: 0.0, w2: 3.0, w3: 0.0, w4: 0.0, w5: 1.0, w6: 0.0 });
    }

    #[test]
    fn invalid_enums_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(&cfg_json(r#", "mode": "fast""#)).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(&cfg_json(r#", "reward_variant": "acc_rv""#)).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(&cfg_json(r#", "bogus": 1"#)).is_err());
        assert_eq!("hrc_bang".parse::<ExperimentMode>().unwrap(), ExperimentMode::HrcBang);
        assert!("HRC".parse::<ExperimentMode>().is_err());
    }

    #[test]
    fn step_log_round_trip() {
        let s = StepLog {
            episode: 1,
            step: 2,
            action_meta: Some("a".into()),
            action_partner: None,
            acc: Some(0.5),
            rv: None,
            rd: None,
            r1: Some(-0.25),
            r2: None,
            n_features: 3,
            best_acc: 0.75,
        };
        let text = steps_to_jsonl(&[s.clone(), s.clone()]).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("\"action_partner\":null"));
        assert_eq!(parse_steps(&text).unwrap(), vec![s.clone(), s]);
        assert!(matches!(parse_steps("{}\n"), Err(Error::Parse { row: Some(1), .. })));
    }

    #[test]
    fn empty_log_gives_header_only() {
        assert_eq!(convergence_csv(&[]), "episode,best_acc,last_change_step\n");
    }
}

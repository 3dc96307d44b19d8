//! JSON run configurations and their execution.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::export::{save_report, write_file, write_history, write_noise_table};
use super::model_file::save_model;
use super::tqed::load_dataset;
use crate::dataset::{stratified_split, Dataset};
use crate::error::{Error, Result};
use crate::experiments::{
    train_any, with_noise, AnyModel, NoiseRow, NoiseSpec, NoiseTable, HIERARCHICAL_NAME,
};
use crate::stategen::DatasetSpec;

/// Where a dataset comes from: generated on the fly or read from a TQED file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    Generate(GenerateSpec),
    File(FileSource),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    pub per_class_per_pattern: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSource {
    pub path: PathBuf,
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Generate(g) => {
                Dataset::generate(&DatasetSpec::balanced(g.per_class_per_pattern, g.seed))
            }
            DatasetSource::File(f) => load_dataset(&f.path),
        }
    }
}

fn default_test_noises() -> Vec<NoiseSpec> {
    vec![NoiseSpec::none()]
}

fn default_holdout() -> f64 {
    0.2
}

/// One reproducible batch of experiments.
///
/// Relative paths are resolved against the directory holding the config file.
/// Without `test_dataset`, a stratified `holdout_fraction` of `dataset` is held out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub test_dataset: Option<DatasetSource>,
    #[serde(default = "default_holdout")]
    pub holdout_fraction: f64,
    pub models: Vec<String>,
    pub seeds: Vec<u64>,
    #[serde(default = "NoiseSpec::none")]
    pub train_noise: NoiseSpec,
    #[serde(default = "default_test_noises")]
    pub test_noises: Vec<NoiseSpec>,
    pub output_dir: PathBuf,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Parses a document; relative paths are resolved against `base_dir` and checked.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "run config".into(),
            source,
        })?;
        for src in std::iter::once(&mut cfg.dataset).chain(cfg.test_dataset.as_mut()) {
            if let DatasetSource::File(f) = src {
                f.path = resolve(base_dir, &f.path);
            }
        }
        cfg.output_dir = resolve(base_dir, &cfg.output_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base).map_err(|e| match e {
            Error::Json { source, .. } => Error::Json {
                context: path.display().to_string(),
                source,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() || self.seeds.is_empty() || self.test_noises.is_empty() {
            return Err(Error::Config(
                "models, seeds and test_noises must be non-empty".into(),
            ));
        }
        for m in &self.models {
            if !m.eq_ignore_ascii_case(HIERARCHICAL_NAME) {
                crate::experiments::lookup(m)?;
            }
        }
        if self.test_dataset.is_none()
            && !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0)
        {
            return Err(Error::Config(format!(
                "holdout_fraction {} not in (0, 1)",
                self.holdout_fraction
            )));
        }
        for src in std::iter::once(&self.dataset).chain(self.test_dataset.as_ref()) {
            if let DatasetSource::File(f) = src {
                if !f.path.is_file() {
                    return Err(Error::Config(format!(
                        "dataset {} does not exist",
                        f.path.display()
                    )));
                }
            }
        }
        let parent = self
            .output_dir
            .parent()
            .filter(|p| !p.as_os_str().is_empty());
        if let Some(parent) = parent {
            if !parent.is_dir() {
                return Err(Error::Config(format!(
                    "output directory parent {} does not exist",
                    parent.display()
                )));
            }
        }
        Ok(())
    }
}

/// Train and test sets for a config.
pub fn resolve_datasets(cfg: &RunConfig) -> Result<(Dataset, Dataset)> {
    let data = cfg.dataset.load()?;
    match &cfg.test_dataset {
        Some(t) => Ok((data, t.load()?)),
        None => {
            let ids: Vec<usize> = data.samples.iter().map(|s| s.label.id()).collect();
            let seed = data.seed.unwrap_or(0);
            let (train, test) = stratified_split(&ids, cfg.holdout_fraction, seed);
            Ok((data.subset(&train), data.subset(&test)))
        }
    }
}

/// Files written by [`execute_run`], in creation order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutputs {
    pub files: Vec<PathBuf>,
}

fn file_stem(model: &str, seed: u64) -> String {
    format!("{}-seed{seed}", model.to_ascii_uppercase())
}

/// Trains every model for every seed, writing model files, training
/// histories, one report per test noise level and a noise table per seed.
pub fn execute_run(cfg: &RunConfig) -> Result<RunOutputs> {
    cfg.validate()?;
    let (train_data, test_data) = resolve_datasets(cfg)?;
    let train_data = with_noise(&train_data, cfg.train_noise);
    let test_sets: Vec<Dataset> = cfg
        .test_noises
        .iter()
        .map(|&n| with_noise(&test_data, n))
        .collect();
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let mut out = RunOutputs::default();
    for &seed in &cfg.seeds {
        let mut rows = Vec::new();
        for name in &cfg.models {
            let model = train_any(name, &train_data, seed)?;
            let stem = file_stem(model.name(), seed);
            let model_path = cfg.output_dir.join(format!("{stem}.model.json"));
            save_model(&model, &model_path)?;
            out.files.push(model_path);
            if let AnyModel::Flat(m) = &model {
                let path = cfg.output_dir.join(format!("{stem}.history.csv"));
                write_file(&path, |w| write_history(w, &m.history))?;
                out.files.push(path);
            }
            let mut accuracies = Vec::new();
            for (noise, test) in cfg.test_noises.iter().zip(&test_sets) {
                let report = model.evaluate(test)?;
                accuracies.push(report.accuracy);
                let path = cfg
                    .output_dir
                    .join(format!("{stem}-noise{}.report.json", noise.p()));
                save_report(&report, &path)?;
                out.files.push(path);
            }
            rows.push(NoiseRow {
                model: model.name().to_string(),
                accuracies,
            });
        }
        let table = NoiseTable {
            train_noise: cfg.train_noise,
            test_noises: cfg.test_noises.clone(),
            rows,
        };
        let path = cfg.output_dir.join(format!("noise-table-seed{seed}.csv"));
        write_file(&path, |w| write_noise_table(w, &table))?;
        out.files.push(path);
    }
    Ok(out)
}

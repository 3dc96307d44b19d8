//! Named models and the end-to-end experiments built from them.

use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::features::{featurize, FeatureOrdering, FeatureVector};
use crate::nn::{
    evaluate, train, Activation, ConfusionMatrix, LayerSpec, LossKind, Model, NetworkSpec,
    TrainConfig, TrainHistory,
};
use crate::oracle::SloccLabel;
use crate::quantum::DensityMatrix;

/// What a model predicts, and how SLOCC labels map onto its classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Non-GME vs GME.
    Gme,
    /// All six SLOCC classes.
    Slocc,
    /// Fully separable vs not.
    FsNot,
    /// BS1 / BS2 / BS3 / GME among non-separable states.
    BsGme,
    /// GHZ vs W among GME states.
    GhzW,
}

impl Task {
    pub fn class_names(self) -> Vec<&'static str> {
        match self {
            Task::Gme => vec!["Non-GME", "GME"],
            Task::Slocc => SloccLabel::ALL.iter().map(|l| l.name()).collect(),
            Task::FsNot => vec!["SEP", "NOT-SEP"],
            Task::BsGme => vec!["BS1", "BS2", "BS3", "GME"],
            Task::GhzW => vec!["GHZ", "W"],
        }
    }

    pub fn n_classes(self) -> usize {
        self.class_names().len()
    }

    /// Class id of `label`, or `None` when the label lies outside the task's domain.
    pub fn class_of(self, label: SloccLabel) -> Option<usize> {
        use SloccLabel::*;
        match self {
            Task::Gme => Some(usize::from(label.is_gme())),
            Task::Slocc => Some(label.id()),
            Task::FsNot => Some(usize::from(label != Sep)),
            Task::BsGme => match label {
                Sep => None,
                Bs1 => Some(0),
                Bs2 => Some(1),
                Bs3 => Some(2),
                W | Ghz => Some(3),
            },
            Task::GhzW => match label {
                Ghz => Some(0),
                W => Some(1),
                _ => None,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelCatalogEntry {
    pub name: &'static str,
    pub ordering: FeatureOrdering,
    pub task: Task,
    pub spec: NetworkSpec,
    pub train: TrainConfig,
}

fn stack(input: usize, hidden: &[(usize, Activation)], out: usize) -> NetworkSpec {
    let mut layers: Vec<LayerSpec> = hidden.iter().map(|&(w, a)| LayerSpec::new(w, a)).collect();
    let loss = if out == 1 {
        layers.push(LayerSpec::new(1, Activation::Sigmoid));
        LossKind::Bce
    } else {
        layers.push(LayerSpec::new(out, Activation::Softmax));
        LossKind::Cce
    };
    NetworkSpec {
        input_width: input,
        layers,
        loss,
    }
}

fn relu(widths: &[usize]) -> Vec<(usize, Activation)> {
    widths.iter().map(|&w| (w, Activation::Relu)).collect()
}

fn entry(
    name: &'static str,
    ordering: FeatureOrdering,
    task: Task,
    spec: NetworkSpec,
    epochs: usize,
) -> ModelCatalogEntry {
    ModelCatalogEntry {
        name,
        ordering,
        task,
        spec,
        train: TrainConfig {
            epochs,
            ..TrainConfig::default()
        },
    }
}

/// Cascade stages train with smaller batches: at desk scale, batches of
/// 5000 leave too few optimizer steps for these narrower networks.
const STAGE_BATCH: usize = 500;

fn stage(name: &'static str, task: Task, spec: NetworkSpec) -> ModelCatalogEntry {
    let mut e = entry(name, FeatureOrdering::Diag7, task, spec, 1000);
    e.train.batch_size = STAGE_BATCH;
    e
}

/// The fixed model architectures.
pub fn catalog() -> Vec<ModelCatalogEntry> {
    use Activation::{Linear as L, Relu as R};
    use FeatureOrdering::{Diag7, Dm63};
    vec![
        entry(
            "GME63",
            Dm63,
            Task::Gme,
            stack(63, &relu(&[64, 32, 16, 8, 4]), 1),
            100,
        ),
        entry(
            "GME7",
            Diag7,
            Task::Gme,
            stack(7, &relu(&[64, 32, 16]), 1),
            200,
        ),
        entry(
            "SLOCC63",
            Dm63,
            Task::Slocc,
            stack(63, &relu(&[64, 32, 16, 8, 4]), 6),
            1000,
        ),
        entry(
            "SLOCC7",
            Diag7,
            Task::Slocc,
            stack(7, &relu(&[64, 32, 16, 8, 4]), 6),
            1000,
        ),
        stage(
            "FS-NOT",
            Task::FsNot,
            stack(7, &[(32, R), (32, R), (16, L), (16, L), (16, L)], 2),
        ),
        stage(
            "BS-GME",
            Task::BsGme,
            stack(7, &[(32, R), (16, R), (8, R), (4, L)], 4),
        ),
        stage(
            "GHZ-W",
            Task::GhzW,
            stack(7, &[(128, R), (64, R), (32, R), (16, R), (8, R), (4, L)], 2),
        ),
    ]
}

pub fn catalog_names() -> Vec<String> {
    catalog().iter().map(|e| e.name.to_string()).collect()
}

pub fn lookup(name: &str) -> Result<ModelCatalogEntry> {
    catalog()
        .into_iter()
        .find(|e| e.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownModel {
            name: name.to_string(),
            catalog: catalog_names(),
        })
}

/// White-noise mixing weight in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NoiseSpec(f64);

impl NoiseSpec {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange(format!("noise weight {p} not in [0, 1]")));
        }
        Ok(Self(p))
    }

    pub fn none() -> Self {
        Self(0.0)
    }

    pub fn p(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for NoiseSpec {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<NoiseSpec> for f64 {
    fn from(n: NoiseSpec) -> f64 {
        n.0
    }
}

/// `(1 - p) rho + p I/8`.
pub fn add_white_noise(rho: &DensityMatrix, noise: NoiseSpec) -> DensityMatrix {
    match noise.p() {
        0.0 => rho.clone(),
        1.0 => DensityMatrix::maximally_mixed(),
        p => rho.mix(&DensityMatrix::maximally_mixed(), p),
    }
}

/// A copy of `data` with noise mixed into every state. Noisy states lose their kets.
pub fn with_noise(data: &Dataset, noise: NoiseSpec) -> Dataset {
    if noise.p() == 0.0 {
        return data.clone();
    }
    let samples = data
        .samples
        .iter()
        .map(|s| Sample {
            rho: add_white_noise(&s.rho, noise),
            label: s.label,
            pattern: s.pattern,
            ket: None,
        })
        .collect();
    Dataset {
        samples,
        seed: data.seed,
        // Noise composes: (1-q)((1-p)rho + p I/8) + q I/8.
        noise: match (data.noise, noise.p()) {
            (a, 0.0) => a,
            (0.0, b) => b,
            (a, b) => 1.0 - (1.0 - a) * (1.0 - b),
        },
    }
}

/// A catalog model after training, with everything needed to reuse it.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub name: String,
    pub ordering: FeatureOrdering,
    pub task: Task,
    pub model: Model,
    pub train: TrainConfig,
    pub history: TrainHistory,
}

impl TrainedModel {
    pub fn class_names(&self) -> Vec<&'static str> {
        self.task.class_names()
    }
}

/// Feature rows and class ids of the samples that fall inside `task`'s domain.
pub fn task_matrix(
    data: &Dataset,
    ordering: FeatureOrdering,
    task: Task,
) -> Result<(Array2<f64>, Vec<usize>)> {
    let width = ordering.len();
    let mut values = Vec::new();
    let mut ids = Vec::new();
    for s in &data.samples {
        if let Some(c) = task.class_of(s.label) {
            values.extend(featurize(s, ordering)?.values);
            ids.push(c);
        }
    }
    let rows = ids.len();
    let x =
        Array2::from_shape_vec((rows, width), values).map_err(|e| Error::Shape(e.to_string()))?;
    Ok((x, ids))
}

fn ensure_ordering_available(data: &Dataset, ordering: FeatureOrdering) -> Result<()> {
    if ordering == FeatureOrdering::Sv16 && data.noise > 0.0 {
        return Err(Error::Config(
            "state-vector features need pure states; dataset is noisy".into(),
        ));
    }
    Ok(())
}

/// Trains catalog model `entry` on the in-domain part of `data`.
pub fn train_entry(entry: &ModelCatalogEntry, data: &Dataset, seed: u64) -> Result<TrainedModel> {
    ensure_ordering_available(data, entry.ordering)?;
    let (x, ids) = task_matrix(data, entry.ordering, entry.task)?;
    if ids.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no training states for {}",
            entry.name
        )));
    }
    let config = TrainConfig {
        seed,
        ..entry.train
    };
    let (model, history) = train(&entry.spec, x.view(), &ids, &config)?;
    Ok(TrainedModel {
        name: entry.name.to_string(),
        ordering: entry.ordering,
        task: entry.task,
        model,
        train: config,
        history,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub size: usize,
    pub seed: Option<u64>,
    pub noise: f64,
}

impl DatasetDescriptor {
    pub fn of(data: &Dataset) -> Self {
        Self {
            size: data.len(),
            seed: data.seed,
            noise: data.noise,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub class: String,
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub model: String,
    pub dataset: DatasetDescriptor,
    pub accuracy: f64,
    pub class_names: Vec<String>,
    pub per_class_accuracy: Vec<ClassAccuracy>,
    pub confusion: ConfusionMatrix,
    pub runtime_secs: f64,
}

impl ExperimentReport {
    pub fn new(
        model: &str,
        data: &Dataset,
        class_names: &[&str],
        confusion: ConfusionMatrix,
        runtime_secs: f64,
    ) -> Self {
        let per_class_accuracy = class_names
            .iter()
            .zip(confusion.per_class_accuracy())
            .map(|(c, a)| ClassAccuracy {
                class: c.to_string(),
                accuracy: a,
            })
            .collect();
        Self {
            model: model.to_string(),
            dataset: DatasetDescriptor::of(data),
            accuracy: confusion.accuracy(),
            class_names: class_names.iter().map(|c| c.to_string()).collect(),
            per_class_accuracy,
            confusion,
            runtime_secs,
        }
    }

    pub fn class_accuracy(&self, class: &str) -> Option<f64> {
        self.per_class_accuracy
            .iter()
            .find(|c| c.class == class)
            .and_then(|c| c.accuracy)
    }

    /// Checks that accuracies agree with the confusion matrix they summarize.
    pub fn is_consistent(&self) -> bool {
        let n = self.confusion.n_classes();
        if self.class_names.len() != n || self.per_class_accuracy.len() != n {
            return false;
        }
        let same = |a: f64, b: f64| a == b || (a.is_nan() && b.is_nan());
        same(self.accuracy, self.confusion.accuracy())
            && self
                .per_class_accuracy
                .iter()
                .zip(self.confusion.per_class_accuracy())
                .all(|(c, a)| c.accuracy == a)
    }
}

/// Evaluates a trained model on the in-domain part of `data`.
pub fn evaluate_trained(tm: &TrainedModel, data: &Dataset) -> Result<ExperimentReport> {
    let start = Instant::now();
    ensure_ordering_available(data, tm.ordering)?;
    let (x, ids) = task_matrix(data, tm.ordering, tm.task)?;
    let eval = evaluate(&tm.model, x.view(), &ids)?;
    Ok(ExperimentReport::new(
        &tm.name,
        data,
        &tm.class_names(),
        eval.confusion,
        start.elapsed().as_secs_f64(),
    ))
}

fn run_task(
    name: &str,
    task: Task,
    train_data: &Dataset,
    test_data: &Dataset,
    seed: u64,
) -> Result<(TrainedModel, ExperimentReport)> {
    let entry = lookup(name)?;
    if entry.task != task {
        return Err(Error::Config(format!(
            "{} is a {:?} model, not a {:?} model",
            entry.name, entry.task, task
        )));
    }
    let start = Instant::now();
    let tm = train_entry(&entry, train_data, seed)?;
    let mut report = evaluate_trained(&tm, test_data)?;
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok((tm, report))
}

/// Trains a GME catalog model on `train_data` and reports on `test_data`.
pub fn run_gme(
    name: &str,
    train_data: &Dataset,
    test_data: &Dataset,
    seed: u64,
) -> Result<(TrainedModel, ExperimentReport)> {
    run_task(name, Task::Gme, train_data, test_data, seed)
}

/// Trains a six-class SLOCC catalog model on `train_data` and reports on `test_data`.
pub fn run_slocc_flat(
    name: &str,
    train_data: &Dataset,
    test_data: &Dataset,
    seed: u64,
) -> Result<(TrainedModel, ExperimentReport)> {
    run_task(name, Task::Slocc, train_data, test_data, seed)
}

/// Three cascaded DIAG7 classifiers: FS-NOT, then BS-GME, then GHZ-W.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchicalClassifier {
    pub fs_not: TrainedModel,
    pub bs_gme: TrainedModel,
    pub ghz_w: TrainedModel,
}

pub const HIERARCHICAL_NAME: &str = "HIER7";

/// Each stage trains on the ground-truth states of its own domain.
pub fn train_hierarchical(data: &Dataset, seed: u64) -> Result<HierarchicalClassifier> {
    for label in SloccLabel::ALL {
        if data.count(label) == 0 {
            return Err(Error::EmptyDataset(format!(
                "hierarchical training needs {label} states"
            )));
        }
    }
    Ok(HierarchicalClassifier {
        fs_not: train_entry(&lookup("FS-NOT")?, data, seed)?,
        bs_gme: train_entry(&lookup("BS-GME")?, data, seed)?,
        ghz_w: train_entry(&lookup("GHZ-W")?, data, seed)?,
    })
}

/// Outcome of routing one input through the cascade.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Routed {
    pub label: SloccLabel,
    pub models_consulted: usize,
}

fn check_stage(tm: &TrainedModel, task: Task) -> Result<()> {
    if tm.task != task || tm.ordering != FeatureOrdering::Diag7 {
        return Err(Error::Config(format!(
            "hierarchical stage {} has task {:?} / {}, expected {:?} / DIAG7",
            tm.name, tm.task, tm.ordering, task
        )));
    }
    Ok(())
}

impl HierarchicalClassifier {
    pub fn check(&self) -> Result<()> {
        check_stage(&self.fs_not, Task::FsNot)?;
        check_stage(&self.bs_gme, Task::BsGme)?;
        check_stage(&self.ghz_w, Task::GhzW)
    }

    /// Routes every row of raw DIAG7 features through the cascade.
    pub fn route(&self, x: &Array2<f64>) -> Result<Vec<Routed>> {
        self.check()?;
        let n = x.nrows();
        let mut out: Vec<Option<Routed>> = vec![None; n];

        let stage1 = self.fs_not.model.predict(x.view())?;
        let mut pending = Vec::new();
        for (i, &c) in stage1.iter().enumerate() {
            if c == 0 {
                out[i] = Some(Routed {
                    label: SloccLabel::Sep,
                    models_consulted: 1,
                });
            } else {
                pending.push(i);
            }
        }

        let mut gme = Vec::new();
        if !pending.is_empty() {
            let sub = x.select(ndarray::Axis(0), &pending);
            let stage2 = self.bs_gme.model.predict(sub.view())?;
            for (&i, &c) in pending.iter().zip(&stage2) {
                let label = match c {
                    0 => SloccLabel::Bs1,
                    1 => SloccLabel::Bs2,
                    2 => SloccLabel::Bs3,
                    _ => {
                        gme.push(i);
                        continue;
                    }
                };
                out[i] = Some(Routed {
                    label,
                    models_consulted: 2,
                });
            }
        }

        if !gme.is_empty() {
            let sub = x.select(ndarray::Axis(0), &gme);
            let stage3 = self.ghz_w.model.predict(sub.view())?;
            for (&i, &c) in gme.iter().zip(&stage3) {
                out[i] = Some(Routed {
                    label: if c == 0 {
                        SloccLabel::Ghz
                    } else {
                        SloccLabel::W
                    },
                    models_consulted: 3,
                });
            }
        }
        Ok(out
            .into_iter()
            .map(|r| r.expect("every row routed"))
            .collect())
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<SloccLabel> {
        if x.ordering != FeatureOrdering::Diag7 {
            return Err(Error::Config(format!(
                "hierarchical model needs DIAG7 features, got {}",
                x.ordering
            )));
        }
        let row = Array2::from_shape_vec((1, x.len()), x.values.clone())
            .map_err(|e| Error::Shape(e.to_string()))?;
        Ok(self.route(&row)?[0].label)
    }
}

pub fn predict_hierarchical(h: &HierarchicalClassifier, x: &FeatureVector) -> Result<SloccLabel> {
    h.predict(x)
}

/// Six-class report of the cascade on `data`.
pub fn evaluate_hierarchical(
    h: &HierarchicalClassifier,
    data: &Dataset,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    data.ensure_non_empty("nothing to evaluate")?;
    let (x, ids) = task_matrix(data, FeatureOrdering::Diag7, Task::Slocc)?;
    let predicted: Vec<usize> = h.route(&x)?.iter().map(|r| r.label.id()).collect();
    let confusion = ConfusionMatrix::from_predictions(6, &ids, &predicted)?;
    Ok(ExperimentReport::new(
        HIERARCHICAL_NAME,
        data,
        &Task::Slocc.class_names(),
        confusion,
        start.elapsed().as_secs_f64(),
    ))
}

/// Either a flat catalog model or the hierarchical cascade.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyModel {
    Flat(TrainedModel),
    Hierarchical(Box<HierarchicalClassifier>),
}

impl AnyModel {
    pub fn name(&self) -> &str {
        match self {
            AnyModel::Flat(m) => &m.name,
            AnyModel::Hierarchical(_) => HIERARCHICAL_NAME,
        }
    }

    pub fn evaluate(&self, data: &Dataset) -> Result<ExperimentReport> {
        match self {
            AnyModel::Flat(m) => evaluate_trained(m, data),
            AnyModel::Hierarchical(h) => evaluate_hierarchical(h, data),
        }
    }
}

/// Trains a catalog model, or the cascade when `name` is [`HIERARCHICAL_NAME`].
pub fn train_any(name: &str, data: &Dataset, seed: u64) -> Result<AnyModel> {
    if name.eq_ignore_ascii_case(HIERARCHICAL_NAME) {
        return Ok(AnyModel::Hierarchical(Box::new(train_hierarchical(
            data, seed,
        )?)));
    }
    Ok(AnyModel::Flat(train_entry(&lookup(name)?, data, seed)?))
}

/// Accuracy grid: one row per model, one column per test noise level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseTable {
    pub train_noise: NoiseSpec,
    pub test_noises: Vec<NoiseSpec>,
    pub rows: Vec<NoiseRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub model: String,
    pub accuracies: Vec<f64>,
}

impl NoiseTable {
    pub fn accuracy(&self, model: &str, test_noise: f64) -> Option<f64> {
        let col = self.test_noises.iter().position(|n| n.p() == test_noise)?;
        self.rows
            .iter()
            .find(|r| r.model == model)
            .map(|r| r.accuracies[col])
    }
}

/// Trains each model on `train_data` with `train_noise` mixed in, then scores
/// it on `test_data` at every test noise level.
pub fn noise_experiment(
    train_noise: NoiseSpec,
    test_noises: &[NoiseSpec],
    models: &[&str],
    train_data: &Dataset,
    test_data: &Dataset,
    seed: u64,
) -> Result<NoiseTable> {
    let noisy_train = with_noise(train_data, train_noise);
    let test_sets: Vec<Dataset> = test_noises
        .iter()
        .map(|&n| with_noise(test_data, n))
        .collect();
    let mut rows = Vec::with_capacity(models.len());
    for &name in models {
        let model = train_any(name, &noisy_train, seed)?;
        let accuracies = test_sets
            .iter()
            .map(|t| model.evaluate(t).map(|r| r.accuracy))
            .collect::<Result<_>>()?;
        rows.push(NoiseRow {
            model: model.name().to_string(),
            accuracies,
        });
    }
    Ok(NoiseTable {
        train_noise,
        test_noises: test_noises.to_vec(),
        rows,
    })
}

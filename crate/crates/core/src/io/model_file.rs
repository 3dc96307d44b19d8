//! JSON model files.
//!
//! Floats are written in shortest round-trip form and parsed with correct
//! rounding, so every weight survives a save/load cycle bit for bit.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{AnyModel, HierarchicalClassifier, Task, TrainedModel};
use crate::features::FeatureOrdering;
use crate::nn::{Layer, Model, NetworkSpec, Parameters, Standardizer, TrainConfig, TrainHistory};

pub const MODEL_FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u64,
    model: Body,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Body {
    Flat(FlatDoc),
    Hierarchical(Box<Stages>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Stages {
    fs_not: FlatDoc,
    bs_gme: FlatDoc,
    ghz_w: FlatDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatDoc {
    name: String,
    ordering: FeatureOrdering,
    task: Task,
    spec: NetworkSpec,
    layers: Vec<LayerDoc>,
    scaler: Standardizer,
    train: TrainConfig,
    history: TrainHistory,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    /// `fan_in` rows of `fan_out` values.
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

fn to_doc(m: &TrainedModel) -> FlatDoc {
    FlatDoc {
        name: m.name.clone(),
        ordering: m.ordering,
        task: m.task,
        spec: m.model.spec.clone(),
        layers: m
            .model
            .params
            .layers
            .iter()
            .map(|l| LayerDoc {
                weights: l.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
                bias: l.bias.to_vec(),
            })
            .collect(),
        scaler: m.model.scaler.clone(),
        train: m.train,
        history: m.history.clone(),
    }
}

fn from_doc(doc: FlatDoc) -> Result<TrainedModel> {
    let bad = |msg: String| Error::Config(format!("model {}: {msg}", doc.name));
    doc.spec.validate()?;
    if doc.spec.input_width != doc.ordering.len() {
        return Err(bad(format!(
            "input width {} does not match {} features",
            doc.spec.input_width, doc.ordering
        )));
    }
    if doc.spec.n_classes() != doc.task.n_classes() {
        return Err(bad(format!(
            "{} output classes for a {}-class task",
            doc.spec.n_classes(),
            doc.task.n_classes()
        )));
    }
    let layers = doc
        .layers
        .iter()
        .map(|l| {
            let rows = l.weights.len();
            let cols = l.weights.first().map_or(0, Vec::len);
            if l.weights.iter().any(|r| r.len() != cols) {
                return Err(Error::Shape("ragged weight matrix".into()));
            }
            let flat: Vec<f64> = l.weights.iter().flatten().copied().collect();
            Ok(Layer {
                weights: Array2::from_shape_vec((rows, cols), flat)
                    .map_err(|e| Error::Shape(e.to_string()))?,
                bias: Array1::from(l.bias.clone()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let params = Parameters { layers };
    params.check_shapes(&doc.spec)?;
    if doc.scaler.shift.len() != doc.spec.input_width
        || doc.scaler.scale.len() != doc.spec.input_width
    {
        return Err(bad(
            "standardizer width does not match the input width".into()
        ));
    }
    if doc
        .scaler
        .scale
        .iter()
        .any(|&s| !(s > 0.0 && s.is_finite()))
    {
        return Err(bad("standardizer scales must be positive and finite".into()));
    }
    Ok(TrainedModel {
        name: doc.name,
        ordering: doc.ordering,
        task: doc.task,
        model: Model {
            spec: doc.spec,
            params,
            scaler: doc.scaler,
        },
        train: doc.train,
        history: doc.history,
    })
}

fn json_err(context: &str, source: serde_json::Error) -> Error {
    Error::Json {
        context: context.to_string(),
        source,
    }
}

pub fn encode_model(model: &AnyModel) -> Result<String> {
    let body = match model {
        AnyModel::Flat(m) => Body::Flat(to_doc(m)),
        AnyModel::Hierarchical(h) => Body::Hierarchical(Box::new(Stages {
            fs_not: to_doc(&h.fs_not),
            bs_gme: to_doc(&h.bs_gme),
            ghz_w: to_doc(&h.ghz_w),
        })),
    };
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        model: body,
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| json_err("model", e))?;
    text.push('\n');
    Ok(text)
}

/// Parses a model document, checking the format version before anything else.
pub fn decode_model(text: &str) -> Result<AnyModel> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| json_err("model", e))?;
    match value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
    {
        Some(MODEL_FORMAT_VERSION) => {}
        Some(found) => {
            return Err(Error::UnsupportedVersion {
                found,
                supported: MODEL_FORMAT_VERSION,
            })
        }
        None => {
            return Err(Error::Config(
                "model file has no integer format_version".into(),
            ))
        }
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| json_err("model", e))?;
    match file.model {
        Body::Flat(doc) => Ok(AnyModel::Flat(from_doc(doc)?)),
        Body::Hierarchical(stages) => {
            let Stages {
                fs_not,
                bs_gme,
                ghz_w,
            } = *stages;
            let h = HierarchicalClassifier {
                fs_not: from_doc(fs_not)?,
                bs_gme: from_doc(bs_gme)?,
                ghz_w: from_doc(ghz_w)?,
            };
            h.check()?;
            Ok(AnyModel::Hierarchical(Box::new(h)))
        }
    }
}

pub fn save_model(model: &AnyModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_model(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<AnyModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_model(&text).map_err(|e| match e {
        Error::Json { source, .. } => json_err(&path.display().to_string(), source),
        other => other,
    })
}

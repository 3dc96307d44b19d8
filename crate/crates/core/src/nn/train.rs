use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::metrics::ConfusionMatrix;
use super::network::{
    backward, batch_loss, forward_batch, targets_for, LossKind, NetworkSpec, Parameters,
};
use crate::dataset::stratified_split;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.0025,
            batch_size: 5000,
            epochs: 100,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config(
                "batch size and epochs must be positive".into(),
            ));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation fraction {} not in (0, 1)",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

/// Per-feature affine map `(x - shift) / scale` fitted on training inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(width: usize) -> Self {
        Self {
            shift: vec![0.0; width],
            scale: vec![1.0; width],
        }
    }

    /// Column means and population standard deviations; zero spread maps to scale 1.
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let n = x.nrows() as f64;
        let shift: Vec<f64> = x
            .mean_axis(Axis(0))
            .map_or_else(|| vec![0.0; x.ncols()], |m| m.to_vec());
        let scale = x
            .axis_iter(Axis(1))
            .zip(&shift)
            .map(|(col, &m)| {
                let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { shift, scale }
    }

    pub fn width(&self) -> usize {
        self.shift.len()
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.width() || self.scale.len() != self.width() {
            return Err(Error::Shape(format!(
                "standardizer for {} features applied to {}",
                self.width(),
                x.ncols()
            )));
        }
        let shift = Array1::from(self.shift.clone());
        let scale = Array1::from(self.scale.clone());
        Ok((&x - &shift) / &scale)
    }
}

/// A trained network: architecture, weights and input standardization.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub spec: NetworkSpec,
    pub params: Parameters,
    pub scaler: Standardizer,
}

impl Model {
    /// Network outputs for raw (unstandardized) inputs.
    pub fn outputs(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let z = self.scaler.transform(x)?;
        Ok(forward_batch(&self.spec, &self.params, z.view())?
            .output()
            .clone())
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        Ok(predict_classes(self.spec.loss, &self.outputs(x)?))
    }
}

/// Sigmoid outputs `>= 0.5` are class 1; softmax argmax with ties to the lower index.
pub fn predict_classes(loss: LossKind, outputs: &Array2<f64>) -> Vec<usize> {
    outputs
        .outer_iter()
        .map(|row| match loss {
            LossKind::Bce => usize::from(row[0] >= 0.5),
            LossKind::Cce => {
                let mut best = 0;
                for (i, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = i;
                    }
                }
                best
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
    pub confusion: ConfusionMatrix,
}

pub fn evaluate(model: &Model, x: ArrayView2<f64>, class_ids: &[usize]) -> Result<Evaluation> {
    if x.nrows() == 0 {
        return Err(Error::EmptyDataset("nothing to evaluate".into()));
    }
    if x.nrows() != class_ids.len() {
        return Err(Error::Shape(format!(
            "{} inputs but {} labels",
            x.nrows(),
            class_ids.len()
        )));
    }
    let out = model.outputs(x)?;
    let targets = targets_for(&model.spec, class_ids)?;
    let predicted = predict_classes(model.spec.loss, &out);
    let confusion =
        ConfusionMatrix::from_predictions(model.spec.n_classes(), class_ids, &predicted)?;
    Ok(Evaluation {
        accuracy: confusion.accuracy(),
        loss: batch_loss(model.spec.loss, &out, &targets),
        confusion,
    })
}

/// Mini-batch Adam training on a stratified train/validation split.
pub fn train(
    spec: &NetworkSpec,
    x: ArrayView2<f64>,
    class_ids: &[usize],
    config: &TrainConfig,
) -> Result<(Model, TrainHistory)> {
    spec.validate()?;
    config.validate()?;
    if x.nrows() == 0 {
        return Err(Error::EmptyDataset("no training samples".into()));
    }
    if x.nrows() != class_ids.len() {
        return Err(Error::Shape(format!(
            "{} inputs but {} labels",
            x.nrows(),
            class_ids.len()
        )));
    }
    if x.ncols() != spec.input_width {
        return Err(Error::Shape(format!(
            "data has {} features, network expects {}",
            x.ncols(),
            spec.input_width
        )));
    }
    let (train_idx, val_idx) = stratified_split(class_ids, config.validation_fraction, config.seed);
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "{} samples leave an empty train or validation split",
            x.nrows()
        )));
    }
    let x_train_raw = x.select(Axis(0), &train_idx);
    let scaler = Standardizer::fit(x_train_raw.view());
    let x_train = scaler.transform(x_train_raw.view())?;
    let x_val = scaler.transform(x.select(Axis(0), &val_idx).view())?;
    let y_train_ids: Vec<usize> = train_idx.iter().map(|&i| class_ids[i]).collect();
    let y_val_ids: Vec<usize> = val_idx.iter().map(|&i| class_ids[i]).collect();
    let y_train = targets_for(spec, &y_train_ids)?;
    let y_val = targets_for(spec, &y_val_ids)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = Parameters::glorot(spec, &mut rng)?;
    let mut adam = AdamState::new(&params, AdamConfig::default());
    let mut order: Vec<usize> = (0..train_idx.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            let xb = x_train.select(Axis(0), batch);
            let yb = y_train.select(Axis(0), batch);
            let pass = forward_batch(spec, &params, xb.view())?;
            loss_sum += batch_loss(spec.loss, pass.output(), &yb) * batch.len() as f64;
            correct += predict_classes(spec.loss, pass.output())
                .iter()
                .zip(batch)
                .filter(|(p, &i)| **p == y_train_ids[i])
                .count();
            let grads = backward(spec, &params, &pass, &yb)?;
            adam_step(&mut params, &grads, &mut adam, config.learning_rate)?;
        }
        let val_out = forward_batch(spec, &params, x_val.view())?;
        let val_pred = predict_classes(spec.loss, val_out.output());
        let val_correct = val_pred
            .iter()
            .zip(&y_val_ids)
            .filter(|(p, t)| p == t)
            .count();
        history.records.push(EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / order.len() as f64,
            train_accuracy: correct as f64 / order.len() as f64,
            val_loss: batch_loss(spec.loss, val_out.output(), &y_val),
            val_accuracy: val_correct as f64 / y_val_ids.len() as f64,
        });
    }

    Ok((
        Model {
            spec: spec.clone(),
            params,
            scaler,
        },
        history,
    ))
}

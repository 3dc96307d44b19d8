use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
    Sigmoid,
    Softmax,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
            Activation::Sigmoid => "sigmoid",
            Activation::Softmax => "softmax",
        }
    }

    /// Sigmoid and softmax are only valid on the output layer.
    pub fn is_output_only(self) -> bool {
        matches!(self, Activation::Sigmoid | Activation::Softmax)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" | "r" => Ok(Activation::Relu),
            "linear" | "l" => Ok(Activation::Linear),
            "sigmoid" => Ok(Activation::Sigmoid),
            "softmax" => Ok(Activation::Softmax),
            _ => Err(Error::Config(format!("unknown activation {s:?}"))),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

pub fn apply_activation(kind: Activation, v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    match kind {
        Activation::Relu => out.iter_mut().for_each(|x| *x = x.max(0.0)),
        Activation::Linear => {}
        Activation::Sigmoid => out.iter_mut().for_each(|x| *x = sigmoid(*x)),
        Activation::Softmax => softmax_in_place(&mut out),
    }
    out
}

/// Row-wise activation of a batch of pre-activations.
pub(crate) fn activate_batch(kind: Activation, z: &Array2<f64>) -> Array2<f64> {
    let mut a = z.clone();
    match kind {
        Activation::Relu => a.mapv_inplace(|x| x.max(0.0)),
        Activation::Linear => {}
        Activation::Sigmoid => a.mapv_inplace(sigmoid),
        Activation::Softmax => {
            for mut row in a.axis_iter_mut(Axis(0)) {
                softmax_in_place(row.as_slice_mut().expect("standard layout"));
            }
        }
    }
    a
}

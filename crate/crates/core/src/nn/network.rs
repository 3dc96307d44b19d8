use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::{activate_batch, Activation};
use crate::error::{Error, Result};

/// Probabilities are clipped to `[CLIP, 1 - CLIP]` before taking logs.
pub const CLIP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(width: usize, activation: Activation) -> Self {
        Self { width, activation }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Binary cross-entropy on a single sigmoid output.
    Bce,
    /// Categorical cross-entropy on a softmax output.
    Cce,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_width: usize,
    pub layers: Vec<LayerSpec>,
    pub loss: LossKind,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.input_width == 0 {
            return bad("input width must be positive".into());
        }
        let Some((last, hidden)) = self.layers.split_last() else {
            return bad("network has no layers".into());
        };
        if let Some(l) = self.layers.iter().find(|l| l.width == 0) {
            return bad(format!("zero-width {} layer", l.activation));
        }
        if let Some(l) = hidden.iter().find(|l| l.activation.is_output_only()) {
            return bad(format!(
                "{} is only allowed on the output layer",
                l.activation
            ));
        }
        match (self.loss, last.activation, last.width) {
            (LossKind::Bce, Activation::Sigmoid, 1) => Ok(()),
            (LossKind::Cce, Activation::Softmax, w) if w >= 2 => Ok(()),
            (LossKind::Bce, ..) => bad("bce needs a single sigmoid output".into()),
            (LossKind::Cce, ..) => bad("cce needs a softmax output of width >= 2".into()),
        }
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.width)
    }

    /// Number of classes the network predicts.
    pub fn n_classes(&self) -> usize {
        match self.loss {
            LossKind::Bce => 2,
            LossKind::Cce => self.output_width(),
        }
    }

    pub fn fan_ins(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.input_width).chain(self.layers.iter().map(|l| l.width))
    }
}

/// Hidden-layer widths from repeated halving, `n -> (n + n % 2) / 2`, while the result stays >= 4.
pub fn suggest_widths(n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut w = n;
    loop {
        let next = (w + w % 2) / 2;
        if next < 4 || next == w {
            break;
        }
        out.push(next);
        w = next;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `fan_in x fan_out`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Parameters {
    pub layers: Vec<Layer>,
}

impl Parameters {
    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(spec: &NetworkSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let widths: Vec<usize> = spec.fan_ins().collect();
        let layers = widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    weights: Array2::from_shape_fn((fan_in, fan_out), |_| {
                        rng.random_range(-limit..limit)
                    }),
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let widths: Vec<usize> = spec.fan_ins().collect();
        Ok(Self {
            layers: widths
                .windows(2)
                .map(|w| Layer {
                    weights: Array2::zeros((w[0], w[1])),
                    bias: Array1::zeros(w[1]),
                })
                .collect(),
        })
    }

    /// Checks that every layer's shape chains from `spec.input_width`.
    pub fn check_shapes(&self, spec: &NetworkSpec) -> Result<()> {
        let widths: Vec<usize> = spec.fan_ins().collect();
        if self.layers.len() + 1 != widths.len() {
            return Err(Error::Shape(format!(
                "{} parameter layers for a {}-layer network",
                self.layers.len(),
                widths.len() - 1
            )));
        }
        for (i, (l, w)) in self.layers.iter().zip(widths.windows(2)).enumerate() {
            if l.weights.dim() != (w[0], w[1]) || l.bias.len() != w[1] {
                return Err(Error::Shape(format!(
                    "layer {i}: weights {:?} / bias {} where {}x{} expected",
                    l.weights.dim(),
                    l.bias.len(),
                    w[0],
                    w[1]
                )));
            }
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Visits every scalar parameter in a fixed order (per layer: weights row-major, then bias).
    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }
}

/// Everything backprop needs from a forward call.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub input: Array2<f64>,
    /// Pre-activations per layer.
    pub pre: Vec<Array2<f64>>,
    /// Activations per layer; the last one is the network output.
    pub post: Vec<Array2<f64>>,
}

impl ForwardPass {
    pub fn output(&self) -> &Array2<f64> {
        self.post.last().expect("at least one layer")
    }
}

pub fn forward_batch(
    spec: &NetworkSpec,
    params: &Parameters,
    x: ArrayView2<f64>,
) -> Result<ForwardPass> {
    params.check_shapes(spec)?;
    if x.ncols() != spec.input_width {
        return Err(Error::Shape(format!(
            "input has {} features, network expects {}",
            x.ncols(),
            spec.input_width
        )));
    }
    let mut pre = Vec::with_capacity(spec.layers.len());
    let mut post: Vec<Array2<f64>> = Vec::with_capacity(spec.layers.len());
    for (layer, p) in spec.layers.iter().zip(&params.layers) {
        let a_prev = post.last().map_or(x.view(), |a| a.view());
        let z = a_prev.dot(&p.weights) + &p.bias;
        post.push(activate_batch(layer.activation, &z));
        pre.push(z);
    }
    Ok(ForwardPass {
        input: x.to_owned(),
        pre,
        post,
    })
}

/// Single-sample forward pass.
pub fn forward(spec: &NetworkSpec, params: &Parameters, x: &[f64]) -> Result<ForwardPass> {
    let row = ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::Shape(e.to_string()))?;
    forward_batch(spec, params, row)
}

/// Loss of one prediction against its target (a 0/1 scalar or a one-hot row).
pub fn loss(kind: LossKind, predicted: &[f64], target: &[f64]) -> f64 {
    let clip = |p: f64| p.clamp(CLIP, 1.0 - CLIP);
    match kind {
        LossKind::Bce => {
            let (p, y) = (clip(predicted[0]), target[0]);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        }
        LossKind::Cce => -predicted
            .iter()
            .zip(target)
            .filter(|(_, &y)| y != 0.0)
            .map(|(&p, &y)| y * clip(p).ln())
            .sum::<f64>(),
    }
}

/// Mean loss over the rows of a batch.
pub fn batch_loss(kind: LossKind, predicted: &Array2<f64>, targets: &Array2<f64>) -> f64 {
    let n = predicted.nrows();
    predicted
        .outer_iter()
        .zip(targets.outer_iter())
        .map(|(p, t)| {
            loss(
                kind,
                p.as_slice().expect("contiguous"),
                t.as_slice().expect("contiguous"),
            )
        })
        .sum::<f64>()
        / n as f64
}

/// Target rows for class ids: a 0/1 column for BCE, one-hot rows for CCE.
pub fn targets_for(spec: &NetworkSpec, class_ids: &[usize]) -> Result<Array2<f64>> {
    let n_classes = spec.n_classes();
    if let Some(&bad) = class_ids.iter().find(|&&c| c >= n_classes) {
        return Err(Error::Shape(format!(
            "class id {bad} for a {n_classes}-class network"
        )));
    }
    Ok(match spec.loss {
        LossKind::Bce => Array2::from_shape_fn((class_ids.len(), 1), |(i, _)| class_ids[i] as f64),
        LossKind::Cce => Array2::from_shape_fn((class_ids.len(), n_classes), |(i, j)| {
            if class_ids[i] == j {
                1.0
            } else {
                0.0
            }
        }),
    })
}

/// Exact gradients of the mean batch loss.
///
/// Sigmoid+BCE and softmax+CCE share the output delta `(p - y) / batch`.
pub fn backward(
    spec: &NetworkSpec,
    params: &Parameters,
    pass: &ForwardPass,
    targets: &Array2<f64>,
) -> Result<Parameters> {
    params.check_shapes(spec)?;
    let out = pass.output();
    if out.dim() != targets.dim() {
        return Err(Error::Shape(format!(
            "targets {:?} do not match outputs {:?}",
            targets.dim(),
            out.dim()
        )));
    }
    if pass.pre.len() != spec.layers.len() {
        return Err(Error::Shape(
            "forward pass does not match the network".into(),
        ));
    }
    let batch = out.nrows() as f64;
    let mut delta = (out - targets) / batch;
    let mut grads = Vec::with_capacity(spec.layers.len());
    for i in (0..spec.layers.len()).rev() {
        let a_prev = if i == 0 {
            pass.input.view()
        } else {
            pass.post[i - 1].view()
        };
        let weights = a_prev.t().dot(&delta);
        let bias = delta.sum_axis(Axis(0));
        if i > 0 {
            let mut next = delta.dot(&params.layers[i].weights.t());
            match spec.layers[i - 1].activation {
                Activation::Relu => {
                    next.zip_mut_with(&pass.pre[i - 1], |d, &z| {
                        if z <= 0.0 {
                            *d = 0.0
                        }
                    });
                }
                Activation::Linear => {}
                other => {
                    return Err(Error::Config(format!(
                        "{other} is only allowed on the output layer"
                    )));
                }
            }
            delta = next;
        }
        grads.push(Layer { weights, bias });
    }
    grads.reverse();
    Ok(Parameters { layers: grads })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(input: usize, layers: &[(usize, Activation)], loss: LossKind) -> NetworkSpec {
        NetworkSpec {
            input_width: input,
            layers: layers.iter().map(|&(w, a)| LayerSpec::new(w, a)).collect(),
            loss,
        }
    }

    #[test]
    fn suggest_widths_examples() {
        assert_eq!(suggest_widths(63), vec![32, 16, 8, 4]);
        assert_eq!(suggest_widths(8), vec![4]);
        assert_eq!(suggest_widths(7), vec![4]);
        assert_eq!(suggest_widths(5), Vec::<usize>::new());
        assert_eq!(suggest_widths(1), Vec::<usize>::new());
    }

    #[test]
    fn spec_validation() {
        use Activation::*;
        assert!(spec(3, &[(4, Relu), (1, Sigmoid)], LossKind::Bce)
            .validate()
            .is_ok());
        assert!(spec(3, &[(4, Relu), (2, Sigmoid)], LossKind::Bce)
            .validate()
            .is_err());
        assert!(spec(3, &[(4, Softmax), (2, Softmax)], LossKind::Cce)
            .validate()
            .is_err());
        assert!(spec(3, &[(1, Softmax)], LossKind::Cce).validate().is_err());
        assert!(spec(3, &[], LossKind::Cce).validate().is_err());
        assert!(spec(0, &[(2, Softmax)], LossKind::Cce).validate().is_err());
        assert!(spec(3, &[(0, Relu), (2, Softmax)], LossKind::Cce)
            .validate()
            .is_err());
    }

    #[test]
    fn zero_network_predicts_one_half() {
        let s = spec(
            3,
            &[(4, Activation::Relu), (1, Activation::Sigmoid)],
            LossKind::Bce,
        );
        let p = Parameters::zeros(&s).unwrap();
        let pass = forward(&s, &p, &[0.3, -1.0, 2.0]).unwrap();
        assert_eq!(pass.output()[[0, 0]], 0.5);
    }

    #[test]
    fn identity_linear_layer_reproduces_input() {
        let s = spec(
            3,
            &[(3, Activation::Linear), (2, Activation::Softmax)],
            LossKind::Cce,
        );
        let mut p = Parameters::zeros(&s).unwrap();
        p.layers[0].weights = Array2::eye(3);
        let pass = forward(&s, &p, &[0.3, -1.0, 2.0]).unwrap();
        assert_eq!(pass.post[0].row(0).to_vec(), vec![0.3, -1.0, 2.0]);
    }

    #[test]
    fn forward_is_deterministic_and_checks_width() {
        let s = spec(
            4,
            &[(3, Activation::Relu), (2, Activation::Softmax)],
            LossKind::Cce,
        );
        let p = Parameters::glorot(&s, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let x = [0.1, 0.2, -0.3, 0.4];
        let a = forward(&s, &p, &x).unwrap();
        let b = forward(&s, &p, &x).unwrap();
        assert_eq!(a.output(), b.output());
        assert!(matches!(forward(&s, &p, &x[..3]), Err(Error::Shape(_))));
    }

    #[test]
    fn loss_examples() {
        assert!(loss(LossKind::Bce, &[1.0 - 1e-15], &[1.0]) < 1e-11);
        let uniform = [1.0 / 6.0; 6];
        let mut one_hot = [0.0; 6];
        one_hot[2] = 1.0;
        assert!((loss(LossKind::Cce, &uniform, &one_hot) - 6f64.ln()).abs() < 1e-12);
        assert!((loss(LossKind::Bce, &[0.5], &[0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!(loss(LossKind::Bce, &[0.0], &[1.0]).is_finite());
        assert!(loss(LossKind::Cce, &[0.0, 1.0], &[1.0, 0.0]).is_finite());
    }

    #[test]
    fn glorot_respects_limits() {
        let s = spec(
            63,
            &[(64, Activation::Relu), (1, Activation::Sigmoid)],
            LossKind::Bce,
        );
        let p = Parameters::glorot(&s, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let limit = (6.0f64 / 127.0).sqrt();
        assert!(p.layers[0].weights.iter().all(|w| w.abs() <= limit));
        assert!(p.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        assert_eq!(p.count(), 63 * 64 + 64 + 64 + 1);
    }

    #[test]
    fn perfect_prediction_has_zero_gradient() {
        let s = spec(2, &[(2, Activation::Softmax)], LossKind::Cce);
        let mut p = Parameters::zeros(&s).unwrap();
        p.layers[0].bias = Array1::from(vec![60.0, -60.0]);
        let pass = forward(&s, &p, &[0.0, 0.0]).unwrap();
        let g = backward(&s, &p, &pass, &targets_for(&s, &[0]).unwrap()).unwrap();
        assert!(g.values().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn duplicated_sample_has_same_gradient() {
        let s = spec(
            3,
            &[(4, Activation::Relu), (3, Activation::Softmax)],
            LossKind::Cce,
        );
        let p = Parameters::glorot(&s, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let x = [0.5, -0.2, 0.9];
        let one = forward(&s, &p, &x).unwrap();
        let g1 = backward(&s, &p, &one, &targets_for(&s, &[1]).unwrap()).unwrap();
        let xs = Array2::from_shape_vec((2, 3), [x, x].concat()).unwrap();
        let two = forward_batch(&s, &p, xs.view()).unwrap();
        let g2 = backward(&s, &p, &two, &targets_for(&s, &[1, 1]).unwrap()).unwrap();
        for (a, b) in g1.values().zip(g2.values()) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }

    #[test]
    fn targets_reject_out_of_range_classes() {
        let s = spec(3, &[(1, Activation::Sigmoid)], LossKind::Bce);
        assert!(targets_for(&s, &[0, 1]).is_ok());
        assert!(targets_for(&s, &[2]).is_err());
    }
}

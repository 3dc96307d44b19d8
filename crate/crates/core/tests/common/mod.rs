//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;
use tqent::nn::{
    backward, batch_loss, forward_batch, targets_for, Activation, LayerSpec, LossKind, NetworkSpec,
    Parameters,
};

/// Random small network: 1 to 3 hidden layers of width 2..=5 with ReLU or
/// linear activations, and either a sigmoid/BCE or softmax/CCE head.
pub fn random_network<R: Rng>(rng: &mut R) -> NetworkSpec {
    let hidden = rng.random_range(1..=3);
    let mut layers: Vec<LayerSpec> = (0..hidden)
        .map(|_| {
            let act = if rng.random_bool(0.5) {
                Activation::Relu
            } else {
                Activation::Linear
            };
            LayerSpec::new(rng.random_range(2..=5), act)
        })
        .collect();
    let loss = if rng.random_bool(0.5) {
        layers.push(LayerSpec::new(1, Activation::Sigmoid));
        LossKind::Bce
    } else {
        layers.push(LayerSpec::new(rng.random_range(2..=4), Activation::Softmax));
        LossKind::Cce
    };
    NetworkSpec {
        input_width: rng.random_range(1..=4),
        layers,
        loss,
    }
}

/// Largest relative disagreement between backprop and central differences.
///
/// Components whose magnitude is below `floor` are compared against `floor`
/// instead, which keeps finite-difference round-off from dominating.
pub fn gradient_check<R: Rng>(
    spec: &NetworkSpec,
    rng: &mut R,
    batch: usize,
    step: f64,
    floor: f64,
) -> f64 {
    let mut params = Parameters::glorot(spec, rng).unwrap();
    // Non-zero biases so every code path sees them.
    for l in &mut params.layers {
        l.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    let x = Array2::from_shape_fn((batch, spec.input_width), |_| rng.random_range(-2.0..2.0));
    let ids: Vec<usize> = (0..batch)
        .map(|_| rng.random_range(0..spec.n_classes()))
        .collect();
    let y = targets_for(spec, &ids).unwrap();
    let loss_at = |p: &Parameters| {
        batch_loss(
            spec.loss,
            forward_batch(spec, p, x.view()).unwrap().output(),
            &y,
        )
    };

    let pass = forward_batch(spec, &params, x.view()).unwrap();
    let analytic: Vec<f64> = backward(spec, &params, &pass, &y)
        .unwrap()
        .values()
        .copied()
        .collect();
    let mut worst = 0.0f64;
    for (k, &a) in analytic.iter().enumerate() {
        let mut plus = params.clone();
        *plus.values_mut().nth(k).unwrap() += step;
        let mut minus = params.clone();
        *minus.values_mut().nth(k).unwrap() -= step;
        let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * step);
        let scale = a.abs().max(numeric.abs()).max(floor);
        worst = worst.max((a - numeric).abs() / scale);
    }
    worst
}

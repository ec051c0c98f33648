//! Finite-difference check of the backward pass.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Examples;
use crate::error::Result;
use crate::model::{bce_with_logit, sigmoid, target, Cnn, Mode};

/// Largest relative error between analytic and central-difference
/// gradients (`h = 1e-5`) of the loss on example 0, over up to `count`
/// parameters drawn with `seed`. Dropout is off.
///
/// Relative error is `|a − n| / max(|a|, |n|)`; pairs where both are below
/// `1e-10` count as agreeing.
pub fn gradient_check(model: &Cnn<f64>, ex: &Examples, count: usize, seed: u64) -> Result<f64> {
    let x = model.input_batch(ex, &[0])?;
    let y: f64 = target(ex.labels[0]);
    let loss = |m: &Cnn<f64>| bce_with_logit(m.forward(x.view(), Mode::Inference).logits[0], y);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tape = model.forward(x.view(), Mode::Train { rng: &mut rng, dropout: false });
    let z = tape.logits[0];
    let grads = model.backward(&tape, &Array1::from_elem(1, sigmoid(z) - y));

    let n = model.params.len();
    let mut probe = model.clone();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..count.min(n) {
        let i = rng.gen_range(0..n);
        let v = model.params.get(i);
        probe.params.set(i, v + h);
        let up = loss(&probe);
        probe.params.set(i, v - h);
        let down = loss(&probe);
        probe.params.set(i, v);
        let numeric = (up - down) / (2.0 * h);
        let analytic = grads.get(i);
        let scale = analytic.abs().max(numeric.abs());
        if scale > 1e-10 {
            worst = worst.max((analytic - numeric).abs() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    #[test]
    fn zero_model_has_zero_conv_gradients() {
        let cfg = ModelConfig::new(6, 6, 10).unwrap();
        let mut m = Cnn::<f64>::new(cfg, 0);
        for s in m.params.slices_mut() {
            s.fill(0.0);
        }
        let ex = Examples::new(6, 6, vec![0; 36], vec![1]).unwrap();
        let x = m.input_batch(&ex, &[0]).unwrap();
        let tape = m.forward(x.view(), Mode::Inference);
        let g = m.backward(&tape, &Array1::from_elem(1, -0.5));
        assert!(g.conv1_w.iter().chain(g.conv2_w.iter()).all(|&v| v == 0.0));
        assert_eq!(g.dense2_b[0], -0.5);
    }
}

//! Adam training with early stopping, evaluation, and the minimum-sample
//! search.

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Examples;
use crate::error::{NnError, Result};
use crate::model::{real, sigmoid, target, Cnn, ModelConfig, Mode, Params, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Validation loss must drop by more than this to count as progress.
    pub min_delta: f64,
    pub validation_fraction: f64,
    pub init_seed: u64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 200,
            patience: 10,
            min_delta: 0.0,
            validation_fraction: 0.2,
            init_seed: 0,
            shuffle_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub n_train: usize,
    pub n_validation: usize,
    pub epochs: usize,
    pub best_epoch: usize,
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
}

impl TrainReport {
    pub fn best_validation_loss(&self) -> f64 {
        self.validation_loss.get(self.best_epoch.saturating_sub(1)).copied().unwrap_or(f64::NAN)
    }

    pub fn final_train_loss(&self) -> f64 {
        self.train_loss.last().copied().unwrap_or(f64::NAN)
    }
}

struct Adam<T> {
    m: Params<T>,
    v: Params<T>,
    step: i32,
}

impl<T: Real> Adam<T> {
    fn new(cfg: &ModelConfig) -> Self {
        Adam { m: Params::zeros(cfg), v: Params::zeros(cfg), step: 0 }
    }

    fn update(&mut self, params: &mut Params<T>, grads: &Params<T>, tc: &TrainConfig) {
        self.step += 1;
        let (b1, b2) = (tc.beta1, tc.beta2);
        let lr_t = tc.learning_rate * (1.0 - b2.powi(self.step)).sqrt() / (1.0 - b1.powi(self.step));
        let (b1, b2, lr_t, eps): (T, T, T, T) = (real(b1), real(b2), real(lr_t), real(tc.epsilon));
        let one = T::one();
        let ms = self.m.slices_mut();
        let vs = self.v.slices_mut();
        for (((p, g), m), v) in params.slices_mut().into_iter().zip(grads.slices()).zip(ms).zip(vs) {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                p[i] -= lr_t * m[i] / (v[i].sqrt() + eps);
            }
        }
    }
}

/// Mean-BCE loss and its gradient on one mini-batch.
pub fn batch_gradient<T: Real>(
    model: &Cnn<T>,
    ex: &Examples,
    idx: &[usize],
    rng: &mut ChaCha8Rng,
    dropout: bool,
) -> Result<(T, Params<T>)> {
    let x = model.input_batch(ex, idx)?;
    let tape = model.forward(x.view(), Mode::Train { rng, dropout });
    let n: T = real(idx.len() as f64);
    let mut loss = T::zero();
    let mut d = Array1::zeros(idx.len());
    for (b, &i) in idx.iter().enumerate() {
        let z = tape.logits[b];
        let y = target::<T>(ex.labels[i]);
        loss += crate::model::bce_with_logit(z, y);
        d[b] = (sigmoid(z) - y) / n;
    }
    Ok((loss / n, model.backward(&tape, &d)))
}

/// Train `model` in place on `data`. A `validation_fraction` share of the
/// (shuffled) data is held out for early stopping; the parameters with the
/// best validation loss are kept.
pub fn train<T: Real>(model: &mut Cnn<T>, data: &Examples, tc: &TrainConfig) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    if tc.batch_size == 0 || !(0.0..1.0).contains(&tc.validation_fraction) {
        return Err(NnError::InvalidArgument("batch size must be positive, validation fraction in [0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tc.shuffle_seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let n_val = (data.len() as f64 * tc.validation_fraction).round() as usize;
    let n_val = if n_val >= data.len() { 0 } else { n_val };
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();

    let mut adam = Adam::new(&model.config);
    let mut best = model.params.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut report = TrainReport {
        n_train: train_idx.len(),
        n_validation: n_val,
        epochs: 0,
        best_epoch: 0,
        train_loss: Vec::new(),
        validation_loss: Vec::new(),
    };
    for epoch in 1..=tc.max_epochs {
        train_idx.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in train_idx.chunks(tc.batch_size) {
            let (loss, grads) = batch_gradient(model, data, batch, &mut rng, true)?;
            let loss = loss.to_f64().unwrap();
            if !loss.is_finite() {
                return Err(NnError::Diverged { epoch });
            }
            total += loss * batch.len() as f64;
            adam.update(&mut model.params, &grads, tc);
        }
        let train_loss = total / train_idx.len() as f64;
        let monitored = if n_val > 0 { model.loss(data, val_idx)?.to_f64().unwrap() } else { train_loss };
        if !monitored.is_finite() {
            return Err(NnError::Diverged { epoch });
        }
        report.train_loss.push(train_loss);
        report.validation_loss.push(monitored);
        report.epochs = epoch;
        if monitored < best_loss - tc.min_delta {
            best_loss = monitored;
            best_epoch = epoch;
            best.clone_from(&model.params);
        } else if epoch - best_epoch >= tc.patience {
            break;
        }
    }
    model.params = best;
    report.best_epoch = best_epoch;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub error: f64,
    pub n_test: usize,
    pub epsilon: f64,
    pub learned: bool,
}

/// Fraction of misclassified examples; learned iff at most `epsilon`.
pub fn evaluate<T: Real>(model: &Cnn<T>, test: &Examples, epsilon: f64) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let wrong = model.predict(test)?.iter().zip(&test.labels).filter(|(a, b)| a != b).count();
    let error = wrong as f64 / test.len() as f64;
    Ok(EvalReport { error, n_test: test.len(), epsilon, learned: error <= epsilon })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinSamples {
    /// Smallest budget that trained to criterion, if any.
    pub m: Option<usize>,
    /// `(budget, test error)` for every budget tried.
    pub trials: Vec<(usize, f64)>,
}

/// Geometric budget grid `start·2^k` up to and including `cap`.
pub fn geometric_grid(start: usize, cap: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = start.max(1);
    while n <= cap {
        out.push(n);
        n *= 2;
    }
    out
}

/// Smallest budget in `grid` (ascending) whose freshly initialised model,
/// trained on the first `budget` examples of `pool`, reaches error ≤
/// `epsilon` on `test`.
pub fn min_training_samples(
    pool: &Examples,
    test: &Examples,
    grid: &[usize],
    epsilon: f64,
    tc: &TrainConfig,
) -> Result<MinSamples> {
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(NnError::InvalidArgument("budget grid must be strictly ascending".into()));
    }
    let mut trials = Vec::new();
    for &n in grid {
        if n > pool.len() {
            return Err(NnError::InvalidArgument(format!("budget {n} exceeds pool of {}", pool.len())));
        }
        let cfg = ModelConfig::new(pool.rows, pool.cols, n)?;
        let mut model = Cnn::<f32>::new(cfg, tc.init_seed);
        train(&mut model, &pool.head(n), tc)?;
        let ev = evaluate(&model, test, epsilon)?;
        trials.push((n, ev.error));
        if ev.learned {
            return Ok(MinSamples { m: Some(n), trials });
        }
    }
    Ok(MinSamples { m: None, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Label is the value of one fixed pixel.
    fn single_pixel(n: usize, seed: u64) -> Examples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (rows, cols) = (3, 6);
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let mut img: Vec<i8> = (0..rows * cols).map(|_| rng.gen_range(-1..=1)).collect();
            let key = if rng.gen() { 1 } else { -1 };
            img[8] = key;
            labels.push(key);
            images.extend(img);
        }
        Examples::new(rows, cols, images, labels).unwrap()
    }

    #[test]
    fn learns_a_single_key_pixel() {
        let data = single_pixel(500, 1);
        let test = single_pixel(1000, 2);
        let mut m = Cnn::<f32>::new(ModelConfig::new(3, 6, 500).unwrap(), 7);
        let tc = TrainConfig { max_epochs: 50, ..Default::default() };
        let rep = train(&mut m, &data, &tc).unwrap();
        assert!(rep.epochs <= 50);
        let ev = evaluate(&m, &test, 0.02).unwrap();
        assert!(ev.learned, "error {}", ev.error);
    }

    #[test]
    fn training_is_deterministic() {
        let data = single_pixel(200, 3);
        let tc = TrainConfig { max_epochs: 5, ..Default::default() };
        let run = || {
            let mut m = Cnn::<f32>::new(ModelConfig::new(3, 6, 200).unwrap(), 1);
            train(&mut m, &data, &tc).unwrap();
            m
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn best_so_far_validation_loss_is_monotone() {
        let data = single_pixel(300, 4);
        let mut m = Cnn::<f32>::new(ModelConfig::new(3, 6, 300).unwrap(), 2);
        let rep = train(&mut m, &data, &TrainConfig { max_epochs: 30, ..Default::default() }).unwrap();
        let mut best = f64::INFINITY;
        let running: Vec<f64> = rep
            .validation_loss
            .iter()
            .map(|&l| {
                best = best.min(l);
                best
            })
            .collect();
        assert!(running.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(rep.best_validation_loss(), best);
        // the kept parameters are the best ones
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(0));
        let val = &order[..rep.n_validation];
        assert!((m.loss(&data, val).unwrap() as f64 - best).abs() < 1e-5);
    }

    #[test]
    fn empty_inputs_are_errors() {
        let data = single_pixel(10, 5);
        let empty = data.head(0);
        let mut m = Cnn::<f32>::new(ModelConfig::new(3, 6, 10).unwrap(), 2);
        assert!(matches!(train(&mut m, &empty, &TrainConfig::default()), Err(NnError::EmptyDataset)));
        assert!(matches!(evaluate(&m, &empty, 0.02), Err(NnError::EmptyDataset)));
    }

    #[test]
    fn divergence_is_reported() {
        let data = single_pixel(64, 6);
        let mut m = Cnn::<f32>::new(ModelConfig::new(3, 6, 64).unwrap(), 2);
        m.params.dense2_b[0] = f32::NAN;
        let r = train(&mut m, &data, &TrainConfig { max_epochs: 3, ..Default::default() });
        assert!(matches!(r, Err(NnError::Diverged { epoch: 1 })));
    }

    #[test]
    fn constant_predictor_on_balanced_labels() {
        let test = single_pixel(2000, 8);
        let mut m = Cnn::<f64>::new(ModelConfig::new(3, 6, 10).unwrap(), 0);
        for s in m.params.slices_mut() {
            s.fill(0.0);
        }
        let ev = evaluate(&m, &test, 0.02).unwrap();
        let share_minus = test.labels.iter().filter(|&&y| y < 0).count() as f64 / 2000.0;
        assert!((ev.error - share_minus).abs() < 1e-12);
        assert!((ev.error - 0.5).abs() < 5.0 * (0.25f64 / 2000.0).sqrt());
    }

    #[test]
    fn grid_and_search() {
        assert_eq!(geometric_grid(250, 4000), vec![250, 500, 1000, 2000, 4000]);
        let pool = single_pixel(1000, 9);
        let test = single_pixel(500, 10);
        let tc = TrainConfig { max_epochs: 40, ..Default::default() };
        let r = min_training_samples(&pool, &test, &[250, 500, 1000], 0.02, &tc).unwrap();
        assert!(r.m.is_some_and(|m| m <= 500), "{r:?}");
        assert!(min_training_samples(&pool, &test, &[500, 250], 0.02, &tc).is_err());
    }
}

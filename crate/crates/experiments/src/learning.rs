//! Per-circuit training protocol shared by all experiments.

use mipt_core::par::Exec;
use mipt_core::trajectory::{lightcone_window, LightCone};
use mipt_core::{generate_dataset, CircuitInstance, Labels, WindowSpec};
use mipt_nn::train::{geometric_grid, MinSamples};
use mipt_nn::{evaluate, min_training_samples, train, Cnn, Examples, ModelConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Test trajectories use seeds from here on, disjoint from training seeds.
pub const TEST_SEED_BASE: u64 = 1 << 40;

/// Which outcomes the decoder sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowMode {
    /// Light-cone box around the reference partner, layers up to `t_p`.
    #[default]
    Lightcone,
    /// Every site, layers up to `t_p`.
    Whole,
    /// Every site and every layer, regardless of `t_p`.
    Full,
}

impl WindowMode {
    pub fn name(self) -> &'static str {
        match self {
            WindowMode::Lightcone => "lightcone",
            WindowMode::Whole => "whole",
            WindowMode::Full => "full",
        }
    }

    pub fn window(self, instance: &CircuitInstance, t_p: usize, cone: LightCone) -> WindowSpec {
        let (n, depth) = (instance.n_sites(), instance.depth());
        match self {
            WindowMode::Lightcone => lightcone_window(instance, t_p, cone),
            WindowMode::Whole => WindowSpec { center: instance.ref_site(), width: n, depth: t_p.clamp(1, depth) },
            WindowMode::Full => WindowSpec { center: instance.ref_site(), width: n, depth },
        }
    }
}

/// Frozen training protocol and learning criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningSettings {
    /// Learning error threshold `ε_l`.
    pub epsilon: f64,
    pub n_test: usize,
    /// Budget grid `grid_start · 2^k ≤ grid_cap`, unless `grid` is given.
    pub grid_start: usize,
    pub grid_cap: usize,
    pub grid: Option<Vec<usize>>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub seed: u64,
    pub cone: LightCone,
}

impl Default for LearningSettings {
    fn default() -> Self {
        let tc = TrainConfig::default();
        LearningSettings {
            epsilon: 0.02,
            n_test: 2000,
            grid_start: 250,
            grid_cap: 4000,
            grid: None,
            learning_rate: tc.learning_rate,
            batch_size: tc.batch_size,
            max_epochs: tc.max_epochs,
            patience: tc.patience,
            validation_fraction: tc.validation_fraction,
            seed: 0,
            cone: LightCone::default(),
        }
    }
}

impl LearningSettings {
    pub fn grid(&self) -> Vec<usize> {
        match &self.grid {
            Some(g) => g.clone(),
            None => geometric_grid(self.grid_start, self.grid_cap),
        }
    }

    pub fn train_config(&self, circuit_seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            validation_fraction: self.validation_fraction,
            init_seed: self.seed ^ circuit_seed,
            shuffle_seed: self.seed.wrapping_add(circuit_seed),
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid();
        if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] == 0 {
            return Err(crate::ExpError::Config(format!("budget grid {grid:?} must be non-empty and strictly ascending")));
        }
        if !(0.0..=1.0).contains(&self.epsilon) || self.n_test == 0 {
            return Err(crate::ExpError::Config("need 0 ≤ epsilon ≤ 1 and n_test > 0".into()));
        }
        Ok(())
    }
}

/// Training pool (seeds from 0) and test set (seeds from [`TEST_SEED_BASE`]).
pub fn pool_and_test(
    instance: &CircuitInstance,
    window: WindowSpec,
    n_pool: usize,
    n_test: usize,
    labels: Labels,
) -> Result<(Examples, Examples)> {
    let pool = generate_dataset(instance, n_pool, Some(window), 0, labels, Exec::Sequential)?;
    let test = generate_dataset(instance, n_test, Some(window), TEST_SEED_BASE, labels, Exec::Sequential)?;
    Ok((Examples::from_dataset(&pool), Examples::from_dataset(&test)))
}

/// `M(ε_l)` for one purified circuit over `grid`.
pub fn circuit_min_samples(
    instance: &CircuitInstance,
    window: WindowSpec,
    grid: &[usize],
    s: &LearningSettings,
) -> Result<MinSamples> {
    let cap = *grid.last().expect("validated grid");
    let (pool, test) = pool_and_test(instance, window, cap, s.n_test, Labels::Purified)?;
    Ok(min_training_samples(&pool, &test, grid, s.epsilon, &s.train_config(instance.spec.circuit_seed))?)
}

/// Whether one purified circuit is learned with exactly `n_t` samples.
pub fn learned_with(instance: &CircuitInstance, window: WindowSpec, n_t: usize, s: &LearningSettings) -> Result<bool> {
    let (pool, test) = pool_and_test(instance, window, n_t, s.n_test, Labels::Purified)?;
    fit_and_score(&pool, &test, s, instance.spec.circuit_seed)
}

pub(crate) fn fit_and_score(pool: &Examples, test: &Examples, s: &LearningSettings, seed: u64) -> Result<bool> {
    let mut model = Cnn::<f32>::new(ModelConfig::new(pool.rows, pool.cols, pool.len())?, s.train_config(seed).init_seed);
    train(&mut model, pool, &s.train_config(seed))?;
    Ok(evaluate(&model, test, s.epsilon)?.learned)
}

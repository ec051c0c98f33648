//! Fraction of random circuits learned as a function of the training budget.

use log::info;
use mipt_core::par;
use mipt_core::trajectory::{family_seed, purification_time};
use mipt_core::{build_circuit, CircuitSpec, InitState};
use serde::{Deserialize, Serialize};

use crate::complexity::exec;
use crate::error::{ExpError, Result};
use crate::learning::{circuit_min_samples, LearningSettings, WindowMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnabilityConfig {
    pub p: f64,
    #[serde(rename = "L")]
    pub n_sites: usize,
    #[serde(rename = "T")]
    pub depth: usize,
    pub n_circuits: usize,
    pub window: WindowMode,
    pub init: InitState,
    pub seed: u64,
    pub parallel: bool,
    /// The `N_t` grid is `learning.grid()`.
    pub learning: LearningSettings,
}

impl Default for LearnabilityConfig {
    fn default() -> Self {
        LearnabilityConfig {
            p: 0.3,
            n_sites: 16,
            depth: 10,
            n_circuits: 20,
            window: WindowMode::Full,
            init: InitState::Product,
            seed: 0,
            parallel: true,
            learning: LearningSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitLearnability {
    pub circuit_seed: u64,
    pub t_p: Option<usize>,
    /// Smallest grid budget that reached the criterion.
    pub m: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnabilityCurve {
    pub p: f64,
    pub n_sites: usize,
    pub depth: usize,
    pub n_t: Vec<usize>,
    /// `R_l(N_t)`, one entry per grid value.
    pub r_l: Vec<f64>,
    /// Empirical fraction of the same circuits purified by `T`.
    pub r_p: f64,
    pub circuits: Vec<CircuitLearnability>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnabilityRow {
    pub p: f64,
    #[serde(rename = "L")]
    pub n_sites: usize,
    #[serde(rename = "T")]
    pub depth: usize,
    #[serde(rename = "N_t")]
    pub n_t: usize,
    #[serde(rename = "R_l")]
    pub r_l: f64,
    #[serde(rename = "R_p")]
    pub r_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnabilityCircuitRow {
    pub circuit_seed: u64,
    pub t_p: Option<usize>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
}

impl LearnabilityCurve {
    /// Counts a circuit as learned at `N_t` when its `M ≤ N_t`, so the
    /// curve is non-decreasing by construction.
    pub fn from_circuits(p: f64, n_sites: usize, depth: usize, n_t: Vec<usize>, circuits: Vec<CircuitLearnability>) -> Self {
        let n = circuits.len().max(1) as f64;
        let r_l = n_t
            .iter()
            .map(|&b| circuits.iter().filter(|c| c.m.is_some_and(|m| m <= b)).count() as f64 / n)
            .collect();
        let r_p = circuits.iter().filter(|c| c.t_p.is_some()).count() as f64 / n;
        LearnabilityCurve { p, n_sites, depth, n_t, r_l, r_p, circuits }
    }

    pub fn rows(&self) -> Vec<LearnabilityRow> {
        self.n_t
            .iter()
            .zip(&self.r_l)
            .map(|(&n_t, &r_l)| LearnabilityRow { p: self.p, n_sites: self.n_sites, depth: self.depth, n_t, r_l, r_p: self.r_p })
            .collect()
    }

    pub fn circuit_rows(&self) -> Vec<LearnabilityCircuitRow> {
        self.circuits.iter().map(|c| LearnabilityCircuitRow { circuit_seed: c.circuit_seed, t_p: c.t_p, m: c.m }).collect()
    }
}

pub fn learnability_experiment(cfg: &LearnabilityConfig) -> Result<LearnabilityCurve> {
    cfg.learning.validate()?;
    if cfg.n_circuits == 0 {
        return Err(ExpError::Config("n_circuits must be positive".into()));
    }
    CircuitSpec::new(cfg.n_sites, cfg.depth, cfg.p, 0).validate()?;
    let grid = cfg.learning.grid();
    info!("learnability: p={} L={} T={} over {} circuits", cfg.p, cfg.n_sites, cfg.depth, cfg.n_circuits);
    let circuits = par::map_range(exec(cfg.parallel), cfg.n_circuits, |i| -> Result<CircuitLearnability> {
        let spec = CircuitSpec::new(cfg.n_sites, cfg.depth, cfg.p, family_seed(cfg.seed, i as u64)).with_init(cfg.init);
        let c = build_circuit(&spec)?;
        let t_p = purification_time(&c);
        let m = match t_p {
            None => None,
            Some(t) => circuit_min_samples(&c, cfg.window.window(&c, t, cfg.learning.cone), &grid, &cfg.learning)?.m,
        };
        Ok(CircuitLearnability { circuit_seed: spec.circuit_seed, t_p, m })
    });
    let circuits = circuits.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(LearnabilityCurve::from_circuits(cfg.p, cfg.n_sites, cfg.depth, grid, circuits))
}

//! Minimum training samples on circuits postselected by purification time.

use std::collections::BTreeMap;

use log::info;
use mipt_core::par::{self, Exec};
use mipt_core::trajectory::{family_seed, purification_time};
use mipt_core::{build_circuit, CircuitInstance, CircuitSpec, InitState};
use serde::{Deserialize, Serialize};

use crate::error::{ExpError, Result};
use crate::learning::{circuit_min_samples, LearningSettings, WindowMode};
use crate::stats::{lower_median, mean_std};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComplexityConfig {
    pub p: f64,
    #[serde(rename = "L")]
    pub n_sites: usize,
    pub t_p: Vec<usize>,
    /// Circuits per `t_p` value.
    pub n_circuits: usize,
    pub window: WindowMode,
    pub init: InitState,
    /// Allowed fraction of circuits that never reach the criterion.
    pub delta: f64,
    pub seed: u64,
    pub generation_cap: u64,
    pub parallel: bool,
    pub learning: LearningSettings,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        ComplexityConfig {
            p: 0.3,
            n_sites: 16,
            t_p: vec![1, 2, 3, 4],
            n_circuits: 20,
            window: WindowMode::Lightcone,
            init: InitState::Product,
            delta: 0.2,
            seed: 0,
            generation_cap: 1_000_000,
            parallel: true,
            learning: LearningSettings::default(),
        }
    }
}

pub(crate) fn exec(parallel: bool) -> Exec {
    if parallel {
        Exec::Auto
    } else {
        Exec::Sequential
    }
}

/// Scan `family_seed(base_seed, 0), family_seed(base_seed, 1), …` and keep,
/// in scan order, the first `quota` circuits purifying at each wanted `t_p`.
/// Circuits are `max(wanted)` layers deep.
pub fn postselect(
    n_sites: usize,
    p: f64,
    init: InitState,
    wanted: &[usize],
    quota: usize,
    base_seed: u64,
    cap: u64,
    exec: Exec,
) -> Result<BTreeMap<usize, Vec<CircuitInstance>>> {
    let depth = wanted.iter().copied().max().ok_or_else(|| ExpError::Config("empty t_p list".into()))?;
    if wanted.contains(&0) {
        return Err(ExpError::Config("t_p values start at 1".into()));
    }
    let mut found: BTreeMap<usize, Vec<CircuitInstance>> = wanted.iter().map(|&t| (t, Vec::new())).collect();
    let chunk = 256u64;
    let mut next = 0u64;
    while next < cap && found.values().any(|v| v.len() < quota) {
        let n = chunk.min(cap - next);
        let batch = par::map_range(exec, n as usize, |i| -> Result<Option<(usize, CircuitInstance)>> {
            let spec = CircuitSpec::new(n_sites, depth, p, family_seed(base_seed, next + i as u64)).with_init(init);
            let c = build_circuit(&spec)?;
            Ok(purification_time(&c).map(|t| (t, c)))
        });
        for item in batch {
            if let Some((t, c)) = item? {
                if let Some(v) = found.get_mut(&t) {
                    if v.len() < quota {
                        v.push(c);
                    }
                }
            }
        }
        next += n;
    }
    for (&t_p, v) in &found {
        if v.len() < quota {
            return Err(ExpError::Insufficient { t_p, found: v.len(), quota, cap });
        }
    }
    Ok(found)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitComplexity {
    pub circuit_seed: u64,
    /// `None` when the largest budget did not reach the criterion.
    pub m: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityResult {
    pub p: f64,
    pub n_sites: usize,
    pub t_p: usize,
    pub window: WindowMode,
    pub init: InitState,
    pub circuits: Vec<CircuitComplexity>,
}

impl ComplexityResult {
    pub fn reached(&self) -> Vec<f64> {
        self.circuits.iter().filter_map(|c| c.m.map(|m| m as f64)).collect()
    }

    /// `M̄` over circuits that reached the criterion.
    pub fn mean(&self) -> Option<f64> {
        mean_std(&self.reached()).map(|(m, _)| m)
    }

    pub fn std(&self) -> Option<f64> {
        mean_std(&self.reached()).map(|(_, s)| s)
    }

    /// Lower median with unreached circuits ranked above every budget.
    pub fn median(&self) -> Option<usize> {
        lower_median(self.circuits.iter().map(|c| c.m))
    }

    pub fn fail_fraction(&self) -> f64 {
        let failed = self.circuits.iter().filter(|c| c.m.is_none()).count();
        failed as f64 / self.circuits.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityRow {
    pub p: f64,
    #[serde(rename = "L")]
    pub n_sites: usize,
    pub t_p: usize,
    pub window: &'static str,
    pub init: &'static str,
    pub n_circuits: usize,
    pub n_reached: usize,
    #[serde(rename = "mean_M")]
    pub mean_m: Option<f64>,
    #[serde(rename = "std_M")]
    pub std_m: Option<f64>,
    #[serde(rename = "median_M")]
    pub median_m: Option<usize>,
    pub fail_fraction: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityCircuitRow {
    pub p: f64,
    #[serde(rename = "L")]
    pub n_sites: usize,
    pub t_p: usize,
    pub window: &'static str,
    pub circuit_seed: u64,
    #[serde(rename = "M")]
    pub m: Option<usize>,
}

fn init_name(i: InitState) -> &'static str {
    match i {
        InitState::Product => "product",
        InitState::Scrambled => "scrambled",
    }
}

impl ComplexityResult {
    pub fn row(&self, delta: f64) -> ComplexityRow {
        ComplexityRow {
            p: self.p,
            n_sites: self.n_sites,
            t_p: self.t_p,
            window: self.window.name(),
            init: init_name(self.init),
            n_circuits: self.circuits.len(),
            n_reached: self.reached().len(),
            mean_m: self.mean(),
            std_m: self.std(),
            median_m: self.median(),
            fail_fraction: self.fail_fraction(),
            flagged: self.fail_fraction() > delta,
        }
    }

    pub fn circuit_rows(&self) -> Vec<ComplexityCircuitRow> {
        self.circuits
            .iter()
            .map(|c| ComplexityCircuitRow {
                p: self.p,
                n_sites: self.n_sites,
                t_p: self.t_p,
                window: self.window.name(),
                circuit_seed: c.circuit_seed,
                m: c.m,
            })
            .collect()
    }
}

/// Runs the protocol for every `t_p` in the config, in ascending order.
pub fn complexity_experiment(cfg: &ComplexityConfig) -> Result<Vec<ComplexityResult>> {
    cfg.learning.validate()?;
    if cfg.n_circuits == 0 {
        return Err(ExpError::Config("n_circuits must be positive".into()));
    }
    let exec = exec(cfg.parallel);
    let chosen = postselect(cfg.n_sites, cfg.p, cfg.init, &cfg.t_p, cfg.n_circuits, cfg.seed, cfg.generation_cap, exec)?;
    let grid = cfg.learning.grid();
    let mut out = Vec::new();
    for (&t_p, circuits) in &chosen {
        info!("complexity: p={} L={} t_p={} ({} circuits)", cfg.p, cfg.n_sites, t_p, circuits.len());
        let ms = par::map_slice(exec, circuits, |c| -> Result<CircuitComplexity> {
            let window = cfg.window.window(c, t_p, cfg.learning.cone);
            let r = circuit_min_samples(c, window, &grid, &cfg.learning)?;
            Ok(CircuitComplexity { circuit_seed: c.spec.circuit_seed, m: r.m })
        });
        out.push(ComplexityResult {
            p: cfg.p,
            n_sites: cfg.n_sites,
            t_p,
            window: cfg.window,
            init: cfg.init,
            circuits: ms.into_iter().collect::<Result<_>>()?,
        });
    }
    Ok(out)
}

/// The same protocol on circuits whose system starts in a scrambled state.
pub fn scrambled_complexity_experiment(cfg: &ComplexityConfig) -> Result<Vec<ComplexityResult>> {
    complexity_experiment(&ComplexityConfig { init: InitState::Scrambled, ..cfg.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn postselection_is_exact_and_ordered() {
        let got = postselect(8, 0.3, InitState::Product, &[1, 2], 5, 3, 100_000, Exec::Auto).unwrap();
        for (&t, v) in &got {
            assert_eq!(v.len(), 5);
            for c in v {
                assert_eq!(purification_time(c), Some(t));
            }
            let seeds: Vec<u64> = v.iter().map(|c| c.spec.circuit_seed).collect();
            let again = postselect(8, 0.3, InitState::Product, &[1, 2], 5, 3, 100_000, Exec::Sequential).unwrap();
            assert_eq!(seeds, again[&t].iter().map(|c| c.spec.circuit_seed).collect::<Vec<_>>());
        }
    }

    #[test]
    fn unreachable_quota_is_an_error() {
        let e = postselect(8, 0.0, InitState::Product, &[1], 1, 0, 300, Exec::Auto).unwrap_err();
        assert!(matches!(e, ExpError::Insufficient { t_p: 1, found: 0, .. }));
    }

    #[test]
    fn aggregates() {
        let r = ComplexityResult {
            p: 0.3,
            n_sites: 16,
            t_p: 2,
            window: WindowMode::Lightcone,
            init: InitState::Product,
            circuits: [Some(250), Some(1000), None, Some(500)]
                .into_iter()
                .enumerate()
                .map(|(i, m)| CircuitComplexity { circuit_seed: i as u64, m })
                .collect(),
        };
        assert_eq!(r.mean(), Some(1750.0 / 3.0));
        assert_eq!(r.median(), Some(500));
        assert_eq!(r.fail_fraction(), 0.25);
        assert!(r.row(0.2).flagged);
        assert!(!r.row(0.25).flagged);
    }
}

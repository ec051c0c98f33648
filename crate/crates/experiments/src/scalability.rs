//! Training on narrow sub-circuits and decoding the parent circuit.

use std::collections::BTreeSet;

use log::info;
use mipt_core::par;
use mipt_core::trajectory::{family_seed, purification_time};
use mipt_core::{build_circuit, derive_subcircuit, generate_dataset, CircuitInstance, CircuitSpec, Error, Labels, WindowSpec};
use mipt_core::par::Exec;
use mipt_nn::Examples;
use serde::{Deserialize, Serialize};

use crate::complexity::exec;
use crate::error::{ExpError, Result};
use crate::learning::{fit_and_score, learned_with, LearningSettings, WindowMode, TEST_SEED_BASE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalabilityConfig {
    #[serde(rename = "L")]
    pub n_sites: usize,
    #[serde(rename = "L_B")]
    pub strips: Vec<usize>,
    pub p: f64,
    #[serde(rename = "T")]
    pub depth: usize,
    /// Parent circuits kept after postselection.
    pub n_circuits: usize,
    pub n_t: usize,
    pub seed: u64,
    pub generation_cap: u64,
    pub parallel: bool,
    pub learning: LearningSettings,
}

impl Default for ScalabilityConfig {
    fn default() -> Self {
        ScalabilityConfig {
            n_sites: 24,
            strips: vec![4, 8, 12, 16, 20, 24],
            p: 0.3,
            depth: 6,
            n_circuits: 20,
            n_t: 2000,
            seed: 0,
            generation_cap: 100_000,
            parallel: true,
            learning: LearningSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentOutcome {
    pub circuit_seed: u64,
    pub t_p: usize,
    /// One flag per strip width, in config order.
    pub learned: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalabilityRow {
    #[serde(rename = "L")]
    pub n_sites: usize,
    #[serde(rename = "L_B")]
    pub strip: usize,
    pub p: f64,
    /// Purification-time bucket, or `all`.
    pub t_p: String,
    pub n_circuits: usize,
    pub ratio_learned: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalabilityResult {
    pub n_sites: usize,
    pub p: f64,
    pub strips: Vec<usize>,
    pub parents: Vec<ParentOutcome>,
    /// Candidates examined to fill the quota.
    pub candidates: u64,
}

impl ScalabilityResult {
    /// Fraction learned at strip index `k` among parents with `t_p` in the
    /// bucket (`None` = all).
    pub fn ratio(&self, k: usize, t_p: Option<usize>) -> Option<f64> {
        let sel: Vec<&ParentOutcome> = self.parents.iter().filter(|o| t_p.map_or(true, |t| o.t_p == t)).collect();
        (!sel.is_empty()).then(|| sel.iter().filter(|o| o.learned[k]).count() as f64 / sel.len() as f64)
    }

    pub fn rows(&self) -> Vec<ScalabilityRow> {
        let buckets: BTreeSet<usize> = self.parents.iter().map(|o| o.t_p).collect();
        let mut rows = Vec::new();
        for (k, &strip) in self.strips.iter().enumerate() {
            let all = std::iter::once(None).chain(buckets.iter().map(|&t| Some(t)));
            for b in all {
                let n = self.parents.iter().filter(|o| b.map_or(true, |t| o.t_p == t)).count();
                rows.push(ScalabilityRow {
                    n_sites: self.n_sites,
                    strip,
                    p: self.p,
                    t_p: b.map_or_else(|| "all".to_string(), |t| t.to_string()),
                    n_circuits: n,
                    ratio_learned: self.ratio(k, b).unwrap_or(0.0),
                });
            }
        }
        rows
    }
}

/// Parent window cropped to the strip, layers up to `t_p`.
fn strip_window(parent: &CircuitInstance, strip: usize, t_p: usize) -> WindowSpec {
    WindowSpec { center: parent.ref_site(), width: strip, depth: t_p }
}

/// Train on the strip's own trajectories and labels, test on parent
/// trajectories cropped to the strip with parent labels.
pub fn strip_learned(parent: &CircuitInstance, strip: usize, t_p: usize, n_t: usize, s: &LearningSettings) -> Result<bool> {
    let sub = derive_subcircuit(parent, strip)?;
    let sub_window = WindowSpec { center: sub.ref_site(), width: strip, depth: t_p };
    let pool = match generate_dataset(&sub, n_t, Some(sub_window), 0, Labels::Purified, Exec::Sequential) {
        Ok(d) => d,
        Err(Error::NotDecodable(_)) => return Ok(false),
        Err(e) => return Err(e.into()),
    };
    let test = generate_dataset(parent, s.n_test, Some(strip_window(parent, strip, t_p)), TEST_SEED_BASE, Labels::Purified, Exec::Sequential)?;
    fit_and_score(&Examples::from_dataset(&pool), &Examples::from_dataset(&test), s, parent.spec.circuit_seed)
}

pub fn scalability_experiment(cfg: &ScalabilityConfig) -> Result<ScalabilityResult> {
    cfg.learning.validate()?;
    if let Some(&bad) = cfg.strips.iter().find(|&&b| b > cfg.n_sites || b < 4 || b % 2 != 0) {
        return Err(ExpError::Config(format!("strip width {bad} must be even and in [4, {}]", cfg.n_sites)));
    }
    if cfg.n_circuits == 0 || cfg.n_t == 0 {
        return Err(ExpError::Config("n_circuits and n_t must be positive".into()));
    }
    CircuitSpec::new(cfg.n_sites, cfg.depth, cfg.p, 0).validate()?;
    let exec = exec(cfg.parallel);
    let mut parents = Vec::new();
    let mut next = 0u64;
    let chunk = 16u64;
    while parents.len() < cfg.n_circuits {
        if next >= cfg.generation_cap {
            return Err(ExpError::InvalidArgument(format!(
                "only {} of {} learnable parent circuits among {} candidates",
                parents.len(),
                cfg.n_circuits,
                cfg.generation_cap
            )));
        }
        let n = chunk.min(cfg.generation_cap - next);
        let batch = par::map_range(exec, n as usize, |i| -> Result<Option<ParentOutcome>> {
            let spec = CircuitSpec::new(cfg.n_sites, cfg.depth, cfg.p, family_seed(cfg.seed, next + i as u64));
            let c = build_circuit(&spec)?;
            let Some(t_p) = purification_time(&c) else { return Ok(None) };
            if !learned_with(&c, WindowMode::Whole.window(&c, t_p, cfg.learning.cone), cfg.n_t, &cfg.learning)? {
                return Ok(None);
            }
            let learned = cfg
                .strips
                .iter()
                .map(|&b| strip_learned(&c, b, t_p, cfg.n_t, &cfg.learning))
                .collect::<Result<Vec<_>>>()?;
            Ok(Some(ParentOutcome { circuit_seed: spec.circuit_seed, t_p, learned }))
        });
        for item in batch {
            if let Some(o) = item? {
                if parents.len() < cfg.n_circuits {
                    parents.push(o);
                }
            }
        }
        next += n;
        info!("scalability: {} of {} parents after {next} candidates", parents.len(), cfg.n_circuits);
    }
    Ok(ScalabilityResult { n_sites: cfg.n_sites, p: cfg.p, strips: cfg.strips.clone(), parents, candidates: next })
}

//! Purification-time distribution.

use mipt_core::trajectory::{purification_histogram, PurificationHistogram};
use serde::{Deserialize, Serialize};

use crate::complexity::exec;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramConfig {
    #[serde(rename = "L")]
    pub n_sites: usize,
    #[serde(rename = "T")]
    pub depth: usize,
    pub p: Vec<f64>,
    pub n_circuits: usize,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        HistogramConfig { n_sites: 16, depth: 32, p: vec![0.05, 0.1, 0.16, 0.3, 0.5], n_circuits: 10_000, seed: 0, parallel: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    #[serde(rename = "L")]
    pub n_sites: usize,
    #[serde(rename = "T")]
    pub depth: usize,
    pub p: f64,
    /// Layer index, or `unpurified`.
    pub t_p: String,
    pub count: u64,
    pub r_p: f64,
}

pub fn histogram_rows(h: &PurificationHistogram) -> Vec<HistogramRow> {
    let total = h.total() as f64;
    let row = |t_p: String, count: u64| HistogramRow { n_sites: h.n_sites, depth: h.depth, p: h.p, t_p, count, r_p: count as f64 / total };
    let mut rows: Vec<HistogramRow> = h.counts.iter().enumerate().map(|(i, &c)| row((i + 1).to_string(), c)).collect();
    rows.push(row("unpurified".into(), h.unpurified));
    rows
}

pub fn histogram_experiment(cfg: &HistogramConfig) -> Result<Vec<PurificationHistogram>> {
    cfg.p
        .iter()
        .map(|&p| Ok(purification_histogram(cfg.n_sites, cfg.depth, p, cfg.n_circuits, cfg.seed, exec(cfg.parallel))?))
        .collect()
}

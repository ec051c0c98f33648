//! Step-model reconstruction of the learnability curve from the
//! purification-time distribution and the complexity table.

use log::warn;
use mipt_core::trajectory::purification_histogram;
use serde::{Deserialize, Serialize};

use crate::complexity::{complexity_experiment, exec, ComplexityConfig, ComplexityResult};
use crate::error::{ExpError, Result};
use crate::learnability::{learnability_experiment, LearnabilityConfig, LearnabilityCurve};
use crate::stats::isotonic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    /// `M̄(t_p)` after monotone regression and interpolation, `t_p = 1..=T`.
    pub m_bar: Vec<f64>,
    /// Whether the input table had to be made monotone.
    pub adjusted: bool,
    pub n_t: Vec<usize>,
    pub predicted: Vec<f64>,
}

/// `R_l(N_t) = Σ_{t_p : M̄(t_p) ≤ N_t} r_p(t_p)`.
///
/// `mass[t−1] = r_p(t)`; `table` lists measured `(t_p, M̄)` pairs. Missing
/// `t_p` are filled by log-linear interpolation, held constant below the
/// first entry and extrapolated geometrically beyond the last.
pub fn reconstruct(mass: &[f64], table: &[(usize, f64)], n_t: &[usize]) -> Result<Reconstruction> {
    let depth = mass.len();
    let mut table: Vec<(usize, f64)> = table.iter().copied().filter(|&(t, m)| t >= 1 && m.is_finite() && m > 0.0).collect();
    table.sort_by_key(|&(t, _)| t);
    table.dedup_by_key(|e| e.0);
    if table.is_empty() {
        return Err(ExpError::InvalidArgument("no finite M̄ values to reconstruct from".into()));
    }
    let raw: Vec<f64> = table.iter().map(|e| e.1).collect();
    let fitted = isotonic(&raw);
    let adjusted = fitted != raw;
    if adjusted {
        warn!("M̄ table {raw:?} is not monotone in t_p; using {fitted:?}");
    }
    let pts: Vec<(f64, f64)> = table.iter().zip(&fitted).map(|(e, &m)| (e.0 as f64, m.ln())).collect();
    let growth = if pts.len() >= 2 {
        let (a, b) = (pts[pts.len() - 2], pts[pts.len() - 1]);
        (b.1 - a.1) / (b.0 - a.0)
    } else {
        0.0
    };
    let m_bar: Vec<f64> = (1..=depth)
        .map(|t| {
            let t = t as f64;
            let (first, last) = (pts[0], pts[pts.len() - 1]);
            let log_m = if t <= first.0 {
                first.1
            } else if t >= last.0 {
                last.1 + growth * (t - last.0)
            } else {
                let k = pts.iter().position(|p| p.0 >= t).expect("inside range");
                let (a, b) = (pts[k - 1], pts[k]);
                a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
            };
            log_m.exp()
        })
        .collect();
    let predicted = n_t
        .iter()
        .map(|&n| mass.iter().zip(&m_bar).filter(|(_, &m)| m <= n as f64 * (1.0 + 1e-12)).map(|(r, _)| r).sum())
        .collect();
    Ok(Reconstruction { m_bar, adjusted, n_t: n_t.to_vec(), predicted })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppendixBConfig {
    /// Circuits for the `r_p` histogram.
    pub n_hist_circuits: usize,
    /// Measured `(t_p, M̄)` pairs; when absent the complexity experiment runs.
    pub m_bar: Option<Vec<(usize, f64)>>,
    pub complexity: ComplexityConfig,
    /// Its `p`, `L`, `T`, seed and grid define the comparison.
    pub learnability: LearnabilityConfig,
}

impl Default for AppendixBConfig {
    fn default() -> Self {
        let learnability = LearnabilityConfig::default();
        AppendixBConfig {
            n_hist_circuits: 10_000,
            m_bar: None,
            complexity: ComplexityConfig {
                window: crate::learning::WindowMode::Whole,
                learning: learnability.learning.clone(),
                ..ComplexityConfig::default()
            },
            learnability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixBRow {
    #[serde(rename = "N_t")]
    pub n_t: usize,
    #[serde(rename = "R_l_predicted")]
    pub r_l_predicted: f64,
    #[serde(rename = "R_l_measured")]
    pub r_l_measured: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixBTableRow {
    pub t_p: usize,
    pub r_p: f64,
    #[serde(rename = "M_bar_measured")]
    pub m_bar_measured: Option<f64>,
    #[serde(rename = "M_bar_used")]
    pub m_bar_used: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixBResult {
    pub mass: Vec<f64>,
    pub table: Vec<(usize, f64)>,
    pub complexity: Vec<ComplexityResult>,
    pub measured: LearnabilityCurve,
    pub reconstruction: Reconstruction,
}

impl AppendixBResult {
    pub fn sup_distance(&self) -> f64 {
        self.reconstruction.predicted.iter().zip(&self.measured.r_l).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn rows(&self) -> Vec<AppendixBRow> {
        (0..self.measured.n_t.len())
            .map(|k| AppendixBRow {
                n_t: self.measured.n_t[k],
                r_l_predicted: self.reconstruction.predicted[k],
                r_l_measured: self.measured.r_l[k],
            })
            .collect()
    }

    pub fn table_rows(&self) -> Vec<AppendixBTableRow> {
        (1..=self.mass.len())
            .map(|t| AppendixBTableRow {
                t_p: t,
                r_p: self.mass[t - 1],
                m_bar_measured: self.table.iter().find(|e| e.0 == t).map(|e| e.1),
                m_bar_used: self.reconstruction.m_bar[t - 1],
            })
            .collect()
    }
}

pub fn appendix_b_experiment(cfg: &AppendixBConfig) -> Result<AppendixBResult> {
    let lc = &cfg.learnability;
    let c = &cfg.complexity;
    if (c.p, c.n_sites) != (lc.p, lc.n_sites) {
        return Err(ExpError::Config("complexity and learnability must share p and L".into()));
    }
    let hist = purification_histogram(lc.n_sites, lc.depth, lc.p, cfg.n_hist_circuits, lc.seed ^ 0x5eed, exec(lc.parallel))?;
    let (table, complexity) = match &cfg.m_bar {
        Some(t) => (t.clone(), Vec::new()),
        None => {
            let res = complexity_experiment(c)?;
            let t = res.iter().filter_map(|r| r.mean().map(|m| (r.t_p, m))).collect();
            (t, res)
        }
    };
    let measured = learnability_experiment(lc)?;
    let reconstruction = reconstruct(&hist.mass(), &table, &measured.n_t)?;
    Ok(AppendixBResult { mass: hist.mass(), table, complexity, measured, reconstruction })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step() {
        let r = reconstruct(&[1.0, 0.0, 0.0], &[(1, 500.0), (2, 500.0), (3, 500.0)], &[250, 500, 1000]).unwrap();
        assert_eq!(r.predicted, vec![0.0, 1.0, 1.0]);
        assert!(!r.adjusted);
    }

    #[test]
    fn full_budget_recovers_purified_mass() {
        let mass = [0.2, 0.3, 0.1, 0.05];
        let r = reconstruct(&mass, &[(1, 250.0), (2, 600.0)], &[100, usize::MAX]).unwrap();
        assert_eq!(r.predicted[0], 0.0);
        assert!((r.predicted[1] - 0.65).abs() < 1e-12);
        // geometric extrapolation continues the last ratio
        assert!((r.m_bar[3] / r.m_bar[2] - 2.4).abs() < 1e-9);
    }

    #[test]
    fn interpolation_and_monotone_fix() {
        let r = reconstruct(&[0.25; 4], &[(1, 100.0), (3, 400.0), (4, 300.0)], &[200, 350]).unwrap();
        assert!(r.adjusted);
        assert!((r.m_bar[1] - (100.0f64 * 350.0).sqrt()).abs() < 1e-9);
        assert!((r.m_bar[2] - 350.0).abs() < 1e-9);
        assert!(r.m_bar.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(r.predicted, vec![0.5, 1.0]);
    }

    #[test]
    fn empty_table_is_an_error() {
        assert!(reconstruct(&[1.0], &[], &[1]).is_err());
    }
}

//! Coherent information of the reference, exact and as seen by the decoder,
//! and the finite-size crossing of its decay rate.

use std::collections::BTreeSet;

use log::{info, warn};
use mipt_core::par;
use mipt_core::trajectory::{family_seed, purification_histogram, purification_time};
use mipt_core::{build_circuit, CircuitSpec};
use serde::{Deserialize, Serialize};

use crate::complexity::exec;
use crate::error::{ExpError, Result};
use crate::learning::{learned_with, LearningSettings, WindowMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherentInfoConfig {
    pub p: Vec<f64>,
    #[serde(rename = "L")]
    pub n_sites: Vec<usize>,
    #[serde(rename = "T")]
    pub depth: usize,
    pub n_circuits: usize,
    /// Training budget for the learned estimate; `None` skips it.
    pub n_t: Option<usize>,
    /// Depths at which the learned estimate is computed (default `1..=T`).
    pub learn_depths: Option<Vec<usize>>,
    pub window: WindowMode,
    pub seed: u64,
    pub parallel: bool,
    pub learning: LearningSettings,
}

impl Default for CoherentInfoConfig {
    fn default() -> Self {
        CoherentInfoConfig {
            p: vec![0.1, 0.3],
            n_sites: vec![16],
            depth: 10,
            n_circuits: 200,
            n_t: None,
            learn_depths: None,
            window: WindowMode::Whole,
            seed: 0,
            parallel: true,
            learning: LearningSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentInfoSeries {
    pub p: f64,
    pub n_sites: usize,
    pub depth: usize,
    pub n_circuits: usize,
    /// Exact mean reference entropy, `t = 0..=T`.
    pub s_q: Vec<f64>,
    /// `1 −` fraction of circuits learned at depth `t`, where computed.
    pub s_q_learned: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherentInfoRow {
    pub p: f64,
    #[serde(rename = "L")]
    pub n_sites: usize,
    pub t: usize,
    #[serde(rename = "S_Q")]
    pub s_q: f64,
    #[serde(rename = "S_Q_learned")]
    pub s_q_learned: Option<f64>,
}

impl CoherentInfoSeries {
    pub fn rows(&self) -> Vec<CoherentInfoRow> {
        (0..=self.depth)
            .map(|t| CoherentInfoRow {
                p: self.p,
                n_sites: self.n_sites,
                t,
                s_q: self.s_q[t],
                s_q_learned: self.s_q_learned[t],
            })
            .collect()
    }
}

/// Exact `S_Q(t)` over `n_circuits` circuits of the family `seed`.
pub fn exact_series(n_sites: usize, depth: usize, p: f64, n_circuits: usize, seed: u64, parallel: bool) -> Result<CoherentInfoSeries> {
    let h = purification_histogram(n_sites, depth, p, n_circuits, seed, exec(parallel))?;
    Ok(CoherentInfoSeries { p, n_sites, depth, n_circuits, s_q: h.coherent_info(), s_q_learned: vec![None; depth + 1] })
}

fn learned_series(cfg: &CoherentInfoConfig, n_sites: usize, p: f64, n_t: usize) -> Result<Vec<Option<f64>>> {
    let depths: BTreeSet<usize> = match &cfg.learn_depths {
        Some(d) => d.iter().copied().collect(),
        None => (1..=cfg.depth).collect(),
    };
    if depths.iter().any(|&t| t == 0 || t > cfg.depth) {
        return Err(ExpError::Config(format!("learn_depths must lie in 1..={}", cfg.depth)));
    }
    let depths: Vec<usize> = depths.into_iter().collect();
    // learned[i][k]: circuit i learned at depths[k]
    let learned = par::map_range(exec(cfg.parallel), cfg.n_circuits, |i| -> Result<Vec<bool>> {
        let spec = CircuitSpec::new(n_sites, cfg.depth, p, family_seed(cfg.seed, i as u64));
        let c = build_circuit(&spec)?;
        let Some(t_p) = purification_time(&c) else {
            return Ok(vec![false; depths.len()]);
        };
        depths
            .iter()
            .map(|&t| {
                if t < t_p {
                    return Ok(false);
                }
                let mut w = cfg.window.window(&c, t_p, cfg.learning.cone);
                w.depth = t;
                learned_with(&c, w, n_t, &cfg.learning)
            })
            .collect()
    });
    let learned = learned.into_iter().collect::<Result<Vec<_>>>()?;
    let mut out = vec![None; cfg.depth + 1];
    out[0] = Some(1.0);
    for (k, &t) in depths.iter().enumerate() {
        let hits = learned.iter().filter(|l| l[k]).count();
        out[t] = Some(1.0 - hits as f64 / cfg.n_circuits as f64);
    }
    Ok(out)
}

/// One series per `(p, L)`, ordered by `L` then `p`.
pub fn coherent_info_experiment(cfg: &CoherentInfoConfig) -> Result<Vec<CoherentInfoSeries>> {
    if cfg.n_circuits == 0 || cfg.p.is_empty() || cfg.n_sites.is_empty() {
        return Err(ExpError::Config("need circuits, p values and sizes".into()));
    }
    if cfg.n_t.is_some() {
        cfg.learning.validate()?;
    }
    let mut out = Vec::new();
    for &l in &cfg.n_sites {
        for &p in &cfg.p {
            info!("coherent info: p={p} L={l}");
            let mut s = exact_series(l, cfg.depth, p, cfg.n_circuits, cfg.seed, cfg.parallel)?;
            if let Some(n_t) = cfg.n_t {
                s.s_q_learned = learned_series(cfg, l, p, n_t)?;
            }
            out.push(s);
        }
    }
    Ok(out)
}

/// How `d ln S_Q / dt` is estimated at `t_d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Estimator {
    /// `(ln S(t_d+1) − ln S(t_d−1)) / 2`, one-sided at the ends.
    #[default]
    Central,
    /// Least-squares slope of `ln S` over `t_d ± half_width`.
    Fit { half_width: usize },
}

/// `λ = |d ln S_Q/dt|` at layer `t_d` with a binomial standard error, or
/// `None` when a needed `S_Q` is zero.
pub fn decay_rate(s_q: &[f64], n_circuits: usize, t_d: usize, est: Estimator) -> Option<(f64, f64)> {
    let last = s_q.len().checked_sub(1)?;
    if t_d > last || last == 0 {
        return None;
    }
    let (lo, hi) = match est {
        Estimator::Central => (t_d.saturating_sub(1), (t_d + 1).min(last)),
        Estimator::Fit { half_width } => (t_d.saturating_sub(half_width.max(1)), (t_d + half_width.max(1)).min(last)),
    };
    if hi == lo || s_q[lo..=hi].iter().any(|&s| s <= 0.0) {
        return None;
    }
    let n = n_circuits as f64;
    match est {
        Estimator::Central => {
            let lambda = ((s_q[hi].ln() - s_q[lo].ln()) / (hi - lo) as f64).abs();
            // of the N·S(lo) circuits alive at lo, a fraction q purify by hi
            let q = 1.0 - s_q[hi] / s_q[lo];
            let err = (q / ((1.0 - q) * n * s_q[lo])).sqrt() / (hi - lo) as f64;
            Some((lambda, err))
        }
        Estimator::Fit { .. } => {
            let pts: Vec<(f64, f64)> = (lo..=hi).map(|t| (t as f64, s_q[t].ln())).collect();
            let k = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
            let err = if pts.len() > 2 {
                let rss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
                (rss / (k - 2.0) / sxx).sqrt()
            } else {
                0.0
            };
            Some((slope.abs(), err))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayEstimate {
    pub p: f64,
    #[serde(rename = "L")]
    pub n_sites: usize,
    pub t_d: usize,
    #[serde(rename = "S_Q")]
    pub s_q: f64,
    #[serde(rename = "L_lambda")]
    pub l_lambda: Option<f64>,
    #[serde(rename = "L_lambda_err")]
    pub l_lambda_err: Option<f64>,
}

/// A p-interval over which `Lλ` of two sizes changes order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inversion {
    #[serde(rename = "L_small")]
    pub l_small: usize,
    #[serde(rename = "L_large")]
    pub l_large: usize,
    pub p_lo: f64,
    pub p_hi: f64,
    /// Linear interpolation of the crossing inside the interval.
    pub p_cross: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingResult {
    pub tau_d: f64,
    pub estimates: Vec<DecayEstimate>,
    pub inversions: Vec<Inversion>,
    /// Hull of all inversion intervals.
    pub interval: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingIntervalRow {
    pub tau_d: f64,
    pub p_lo: Option<f64>,
    pub p_hi: Option<f64>,
}

impl CrossingResult {
    pub fn interval_row(&self) -> CrossingIntervalRow {
        CrossingIntervalRow { tau_d: self.tau_d, p_lo: self.interval.map(|i| i.0), p_hi: self.interval.map(|i| i.1) }
    }

    /// Whether the interval comes within `tol` of `p`.
    pub fn near(&self, p: f64, tol: f64) -> bool {
        self.interval.is_some_and(|(lo, hi)| lo <= p + tol && hi >= p - tol)
    }
}

/// `t_d = τ_d·L` rounded to the nearest layer.
pub fn scaled_time(tau_d: f64, n_sites: usize) -> usize {
    (tau_d * n_sites as f64).round() as usize
}

pub fn crossing_analysis(series: &[CoherentInfoSeries], tau_d: f64, est: Estimator) -> Result<CrossingResult> {
    let sizes: BTreeSet<usize> = series.iter().map(|s| s.n_sites).collect();
    if sizes.len() < 2 {
        return Err(ExpError::InvalidArgument("need ≥ 2 sizes".into()));
    }
    if !(tau_d > 0.0) {
        return Err(ExpError::InvalidArgument(format!("tau_d must be positive, got {tau_d}")));
    }
    let mut estimates = Vec::new();
    for s in series {
        let t_d = scaled_time(tau_d, s.n_sites);
        let rate = decay_rate(&s.s_q, s.n_circuits, t_d, est);
        if rate.is_none() {
            warn!("L={} p={}: S_Q vanishes near t_d={t_d} or T too small, excluded", s.n_sites, s.p);
        }
        let l = s.n_sites as f64;
        estimates.push(DecayEstimate {
            p: s.p,
            n_sites: s.n_sites,
            t_d,
            s_q: s.s_q.get(t_d).copied().unwrap_or(f64::NAN),
            l_lambda: rate.map(|r| l * r.0),
            l_lambda_err: rate.map(|r| l * r.1),
        });
    }
    estimates.sort_by(|a, b| (a.n_sites, a.p).partial_cmp(&(b.n_sites, b.p)).expect("finite p"));
    let sizes: Vec<usize> = sizes.into_iter().collect();
    let mut inversions = Vec::new();
    for pair in sizes.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mut diffs: Vec<(f64, f64)> = Vec::new();
        for ea in estimates.iter().filter(|e| e.n_sites == a) {
            let eb = estimates.iter().find(|e| e.n_sites == b && e.p == ea.p);
            if let (Some(la), Some(lb)) = (ea.l_lambda, eb.and_then(|e| e.l_lambda)) {
                diffs.push((ea.p, lb - la));
            }
        }
        for w in diffs.windows(2) {
            let ((p0, d0), (p1, d1)) = (w[0], w[1]);
            if d0 == 0.0 || d0.signum() != d1.signum() {
                let p_cross = if d0 == d1 { p0 } else { p0 + d0 * (p1 - p0) / (d0 - d1) };
                inversions.push(Inversion { l_small: a, l_large: b, p_lo: p0, p_hi: p1, p_cross });
            }
        }
    }
    let interval = inversions.iter().fold(None, |acc: Option<(f64, f64)>, i| match acc {
        None => Some((i.p_lo, i.p_hi)),
        Some((lo, hi)) => Some((lo.min(i.p_lo), hi.max(i.p_hi))),
    });
    Ok(CrossingResult { tau_d, estimates, inversions, interval })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossingConfig {
    pub p: Vec<f64>,
    #[serde(rename = "L")]
    pub n_sites: Vec<usize>,
    pub n_circuits: usize,
    pub tau_d: f64,
    pub estimator: Estimator,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for CrossingConfig {
    fn default() -> Self {
        CrossingConfig {
            p: (4..=12).map(|k| k as f64 * 0.02).collect(),
            n_sites: vec![16, 24, 32],
            n_circuits: 5000,
            tau_d: 0.125,
            estimator: Estimator::Central,
            seed: 0,
            parallel: true,
        }
    }
}

/// Exact series just deep enough for the estimator, then the crossing.
pub fn crossing_experiment(cfg: &CrossingConfig) -> Result<(Vec<CoherentInfoSeries>, CrossingResult)> {
    let reach = match cfg.estimator {
        Estimator::Central => 1,
        Estimator::Fit { half_width } => half_width.max(1),
    };
    let mut series = Vec::new();
    for &l in &cfg.n_sites {
        let depth = scaled_time(cfg.tau_d, l) + reach;
        for &p in &cfg.p {
            info!("crossing: p={p} L={l} T={depth}");
            series.push(exact_series(l, depth, p, cfg.n_circuits, cfg.seed, cfg.parallel)?);
        }
    }
    let result = crossing_analysis(&series, cfg.tau_d, cfg.estimator)?;
    Ok((series, result))
}

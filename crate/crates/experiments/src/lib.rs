//! Experiment harness: each experiment reads a TOML config, runs a
//! deterministic protocol over seeded circuit families and writes CSV
//! tables plus a `manifest.json` into an output directory.
//!
//! | experiment          | outputs                                             |
//! |---------------------|-----------------------------------------------------|
//! | `purification-hist` | `purification_hist.csv`                             |
//! | `complexity`        | `complexity.csv`, `complexity_circuits.csv`         |
//! | `learnability`      | `learnability.csv`, `learnability_circuits.csv`     |
//! | `coherent-info`     | `coherent_info.csv`                                 |
//! | `crossing`          | `crossing_rates.csv`, `crossing.csv`, `crossing_interval.csv`, `coherent_info.csv` |
//! | `scalability`       | `scalability.csv`                                   |
//! | `appendix-b`        | `appendix_b.csv`, `appendix_b_table.csv`, plus the complexity and learnability tables |

pub mod appendix_b;
pub mod coherent;
pub mod complexity;
pub mod error;
pub mod histogram;
pub mod learnability;
pub mod learning;
pub mod output;
pub mod scalability;
pub mod stats;

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use appendix_b::{appendix_b_experiment, reconstruct, AppendixBConfig};
pub use coherent::{coherent_info_experiment, crossing_analysis, crossing_experiment, CoherentInfoConfig, CrossingConfig, CrossingResult};
pub use complexity::{complexity_experiment, scrambled_complexity_experiment, ComplexityConfig, ComplexityResult};
pub use error::{ExpError, Result};
pub use histogram::{histogram_experiment, HistogramConfig};
pub use learnability::{learnability_experiment, LearnabilityConfig, LearnabilityCurve};
pub use learning::{LearningSettings, WindowMode};
pub use output::OutputDir;
pub use scalability::{scalability_experiment, ScalabilityConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    PurificationHist,
    Complexity,
    Learnability,
    CoherentInfo,
    Crossing,
    Scalability,
    AppendixB,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::PurificationHist,
        Experiment::Complexity,
        Experiment::Learnability,
        Experiment::CoherentInfo,
        Experiment::Crossing,
        Experiment::Scalability,
        Experiment::AppendixB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::PurificationHist => "purification-hist",
            Experiment::Complexity => "complexity",
            Experiment::Learnability => "learnability",
            Experiment::CoherentInfo => "coherent-info",
            Experiment::Crossing => "crossing",
            Experiment::Scalability => "scalability",
            Experiment::AppendixB => "appendix-b",
        }
    }
}

pub fn parse_config<C: DeserializeOwned>(text: &str) -> Result<C> {
    Ok(toml::from_str(text)?)
}

fn finish<C: Serialize>(out: OutputDir, e: Experiment, cfg: &C) -> Result<PathBuf> {
    out.finish(e.name(), cfg)
}

/// Parse `config_text` for experiment `e`, run it and write its outputs to
/// `out_dir`. Returns the manifest path.
pub fn run_experiment(e: Experiment, config_text: &str, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    let mut out = OutputDir::create(out_dir)?;
    match e {
        Experiment::PurificationHist => {
            let cfg: HistogramConfig = parse_config(config_text)?;
            let rows: Vec<_> = histogram_experiment(&cfg)?.iter().flat_map(histogram::histogram_rows).collect();
            out.write_csv("purification_hist.csv", &rows)?;
            finish(out, e, &cfg)
        }
        Experiment::Complexity => {
            let cfg: ComplexityConfig = parse_config(config_text)?;
            let res = complexity_experiment(&cfg)?;
            write_complexity(&mut out, &res, cfg.delta)?;
            finish(out, e, &cfg)
        }
        Experiment::Learnability => {
            let cfg: LearnabilityConfig = parse_config(config_text)?;
            let curve = learnability_experiment(&cfg)?;
            write_learnability(&mut out, &curve)?;
            finish(out, e, &cfg)
        }
        Experiment::CoherentInfo => {
            let cfg: CoherentInfoConfig = parse_config(config_text)?;
            let series = coherent_info_experiment(&cfg)?;
            let rows: Vec<_> = series.iter().flat_map(|s| s.rows()).collect();
            out.write_csv("coherent_info.csv", &rows)?;
            finish(out, e, &cfg)
        }
        Experiment::Crossing => {
            let cfg: CrossingConfig = parse_config(config_text)?;
            let (series, res) = crossing_experiment(&cfg)?;
            let rows: Vec<_> = series.iter().flat_map(|s| s.rows()).collect();
            out.write_csv("coherent_info.csv", &rows)?;
            out.write_csv("crossing_rates.csv", &res.estimates)?;
            out.write_csv("crossing.csv", &res.inversions)?;
            out.write_csv("crossing_interval.csv", &[res.interval_row()])?;
            finish(out, e, &cfg)
        }
        Experiment::Scalability => {
            let cfg: ScalabilityConfig = parse_config(config_text)?;
            let res = scalability_experiment(&cfg)?;
            out.write_csv("scalability.csv", &res.rows())?;
            finish(out, e, &cfg)
        }
        Experiment::AppendixB => {
            let cfg: AppendixBConfig = parse_config(config_text)?;
            let res = appendix_b_experiment(&cfg)?;
            out.write_csv("appendix_b.csv", &res.rows())?;
            out.write_csv("appendix_b_table.csv", &res.table_rows())?;
            if !res.complexity.is_empty() {
                write_complexity(&mut out, &res.complexity, cfg.complexity.delta)?;
            }
            write_learnability(&mut out, &res.measured)?;
            finish(out, e, &cfg)
        }
    }
}

fn write_complexity(out: &mut OutputDir, res: &[ComplexityResult], delta: f64) -> Result<()> {
    let rows: Vec<_> = res.iter().map(|r| r.row(delta)).collect();
    out.write_csv("complexity.csv", &rows)?;
    let per: Vec<_> = res.iter().flat_map(|r| r.circuit_rows()).collect();
    out.write_csv("complexity_circuits.csv", &per)
}

fn write_learnability(out: &mut OutputDir, curve: &LearnabilityCurve) -> Result<()> {
    out.write_csv("learnability.csv", &curve.rows())?;
    out.write_csv("learnability_circuits.csv", &curve.circuit_rows())
}

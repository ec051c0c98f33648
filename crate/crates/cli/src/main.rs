//! `mipt`: circuits, datasets, exact decoding, training and experiments.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mipt_core::par::Exec;
use mipt_core::trajectory::{lightcone_window, simulate, LightCone, RunOptions};
use mipt_core::{analyze_circuit, build_circuit, generate_dataset, read_dataset, write_dataset, CircuitSpec, InitState, Labels, WindowSpec};
use mipt_experiments::{run_experiment, Experiment};
use mipt_nn::{evaluate, load_model, save_model, train, Cnn, Examples, ModelConfig, TrainConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "mipt", version, about = "Monitored Clifford circuits and reference-qubit decoders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CircuitArgs {
    /// TOML circuit config (keys L, T, p, circuit_seed, init, ref_site).
    #[arg(long, conflicts_with_all = ["l", "t", "p", "seed", "init"])]
    circuit: Option<PathBuf>,
    #[arg(long = "L", id = "l")]
    l: Option<usize>,
    #[arg(long = "T", id = "t")]
    t: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_init)]
    init: Option<InitState>,
    /// Follow the last unitary layer with a measurement round.
    #[arg(long, value_name = "BOOL")]
    final_measurement_round: Option<bool>,
}

fn parse_init(s: &str) -> std::result::Result<InitState, String> {
    s.parse()
}

impl CircuitArgs {
    fn spec(&self) -> Result<CircuitSpec> {
        let mut spec = match &self.circuit {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => {
                let (Some(l), Some(t), Some(p)) = (self.l, self.t, self.p) else {
                    bail!("give either --circuit <file> or all of --L, --T and --p");
                };
                CircuitSpec::new(l, t, p, self.seed.unwrap_or(0)).with_init(self.init.unwrap_or_default())
            }
        };
        if let Some(f) = self.final_measurement_round {
            spec.final_measurement_round = f;
        }
        Ok(spec)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    /// All sites and layers.
    Full,
    /// All sites, layers up to the purification time.
    Whole,
    /// Light-cone box up to the purification time.
    Lightcone,
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelArg {
    Purified,
    ForcedZ,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run trajectories of one circuit and print them as JSON lines.
    Simulate {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[arg(long, default_value_t = 1)]
        trajectories: u64,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        /// Check tableau invariants after every layer.
        #[arg(long)]
        validate_tableau: bool,
    },
    /// Key-measurement analysis of one circuit.
    ExactDecode {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a labelled trajectory dataset.
    Generate {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[arg(long, short)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        #[arg(long, value_enum, default_value = "full")]
        window: WindowArg,
        #[arg(long, value_enum, default_value = "purified")]
        labels: LabelArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a decoder on a dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the training history as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Test error of a trained decoder.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0.02)]
        epsilon: f64,
    },
    PurificationHist(ExperimentArgs),
    Complexity(ExperimentArgs),
    Learnability(ExperimentArgs),
    CoherentInfo(ExperimentArgs),
    Crossing(ExperimentArgs),
    Scalability(ExperimentArgs),
    AppendixB(ExperimentArgs),
}

#[derive(Serialize)]
struct TrajectoryLine {
    trajectory_seed: u64,
    t_p: Option<usize>,
    axis: Option<char>,
    label: Option<i8>,
    outcomes: Vec<Vec<i8>>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run_circuit_command(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { circuit, trajectories, first_seed, validate_tableau } => {
            let c = build_circuit(&circuit.spec()?)?;
            let opts = RunOptions { validate: validate_tableau, ..Default::default() };
            for seed in first_seed..first_seed + trajectories {
                let r = simulate(&c, seed, opts).record;
                let line = TrajectoryLine {
                    trajectory_seed: seed,
                    t_p: r.t_p,
                    axis: r.axis.map(|a| a.letter()),
                    label: r.label,
                    outcomes: r.outcomes.chunks(r.n_sites).map(<[i8]>::to_vec).collect(),
                };
                println!("{}", serde_json::to_string(&line)?);
            }
        }
        Command::ExactDecode { circuit, out } => {
            let c = build_circuit(&circuit.spec()?)?;
            let report = analyze_circuit(&c)?;
            write_json(&out, &report)?;
            eprintln!("t_p = {}, axis {}, {} key measurements", report.t_p, report.axis.letter(), report.key_set.len());
        }
        Command::Generate { circuit, n, first_seed, window, labels, out } => {
            let c = build_circuit(&circuit.spec()?)?;
            let labels = match labels {
                LabelArg::Purified => Labels::Purified,
                LabelArg::ForcedZ => Labels::ForcedZ,
            };
            let t_p = mipt_core::trajectory::purification_time(&c);
            let w = match (window, t_p) {
                (WindowArg::Full, _) => None,
                (WindowArg::Whole, Some(t)) => Some(WindowSpec { center: c.ref_site(), width: c.n_sites(), depth: t }),
                (WindowArg::Lightcone, Some(t)) => Some(lightcone_window(&c, t, LightCone::default())),
                (_, None) => bail!("circuit never purifies; only --window full is available"),
            };
            let ds = generate_dataset(&c, n, w, first_seed, labels, Exec::Auto)?;
            write_dataset(&out, &ds)?;
            eprintln!("{} samples of {}x{} written to {}", ds.len(), ds.rows(), ds.cols(), out.display());
        }
        Command::Train { dataset, epochs, batch, seed, out, report } => {
            let data = Examples::from_dataset(&read_dataset(&dataset)?);
            let tc = TrainConfig { max_epochs: epochs, batch_size: batch, init_seed: seed, shuffle_seed: seed, ..Default::default() };
            let mut model = Cnn::<f32>::new(ModelConfig::new(data.rows, data.cols, data.len())?, seed);
            let rep = train(&mut model, &data, &tc)?;
            save_model(&out, &model)?;
            eprintln!(
                "{} epochs (best {}), validation loss {:.4}; model written to {}",
                rep.epochs,
                rep.best_epoch,
                rep.best_validation_loss(),
                out.display()
            );
            if let Some(path) = report {
                write_json(&path, &rep)?;
            }
        }
        Command::Eval { model, dataset, epsilon } => {
            let m = load_model(&model)?;
            let data = Examples::from_dataset(&read_dataset(&dataset)?);
            let ev = evaluate(&m, &data, epsilon)?;
            println!("{}", serde_json::to_string(&ev)?);
        }
        _ => unreachable!("experiment commands are dispatched separately"),
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::PurificationHist(a) => (Experiment::PurificationHist, a),
        Command::Complexity(a) => (Experiment::Complexity, a),
        Command::Learnability(a) => (Experiment::Learnability, a),
        Command::CoherentInfo(a) => (Experiment::CoherentInfo, a),
        Command::Crossing(a) => (Experiment::Crossing, a),
        Command::Scalability(a) => (Experiment::Scalability, a),
        Command::AppendixB(a) => (Experiment::AppendixB, a),
        other => return run_circuit_command(other),
    };
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let manifest = run_experiment(experiment, &text, &args.out)?;
    eprintln!("{} finished; manifest at {}", experiment.name(), manifest.display());
    Ok(())
}

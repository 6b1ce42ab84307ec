use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use matnet::config::bundled_mnist_dir;
use matnet::{
    gradcheck, run_experiment, DatasetSource, ExperimentConfig, ExperimentName, ExperimentReport, HarnessError,
    RunOptions,
};
use matnet_core::train::Method;
use matnet_core::{Activation, LayerSpec, NetworkSpec};

#[derive(Debug, Parser)]
#[command(
    name = "matnet",
    version,
    about = "Train small feedforward networks by GD, LM root finding and random search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunFlags {
    /// Master seed for initial gains, random search and probe points.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to `runs/<experiment>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of gd, fs, rsm.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Overrides the epoch / iteration count of every method.
    #[arg(long)]
    epochs: Option<usize>,
    /// Train the methods on separate threads.
    #[arg(long)]
    concurrent: bool,
    /// Worker threads for ensemble evaluation (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Write 0 in the wall_ms column, making output byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    /// Skip gains_<method>.csv.
    #[arg(long)]
    no_gains: bool,
    #[arg(long)]
    mnist_images: Option<PathBuf>,
    #[arg(long)]
    mnist_labels: Option<PathBuf>,
    #[arg(long)]
    mnist_test_images: Option<PathBuf>,
    #[arg(long)]
    mnist_test_labels: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one of the built-in experiments: xor, sine or mnist.
    Experiment {
        name: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run an experiment described by a JSON config (or a previous run's
    /// metadata.json).
    Train {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Compare analytic and finite-difference cost gradients on random
    /// networks.
    Gradcheck {
        #[arg(long, default_value_t = 2)]
        inputs: usize,
        /// Comma-separated layer widths.
        #[arg(long, value_delimiter = ',', default_value = "3,2")]
        widths: Vec<usize>,
        #[arg(long, default_value = "sigmoid")]
        activation: String,
        /// Width of a final linear map, if any.
        #[arg(long)]
        final_linear: Option<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_activation(s: &str) -> Result<Activation, HarnessError> {
    match s.to_ascii_lowercase().as_str() {
        "sigmoid" => Ok(Activation::Sigmoid),
        "relu" => Ok(Activation::Relu),
        "linear" => Ok(Activation::Linear),
        _ => Err(HarnessError::Config(format!("unknown activation {s:?}"))),
    }
}

fn apply_flags(mut cfg: ExperimentConfig, flags: &RunFlags) -> Result<(ExperimentConfig, RunOptions), HarnessError> {
    if let Some(seed) = flags.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(epochs) = flags.epochs {
        cfg = cfg.with_epochs(epochs);
    }
    if let Some(methods) = &flags.methods {
        cfg.methods = methods
            .iter()
            .filter(|m| !m.is_empty())
            .map(|m| Method::from_tag(m).ok_or_else(|| HarnessError::Config(format!("unknown method {m:?}"))))
            .collect::<Result<_, _>>()?;
    }
    if flags.no_timing {
        cfg.record_timing = false;
    }
    if flags.no_gains {
        cfg.record_gains = false;
    }
    let overrides = [
        &flags.mnist_images,
        &flags.mnist_labels,
        &flags.mnist_test_images,
        &flags.mnist_test_labels,
    ];
    if overrides.iter().any(|o| o.is_some()) {
        let DatasetSource::Mnist(src) = &mut cfg.dataset else {
            return Err(HarnessError::Config(
                "MNIST paths given for a non-MNIST experiment".into(),
            ));
        };
        let targets = [
            &mut src.train_images,
            &mut src.train_labels,
            &mut src.test_images,
            &mut src.test_labels,
        ];
        for (target, value) in targets.into_iter().zip(overrides) {
            if let Some(p) = value {
                *target = p.clone();
            }
        }
    }
    let name = match cfg.name {
        ExperimentName::Xor => "xor",
        ExperimentName::Sine => "sine",
        ExperimentName::Mnist => "mnist",
        ExperimentName::Custom => "custom",
    };
    let opts = RunOptions {
        output_dir: Some(flags.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(name))),
        concurrent: flags.concurrent,
        threads: flags.threads,
    };
    Ok((cfg, opts))
}

fn summarize(report: &ExperimentReport, opts: &RunOptions) {
    for o in &report.outcomes {
        let mut line = format!(
            "{:>3}: final cost {:.6e} after {} records ({}), max probe error {:.3e}",
            o.method.tag(),
            o.trace.final_cost(),
            o.trace.records.len() - 1,
            o.trace.termination.as_str(),
            o.max_probe_error
        );
        if let Some(acc) = &o.accuracy {
            line.push_str(&format!(
                ", correct {}/{} per class {:?}",
                acc.total_correct(),
                acc.total(),
                acc.correct
            ));
        }
        println!("{line}");
    }
    if let Some(dir) = &opts.output_dir {
        println!("outputs in {}", dir.display());
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Experiment { name, flags } => {
            let exp = ExperimentName::from_tag(&name)
                .ok_or_else(|| HarnessError::Config(format!("unknown experiment {name:?}")))?;
            let cfg = match exp {
                ExperimentName::Mnist => ExperimentConfig::mnist(matnet::MnistSource::in_dir(&bundled_mnist_dir())),
                other => ExperimentConfig::preset(other)?,
            };
            let (cfg, opts) = apply_flags(cfg, &flags)?;
            summarize(&run_experiment(&cfg, &opts)?, &opts);
        }
        Command::Train { config, flags } => {
            let (cfg, opts) = apply_flags(ExperimentConfig::load(&config)?, &flags)?;
            summarize(&run_experiment(&cfg, &opts)?, &opts);
        }
        Command::Gradcheck {
            inputs,
            widths,
            activation,
            final_linear,
            trials,
            seed,
        } => {
            let act = parse_activation(&activation)?;
            let spec = NetworkSpec::new(
                inputs,
                widths.iter().map(|&w| LayerSpec::new(w, act)).collect(),
                final_linear,
            )
            .map_err(|e| HarnessError::Config(e.to_string()))?;
            let report = gradcheck(&spec, seed, trials)?;
            for (i, t) in report.trials.iter().enumerate() {
                match t.max_relative_error {
                    Some(e) => println!("trial {i:>3}: max relative error {e:.3e} ({} resamples)", t.resamples),
                    None => println!("trial {i:>3}: excluded, every draw hit a ReLU kink"),
                }
            }
            let verdict = if report.passed() { "PASS" } else { "FAIL" };
            println!(
                "{verdict}: worst {:.3e} vs threshold {:.0e}, {} resamples, {} excluded",
                report.worst(),
                report.threshold,
                report.resamples(),
                report.excluded()
            );
            if !report.passed() {
                return Err(HarnessError::Core(matnet_core::Error::Invalid(
                    "gradient check failed".into(),
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

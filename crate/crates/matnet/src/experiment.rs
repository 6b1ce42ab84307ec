//! Running the configured methods on one dataset from a shared start.

use std::f64::consts::FRAC_PI_2;
use std::num::NonZeroUsize;
use std::thread;
use std::time::Instant;

use matnet_core::data::{sine_dataset, xor_dataset};
use matnet_core::network::predict;
use matnet_core::train::{
    train_gd, train_rootfind, train_rsm, Clock, CostEvaluator, Method, NoClock, TraceOptions, TrainTrace,
};
use matnet_core::{Dataset, NetworkGains, NetworkSpec, Sample};
use rand::Rng;

use crate::config::{init_rng, probe_rng, DatasetSource, ExperimentConfig, RunOptions};
use crate::error::{HarnessError, Result};
use crate::mnist::{mnist_load, mnist_subset};
use crate::report;

/// Milliseconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        WallClock(Instant::now())
    }
}

impl Clock for WallClock {
    fn elapsed_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

/// Splits candidates into contiguous blocks, one per worker thread.
#[derive(Debug, Clone, Copy)]
pub struct Threaded {
    threads: usize,
}

impl Threaded {
    /// `threads == 0` uses the available parallelism.
    pub fn new(threads: usize) -> Self {
        let threads = if threads == 0 {
            thread::available_parallelism().map_or(1, NonZeroUsize::get)
        } else {
            threads
        };
        Threaded { threads }
    }

    pub fn threads(&self) -> usize {
        self.threads
    }
}

impl CostEvaluator for Threaded {
    fn costs(&self, count: usize, cost_of: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64> {
        let mut out = vec![0.0; count];
        if self.threads <= 1 || count < 2 {
            for (m, v) in out.iter_mut().enumerate() {
                *v = cost_of(m);
            }
            return out;
        }
        let block = count.div_ceil(self.threads);
        thread::scope(|s| {
            for (b, chunk) in out.chunks_mut(block).enumerate() {
                s.spawn(move || {
                    for (i, v) in chunk.iter_mut().enumerate() {
                        *v = cost_of(b * block + i);
                    }
                });
            }
        });
        out
    }
}

/// Correct predictions per class, with class = argmax of the one-hot target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassAccuracy {
    pub correct: Vec<usize>,
    pub totals: Vec<usize>,
}

impl ClassAccuracy {
    pub fn total_correct(&self) -> usize {
        self.correct.iter().sum()
    }

    pub fn total(&self) -> usize {
        self.totals.iter().sum()
    }
}

/// Index of the largest entry; ties go to the lowest index and NaN never wins.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] || v[best].is_nan() {
            best = i;
        }
    }
    best
}

pub fn classify_accuracy(spec: &NetworkSpec, gains: &NetworkGains, validation: &Dataset) -> Result<ClassAccuracy> {
    let classes = validation.target_width();
    if classes < 2 {
        return Err(HarnessError::config("classification needs at least two classes"));
    }
    let mut acc = ClassAccuracy {
        correct: vec![0; classes],
        totals: vec![0; classes],
    };
    for s in validation {
        let class = argmax(&s.target);
        acc.totals[class] += 1;
        if argmax(&predict(spec, gains, &s.input)?) == class {
            acc.correct[class] += 1;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub trace: TrainTrace,
    /// Network outputs at each probe point.
    pub predictions: Vec<Vec<f64>>,
    /// Largest `|prediction − target|` over probes and output components.
    pub max_probe_error: f64,
    pub accuracy: Option<ClassAccuracy>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub init: NetworkGains,
    pub training: Dataset,
    pub probes: Dataset,
    pub classification: bool,
    pub outcomes: Vec<MethodOutcome>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn outcome(&self, method: Method) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|o| o.method == method)
    }
}

struct Prepared {
    training: Dataset,
    probes: Dataset,
    classification: bool,
    notes: Vec<String>,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let mut notes = Vec::new();
    let prepared = match &cfg.dataset {
        DatasetSource::Xor => Prepared {
            training: xor_dataset(),
            probes: xor_dataset(),
            classification: false,
            notes,
        },
        DatasetSource::Sine { count, probes } => {
            let mut rng = probe_rng(cfg.seed);
            let samples = (0..*probes)
                .map(|_| {
                    let x: f64 = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
                    Sample::new(vec![x], vec![x.sin()])
                })
                .collect();
            if cfg.network.layers.len() == 2 {
                notes.push(
                    "sine architecture: first layer sigmoid, second layer linear, so the output can take \
                     both signs on [-pi/2, pi/2]"
                        .to_owned(),
                );
            }
            Prepared {
                training: sine_dataset(*count)?,
                probes: Dataset::new(samples)?,
                classification: false,
                notes,
            }
        }
        DatasetSource::Mnist(src) => {
            let train = mnist_load(&src.train_images, &src.train_labels)?;
            let test = mnist_load(&src.test_images, &src.test_labels)?;
            notes.push(format!(
                "training set: first {} images of each class {:?} in file order of {}",
                src.per_class,
                src.classes,
                src.train_images.display()
            ));
            notes.push(format!(
                "validation set: first {} images of each class from {}",
                src.validation_per_class,
                src.test_images.display()
            ));
            notes.push("pixels scaled from bytes to [0, 1] by dividing by 255".to_owned());
            Prepared {
                training: mnist_subset(&train, &src.classes, src.per_class)?,
                probes: mnist_subset(&test, &src.classes, src.validation_per_class)?,
                classification: true,
                notes,
            }
        }
        DatasetSource::Inline { samples } => {
            let data = Dataset::new(
                samples
                    .iter()
                    .map(|s| Sample::new(s.input.clone(), s.target.clone()))
                    .collect(),
            )
            .map_err(|e| HarnessError::config(format!("inline dataset: {e}")))?;
            Prepared {
                probes: data.clone(),
                training: data,
                classification: false,
                notes,
            }
        }
    };
    let spec = &cfg.network;
    for (what, d) in [("training", &prepared.training), ("probe", &prepared.probes)] {
        if d.input_width() != spec.input_width || d.target_width() != spec.output_width() {
            return Err(HarnessError::config(format!(
                "{what} data is {}->{} but the network is {}->{}",
                d.input_width(),
                d.target_width(),
                spec.input_width,
                spec.output_width()
            )));
        }
    }
    Ok(prepared)
}

fn train_one(
    method: Method,
    cfg: &ExperimentConfig,
    init: &NetworkGains,
    data: &Dataset,
    eval: &Threaded,
) -> Result<TrainTrace> {
    let wall = WallClock::start();
    let opts = TraceOptions {
        clock: if cfg.record_timing { &wall } else { &NoClock },
        snapshots: cfg.record_gains,
    };
    let spec = &cfg.network;
    let trace = match method {
        Method::Gd => train_gd(spec, init, data, &cfg.gd, &opts),
        Method::Fs => train_rootfind(spec, init, data, &cfg.fs, &opts),
        Method::Rsm => train_rsm(spec, init, data, &cfg.rsm, eval, &opts),
    };
    trace.map_err(|source| HarnessError::Training {
        method: method.tag(),
        source,
    })
}

fn evaluate(
    method: Method,
    trace: TrainTrace,
    spec: &NetworkSpec,
    probes: &Dataset,
    classification: bool,
) -> Result<MethodOutcome> {
    let mut predictions = Vec::with_capacity(probes.len());
    let mut max_probe_error: f64 = 0.0;
    for s in probes {
        let y = predict(spec, &trace.final_gains, &s.input)?;
        for (a, t) in y.iter().zip(&s.target) {
            max_probe_error = max_probe_error.max((a - t).abs());
        }
        predictions.push(y);
    }
    let accuracy = if classification {
        Some(classify_accuracy(spec, &trace.final_gains, probes)?)
    } else {
        None
    };
    Ok(MethodOutcome {
        method,
        trace,
        predictions,
        max_probe_error,
        accuracy,
    })
}

/// Builds the datasets and the shared initial gains, trains every selected
/// method, and writes the outputs when `opts.output_dir` is set.
///
/// Per-method trace files are written as each method finishes, so a failure
/// in a later method leaves the earlier results on disk.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    cfg.validate()?;
    let cfg = cfg.clone().resolved();
    let prepared = prepare(&cfg)?;
    let spec = &cfg.network;
    let init = NetworkGains::random(spec, &mut init_rng(cfg.seed));
    let eval = Threaded::new(opts.threads);
    let methods = cfg.method_list();
    if let Some(dir) = &opts.output_dir {
        report::create_dir(dir)?;
    }

    let finish = |method: Method, trace: Result<TrainTrace>| -> Result<MethodOutcome> {
        let outcome = evaluate(method, trace?, spec, &prepared.probes, prepared.classification)?;
        if let Some(dir) = &opts.output_dir {
            report::write_method_files(dir, &outcome)?;
        }
        Ok(outcome)
    };

    let mut outcomes = Vec::with_capacity(methods.len());
    let mut first_error = None;
    if opts.concurrent && methods.len() > 1 {
        let traces: Vec<Result<TrainTrace>> = thread::scope(|s| {
            let handles: Vec<_> = methods
                .iter()
                .map(|&m| {
                    let (cfg, init, data, eval) = (&cfg, &init, &prepared.training, &eval);
                    s.spawn(move || train_one(m, cfg, init, data, eval))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("training thread panicked"))
                .collect()
        });
        for (&m, trace) in methods.iter().zip(traces) {
            match finish(m, trace) {
                Ok(o) => outcomes.push(o),
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
    } else {
        for &m in &methods {
            match finish(m, train_one(m, &cfg, &init, &prepared.training, &eval)) {
                Ok(o) => outcomes.push(o),
                Err(e) => {
                    first_error = Some(e);
                    break;
                }
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }

    let mut notes = prepared.notes;
    if !cfg.record_timing {
        notes.push("timing disabled: wall_ms columns are 0".to_owned());
    }
    let report = ExperimentReport {
        config: cfg,
        init,
        training: prepared.training,
        probes: prepared.probes,
        classification: prepared.classification,
        outcomes,
        notes,
    };
    if let Some(dir) = &opts.output_dir {
        report::write_summary_files(&report, dir)?;
    }
    Ok(report)
}

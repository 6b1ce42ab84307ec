//! Experiment configuration: a single JSON document with per-experiment
//! defaults.

use std::fs;
use std::path::{Path, PathBuf};

use matnet_core::train::{GdConfig, Method, RootFindConfig, RsmConfig};
use matnet_core::{Activation, LayerSpec, NetworkSpec};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const DEFAULT_SEED: u64 = 2024;

/// Random streams derived from the master seed.
const INIT_STREAM: u64 = 0;
const RSM_STREAM: u64 = 1;
const PROBE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentName {
    Xor,
    Sine,
    Mnist,
    Custom,
}

impl ExperimentName {
    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag.to_ascii_lowercase().as_str() {
            "xor" => Some(ExperimentName::Xor),
            "sine" => Some(ExperimentName::Sine),
            "mnist" => Some(ExperimentName::Mnist),
            "custom" => Some(ExperimentName::Custom),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InlineSample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnistSource {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    #[serde(default = "default_classes")]
    pub classes: Vec<u8>,
    #[serde(default = "default_per_class")]
    pub per_class: usize,
    #[serde(default = "default_validation_per_class")]
    pub validation_per_class: usize,
}

fn default_classes() -> Vec<u8> {
    vec![0, 1, 2]
}

fn default_per_class() -> usize {
    10
}

fn default_validation_per_class() -> usize {
    100
}

fn default_sine_count() -> usize {
    100
}

fn default_probe_count() -> usize {
    1000
}

/// Directory holding the bundled MNIST excerpt.
pub fn bundled_mnist_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

impl MnistSource {
    pub fn in_dir(dir: &Path) -> Self {
        MnistSource {
            train_images: dir.join("train-images-idx3-ubyte"),
            train_labels: dir.join("train-labels-idx1-ubyte"),
            test_images: dir.join("t10k-images-idx3-ubyte"),
            test_labels: dir.join("t10k-labels-idx1-ubyte"),
            classes: default_classes(),
            per_class: default_per_class(),
            validation_per_class: default_validation_per_class(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSource {
    Xor,
    Sine {
        #[serde(default = "default_sine_count")]
        count: usize,
        #[serde(default = "default_probe_count")]
        probes: usize,
    },
    Mnist(MnistSource),
    Inline {
        samples: Vec<InlineSample>,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: ExperimentName,
    pub network: NetworkSpec,
    pub dataset: DatasetSource,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub gd: GdConfig,
    #[serde(default)]
    pub fs: RootFindConfig,
    #[serde(default)]
    pub rsm: RsmConfig,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub record_gains: bool,
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

/// Execution settings that do not change results.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub concurrent: bool,
    /// Worker threads for ensemble evaluation; 0 picks the machine's
    /// available parallelism.
    pub threads: usize,
}

/// A stream of the master seed's generator, so that each consumer (initial
/// gains, random search, probe points) is independent of the others.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn init_rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, INIT_STREAM)
}

pub fn probe_rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, PROBE_STREAM)
}

pub fn rsm_seed(seed: u64) -> u64 {
    stream_rng(seed, RSM_STREAM).next_u64()
}

impl ExperimentConfig {
    /// XOR: two sigmoid neurons feeding a scalar linear map.
    pub fn xor() -> Self {
        ExperimentConfig {
            name: ExperimentName::Xor,
            network: NetworkSpec {
                input_width: 2,
                layers: vec![LayerSpec::new(2, Activation::Sigmoid)],
                final_linear: Some(1),
            },
            dataset: DatasetSource::Xor,
            methods: Method::ALL.to_vec(),
            gd: GdConfig {
                learning_rate: 5.0,
                epochs: 50,
            },
            fs: RootFindConfig {
                max_iterations: 50,
                ..RootFindConfig::default()
            },
            rsm: RsmConfig {
                ensemble_size: 50,
                radius: 1.0,
                epochs: 50,
                elitism: true,
                seed: 0,
            },
            seed: DEFAULT_SEED,
            record_gains: true,
            record_timing: true,
        }
        .resolved()
    }

    /// Sine on `[−π/2, π/2]`: one sigmoid neuron followed by one linear one.
    pub fn sine() -> Self {
        ExperimentConfig {
            name: ExperimentName::Sine,
            network: NetworkSpec {
                input_width: 1,
                layers: vec![
                    LayerSpec::new(1, Activation::Sigmoid),
                    LayerSpec::new(1, Activation::Linear),
                ],
                final_linear: None,
            },
            dataset: DatasetSource::Sine {
                count: default_sine_count(),
                probes: default_probe_count(),
            },
            methods: Method::ALL.to_vec(),
            gd: GdConfig {
                learning_rate: 0.01,
                epochs: 50,
            },
            fs: RootFindConfig {
                function_tol: 1e-30,
                step_tol: 1e-30,
                ..RootFindConfig::default()
            },
            rsm: RsmConfig {
                ensemble_size: 500,
                radius: 1.0,
                epochs: 50,
                elitism: true,
                seed: 0,
            },
            seed: DEFAULT_SEED,
            record_gains: true,
            record_timing: true,
        }
        .resolved()
    }

    /// Digits 0, 1, 2: 784 → 30 ReLU → 3 sigmoid, ten training images per
    /// class.
    pub fn mnist(source: MnistSource) -> Self {
        ExperimentConfig {
            name: ExperimentName::Mnist,
            network: NetworkSpec {
                input_width: 784,
                layers: vec![
                    LayerSpec::new(30, Activation::Relu),
                    LayerSpec::new(3, Activation::Sigmoid),
                ],
                final_linear: None,
            },
            dataset: DatasetSource::Mnist(source),
            methods: Method::ALL.to_vec(),
            gd: GdConfig {
                learning_rate: 0.7,
                epochs: 50,
            },
            fs: RootFindConfig::default(),
            rsm: RsmConfig {
                ensemble_size: 5000,
                radius: 1.0,
                epochs: 50,
                elitism: true,
                seed: 0,
            },
            seed: DEFAULT_SEED,
            record_gains: false,
            record_timing: true,
        }
        .resolved()
    }

    pub fn preset(name: ExperimentName) -> Result<Self> {
        match name {
            ExperimentName::Xor => Ok(Self::xor()),
            ExperimentName::Sine => Ok(Self::sine()),
            ExperimentName::Mnist => Ok(Self::mnist(MnistSource::in_dir(&bundled_mnist_dir()))),
            ExperimentName::Custom => Err(HarnessError::config("the custom experiment needs a config file")),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.resolved()
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.gd.epochs = epochs;
        self.rsm.epochs = epochs;
        self.fs.max_iterations = epochs;
        self
    }

    /// Fills fields derived from the master seed.
    pub fn resolved(mut self) -> Self {
        self.rsm.seed = rsm_seed(self.seed);
        self
    }

    /// Methods in configured order with duplicates dropped.
    pub fn method_list(&self) -> Vec<Method> {
        let mut out: Vec<Method> = Vec::new();
        for m in &self.methods {
            if !out.contains(m) {
                out.push(*m);
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: matnet_core::Error| HarnessError::config(e.to_string());
        if self.methods.is_empty() {
            return Err(HarnessError::config("at least one method must be selected"));
        }
        self.network.validate().map_err(cfg_err)?;
        self.gd.validate().map_err(cfg_err)?;
        self.fs.validate().map_err(cfg_err)?;
        self.rsm.validate().map_err(cfg_err)?;
        match &self.dataset {
            DatasetSource::Sine { count, probes } => {
                if *count < 2 {
                    return Err(HarnessError::config("sine needs at least 2 training points"));
                }
                if *probes == 0 {
                    return Err(HarnessError::config("sine needs at least one probe point"));
                }
            }
            DatasetSource::Mnist(src) => {
                if src.classes.len() != self.network.output_width() {
                    return Err(HarnessError::config(format!(
                        "{} classes but the network has {} outputs",
                        src.classes.len(),
                        self.network.output_width()
                    )));
                }
                if src.per_class == 0 || src.validation_per_class == 0 {
                    return Err(HarnessError::config("per-class counts must be positive"));
                }
            }
            DatasetSource::Inline { samples } if samples.is_empty() => {
                return Err(HarnessError::config("inline dataset is empty"));
            }
            _ => {}
        }
        Ok(())
    }

    /// Reads either a config document or a run's `metadata.json` (whose
    /// `config` member is a config document).
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let json_err = |source| HarnessError::Json {
            path: path.to_owned(),
            source,
        };
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        let cfg: ExperimentConfig = serde_json::from_value(value).map_err(json_err)?;
        Ok(cfg.resolved())
    }
}

//! Analytic cost gradient against central finite differences on random
//! networks.

use matnet_core::gradient::{cost_gradient, finite_difference_gradient, max_relative_error, FD_STEP};
use matnet_core::network::forward;
use matnet_core::{Activation, Dataset, NetworkGains, NetworkSpec, Sample};
use rand::Rng;

use crate::config::init_rng;
use crate::error::{HarnessError, Result};

pub const THRESHOLD: f64 = 1e-5;
/// ReLU preactivations this close to 0 make finite differences straddle the
/// kink.
pub const KINK_MARGIN: f64 = 1e-3;
pub const SAMPLES_PER_TRIAL: usize = 3;
const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// `None` when every draw hit a ReLU kink.
    pub max_relative_error: Option<f64>,
    pub resamples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub trials: Vec<TrialOutcome>,
    pub threshold: f64,
}

impl GradcheckReport {
    pub fn worst(&self) -> f64 {
        self.trials
            .iter()
            .filter_map(|t| t.max_relative_error)
            .fold(0.0, f64::max)
    }

    pub fn resamples(&self) -> usize {
        self.trials.iter().map(|t| t.resamples).sum()
    }

    pub fn excluded(&self) -> usize {
        self.trials.iter().filter(|t| t.max_relative_error.is_none()).count()
    }

    pub fn passed(&self) -> bool {
        self.excluded() < self.trials.len() && self.worst() < self.threshold
    }
}

/// Whether some ReLU preactivation lies within [`KINK_MARGIN`] of 0.
pub fn near_kink(spec: &NetworkSpec, gains: &NetworkGains, data: &Dataset) -> Result<bool> {
    for s in data {
        let trace = forward(spec, gains, &s.input)?;
        for (layer, z) in spec.layers.iter().zip(&trace.preactivations) {
            if layer.activation == Activation::Relu && z.iter().any(|v| v.abs() <= KINK_MARGIN) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Max relative error between the analytic and finite-difference gradients,
/// or `None` if the point sits on a ReLU kink.
pub fn check_at(spec: &NetworkSpec, gains: &NetworkGains, data: &Dataset) -> Result<Option<f64>> {
    if near_kink(spec, gains, data)? {
        return Ok(None);
    }
    let analytic = cost_gradient(spec, gains, data)?.flatten();
    let numeric = finite_difference_gradient(spec, gains, data, FD_STEP)?.flatten();
    Ok(Some(max_relative_error(&analytic, &numeric)))
}

fn random_data(spec: &NetworkSpec, rng: &mut impl Rng) -> Dataset {
    let samples = (0..SAMPLES_PER_TRIAL)
        .map(|_| {
            let x = (0..spec.input_width).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = (0..spec.output_width()).map(|_| rng.random_range(-1.0..1.0)).collect();
            Sample::new(x, y)
        })
        .collect();
    Dataset::new(samples).expect("random samples are uniform and finite")
}

/// Runs `trials` checks with N(0, 1) gains and uniform data, redrawing any
/// trial that lands near a ReLU kink.
pub fn gradcheck(spec: &NetworkSpec, seed: u64, trials: usize) -> Result<GradcheckReport> {
    if trials == 0 {
        return Err(HarnessError::config("gradcheck needs at least one trial"));
    }
    spec.validate().map_err(|e| HarnessError::config(e.to_string()))?;
    let mut rng = init_rng(seed);
    let mut out = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut resamples = 0;
        let mut result = None;
        while resamples <= MAX_RESAMPLES {
            let gains = NetworkGains::random(spec, &mut rng);
            let data = random_data(spec, &mut rng);
            if let Some(err) = check_at(spec, &gains, &data)? {
                result = Some(err);
                break;
            }
            resamples += 1;
        }
        out.push(TrialOutcome {
            max_relative_error: result,
            resamples: resamples.min(MAX_RESAMPLES),
        });
    }
    Ok(GradcheckReport {
        trials: out,
        threshold: THRESHOLD,
    })
}

use crate::gradient::{self, cost_gradient};
use crate::train::{Method, Recorder, Termination, TraceOptions, TrainTrace};
use crate::{Dataset, Error, NetworkGains, NetworkSpec, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GdConfig {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for GdConfig {
    fn default() -> Self {
        GdConfig {
            learning_rate: 5.0,
            epochs: 50,
        }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid("learning rate must be positive and finite"));
        }
        Ok(())
    }
}

/// One full-batch step `θ ← θ − α ∂J/∂θ`.
pub fn gd_step(spec: &NetworkSpec, gains: &NetworkGains, data: &Dataset, learning_rate: f64) -> Result<NetworkGains> {
    if !(learning_rate > 0.0) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    let grad = cost_gradient(spec, gains, data)?;
    let mut next = gains.clone();
    for (layer, (theta, g)) in next.thetas.iter_mut().zip(&grad.thetas).enumerate() {
        let cols = g.cols();
        for (idx, (t, d)) in theta.as_mut_slice().iter_mut().zip(g.as_slice()).enumerate() {
            if !d.is_finite() {
                return Err(Error::NonFiniteGradient {
                    layer,
                    neuron: idx % cols,
                });
            }
            *t -= learning_rate * d;
        }
    }
    if let Some((layer, theta)) = next.thetas.iter().enumerate().find(|(_, t)| !t.is_finite()) {
        let idx = theta.as_slice().iter().position(|v| !v.is_finite()).unwrap_or(0);
        return Err(Error::NonFiniteGradient {
            layer,
            neuron: idx % theta.cols(),
        });
    }
    Ok(next)
}

pub fn train_gd(
    spec: &NetworkSpec,
    init: &NetworkGains,
    data: &Dataset,
    cfg: &GdConfig,
    opts: &TraceOptions<'_>,
) -> Result<TrainTrace> {
    cfg.validate()?;
    let mut rec = Recorder::new(opts);
    let mut gains = init.clone();
    rec.record(0, gradient::squared_error(spec, &gains, data)?, &gains);
    for epoch in 1..=cfg.epochs {
        gains = gd_step(spec, &gains, data, cfg.learning_rate)?;
        rec.record(epoch, gradient::squared_error(spec, &gains, data)?, &gains);
    }
    Ok(rec.finish(Method::Gd, gains, Termination::Completed, None))
}

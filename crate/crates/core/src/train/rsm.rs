use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::gradient::{self, sse_unchecked};
use crate::train::{Method, Recorder, Termination, TraceOptions, TrainTrace};
use crate::{Dataset, Error, NetworkGains, NetworkSpec, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RsmConfig {
    pub ensemble_size: usize,
    pub radius: f64,
    pub epochs: usize,
    #[cfg_attr(feature = "serde", serde(default = "default_elitism"))]
    pub elitism: bool,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
}

#[cfg(feature = "serde")]
fn default_elitism() -> bool {
    true
}

impl Default for RsmConfig {
    fn default() -> Self {
        RsmConfig {
            ensemble_size: 50,
            radius: 1.0,
            epochs: 50,
            elitism: true,
            seed: 0,
        }
    }
}

impl RsmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble_size == 0 {
            return Err(Error::invalid("ensemble size must be at least 1"));
        }
        if !(self.radius >= 0.0) || !self.radius.is_finite() {
            return Err(Error::invalid("radius must be a non-negative finite number"));
        }
        Ok(())
    }
}

/// Evaluates `count` independent candidate costs.
///
/// Implementations may run candidates in any order or in parallel but must
/// return the costs indexed by candidate.
pub trait CostEvaluator {
    fn costs(&self, count: usize, cost_of: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl CostEvaluator for Sequential {
    fn costs(&self, count: usize, cost_of: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64> {
        (0..count).map(cost_of).collect()
    }
}

/// `incumbent + radius · ν` with ν i.i.d. standard normal per gain scalar,
/// drawn from a stream seeded by `candidate_seed`.
fn perturb(incumbent: &NetworkGains, radius: f64, candidate_seed: u64) -> NetworkGains {
    let mut rng = ChaCha8Rng::seed_from_u64(candidate_seed);
    let mut out = incumbent.clone();
    for theta in &mut out.thetas {
        for v in theta.as_mut_slice() {
            let nu: f64 = rng.sample(StandardNormal);
            *v += radius * nu;
        }
    }
    out
}

/// One random-search epoch.
///
/// Each candidate gets its own seed drawn sequentially from `rng`, so the
/// result does not depend on the order in which `eval` visits candidates.
/// With elitism the incumbent sits at pool index 0 and wins ties. Returns the
/// winning gains and their cost.
pub fn rsm_step<E: CostEvaluator + ?Sized>(
    spec: &NetworkSpec,
    gains: &NetworkGains,
    data: &Dataset,
    cfg: &RsmConfig,
    rng: &mut ChaCha8Rng,
    eval: &E,
) -> Result<(NetworkGains, f64)> {
    cfg.validate()?;
    let incumbent_cost = gradient::squared_error(spec, gains, data)?;
    let seeds: Vec<u64> = (0..cfg.ensemble_size).map(|_| rng.next_u64()).collect();
    let radius = cfg.radius;
    let costs = eval.costs(seeds.len(), &|m| {
        sse_unchecked(spec, &perturb(gains, radius, seeds[m]), data)
    });

    let mut best: Option<(usize, f64)> = None;
    for (m, &c) in costs.iter().enumerate() {
        if c.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, bc)| c < bc) {
            best = Some((m, c));
        }
    }
    let keep_incumbent = match best {
        None => true,
        Some((_, c)) => cfg.elitism && incumbent_cost <= c,
    };
    if keep_incumbent {
        return Ok((gains.clone(), incumbent_cost));
    }
    let (m, c) = best.expect("checked above");
    Ok((perturb(gains, radius, seeds[m]), c))
}

pub fn train_rsm<E: CostEvaluator + ?Sized>(
    spec: &NetworkSpec,
    init: &NetworkGains,
    data: &Dataset,
    cfg: &RsmConfig,
    eval: &E,
    opts: &TraceOptions<'_>,
) -> Result<TrainTrace> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rec = Recorder::new(opts);
    let mut gains = init.clone();
    rec.record(0, gradient::squared_error(spec, &gains, data)?, &gains);
    for epoch in 1..=cfg.epochs {
        let (next, cost) = rsm_step(spec, &gains, data, cfg, &mut rng, eval)?;
        gains = next;
        rec.record(epoch, cost, &gains);
    }
    Ok(rec.finish(Method::Rsm, gains, Termination::Completed, Some(cfg.seed)))
}

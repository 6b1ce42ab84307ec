//! Training as root finding on `NN(x^m) − y^m = 0`.
//!
//! Levenberg-Marquardt with the analytic Jacobian. The damped step
//! `(JᵀJ + λI) s = −Jᵀr` is solved in whichever of its two equivalent forms is
//! smaller: directly when there are at least as many residuals as parameters,
//! otherwise as `s = −Jᵀ (JJᵀ + λI)⁻¹ r`. The second form keeps the
//! underdetermined cases (XOR, MNIST) at residual-count size.

use alloc::vec;
use alloc::vec::Vec;

use crate::gradient::{backprop_rows, sse_unchecked};
use crate::network::{self, forward};
use crate::tensor::{solve, Matrix};
use crate::train::{Method, Recorder, Termination, TraceOptions, TrainTrace};
use crate::{Dataset, Error, NetworkGains, NetworkSpec, Result};

/// Damping beyond which the solver gives up on the current iteration.
pub const MAX_DAMPING: f64 = 1e12;
const MIN_DAMPING: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct RootFindConfig {
    pub max_iterations: usize,
    pub function_tol: f64,
    pub step_tol: f64,
    pub initial_damping: f64,
    pub damping_up: f64,
    pub damping_down: f64,
}

impl Default for RootFindConfig {
    fn default() -> Self {
        RootFindConfig {
            max_iterations: 50,
            function_tol: 1e-12,
            step_tol: 1e-12,
            initial_damping: 1e-3,
            damping_up: 10.0,
            damping_down: 10.0,
        }
    }
}

impl RootFindConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping_up > 1.0) || !(self.damping_down > 1.0) {
            return Err(Error::invalid("damping factors must exceed 1"));
        }
        if !(self.initial_damping > 0.0) {
            return Err(Error::invalid("initial damping must be positive"));
        }
        if !(self.function_tol >= 0.0) || !(self.step_tol >= 0.0) {
            return Err(Error::invalid("tolerances must be non-negative"));
        }
        Ok(())
    }
}

fn check(spec: &NetworkSpec, gains: &NetworkGains, data: &Dataset) -> Result<()> {
    gains.check(spec)?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.input_width() != spec.input_width || data.target_width() != spec.output_width() {
        return Err(Error::Shape {
            op: "dataset",
            left: (spec.input_width, spec.output_width()),
            right: (data.input_width(), data.target_width()),
        });
    }
    Ok(())
}

fn residuals_unchecked(spec: &NetworkSpec, gains: &NetworkGains, data: &Dataset) -> Vec<f64> {
    let mut r = Vec::with_capacity(data.len() * spec.output_width());
    for s in data {
        let y = network::predict_unchecked(spec, gains, &s.input);
        r.extend(y.iter().zip(&s.target).map(|(v, t)| v - t));
    }
    r
}

/// `NN(x^m) − y^m` stacked sample-major, then by output component.
pub fn residual_vector(spec: &NetworkSpec, gains: &NetworkGains, data: &Dataset) -> Result<Vec<f64>> {
    check(spec, gains, data)?;
    Ok(residuals_unchecked(spec, gains, data))
}

/// `(L·l_y) x P` Jacobian of [`residual_vector`], columns in flattened
/// parameter order.
pub fn residual_jacobian(spec: &NetworkSpec, gains: &NetworkGains, data: &Dataset) -> Result<Matrix> {
    check(spec, gains, data)?;
    let ly = spec.output_width();
    let p = spec.param_count();
    let mut out = vec![0.0; data.len() * ly * p];
    let seed = Matrix::identity(ly);
    for (m, s) in data.iter().enumerate() {
        let trace = forward(spec, gains, &s.input)?;
        backprop_rows(spec, gains, &trace, &seed, &mut out[m * ly * p..(m + 1) * ly * p]);
    }
    Matrix::new(data.len() * ly, p, out)
}

/// Solves the damped normal equations for the step `s`.
fn damped_step(jac: &Matrix, r: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let (m, p) = jac.shape();
    if p <= m {
        let mut a = jac.gram_cols();
        for i in 0..p {
            a[(i, i)] += lambda;
        }
        let g: Vec<f64> = jac.tr_mul_vec(r)?.into_iter().map(|v| -v).collect();
        solve(&a, &g)
    } else {
        let mut a = jac.gram_rows();
        for i in 0..m {
            a[(i, i)] += lambda;
        }
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let u = solve(&a, &neg_r)?;
        jac.tr_mul_vec(&u)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn train_rootfind(
    spec: &NetworkSpec,
    init: &NetworkGains,
    data: &Dataset,
    cfg: &RootFindConfig,
    opts: &TraceOptions<'_>,
) -> Result<TrainTrace> {
    cfg.validate()?;
    check(spec, init, data)?;
    let mut rec = Recorder::new(opts);
    let mut gains = init.clone();
    let mut r = residuals_unchecked(spec, &gains, data);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    rec.record(0, cost, &gains);

    if max_abs(&r) < cfg.function_tol {
        return Ok(rec.finish(Method::Fs, gains, Termination::FunctionTolerance, None));
    }

    let mut lambda = cfg.initial_damping;
    let mut flat = gains.flatten();
    let mut termination = Termination::Completed;
    'outer: for iteration in 1..=cfg.max_iterations {
        let jac = residual_jacobian(spec, &gains, data)?;
        let (step, next_gains, next_r, next_cost) = loop {
            if lambda > MAX_DAMPING {
                termination = Termination::Stalled;
                break 'outer;
            }
            let step = match damped_step(&jac, &r, lambda) {
                Ok(s) if s.iter().all(|v| v.is_finite()) => s,
                _ => {
                    lambda *= cfg.damping_up;
                    continue;
                }
            };
            let trial: Vec<f64> = flat.iter().zip(&step).map(|(a, b)| a + b).collect();
            let Ok(trial_gains) = NetworkGains::from_flat(spec, &trial) else {
                lambda *= cfg.damping_up;
                continue;
            };
            let trial_cost = sse_unchecked(spec, &trial_gains, data);
            if trial_cost < cost {
                let trial_r = residuals_unchecked(spec, &trial_gains, data);
                flat = trial;
                lambda = (lambda / cfg.damping_down).max(MIN_DAMPING);
                break (step, trial_gains, trial_r, trial_cost);
            }
            lambda *= cfg.damping_up;
        };
        gains = next_gains;
        r = next_r;
        cost = next_cost;
        rec.record(iteration, cost, &gains);
        if max_abs(&r) < cfg.function_tol {
            termination = Termination::FunctionTolerance;
            break;
        }
        if max_abs(&step) < cfg.step_tol {
            termination = Termination::StepTolerance;
            break;
        }
    }
    Ok(rec.finish(Method::Fs, gains, termination, None))
}

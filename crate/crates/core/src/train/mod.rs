//! Gradient descent, Levenberg-Marquardt root finding, and ensemble random
//! search.
//!
//! Every trainer returns a [`TrainTrace`] whose record 0 is the cost of the
//! initial gains, followed by one record per epoch (accepted iteration for the
//! root finder).

use alloc::vec::Vec;
use core::fmt;

use crate::NetworkGains;

mod gd;
mod rootfind;
mod rsm;

pub use gd::{gd_step, train_gd, GdConfig};
pub use rootfind::{residual_jacobian, residual_vector, train_rootfind, RootFindConfig, MAX_DAMPING};
pub use rsm::{rsm_step, train_rsm, CostEvaluator, RsmConfig, Sequential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Method {
    #[cfg_attr(feature = "serde", serde(rename = "gd"))]
    Gd,
    #[cfg_attr(feature = "serde", serde(rename = "fs"))]
    Fs,
    #[cfg_attr(feature = "serde", serde(rename = "rsm"))]
    Rsm,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Gd, Method::Fs, Method::Rsm];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::Fs => "fs",
            Method::Rsm => "rsm",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.tag().eq_ignore_ascii_case(tag))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Millisecond clock supplied by the caller; the core crate has no time source.
pub trait Clock {
    fn elapsed_ms(&self) -> f64;
}

/// Reports 0 for every reading.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_ms(&self) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy)]
pub struct TraceOptions<'a> {
    pub clock: &'a dyn Clock,
    /// Keep a flattened copy of the gains after every record.
    pub snapshots: bool,
}

impl fmt::Debug for TraceOptions<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TraceOptions")
            .field("snapshots", &self.snapshots)
            .finish_non_exhaustive()
    }
}

impl Default for TraceOptions<'_> {
    fn default() -> Self {
        TraceOptions {
            clock: &NoClock,
            snapshots: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub cost: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Ran the configured number of epochs or iterations.
    Completed,
    /// `‖r‖∞` fell below the function tolerance.
    FunctionTolerance,
    /// `‖s‖∞` fell below the step tolerance.
    StepTolerance,
    /// Damping escalated past [`MAX_DAMPING`] without finding a decrease.
    Stalled,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::FunctionTolerance => "function_tolerance",
            Termination::StepTolerance => "step_tolerance",
            Termination::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub method: Method,
    pub records: Vec<EpochRecord>,
    /// One flattened gain vector per record, when requested.
    pub snapshots: Option<Vec<Vec<f64>>>,
    pub final_gains: NetworkGains,
    pub termination: Termination,
    /// RNG seed for stochastic methods.
    pub seed: Option<u64>,
}

impl TrainTrace {
    pub fn costs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cost).collect()
    }

    pub fn final_cost(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.cost)
    }
}

/// Accumulates records while a trainer runs.
pub(crate) struct Recorder<'a> {
    opts: TraceOptions<'a>,
    start: f64,
    records: Vec<EpochRecord>,
    snapshots: Option<Vec<Vec<f64>>>,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(opts: &TraceOptions<'a>) -> Self {
        Recorder {
            opts: *opts,
            start: opts.clock.elapsed_ms(),
            records: Vec::new(),
            snapshots: opts.snapshots.then(Vec::new),
        }
    }

    pub(crate) fn record(&mut self, epoch: usize, cost: f64, gains: &NetworkGains) {
        let wall_ms = self.opts.clock.elapsed_ms() - self.start;
        self.records.push(EpochRecord { epoch, cost, wall_ms });
        if let Some(s) = &mut self.snapshots {
            s.push(gains.flatten());
        }
    }

    pub(crate) fn finish(
        self,
        method: Method,
        final_gains: NetworkGains,
        termination: Termination,
        seed: Option<u64>,
    ) -> TrainTrace {
        TrainTrace {
            method,
            records: self.records,
            snapshots: self.snapshots,
            final_gains,
            termination,
            seed,
        }
    }
}

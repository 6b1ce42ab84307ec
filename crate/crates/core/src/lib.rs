//! Feedforward neural networks written as alternating linear maps and scalar
//! activations, with the cost gradient assembled in closed form from per-layer
//! Jacobians.
//!
//! The crate is `no_std` (it needs `alloc`) and has no IO. Everything that
//! touches files, clocks or threads lives in the `matnet` companion crate and
//! plugs in through the [`train::Clock`] and [`train::CostEvaluator`] traits.
//!
//! Layout:
//!
//! - [`tensor`]: the dense row-major [`Matrix`] and the handful of operations the
//!   rest of the crate needs (products, transposes, `diag`, the augmented input
//!   and selector matrices, an SPD solve).
//! - [`network`]: activations, [`NetworkSpec`], [`NetworkGains`] and the forward
//!   pass.
//! - [`gradient`]: the cost, the backpropagated parameter Jacobians and the
//!   central finite-difference oracle.
//! - [`train`]: gradient descent, Levenberg-Marquardt root finding on the
//!   residual system, and the ensemble random search.
//! - [`data`]: the XOR table and the sine sampler.
#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations)]
// Validation negates comparisons so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod data;
mod error;
pub mod gradient;
pub mod network;
pub mod tensor;
pub mod train;

pub use data::{Dataset, Sample};
pub use error::{Error, Result};
pub use network::{Activation, ForwardTrace, LayerSpec, NetworkGains, NetworkSpec};
pub use tensor::Matrix;

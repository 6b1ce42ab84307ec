//! Neurons, neural layers and the n-layer network.
//!
//! A neuron with gain `θ ∈ R^{l_x+1}` computes `σ(χᵀθ)` where `χ = [xᵀ 1]ᵀ`. A
//! layer stacks `ℓ` neurons whose gains are the columns of `Θ`. A network
//! composes layers, `x_{i+1} = N_i(x_i, Θ_i)`, and optionally finishes with a
//! linear map `y = Θ_{n+1}ᵀ x_{n+1}`.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::tensor::{augment, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    Sigmoid,
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    pub fn eval(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(z),
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    /// `σ_z(z)`. The ReLU derivative at the kink is taken to be 0.
    #[inline]
    pub fn deriv(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

pub fn activation_eval(a: Activation, z: f64) -> f64 {
    a.eval(z)
}

pub fn activation_deriv(a: Activation, z: f64) -> f64 {
    a.deriv(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerSpec {
    pub width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(width: usize, activation: Activation) -> Self {
        LayerSpec { width, activation }
    }
}

/// Architecture: input width, the neural layers, and the width of the optional
/// final linear map.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkSpec {
    pub input_width: usize,
    pub layers: Vec<LayerSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub final_linear: Option<usize>,
}

impl NetworkSpec {
    pub fn new(input_width: usize, layers: Vec<LayerSpec>, final_linear: Option<usize>) -> Result<Self> {
        let spec = NetworkSpec {
            input_width,
            layers,
            final_linear,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_width == 0 {
            return Err(Error::invalid("input width must be positive"));
        }
        if self.layers.is_empty() {
            return Err(Error::invalid("a network needs at least one layer"));
        }
        if let Some(i) = self.layers.iter().position(|l| l.width == 0) {
            return Err(Error::invalid(alloc::format!("layer {i} has zero width")));
        }
        if self.final_linear == Some(0) {
            return Err(Error::invalid("final linear map must have positive width"));
        }
        Ok(())
    }

    /// Number of neural layers `n` (the final linear map is not counted).
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// `l_{x_i}` for `i` in `0..=n`: the input width of layer `i`, with index
    /// `n` being the width fed to the final map.
    pub fn layer_input_width(&self, i: usize) -> usize {
        if i == 0 {
            self.input_width
        } else {
            self.layers[i - 1].width
        }
    }

    pub fn output_width(&self) -> usize {
        self.final_linear
            .unwrap_or_else(|| self.layers.last().map_or(0, |l| l.width))
    }

    /// Shapes of `Θ_1..Θ_n` (and `Θ_{n+1}` when a final map is present).
    pub fn gain_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes: Vec<(usize, usize)> = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| (self.layer_input_width(i) + 1, l.width))
            .collect();
        if let Some(ly) = self.final_linear {
            shapes.push((self.layers.last().map_or(0, |l| l.width), ly));
        }
        shapes
    }

    pub fn param_count(&self) -> usize {
        self.gain_shapes().iter().map(|(r, c)| r * c).sum()
    }
}

/// The network gain `{Θ_i}`.
///
/// The flattened parameter order used everywhere (Jacobian columns, gain CSVs)
/// is layer-major, then column (neuron) major, then row.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGains {
    pub thetas: Vec<Matrix>,
}

impl NetworkGains {
    pub fn new(spec: &NetworkSpec, thetas: Vec<Matrix>) -> Result<Self> {
        let gains = NetworkGains { thetas };
        gains.check(spec)?;
        Ok(gains)
    }

    pub fn zeros(spec: &NetworkSpec) -> Self {
        NetworkGains {
            thetas: spec
                .gain_shapes()
                .into_iter()
                .map(|(r, c)| Matrix::zeros(r, c))
                .collect(),
        }
    }

    /// i.i.d. standard normal gains, drawn in flattened parameter order.
    pub fn random<R: Rng + ?Sized>(spec: &NetworkSpec, rng: &mut R) -> Self {
        let mut gains = NetworkGains::zeros(spec);
        for theta in &mut gains.thetas {
            let (rows, cols) = theta.shape();
            for c in 0..cols {
                for r in 0..rows {
                    theta[(r, c)] = rng.sample(StandardNormal);
                }
            }
        }
        gains
    }

    /// Checks every shape against `spec`, naming the first offending layer.
    pub fn check(&self, spec: &NetworkSpec) -> Result<()> {
        let shapes = spec.gain_shapes();
        if shapes.len() != self.thetas.len() {
            return Err(Error::invalid(alloc::format!(
                "expected {} gain matrices, found {}",
                shapes.len(),
                self.thetas.len()
            )));
        }
        for (layer, (theta, &expected)) in self.thetas.iter().zip(&shapes).enumerate() {
            if theta.shape() != expected {
                return Err(Error::LayerShape {
                    layer,
                    expected,
                    found: theta.shape(),
                });
            }
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.thetas.iter().map(|t| t.rows() * t.cols()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for theta in &self.thetas {
            for c in 0..theta.cols() {
                for r in 0..theta.rows() {
                    out.push(theta[(r, c)]);
                }
            }
        }
        out
    }

    pub fn from_flat(spec: &NetworkSpec, flat: &[f64]) -> Result<Self> {
        if flat.len() != spec.param_count() {
            return Err(Error::Shape {
                op: "NetworkGains::from_flat",
                left: (spec.param_count(), 1),
                right: (flat.len(), 1),
            });
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("NetworkGains::from_flat"));
        }
        let mut gains = NetworkGains::zeros(spec);
        let mut it = flat.iter();
        for theta in &mut gains.thetas {
            let (rows, cols) = theta.shape();
            for c in 0..cols {
                for r in 0..rows {
                    theta[(r, c)] = *it.next().unwrap();
                }
            }
        }
        Ok(gains)
    }

    pub fn is_finite(&self) -> bool {
        self.thetas.iter().all(Matrix::is_finite)
    }
}

/// Intermediates of one forward pass, kept for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `x_1 ..= x_{n+1}`.
    pub layer_inputs: Vec<Vec<f64>>,
    /// `z_i = Θ_iᵀ χ_i` for each neural layer.
    pub preactivations: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

pub fn neuron_eval(x: &[f64], theta: &[f64], a: Activation) -> Result<f64> {
    if theta.len() != x.len() + 1 {
        return Err(Error::Shape {
            op: "neuron_eval",
            left: (x.len() + 1, 1),
            right: (theta.len(), 1),
        });
    }
    Ok(a.eval(crate::tensor::dot(&augment(x), theta)))
}

/// Preactivations `Θᵀχ` of a layer, swept row by row over `Θ`.
fn preactivation(x: &[f64], theta: &Matrix) -> Vec<f64> {
    let width = theta.cols();
    let mut z = theta.row(x.len()).to_vec();
    for (r, &xr) in x.iter().enumerate() {
        if xr == 0.0 {
            continue;
        }
        for (zj, &t) in z.iter_mut().zip(theta.row(r)) {
            *zj += xr * t;
        }
    }
    debug_assert_eq!(z.len(), width);
    z
}

fn check_layer(op: &'static str, x: &[f64], theta: &Matrix) -> Result<()> {
    if theta.rows() != x.len() + 1 {
        return Err(Error::Shape {
            op,
            left: (x.len() + 1, theta.cols()),
            right: theta.shape(),
        });
    }
    Ok(())
}

pub fn layer_eval(x: &[f64], theta: &Matrix, a: Activation) -> Result<Vec<f64>> {
    check_layer("layer_eval", x, theta)?;
    Ok(preactivation(x, theta).into_iter().map(|z| a.eval(z)).collect())
}

pub(crate) fn layer_preactivation(x: &[f64], theta: &Matrix) -> Result<Vec<f64>> {
    check_layer("layer_preactivation", x, theta)?;
    Ok(preactivation(x, theta))
}

fn check_input(spec: &NetworkSpec, gains: &NetworkGains, x: &[f64]) -> Result<()> {
    if x.len() != spec.input_width {
        return Err(Error::Shape {
            op: "forward",
            left: (spec.input_width, 1),
            right: (x.len(), 1),
        });
    }
    gains.check(spec)
}

pub fn forward(spec: &NetworkSpec, gains: &NetworkGains, x: &[f64]) -> Result<ForwardTrace> {
    check_input(spec, gains, x)?;
    let n = spec.depth();
    let mut layer_inputs = Vec::with_capacity(n + 1);
    let mut preactivations = Vec::with_capacity(n);
    layer_inputs.push(x.to_vec());
    for (i, layer) in spec.layers.iter().enumerate() {
        let z = preactivation(&layer_inputs[i], &gains.thetas[i]);
        layer_inputs.push(z.iter().map(|&v| layer.activation.eval(v)).collect());
        preactivations.push(z);
    }
    let output = match spec.final_linear {
        Some(_) => gains.thetas[n].tr_mul_vec(&layer_inputs[n])?,
        None => layer_inputs[n].clone(),
    };
    Ok(ForwardTrace {
        layer_inputs,
        preactivations,
        output,
    })
}

/// Network output only, without keeping the trace.
pub fn predict(spec: &NetworkSpec, gains: &NetworkGains, x: &[f64]) -> Result<Vec<f64>> {
    check_input(spec, gains, x)?;
    Ok(predict_unchecked(spec, gains, x))
}

/// Shapes must already have been validated.
pub(crate) fn predict_unchecked(spec: &NetworkSpec, gains: &NetworkGains, x: &[f64]) -> Vec<f64> {
    let n = spec.depth();
    let mut h: Vec<f64> = x.to_vec();
    for (i, layer) in spec.layers.iter().enumerate() {
        let mut z = preactivation(&h, &gains.thetas[i]);
        for v in &mut z {
            *v = layer.activation.eval(*v);
        }
        h = z;
    }
    match spec.final_linear {
        Some(_) => gains.thetas[n].tr_mul_vec(&h).expect("validated shapes"),
        None => h,
    }
}

//! Cost, closed-form parameter Jacobians, and the finite-difference oracle.
//!
//! For `i ≤ n` the Jacobian of the output with respect to neuron gain `θ_ij` is
//!
//! ```text
//! ∂y/∂θ_ij = Θ_{n+1}ᵀ · Λ_n Θ_nᵀ 𝒥 · … · Λ_{i+1} Θ_{i+1}ᵀ 𝒥 · σ_z(z_ij) e_j χ_iᵀ
//! ```
//!
//! with the factors multiplied left to right from the last layer down, and for
//! the final linear map `∂y/∂θ_{n+1,j} = e_j x_{n+1}ᵀ`. When the network has no
//! final map `Θ_{n+1}` is the identity.
//!
//! [`network_param_gradient`] assembles those products literally from
//! [`layer_jacobian_input`] and [`layer_jacobian_theta`]. The trainers use
//! [`backprop_rows`], which contracts the same chain against a row seed first
//! so nothing larger than `k x ℓ_i` is ever formed.

use alloc::vec;
use alloc::vec::Vec;

use crate::network::{self, Activation, ForwardTrace, NetworkGains, NetworkSpec};
use crate::tensor::{augment, diag, selector, Matrix};
use crate::{Dataset, Error, Result};

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-6;

/// Denominator floor for [`relative_error`]; below it the comparison is
/// effectively absolute.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cost {
    pub value: f64,
    /// Set when the dataset had no samples; `value` is then 0.
    pub empty_dataset: bool,
}

fn check_dataset(spec: &NetworkSpec, gains: &NetworkGains, data: &Dataset) -> Result<()> {
    gains.check(spec)?;
    if data.is_empty() {
        return Ok(());
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

/// `J = Σ_m ‖y^m − NN(x^m)‖_p^p`.
pub fn cost(spec: &NetworkSpec, gains: &NetworkGains, data: &Dataset, p: u32) -> Result<Cost> {
    if p == 0 {
        return Err(Error::invalid("cost exponent must be a positive integer"));
    }
    check_dataset(spec, gains, data)?;
    if data.is_empty() {
        return Ok(Cost {
            value: 0.0,
            empty_dataset: true,
        });
    }
    let p = p as i32;
    let value = data
        .iter()
        .map(|s| {
            let y = network::predict_unchecked(spec, gains, &s.input);
            s.target
                .iter()
                .zip(&y)
                .map(|(t, v)| libm::pow((t - v).abs(), p as f64))
                .sum::<f64>()
        })
        .sum();
    Ok(Cost {
        value,
        empty_dataset: false,
    })
}

/// Sum of squared residuals; shapes must be validated by the caller.
pub(crate) fn sse_unchecked(spec: &NetworkSpec, gains: &NetworkGains, data: &Dataset) -> f64 {
    data.iter()
        .map(|s| {
            let y = network::predict_unchecked(spec, gains, &s.input);
            s.target.iter().zip(&y).map(|(t, v)| (t - v) * (t - v)).sum::<f64>()
        })
        .sum()
}

/// `p = 2` cost with shape checking, as used by the trainers.
pub fn squared_error(spec: &NetworkSpec, gains: &NetworkGains, data: &Dataset) -> Result<f64> {
    check_dataset(spec, gains, data)?;
    Ok(sse_unchecked(spec, gains, data))
}

/// `Λ(x, Θ) = diag(σ_z(z_1), …, σ_z(z_ℓ))` with `z_j = χᵀ Θ e_j`.
pub fn lambda_matrix(x: &[f64], theta: &Matrix, a: Activation) -> Result<Matrix> {
    let z = network::layer_preactivation(x, theta)?;
    Ok(diag(&z.iter().map(|&v| a.deriv(v)).collect::<Vec<_>>()))
}

/// `∂N/∂x = Λ(x, Θ) Θᵀ 𝒥_{l_x}`, an `ℓ x l_x` matrix.
pub fn layer_jacobian_input(x: &[f64], theta: &Matrix, a: Activation) -> Result<Matrix> {
    let lambda = lambda_matrix(x, theta, a)?;
    if x.is_empty() {
        return Ok(Matrix::zeros(theta.cols(), 0));
    }
    lambda.matmul(&theta.transpose())?.matmul(&selector(x.len())?)
}

/// `∂N/∂θ_j = σ_z(z_j) e_j χᵀ`, an `ℓ x (l_x+1)` matrix. `j` is zero-based.
pub fn layer_jacobian_theta(x: &[f64], z_j: f64, j: usize, a: Activation, width: usize) -> Result<Matrix> {
    if j >= width {
        return Err(Error::Index { index: j, width });
    }
    let chi = augment(x);
    let s = a.deriv(z_j);
    let mut m = Matrix::zeros(width, chi.len());
    for (c, v) in chi.iter().enumerate() {
        m[(j, c)] = s * v;
    }
    Ok(m)
}

/// `∂y/∂θ_ij` for every neuron gain of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient {
    /// `layers[i][j]` is `l_y x (l_{x_i}+1)`.
    pub layers: Vec<Vec<Matrix>>,
    /// Columns of the final linear map, each `l_y x l_{x_{n+1}}`. Empty when
    /// the network has no final map.
    pub final_map: Vec<Matrix>,
}

impl ParamGradient {
    /// Row `k` of the output Jacobian, in flattened parameter order.
    pub fn output_row(&self, k: usize) -> Vec<f64> {
        self.layers
            .iter()
            .flatten()
            .chain(&self.final_map)
            .flat_map(|m| m.row(k).to_vec())
            .collect()
    }
}

fn check_trace(spec: &NetworkSpec, trace: &ForwardTrace) -> Result<()> {
    let n = spec.depth();
    let ok = trace.layer_inputs.len() == n + 1
        && trace.preactivations.len() == n
        && trace.output.len() == spec.output_width()
        && (0..=n).all(|i| trace.layer_inputs[i].len() == spec.layer_input_width(i))
        && (0..n).all(|i| trace.preactivations[i].len() == spec.layers[i].width);
    if ok {
        Ok(())
    } else {
        Err(Error::invalid("forward trace does not match the network spec"))
    }
}

/// Backpropagation assembled from the per-layer Jacobians.
pub fn network_param_gradient(spec: &NetworkSpec, gains: &NetworkGains, trace: &ForwardTrace) -> Result<ParamGradient> {
    gains.check(spec)?;
    check_trace(spec, trace)?;
    let n = spec.depth();

    let final_map = match spec.final_linear {
        Some(ly) => {
            let x_last = &trace.layer_inputs[n];
            (0..ly)
                .map(|j| {
                    let mut m = Matrix::zeros(ly, x_last.len());
                    for (c, v) in x_last.iter().enumerate() {
                        m[(j, c)] = *v;
                    }
                    m
                })
                .collect()
        }
        None => Vec::new(),
    };

    // prefix = Θ_{n+1}ᵀ Π_{q=n}^{i+1} Λ_q Θ_qᵀ 𝒥, built from the output side.
    let mut prefix = match spec.final_linear {
        Some(_) => gains.thetas[n].transpose(),
        None => Matrix::identity(spec.layers[n - 1].width),
    };
    let mut layers = vec![Vec::new(); n];
    for i in (0..n).rev() {
        let layer = spec.layers[i];
        let x = &trace.layer_inputs[i];
        let z = &trace.preactivations[i];
        layers[i] = (0..layer.width)
            .map(|j| {
                let local = layer_jacobian_theta(x, z[j], j, layer.activation, layer.width)?;
                prefix.matmul(&local)
            })
            .collect::<Result<Vec<_>>>()?;
        if i > 0 {
            prefix = prefix.matmul(&layer_jacobian_input(x, &gains.thetas[i], layer.activation)?)?;
        }
    }
    Ok(ParamGradient { layers, final_map })
}

/// Contracts the output Jacobian against `seed` (`k x l_y`, row-major) and
/// accumulates `seedᵀ·∂y/∂θ` into `out`, a `k x P` row-major block with columns
/// in flattened parameter order.
pub fn backprop_rows(spec: &NetworkSpec, gains: &NetworkGains, trace: &ForwardTrace, seed: &Matrix, out: &mut [f64]) {
    let n = spec.depth();
    let k = seed.rows();
    let p = spec.param_count();
    debug_assert_eq!(seed.cols(), spec.output_width());
    debug_assert_eq!(out.len(), k * p);

    let mut offsets = Vec::with_capacity(n + 1);
    let mut acc = 0;
    for (r, c) in spec.gain_shapes() {
        offsets.push(acc);
        acc += r * c;
    }

    // m holds seed · Θ_{n+1}ᵀ · Π Λ_q Θ_qᵀ 𝒥, k x ℓ_i.
    let mut m = match spec.final_linear {
        Some(ly) => {
            let x_last = &trace.layer_inputs[n];
            let off = offsets[n];
            let lx = x_last.len();
            for row in 0..k {
                let base = row * p + off;
                for j in 0..ly {
                    let s = seed[(row, j)];
                    if s == 0.0 {
                        continue;
                    }
                    for (r, xv) in x_last.iter().enumerate() {
                        out[base + j * lx + r] += s * xv;
                    }
                }
            }
            // seed · Θ_{n+1}ᵀ
            let theta = &gains.thetas[n];
            let mut mm = Matrix::zeros(k, lx);
            for row in 0..k {
                for r in 0..lx {
                    mm[(row, r)] = crate::tensor::dot(seed.row(row), theta.row(r));
                }
            }
            mm
        }
        None => seed.clone(),
    };

    for i in (0..n).rev() {
        let layer = spec.layers[i];
        let chi_len = trace.layer_inputs[i].len() + 1;
        let x = &trace.layer_inputs[i];
        let theta = &gains.thetas[i];
        let off = offsets[i];
        // delta[row][j] = m[row][j] σ_z(z_ij)
        let mut delta = m;
        for (j, &z) in trace.preactivations[i].iter().enumerate() {
            let d = layer.activation.deriv(z);
            for row in 0..k {
                delta[(row, j)] *= d;
            }
        }
        for row in 0..k {
            let base = row * p + off;
            for j in 0..layer.width {
                let dj = delta[(row, j)];
                if dj == 0.0 {
                    continue;
                }
                let block = &mut out[base + j * chi_len..base + (j + 1) * chi_len];
                for (o, xv) in block.iter_mut().zip(x) {
                    *o += dj * xv;
                }
                block[chi_len - 1] += dj;
            }
        }
        if i == 0 {
            break;
        }
        // m ← delta · Θ_iᵀ 𝒥 (drop the bias row of Θ_i)
        let mut next = Matrix::zeros(k, x.len());
        for row in 0..k {
            for r in 0..x.len() {
                next[(row, r)] = crate::tensor::dot(delta.row(row), theta.row(r));
            }
        }
        m = next;
    }
}

/// `∂J/∂Θ_i` for every gain matrix, same shapes as [`NetworkGains`].
#[derive(Debug, Clone, PartialEq)]
pub struct CostGradient {
    pub thetas: Vec<Matrix>,
}

impl CostGradient {
    fn from_flat(spec: &NetworkSpec, flat: &[f64]) -> Self {
        let mut thetas: Vec<Matrix> = spec
            .gain_shapes()
            .into_iter()
            .map(|(r, c)| Matrix::zeros(r, c))
            .collect();
        let mut it = flat.iter();
        for theta in &mut thetas {
            let (rows, cols) = theta.shape();
            for c in 0..cols {
                for r in 0..rows {
                    theta[(r, c)] = *it.next().expect("flat length matches spec");
                }
            }
        }
        CostGradient { thetas }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for theta in &self.thetas {
            for c in 0..theta.cols() {
                for r in 0..theta.rows() {
                    out.push(theta[(r, c)]);
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.thetas.iter().fold(0.0, |m, t| m.max(t.max_abs()))
    }
}

/// Cost gradient for `p = 2`:
/// `∂J/∂θ_ij = Σ_m −2 (y^m − NN(x^m))ᵀ ∂NN/∂θ_ij`, summed in sample order.
pub fn cost_gradient(spec: &NetworkSpec, gains: &NetworkGains, data: &Dataset) -> Result<CostGradient> {
    check_dataset(spec, gains, data)?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let p = spec.param_count();
    let ly = spec.output_width();
    let mut total = vec![0.0; p];
    let mut per_sample = vec![0.0; p];
    for s in data {
        let trace = network::forward(spec, gains, &s.input)?;
        let seed: Vec<f64> = s
            .target
            .iter()
            .zip(&trace.output)
            .map(|(t, y)| -2.0 * (t - y))
            .collect();
        let seed = Matrix::from_raw(1, ly, seed);
        per_sample.iter_mut().for_each(|v| *v = 0.0);
        backprop_rows(spec, gains, &trace, &seed, &mut per_sample);
        for (t, v) in total.iter_mut().zip(&per_sample) {
            *t += v;
        }
    }
    Ok(CostGradient::from_flat(spec, &total))
}

/// Central differences `(J(θ+h) − J(θ−h)) / 2h` of the `p = 2` cost, one gain
/// scalar at a time.
pub fn finite_difference_gradient(
    spec: &NetworkSpec,
    gains: &NetworkGains,
    data: &Dataset,
    h: f64,
) -> Result<CostGradient> {
    if !(h > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    check_dataset(spec, gains, data)?;
    let mut probe = gains.clone();
    let mut flat = Vec::with_capacity(spec.param_count());
    for t in 0..probe.thetas.len() {
        let (rows, cols) = probe.thetas[t].shape();
        for c in 0..cols {
            for r in 0..rows {
                let orig = probe.thetas[t][(r, c)];
                probe.thetas[t][(r, c)] = orig + h;
                let up = sse_unchecked(spec, &probe, data);
                probe.thetas[t][(r, c)] = orig - h;
                let down = sse_unchecked(spec, &probe, data);
                probe.thetas[t][(r, c)] = orig;
                flat.push((up - down) / (2.0 * h));
            }
        }
    }
    Ok(CostGradient::from_flat(spec, &flat))
}

/// `|a − b| / max(|a|, |b|, RELATIVE_ERROR_FLOOR)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_ERROR_FLOOR)
}

pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| relative_error(*x, *y)).fold(0.0, f64::max)
}

//! Dense feed-forward layers with an explicit forward cache and backprop.
//!
//! A layer computes `z = x·W + b`, `y = act(z)` on a batch `x` of shape
//! `(batch, in_dim)`. Weights are stored `in_dim × out_dim` so that the
//! weight gradient of a linear layer is `xᵀ·G`.

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::rng::SeededRng;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
    Sigmoid,
    /// Row-wise softmax, intended for the output layer only.
    Softmax,
}

impl Activation {
    fn forward(self, z: &Matrix) -> Matrix {
        match self {
            Activation::Relu => z.map(|v| v.max(0.0)),
            Activation::Identity => z.clone(),
            Activation::Sigmoid => z.map(sigmoid),
            Activation::Softmax => softmax_rows(z),
        }
    }

    /// Gradient w.r.t. the pre-activation given the gradient w.r.t. the output.
    fn backward(self, z: &Matrix, y: &Matrix, dy: &Matrix) -> Matrix {
        match self {
            Activation::Relu => {
                let mut dz = dy.clone();
                for (g, &zv) in dz.data_mut().iter_mut().zip(z.data()) {
                    if zv <= 0.0 {
                        *g = 0.0;
                    }
                }
                dz
            }
            Activation::Identity => dy.clone(),
            Activation::Sigmoid => {
                let mut dz = dy.clone();
                for (g, &s) in dz.data_mut().iter_mut().zip(y.data()) {
                    *g *= s * (1.0 - s);
                }
                dz
            }
            Activation::Softmax => {
                let mut dz = dy.clone();
                for r in 0..y.rows() {
                    let yr = y.row(r);
                    let inner: f64 = yr.iter().zip(dy.row(r)).map(|(a, b)| a * b).sum();
                    for (g, (&s, &d)) in dz.row_mut(r).iter_mut().zip(yr.iter().zip(dy.row(r))) {
                        *g = s * (d - inner);
                    }
                }
                dz
            }
        }
    }
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(z: &Matrix) -> Matrix {
    let mut out = z.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weight: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weight.cols() {
            return Err(Error::shape(
                "Layer::new",
                format!("bias length {} for out_dim {}", bias.len(), weight.cols()),
            ));
        }
        Ok(Self {
            weight,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Parameters of a feed-forward stack.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layers: Vec<Layer>,
}

impl MlpParams {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("an MLP needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::shape(
                    "MlpParams::new",
                    format!(
                        "layer {i} outputs {} but layer {} expects {}",
                        pair[0].out_dim(),
                        i + 1,
                        pair[1].in_dim()
                    ),
                ));
            }
        }
        Ok(Self { layers })
    }

    /// Random initialisation: He-uniform for ReLU layers, Glorot-uniform otherwise; zero biases.
    ///
    /// `dims` lists the widths from input to output, so `dims.len() == acts.len() + 1`.
    pub fn init(dims: &[usize], acts: &[Activation], rng: &mut SeededRng) -> Result<Self> {
        if dims.len() != acts.len() + 1 || acts.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} widths for {} activations",
                dims.len(),
                acts.len()
            )));
        }
        let mut layers = Vec::with_capacity(acts.len());
        for (w, &act) in dims.windows(2).zip(acts) {
            let (fan_in, fan_out) = (w[0], w[1]);
            if fan_in == 0 || fan_out == 0 {
                return Err(Error::InvalidArgument("layer widths must be positive".into()));
            }
            let limit = match act {
                Activation::Relu => (6.0 / fan_in as f64).sqrt(),
                _ => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            };
            let data = (0..fan_in * fan_out)
                .map(|_| rng.uniform_range(-limit, limit))
                .collect();
            layers.push(Layer::new(Matrix::new(fan_in, fan_out, data)?, vec![0.0; fan_out], act)?);
        }
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.data().len() + l.bias.len())
            .sum()
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weight.data());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::shape(
                "MlpParams::set_flat",
                format!("{} values for {} parameters", flat.len(), self.num_params()),
            ));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let n = l.weight.data().len();
            l.weight.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
            let b = l.bias.len();
            l.bias.copy_from_slice(&flat[off..off + b]);
            off += b;
        }
        Ok(())
    }
}

/// Activations recorded by [`mlp_forward`] for use in [`mlp_backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
}

impl ForwardCache {
    /// Pre-activation of layer `i`.
    pub fn pre_activation(&self, i: usize) -> &Matrix {
        &self.pre[i]
    }

    pub fn num_layers(&self) -> usize {
        self.pre.len()
    }
}

pub fn mlp_forward(params: &MlpParams, input: &Matrix) -> Result<(Matrix, ForwardCache)> {
    if input.cols() != params.in_dim() {
        return Err(Error::shape(
            "mlp_forward",
            format!(
                "input has {} columns, first layer expects {}",
                input.cols(),
                params.in_dim()
            ),
        ));
    }
    let n = params.layers.len();
    let mut cache = ForwardCache {
        inputs: Vec::with_capacity(n),
        pre: Vec::with_capacity(n),
        post: Vec::with_capacity(n),
    };
    let mut x = input.clone();
    for layer in &params.layers {
        let mut z = x.matmul(&layer.weight)?;
        z.add_row_broadcast(&layer.bias)?;
        let y = layer.activation.forward(&z);
        cache.inputs.push(x);
        cache.pre.push(z);
        cache.post.push(y.clone());
        x = y;
    }
    Ok((x, cache))
}

/// Forward pass without keeping the cache.
pub fn mlp_predict(params: &MlpParams, input: &Matrix) -> Result<Matrix> {
    mlp_forward(params, input).map(|(y, _)| y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

/// Gradients mirroring an [`MlpParams`], plus the gradient w.r.t. the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct GradBundle {
    pub layers: Vec<LayerGrad>,
    pub input: Option<Matrix>,
}

impl GradBundle {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weight: Matrix::zeros(l.weight.rows(), l.weight.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
            input: None,
        }
    }

    pub fn check_matches(&self, params: &MlpParams) -> Result<()> {
        let ok = self.layers.len() == params.layers.len()
            && self.layers.iter().zip(&params.layers).all(|(g, l)| {
                g.weight.shape() == l.weight.shape() && g.bias.len() == l.bias.len()
            });
        if ok {
            Ok(())
        } else {
            Err(Error::shape("GradBundle", "gradient shapes do not match parameters"))
        }
    }

    /// `self += other` over parameter gradients; input gradients are summed when both exist.
    pub fn accumulate(&mut self, other: &GradBundle) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::shape("GradBundle::accumulate", "layer count differs"));
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight.add_assign(&b.weight)?;
            if a.bias.len() != b.bias.len() {
                return Err(Error::shape("GradBundle::accumulate", "bias length differs"));
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
        match (&mut self.input, &other.input) {
            (Some(a), Some(b)) => a.add_assign(b)?,
            (None, Some(b)) => self.input = Some(b.clone()),
            _ => {}
        }
        Ok(())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weight.data());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Rebuilds a bundle shaped like `params` from flat values (same order as [`MlpParams::to_flat`]).
    pub fn from_flat(params: &MlpParams, flat: &[f64]) -> Result<Self> {
        let mut g = Self::zeros_like(params);
        if flat.len() != params.num_params() {
            return Err(Error::shape(
                "GradBundle::from_flat",
                format!("{} values for {} parameters", flat.len(), params.num_params()),
            ));
        }
        let mut off = 0;
        for l in &mut g.layers {
            let n = l.weight.data().len();
            l.weight.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
            let b = l.bias.len();
            l.bias.copy_from_slice(&flat[off..off + b]);
            off += b;
        }
        Ok(g)
    }
}

pub fn mlp_backward(params: &MlpParams, cache: &ForwardCache, upstream: &Matrix) -> Result<GradBundle> {
    let n = params.layers.len();
    if cache.num_layers() != n {
        return Err(Error::shape(
            "mlp_backward",
            format!("cache has {} layers, params have {n}", cache.num_layers()),
        ));
    }
    for (i, (l, z)) in params.layers.iter().zip(&cache.pre).enumerate() {
        if z.cols() != l.out_dim() || cache.inputs[i].cols() != l.in_dim() {
            return Err(Error::shape(
                "mlp_backward",
                format!("cache layer {i} does not match parameter shapes"),
            ));
        }
    }
    if upstream.shape() != cache.post[n - 1].shape() {
        return Err(Error::shape(
            "mlp_backward",
            format!(
                "upstream gradient {:?} vs output {:?}",
                upstream.shape(),
                cache.post[n - 1].shape()
            ),
        ));
    }
    let mut grads = Vec::with_capacity(n);
    let mut dy = upstream.clone();
    for i in (0..n).rev() {
        let layer = &params.layers[i];
        let dz = layer.activation.backward(&cache.pre[i], &cache.post[i], &dy);
        let dw = cache.inputs[i].t_matmul(&dz)?;
        let db = dz.col_sums();
        dy = dz.matmul_t(&layer.weight)?;
        grads.push(LayerGrad { weight: dw, bias: db });
    }
    grads.reverse();
    Ok(GradBundle {
        layers: grads,
        input: Some(dy),
    })
}

/// Gradient reversal: returns `−coeff · grad`.
///
/// Panics if `coeff` is negative.
pub fn grad_reverse(grad: &Matrix, coeff: f64) -> Matrix {
    assert!(coeff >= 0.0, "gradient reversal coefficient must be nonnegative, got {coeff}");
    grad.map(|g| -coeff * g)
}

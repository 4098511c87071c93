//! Dense feed-forward network used as an invariant kernel.
//!
//! Samples are stored as matrix columns: a batch of `P` inputs is an
//! `n_in × P` matrix and layer `l` computes `Z = W A + b 1ᵀ`. Hidden layers
//! apply the activation; the output layer is linear. Inputs are first
//! standardized by a fixed affine map stored with the model.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    /// `x · sigmoid(x)`.
    Swish,
    Identity,
}

impl Activation {
    pub fn tag(self) -> &'static str {
        match self {
            Activation::Swish => "swish",
            Activation::Identity => "identity",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "swish" => Some(Activation::Swish),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Swish => x * sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Value and derivative at `x`.
    fn apply_with_derivative(self, x: f64) -> (f64, f64) {
        match self {
            Activation::Swish => {
                let s = sigmoid(x);
                (x * s, s * (1.0 + x * (1.0 - s)))
            }
            Activation::Identity => (x, 1.0),
        }
    }
}

fn swish_slope(x: f64, y: f64) -> f64 {
    let s = y / x;
    s * (1.0 + x * (1.0 - s))
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-input affine standardization `z = (x - shift) / scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalization {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self {
            shift: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Mean and standard deviation of each row of `inputs` (one column per
    /// sample). Rows with vanishing spread keep unit scale.
    pub fn fit(inputs: &DMatrix<f64>) -> Self {
        let n = inputs.ncols().max(1) as f64;
        let mut shift = Vec::with_capacity(inputs.nrows());
        let mut scale = Vec::with_capacity(inputs.nrows());
        for row in inputs.row_iter() {
            let mean = row.sum() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            shift.push(mean);
            scale.push(if sd > 1e-12 { sd } else { 1.0 });
        }
        Self { shift, scale }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    fn apply(&self, inputs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = inputs.clone();
        for (r, mut row) in z.row_iter_mut().enumerate() {
            let (s, k) = (self.shift[r], self.scale[r]);
            row.apply(|v| *v = (*v - s) / k);
        }
        z
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `out × in`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Layer {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            weights: DMatrix::zeros(n_out, n_in),
            bias: DVector::zeros(n_out),
        }
    }

    pub fn n_in(&self) -> usize {
        self.weights.ncols()
    }

    pub fn n_out(&self) -> usize {
        self.weights.nrows()
    }

    fn forward(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = &self.weights * a;
        for mut col in z.column_iter_mut() {
            col += &self.bias;
        }
        z
    }
}

/// Kernel `k(p₁, p₂) = MLP(invariants(p₁, p₂))` with a `c_out × c_in`
/// matrix output, flattened row-major into the last layer.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpKernel {
    pub layers: Vec<Layer>,
    pub activation: Activation,
    pub normalization: Normalization,
    pub c_out: usize,
    pub c_in: usize,
}

/// Parameter gradients, shaped like the layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }
}

/// Intermediate values of a batched forward pass.
#[derive(Debug)]
pub struct ForwardCache {
    /// `inputs[l]` feeds layer `l`; the first entry is the standardized input.
    inputs: Vec<DMatrix<f64>>,
    /// Activation derivatives at each hidden layer's pre-activations.
    slopes: Vec<DMatrix<f64>>,
    pub output: DMatrix<f64>,
}

impl MlpKernel {
    /// Zero-initialized network with the given layer sizes
    /// (`[n_in, hidden…, c_out·c_in]`).
    pub fn zeros(sizes: &[usize], c_out: usize, c_in: usize) -> Result<Self> {
        validate_sizes(sizes, c_out, c_in)?;
        let layers = sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(Self {
            layers,
            activation: Activation::Swish,
            normalization: Normalization::identity(sizes[0]),
            c_out,
            c_in,
        })
    }

    /// Weights drawn from `N(0, 1/fan_in)`, zero biases.
    pub fn random<R: Rng + ?Sized>(
        sizes: &[usize],
        c_out: usize,
        c_in: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut k = Self::zeros(sizes, c_out, c_in)?;
        for layer in &mut k.layers {
            let normal = Normal::new(0.0, (1.0 / layer.n_in() as f64).sqrt())
                .expect("positive standard deviation");
            layer.weights.apply(|w| *w = normal.sample(rng));
        }
        Ok(k)
    }

    pub fn from_layers(
        layers: Vec<Layer>,
        activation: Activation,
        normalization: Normalization,
        c_out: usize,
        c_in: usize,
    ) -> Result<Self> {
        let mut sizes = vec![layers.first().map_or(0, Layer::n_in)];
        for (l, layer) in layers.iter().enumerate() {
            if layer.n_in() != sizes[l] {
                return Err(Error::DimensionMismatch {
                    expected: sizes[l],
                    got: layer.n_in(),
                });
            }
            if layer.bias.len() != layer.n_out() {
                return Err(Error::DimensionMismatch {
                    expected: layer.n_out(),
                    got: layer.bias.len(),
                });
            }
            sizes.push(layer.n_out());
        }
        validate_sizes(&sizes, c_out, c_in)?;
        if normalization.dim() != sizes[0] || normalization.scale.len() != sizes[0] {
            return Err(Error::DimensionMismatch {
                expected: sizes[0],
                got: normalization.dim(),
            });
        }
        let k = Self {
            layers,
            activation,
            normalization,
            c_out,
            c_in,
        };
        if !k.parameters().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { what: "kernel parameters" });
        }
        Ok(k)
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(Layer::n_out));
        sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in()
    }

    pub fn output_dim(&self) -> usize {
        self.c_out * self.c_in
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Trainable parameters: per layer, weights row-major then bias.
    pub fn parameters(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_parameters() {
            return Err(Error::DimensionMismatch {
                expected: self.num_parameters(),
                got: params.len(),
            });
        }
        let mut it = params.iter().copied();
        for layer in &mut self.layers {
            for r in 0..layer.n_out() {
                for c in 0..layer.n_in() {
                    layer.weights[(r, c)] = it.next().unwrap();
                }
            }
            for b in layer.bias.iter_mut() {
                *b = it.next().unwrap();
            }
        }
        Ok(())
    }

    /// Evaluates the kernel on one invariant vector; the result is
    /// `c_out × c_in`.
    pub fn eval(&self, invariants: &[f64]) -> Result<DMatrix<f64>> {
        if invariants.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: invariants.len(),
            });
        }
        let x = DMatrix::from_column_slice(invariants.len(), 1, invariants);
        let out = self.forward(&x);
        Ok(DMatrix::from_row_slice(self.c_out, self.c_in, out.as_slice()))
    }

    /// Batched evaluation; `inputs` is `n_in × P`, the result
    /// `c_out·c_in × P`.
    pub fn forward(&self, inputs: &DMatrix<f64>) -> DMatrix<f64> {
        self.forward_cached(inputs).output
    }

    pub fn forward_cached(&self, inputs: &DMatrix<f64>) -> ForwardCache {
        assert_eq!(inputs.nrows(), self.input_dim(), "input dimension");
        let last = self.layers.len() - 1;
        let mut a = self.normalization.apply(inputs);
        let mut cache_inputs = Vec::with_capacity(self.layers.len());
        let mut slopes = Vec::with_capacity(last);
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&a);
            cache_inputs.push(a);
            if l == last {
                return ForwardCache {
                    inputs: cache_inputs,
                    slopes,
                    output: z,
                };
            }
            let act = self.activation;
            let mut slope = z;
            a = slope.map(|v| act.apply(v));
            if act == Activation::Swish {
                slope.zip_apply(&a, |v, y| {
                    // swish'(x) = σ(x)(1 + x(1 - σ(x))) with σ(x) = swish(x)/x
                    *v = if v.abs() > 1e-3 { swish_slope(*v, y) } else { act.apply_with_derivative(*v).1 }
                });
            } else {
                slope.apply(|v| *v = act.apply_with_derivative(*v).1);
            }
            slopes.push(slope);
        }
        unreachable!("network has at least one layer")
    }

    /// Backpropagates `grad_output` (same shape as the cached output) to the
    /// parameters.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &DMatrix<f64>) -> Gradients {
        let mut delta = grad_output.clone();
        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let a = &cache.inputs[l];
            let weights = &delta * a.transpose();
            let bias = DVector::from_iterator(delta.nrows(), delta.row_iter().map(|r| r.sum()));
            grads.push(Layer { weights, bias });
            if l > 0 {
                let mut back = layer.weights.transpose() * &delta;
                back.component_mul_assign(&cache.slopes[l - 1]);
                delta = back;
            }
        }
        grads.reverse();
        Gradients { layers: grads }
    }

    /// `self.layers -= lr · step`, layerwise.
    pub fn apply_update(&mut self, step: &Gradients, lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&step.layers) {
            layer.weights.zip_apply(&g.weights, |w, d| *w -= lr * d);
            layer.bias.zip_apply(&g.bias, |b, d| *b -= lr * d);
        }
    }
}

fn validate_sizes(sizes: &[usize], c_out: usize, c_in: usize) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::InvalidConfig(format!(
            "layer sizes {sizes:?} need at least two positive entries"
        )));
    }
    let out = *sizes.last().unwrap();
    if out != c_out * c_in {
        return Err(Error::DimensionMismatch {
            expected: c_out * c_in,
            got: out,
        });
    }
    Ok(())
}

fn flatten_layers(layers: &[Layer]) -> Vec<f64> {
    let mut out = Vec::new();
    for layer in layers {
        for r in 0..layer.n_out() {
            out.extend(layer.weights.row(r).iter());
        }
        out.extend(layer.bias.iter());
    }
    out
}

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::distributions::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Negative-side slope of the hidden leaky ReLU.
pub const LEAKY_SLOPE: f64 = 0.01;

/// Hidden-layer nonlinearity. The output layer is always linear.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    LeakyRelu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if z > 0.0 {
                    z
                } else {
                    LEAKY_SLOPE * z
                }
            }
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation.
    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

/// One affine layer. `weights` has shape `(out, in)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

/// Parameter-shaped buffers: gradients, or optimizer moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            biases: net.layers.iter().map(|l| Array1::zeros(l.biases.raw_dim())).collect(),
        }
    }

    /// Flattened view in layer order, weights before biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter().copied());
            out.extend(b.iter().copied());
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Intermediate values kept by [`DenseNet::forward_cached`] for backprop.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// Input to each layer, `(batch, layer_sizes[k])`.
    inputs: Vec<Array2<f64>>,
    /// Pre-activations of hidden layers.
    pre_activations: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseNet {
    layer_sizes: Vec<usize>,
    layers: Vec<Layer>,
    activation: Activation,
}

fn validate_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::invalid("a network needs at least an input and an output layer"));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::invalid("layer sizes must be positive"));
    }
    Ok(())
}

impl DenseNet {
    /// Glorot-uniform weights, zero biases, seeded.
    pub fn new(layer_sizes: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let mut rng = rng::rng_for(seed, rng::stream::INIT, 0);
        let layers = layer_sizes
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound);
                let weights = Array2::from_shape_simple_fn((fan_out, fan_in), || dist.sample(&mut rng));
                Layer {
                    weights,
                    biases: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(DenseNet {
            layer_sizes: layer_sizes.to_vec(),
            layers,
            activation,
        })
    }

    pub fn zeros(layer_sizes: &[usize], activation: Activation) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let layers = layer_sizes
            .windows(2)
            .map(|pair| Layer {
                weights: Array2::zeros((pair[1], pair[0])),
                biases: Array1::zeros(pair[1]),
            })
            .collect();
        Ok(DenseNet {
            layer_sizes: layer_sizes.to_vec(),
            layers,
            activation,
        })
    }

    /// Builds a network from explicit parameters, checking every shape.
    pub fn from_layers(layers: Vec<Layer>, activation: Activation) -> Result<Self> {
        let first = layers.first().ok_or(Error::Empty("layers"))?;
        let mut layer_sizes = vec![first.weights.ncols()];
        for layer in &layers {
            let expected_in = *layer_sizes.last().unwrap();
            if layer.weights.ncols() != expected_in {
                return Err(Error::shape("layer fan-in", expected_in, layer.weights.ncols()));
            }
            if layer.biases.len() != layer.weights.nrows() {
                return Err(Error::shape("bias length", layer.weights.nrows(), layer.biases.len()));
            }
            if !layer.weights.iter().chain(layer.biases.iter()).all(|v| v.is_finite()) {
                return Err(Error::NonFinite("network parameters"));
            }
            layer_sizes.push(layer.weights.nrows());
        }
        validate_sizes(&layer_sizes)?;
        Ok(DenseNet {
            layer_sizes,
            layers,
            activation,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// All parameters in layer order, weights (row-major) before biases.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.weights.iter().copied());
            out.extend(l.biases.iter().copied());
        }
        out
    }

    /// Mutable access to the `index`-th parameter in [`flat_params`](Self::flat_params) order.
    pub fn param_mut(&mut self, mut index: usize) -> Option<&mut f64> {
        for l in &mut self.layers {
            let nw = l.weights.len();
            if index < nw {
                return l.weights.as_slice_mut().map(|s| &mut s[index]);
            }
            index -= nw;
            let nb = l.biases.len();
            if index < nb {
                return Some(&mut l.biases[index]);
            }
            index -= nb;
        }
        None
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::shape("network input", self.input_dim(), x.len()));
        }
        let mut a = Array1::from(x.to_vec());
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weights.dot(&a);
            z += &layer.biases;
            if k < last {
                z.mapv_inplace(|v| self.activation.apply(v));
            }
            a = z;
        }
        Ok(a.to_vec())
    }

    /// Row-wise forward pass over a `(batch, input_dim)` matrix.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape("network input", self.input_dim(), x.ncols()));
        }
        let last = self.layers.len() - 1;
        let mut a = x.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weights.t());
            z += &layer.biases;
            if k < last {
                z.mapv_inplace(|v| self.activation.apply(v));
            }
            a = z;
        }
        Ok(a)
    }

    pub fn forward_cached(&self, x: ArrayView2<'_, f64>) -> Result<ForwardCache> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape("network input", self.input_dim(), x.ncols()));
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(last);
        let mut a = x.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weights.t());
            z += &layer.biases;
            inputs.push(a);
            if k < last {
                let act = self.activation;
                a = z.mapv(|v| act.apply(v));
                pre_activations.push(z);
            } else {
                a = z;
            }
        }
        Ok(ForwardCache {
            inputs,
            pre_activations,
            output: a,
        })
    }

    /// Gradients of `sum_rows <upstream_row, output_row>` with respect to every
    /// parameter, i.e. batch-summed backprop of `upstream = dL/d(output)`.
    pub fn backward_cached(&self, cache: &ForwardCache, upstream: ArrayView2<'_, f64>) -> Result<Gradients> {
        if upstream.dim() != cache.output.dim() {
            return Err(Error::shape(
                "upstream gradient",
                cache.output.len(),
                upstream.len(),
            ));
        }
        let n = self.layers.len();
        let mut dw = Vec::with_capacity(n);
        let mut db = Vec::with_capacity(n);
        let mut delta = upstream.to_owned();
        for k in (0..n).rev() {
            let layer = &self.layers[k];
            dw.push(delta.t().dot(&cache.inputs[k]));
            db.push(delta.sum_axis(Axis(0)));
            if k > 0 {
                let mut prev = delta.dot(&layer.weights);
                let act = self.activation;
                Zip::from(&mut prev)
                    .and(&cache.pre_activations[k - 1])
                    .for_each(|d, &z| *d *= act.derivative(z));
                delta = prev;
            }
        }
        dw.reverse();
        db.reverse();
        Ok(Gradients {
            weights: dw,
            biases: db,
        })
    }

    /// Single-sample backprop.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<Gradients> {
        if upstream.len() != self.output_dim() {
            return Err(Error::shape("upstream gradient", self.output_dim(), upstream.len()));
        }
        let xs = ArrayView2::from_shape((1, x.len()), x).map_err(|_| Error::Empty("input"))?;
        let cache = self.forward_cached(xs)?;
        let up = ArrayView2::from_shape((1, upstream.len()), upstream).unwrap();
        self.backward_cached(&cache, up)
    }
}

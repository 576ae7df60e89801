//! Feed-forward network with hand-written reverse and forward mode derivatives.
//!
//! All parameters live in one flat vector so optimizers, conjugate gradient and
//! finite-difference checks can treat them as a plain `&[f64]`. Layer `l` stores its
//! weight matrix row-major as `fan_in x fan_out`, followed by its bias.

use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub output_dim: usize,
}

impl NetworkSpec {
    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = self.input_dim;
        for &h in &self.hidden {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, self.output_dim));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    weight: usize,
    bias: usize,
}

#[derive(Debug, Clone)]
pub struct Mlp {
    spec: NetworkSpec,
    layers: Vec<Layer>,
    params: Vec<f64>,
}

/// Activations kept from a forward pass: the input, every hidden output and the
/// final linear output.
#[derive(Debug, Clone)]
pub struct Forward {
    acts: Vec<Array2<f64>>,
}

impl Forward {
    pub fn output(&self) -> &Array2<f64> {
        self.acts.last().expect("forward pass has an output")
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases; the output layer is scaled by `output_gain`.
    pub fn new<R: Rng + ?Sized>(spec: NetworkSpec, output_gain: f64, rng: &mut R) -> Self {
        let mut layers = Vec::new();
        let mut offset = 0;
        for (fan_in, fan_out) in spec.layer_dims() {
            layers.push(Layer {
                fan_in,
                fan_out,
                weight: offset,
                bias: offset + fan_in * fan_out,
            });
            offset += fan_in * fan_out + fan_out;
        }
        let mut params = vec![0.0; offset];
        let last = layers.len() - 1;
        for (l, layer) in layers.iter().enumerate() {
            let limit = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
            let gain = if l == last { output_gain } else { 1.0 };
            for w in &mut params[layer.weight..layer.bias] {
                *w = gain * rng.random_range(-limit..limit);
            }
        }
        Self {
            spec,
            layers,
            params,
        }
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) {
        self.params.copy_from_slice(params);
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    /// Multiplies the output-layer weights feeding columns `start..end` by `factor`.
    pub fn scale_output_columns(&mut self, start: usize, end: usize, factor: f64) {
        let layer = *self.layers.last().expect("network has an output layer");
        for i in 0..layer.fan_in {
            let row = layer.weight + i * layer.fan_out;
            for w in &mut self.params[row + start..row + end] {
                *w *= factor;
            }
        }
    }

    fn weight(&self, layer: &Layer) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape(
            (layer.fan_in, layer.fan_out),
            &self.params[layer.weight..layer.bias],
        )
        .expect("weight block matches layer shape")
    }

    fn bias(&self, layer: &Layer) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.params[layer.bias..layer.bias + layer.fan_out])
    }

    pub fn forward(&self, input: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut x = input.to_owned();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = x.dot(&self.weight(layer));
            z += &self.bias(layer);
            if l != last {
                self.spec.activation.apply(&mut z);
            }
            x = z;
        }
        x
    }

    pub fn forward_cached(&self, input: ArrayView2<'_, f64>) -> Forward {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_owned());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = acts[l].dot(&self.weight(layer));
            z += &self.bias(layer);
            if l != last {
                self.spec.activation.apply(&mut z);
            }
            acts.push(z);
        }
        Forward { acts }
    }

    /// Gradient of a scalar loss with respect to all parameters, given the gradient of
    /// the loss with respect to the batch output.
    pub fn backward(&self, fwd: &Forward, d_output: ArrayView2<'_, f64>) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let mut delta = d_output.to_owned();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let gw = fwd.acts[l].t().dot(&delta);
            grad[layer.weight..layer.bias]
                .iter_mut()
                .zip(gw.iter())
                .for_each(|(g, v)| *g = *v);
            let gb = delta.sum_axis(Axis(0));
            grad[layer.bias..layer.bias + layer.fan_out]
                .iter_mut()
                .zip(gb.iter())
                .for_each(|(g, v)| *g = *v);
            if l > 0 {
                let mut next = delta.dot(&self.weight(layer).t());
                let act = self.spec.activation;
                next.zip_mut_with(&fwd.acts[l], |d, &a| *d *= act.derivative(a));
                delta = next;
            }
        }
        grad
    }

    /// Directional derivative of the batch output along `direction` in parameter space.
    pub fn jvp(&self, fwd: &Forward, direction: &[f64]) -> Array2<f64> {
        let batch = fwd.acts[0].nrows();
        let mut d_act: Option<Array2<f64>> = None;
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let dw = ArrayView2::from_shape(
                (layer.fan_in, layer.fan_out),
                &direction[layer.weight..layer.bias],
            )
            .expect("direction matches layer shape");
            let db = ArrayView1::from(&direction[layer.bias..layer.bias + layer.fan_out]);
            let mut dz = fwd.acts[l].dot(&dw);
            dz += &db;
            if let Some(da) = &d_act {
                dz += &da.dot(&self.weight(layer));
            }
            if l != last {
                let act = self.spec.activation;
                dz.zip_mut_with(&fwd.acts[l + 1], |d, &a| *d *= act.derivative(a));
            }
            d_act = Some(dz);
        }
        let out = d_act.expect("network has at least one layer");
        debug_assert_eq!(out.nrows(), batch);
        out
    }
}

/// Stacks equal-length rows into a matrix.
pub fn stack_rows<'a, I>(rows: I, width: usize) -> Array2<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut data = Vec::new();
    let mut n = 0;
    for r in rows {
        debug_assert_eq!(r.len(), width);
        data.extend_from_slice(r);
        n += 1;
    }
    Array2::from_shape_vec((n, width), data).expect("rows share one width")
}

/// Selects columns `range` of a batch output.
pub fn columns(m: &Array2<f64>, start: usize, end: usize) -> ArrayView2<'_, f64> {
    m.slice(s![.., start..end])
}

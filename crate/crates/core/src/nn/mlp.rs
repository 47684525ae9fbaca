use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{NnError, Result};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply<F: Scalar>(self, z: F) -> F {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(F::zero()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    fn grad_from_output<F: Scalar>(self, y: F) -> F {
        match self {
            Activation::Tanh => F::one() - y * y,
            Activation::Relu => {
                if y > F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Activation::Identity => F::one(),
        }
    }
}

/// Dense multilayer perceptron with all parameters in one flat vector.
///
/// Layer `l` maps `sizes[l]` inputs to `sizes[l+1]` outputs. Its block in
/// `params` is the weight matrix stored input-major (`w[k * out + o]` connects
/// input `k` to output `o`) followed by the `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<F> {
    sizes: Vec<usize>,
    activations: Vec<Activation>,
    params: Vec<F>,
}

/// Gradient of a scalar objective with respect to every parameter of an
/// [`Mlp`], in the same flat layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet<F> {
    pub values: Vec<F>,
}

impl<F: Scalar> GradientSet<F> {
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![F::zero(); n],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == F::zero())
    }
}

/// Activations recorded by [`Mlp::forward_batch`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace<F> {
    batch: usize,
    /// `layers[0]` is the input; `layers[l+1]` the output of layer `l`.
    layers: Vec<Vec<F>>,
}

impl<F: Scalar> ForwardTrace<F> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Row-major `batch x out` network outputs.
    pub fn output(&self) -> &[F] {
        self.layers.last().expect("trace has layers")
    }
}

impl<F: Scalar> Mlp<F> {
    /// All-zero network.
    pub fn zeros(sizes: &[usize], activations: &[Activation]) -> Result<Self> {
        if sizes.len() < 2 || activations.len() != sizes.len() - 1 {
            return Err(NnError::Shape(format!(
                "{} sizes need {} activations, got {}",
                sizes.len(),
                sizes.len().saturating_sub(1),
                activations.len()
            )));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(NnError::Shape("layer widths must be positive".into()));
        }
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Self {
            sizes: sizes.to_vec(),
            activations: activations.to_vec(),
            params: vec![F::zero(); n],
        })
    }

    /// Weights and biases uniform in `+-1/sqrt(fan_in)`.
    pub fn init_uniform<R: Rng + ?Sized>(
        sizes: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(sizes, activations)?;
        let mut offset = 0;
        for w in sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            let len = w[0] * w[1] + w[1];
            for p in &mut net.params[offset..offset + len] {
                *p = F::of(rng.random_range(-bound..bound));
            }
            offset += len;
        }
        Ok(net)
    }

    /// `input -> 64 -> 64 -> output`, tanh hidden, tanh-squashed output.
    pub fn actor<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Result<Self> {
        Self::init_uniform(
            &[input, 64, 64, output],
            &[Activation::Tanh, Activation::Tanh, Activation::Tanh],
            rng,
        )
    }

    /// `input -> 128 -> 128 -> 1`, relu hidden, identity output.
    pub fn critic<R: Rng + ?Sized>(input: usize, rng: &mut R) -> Result<Self> {
        Self::init_uniform(
            &[input, 128, 128, 1],
            &[Activation::Relu, Activation::Relu, Activation::Identity],
            rng,
        )
    }

    pub fn from_parts(sizes: Vec<usize>, activations: Vec<Activation>, params: Vec<F>) -> Result<Self> {
        let mut net = Self::zeros(&sizes, &activations)?;
        if params.len() != net.params.len() {
            return Err(NnError::Shape(format!(
                "expected {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("sizes nonempty")
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[F] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Weight from input `k` to output `o` of layer `layer`.
    pub fn weight(&self, layer: usize, k: usize, o: usize) -> F {
        let (off, _, out) = self.layer_span(layer);
        self.params[off + k * out + o]
    }

    pub fn set_weight(&mut self, layer: usize, k: usize, o: usize, v: F) {
        let (off, _, out) = self.layer_span(layer);
        self.params[off + k * out + o] = v;
    }

    pub fn bias(&self, layer: usize, o: usize) -> F {
        let (off, inp, out) = self.layer_span(layer);
        self.params[off + inp * out + o]
    }

    pub fn set_bias(&mut self, layer: usize, o: usize, v: F) {
        let (off, inp, out) = self.layer_span(layer);
        self.params[off + inp * out + o] = v;
    }

    fn layer_span(&self, layer: usize) -> (usize, usize, usize) {
        let off = self.sizes[..layer + 1]
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum();
        (off, self.sizes[layer], self.sizes[layer + 1])
    }

    pub fn forward(&self, x: &[F]) -> Vec<F> {
        self.forward_batch(x, 1).layers.pop().expect("output layer")
    }

    /// Forward pass over `batch` row-major inputs.
    pub fn forward_batch(&self, xs: &[F], batch: usize) -> ForwardTrace<F> {
        assert_eq!(
            xs.len(),
            batch * self.input_dim(),
            "input length must be batch * input_dim"
        );
        let mut layers = Vec::with_capacity(self.sizes.len());
        layers.push(xs.to_vec());
        let mut off = 0;
        for (l, act) in self.activations.iter().enumerate() {
            let (inp, out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + inp * out];
            let b = &self.params[off + inp * out..off + inp * out + out];
            let x = &layers[l];
            let mut z = vec![F::zero(); batch * out];
            for s in 0..batch {
                let row = &mut z[s * out..(s + 1) * out];
                row.copy_from_slice(b);
                for (k, &xv) in x[s * inp..(s + 1) * inp].iter().enumerate() {
                    for (r, &wv) in row.iter_mut().zip(&w[k * out..(k + 1) * out]) {
                        *r = *r + xv * wv;
                    }
                }
                for r in row.iter_mut() {
                    *r = act.apply(*r);
                }
            }
            layers.push(z);
            off += inp * out + out;
        }
        ForwardTrace { batch, layers }
    }

    /// Reverse-mode gradients of `sum_s upstream_s . f(x_s)`.
    ///
    /// Returns the parameter gradient (summed over the batch; `None` when
    /// `param_grads` is false) and the row-major input gradient.
    pub fn backward_batch(
        &self,
        trace: &ForwardTrace<F>,
        upstream: &[F],
        param_grads: bool,
    ) -> (Option<GradientSet<F>>, Vec<F>) {
        let batch = trace.batch;
        assert_eq!(upstream.len(), batch * self.output_dim());
        let mut grads = param_grads.then(|| GradientSet::zeros(self.params.len()));
        let mut offsets = Vec::with_capacity(self.activations.len());
        let mut off = 0;
        for w in self.sizes.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }

        let mut delta = upstream.to_vec();
        for l in (0..self.activations.len()).rev() {
            let (inp, out) = (self.sizes[l], self.sizes[l + 1]);
            let y = &trace.layers[l + 1];
            let act = self.activations[l];
            for (d, &yv) in delta.iter_mut().zip(y) {
                *d = *d * act.grad_from_output(yv);
            }
            let x = &trace.layers[l];
            let off = offsets[l];
            if let Some(g) = grads.as_mut() {
                let (gw, gb) = g.values[off..off + inp * out + out].split_at_mut(inp * out);
                for s in 0..batch {
                    let drow = &delta[s * out..(s + 1) * out];
                    for (gbv, &dv) in gb.iter_mut().zip(drow) {
                        *gbv = *gbv + dv;
                    }
                    for (k, &xv) in x[s * inp..(s + 1) * inp].iter().enumerate() {
                        for (gwv, &dv) in gw[k * out..(k + 1) * out].iter_mut().zip(drow) {
                            *gwv = *gwv + xv * dv;
                        }
                    }
                }
            }
            let w = &self.params[off..off + inp * out];
            let mut dx = vec![F::zero(); batch * inp];
            for s in 0..batch {
                let drow = &delta[s * out..(s + 1) * out];
                for k in 0..inp {
                    let wrow = &w[k * out..(k + 1) * out];
                    dx[s * inp + k] = dot(wrow, drow);
                }
            }
            delta = dx;
        }
        (grads, delta)
    }

    /// Single-sample convenience wrapper over [`Mlp::backward_batch`].
    pub fn backward(&self, x: &[F], upstream: &[F]) -> (GradientSet<F>, Vec<F>) {
        let trace = self.forward_batch(x, 1);
        let (g, dx) = self.backward_batch(&trace, upstream, true);
        (g.expect("param grads requested"), dx)
    }
}

#[inline]
fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    // four partial sums keep the dependency chain short
    let mut acc = [F::zero(); 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] = acc[0] + a[i] * b[i];
        acc[1] = acc[1] + a[i + 1] * b[i + 1];
        acc[2] = acc[2] + a[i + 2] * b[i + 2];
        acc[3] = acc[3] + a[i + 3] * b[i + 3];
    }
    let mut tail = F::zero();
    for i in chunks * 4..a.len() {
        tail = tail + a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

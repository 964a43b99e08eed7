use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{axpy, dot, Matrix, Scalar};
use crate::rng::uniform;
use crate::{Error, Result};

/// Output nonlinearity of the last layer. Hidden layers are always ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// Identity output (critics).
    Linear,
    /// `π · tanh(z)` (actor), keeping every component inside `(−π, π)`.
    TanhPi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// `[input, hidden.., output]`.
    pub layer_sizes: Vec<usize>,
    pub head: Head,
}

impl NetworkSpec {
    pub fn new(input: usize, hidden: &[usize], output: usize, head: Head) -> Self {
        let mut layer_sizes = Vec::with_capacity(hidden.len() + 2);
        layer_sizes.push(input);
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(output);
        Self { layer_sizes, head }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::invalid("layer_sizes", "need an input and an output size"));
        }
        if self.layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::invalid("layer_sizes", "every layer needs at least one unit"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }
}

/// Fully connected layer. `weight` is stored input-major
/// (`inputs × outputs`), so row `i` holds the outgoing weights of input `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<F> {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<F>,
    pub bias: Vec<F>,
}

impl<F: Scalar> Dense<F> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weight: vec![F::zero(); inputs * outputs],
            bias: vec![F::zero(); outputs],
        }
    }

    pub fn weight_row(&self, i: usize) -> &[F] {
        &self.weight[i * self.outputs..(i + 1) * self.outputs]
    }
}

/// Network parameters; the same container also holds gradients and the
/// Adam moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<F> {
    pub layers: Vec<Dense<F>>,
}

impl<F: Scalar> Params<F> {
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn zeros_for(spec: &NetworkSpec) -> Self {
        Self {
            layers: spec
                .layer_sizes
                .windows(2)
                .map(|w| Dense::zeros(w[0], w[1]))
                .collect(),
        }
    }

    /// Weights `U(−1/√fan_in, 1/√fan_in)`, biases zero. For the actor head
    /// the final layer is scaled by 1e-2 so initial phase increments are
    /// close to zero.
    pub fn init<R: Rng + ?Sized>(spec: &NetworkSpec, rng: &mut R) -> Self {
        let mut params = Self::zeros_for(spec);
        let last = params.layers.len() - 1;
        for (idx, layer) in params.layers.iter_mut().enumerate() {
            let bound = 1.0 / libm::sqrt(layer.inputs as f64);
            let scale = if idx == last && spec.head == Head::TanhPi { 1e-2 } else { 1.0 };
            for w in layer.weight.iter_mut() {
                *w = F::of(scale * uniform(rng, -bound, bound));
            }
        }
        params
    }

    pub fn tensors(&self) -> impl Iterator<Item = &[F]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [F]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
    }

    pub fn num_params(&self) -> usize {
        self.tensors().map(|t| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.inputs == b.inputs && a.outputs == b.outputs)
    }

    pub fn scale(&mut self, factor: F) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.tensors_mut().zip(other.tensors()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += *y);
        }
    }

    pub fn cast<G: Scalar>(&self) -> Params<G> {
        Params {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    weight: l.weight.iter().map(|x| G::of(x.as_f64())).collect(),
                    bias: l.bias.iter().map(|x| G::of(x.as_f64())).collect(),
                })
                .collect(),
        }
    }
}

/// `ψ ← τ w + (1 − τ) ψ` for every tensor.
pub fn polyak_update<F: Scalar>(target: &mut Params<F>, main: &Params<F>, tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid("tau", "must lie in [0, 1]"));
    }
    if !target.same_shape(main) {
        return Err(Error::DimensionMismatch {
            what: "polyak target vs main",
            expected: main.num_params(),
            got: target.num_params(),
        });
    }
    if tau == 1.0 {
        target.clone_from(main);
        return Ok(());
    }
    let (a, b) = (F::of(tau), F::of(1.0 - tau));
    for (t, m) in target.tensors_mut().zip(main.tensors()) {
        for (x, &y) in t.iter_mut().zip(m) {
            *x = a * y + b * *x;
        }
    }
    Ok(())
}

/// `π · tanh(raw)`, componentwise.
pub fn actor_head<F: Scalar>(raw: F) -> F {
    F::of(PI) * raw.tanh_()
}

/// Values retained by a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct Cache<F> {
    /// Input to every layer (post-activation of the previous one).
    inputs: Vec<Matrix<F>>,
    /// Pre-activation of the output layer.
    pre_output: Matrix<F>,
}

impl<F> Cache<F> {
    /// Output layer pre-activation (before the head).
    pub fn pre_output(&self) -> &Matrix<F> {
        &self.pre_output
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<F> {
    pub spec: NetworkSpec,
    pub params: Params<F>,
}

impl<F: Scalar> Mlp<F> {
    pub fn new<R: Rng + ?Sized>(spec: NetworkSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let params = Params::init(&spec, rng);
        Ok(Self { spec, params })
    }

    pub fn from_params(spec: NetworkSpec, params: Params<F>) -> Result<Self> {
        spec.validate()?;
        if !params.same_shape(&Params::zeros_for(&spec)) {
            return Err(Error::invalid("params", "shapes do not match the network spec"));
        }
        Ok(Self { spec, params })
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    fn check_input(&self, input: &Matrix<F>) -> Result<()> {
        if input.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "network input",
                expected: self.input_dim(),
                got: input.cols(),
            });
        }
        if !input.all_finite() {
            return Err(Error::NonFinite("network input"));
        }
        Ok(())
    }

    fn apply_head(&self, pre: &Matrix<F>) -> Matrix<F> {
        match self.spec.head {
            Head::Linear => pre.clone(),
            Head::TanhPi => {
                let mut out = pre.clone();
                out.as_mut_slice().iter_mut().for_each(|x| *x = actor_head(*x));
                out
            }
        }
    }

    /// Batched affine map `x W + b` for one layer.
    fn affine(layer: &Dense<F>, x: &Matrix<F>) -> Matrix<F> {
        let mut out = Matrix::zeros(x.rows(), layer.outputs);
        for r in 0..x.rows() {
            let o = out.row_mut(r);
            o.copy_from_slice(&layer.bias);
            for (i, &xi) in x.row(r).iter().enumerate() {
                // ReLU outputs are often exactly zero; skipping them is exact.
                if xi != F::zero() {
                    axpy(o, xi, layer.weight_row(i));
                }
            }
        }
        out
    }

    /// Forward pass without retaining intermediates.
    pub fn predict(&self, input: &Matrix<F>) -> Result<Matrix<F>> {
        self.check_input(input)?;
        let layers = &self.params.layers;
        let mut x = Self::affine(&layers[0], input);
        for layer in &layers[1..] {
            relu_in_place(&mut x);
            x = Self::affine(layer, &x);
        }
        Ok(self.apply_head(&x))
    }

    pub fn forward(&self, input: &Matrix<F>) -> Result<(Matrix<F>, Cache<F>)> {
        self.check_input(input)?;
        let mut inputs = Vec::with_capacity(self.params.layers.len());
        let mut x = input.clone();
        let last = self.params.layers.len() - 1;
        for (idx, layer) in self.params.layers.iter().enumerate() {
            let mut z = Self::affine(layer, &x);
            inputs.push(x);
            if idx == last {
                let out = self.apply_head(&z);
                return Ok((out, Cache { inputs, pre_output: z }));
            }
            relu_in_place(&mut z);
            x = z;
        }
        unreachable!("network has at least one layer")
    }

    fn check_cache(&self, cache: &Cache<F>, grad: &Matrix<F>) -> Result<()> {
        let layers = &self.params.layers;
        let ok = cache.inputs.len() == layers.len()
            && cache
                .inputs
                .iter()
                .zip(layers)
                .all(|(x, l)| x.cols() == l.inputs && x.rows() == grad.rows())
            && cache.pre_output.cols() == self.output_dim()
            && cache.pre_output.rows() == grad.rows()
            && grad.cols() == self.output_dim();
        if ok {
            Ok(())
        } else {
            Err(Error::StaleCache)
        }
    }

    fn backprop(
        &self,
        cache: &Cache<F>,
        output_grad: &Matrix<F>,
        preact_grad: Option<&Matrix<F>>,
        want_params: bool,
        want_input: bool,
    ) -> Result<(Option<Params<F>>, Option<Matrix<F>>)> {
        self.check_cache(cache, output_grad)?;
        if preact_grad.is_some_and(|g| g.rows() != output_grad.rows() || g.cols() != output_grad.cols()) {
            return Err(Error::StaleCache);
        }
        let batch = output_grad.rows();
        let mut grads = want_params.then(|| self.params.zeros_like());

        // Gradient w.r.t. the output layer's pre-activation.
        let mut delta = output_grad.clone();
        if self.spec.head == Head::TanhPi {
            let pi = F::of(PI);
            for (d, &z) in delta.as_mut_slice().iter_mut().zip(cache.pre_output.as_slice()) {
                let t = z.tanh_();
                *d *= pi * (F::one() - t * t);
            }
        }
        if let Some(extra) = preact_grad {
            for (d, &e) in delta.as_mut_slice().iter_mut().zip(extra.as_slice()) {
                *d += e;
            }
        }

        for idx in (0..self.params.layers.len()).rev() {
            let layer = &self.params.layers[idx];
            let x = &cache.inputs[idx];
            if let Some(g) = grads.as_mut() {
                let gl = &mut g.layers[idx];
                for r in 0..batch {
                    let dr = delta.row(r);
                    axpy(&mut gl.bias, F::one(), dr);
                    for (i, &xi) in x.row(r).iter().enumerate() {
                        if xi != F::zero() {
                            axpy(&mut gl.weight[i * layer.outputs..(i + 1) * layer.outputs], xi, dr);
                        }
                    }
                }
            }
            if idx == 0 && !want_input {
                break;
            }
            // Propagate to this layer's input; hidden inputs pass through the
            // ReLU mask (gradient 0 where the activation is 0).
            let mut prev = Matrix::zeros(batch, layer.inputs);
            for r in 0..batch {
                let dr = delta.row(r);
                let xr = x.row(r);
                let pr = prev.row_mut(r);
                for i in 0..layer.inputs {
                    if idx == 0 || xr[i] > F::zero() {
                        pr[i] = dot(layer.weight_row(i), dr);
                    }
                }
            }
            delta = prev;
        }
        let input_grad = want_input.then_some(delta);
        Ok((grads, input_grad))
    }

    /// Reverse-mode gradients of `Σ_rows output_grad · output` with respect
    /// to every parameter and to the input batch.
    pub fn backward(&self, cache: &Cache<F>, output_grad: &Matrix<F>) -> Result<(Params<F>, Matrix<F>)> {
        let (g, x) = self.backprop(cache, output_grad, None, true, true)?;
        Ok((g.unwrap(), x.unwrap()))
    }

    pub fn param_grads(&self, cache: &Cache<F>, output_grad: &Matrix<F>) -> Result<Params<F>> {
        Ok(self.backprop(cache, output_grad, None, true, false)?.0.unwrap())
    }

    /// Like [`param_grads`](Self::param_grads), plus a gradient taken
    /// directly with respect to the output layer's pre-activation.
    pub fn param_grads_with_preact(
        &self,
        cache: &Cache<F>,
        output_grad: &Matrix<F>,
        preact_grad: &Matrix<F>,
    ) -> Result<Params<F>> {
        Ok(self.backprop(cache, output_grad, Some(preact_grad), true, false)?.0.unwrap())
    }

    pub fn input_grad(&self, cache: &Cache<F>, output_grad: &Matrix<F>) -> Result<Matrix<F>> {
        Ok(self.backprop(cache, output_grad, None, false, true)?.1.unwrap())
    }
}

fn relu_in_place<F: Scalar>(x: &mut Matrix<F>) {
    for v in x.as_mut_slice() {
        // NaN must survive so divergence is detected downstream.
        if *v < F::zero() {
            *v = F::zero();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn init_rules() {
        let spec = NetworkSpec::new(400, &[30], 3, Head::Linear);
        let p: Params<f32> = Params::init(&spec, &mut rng(0));
        assert!(p.layers.iter().all(|l| l.bias.iter().all(|b| *b == 0.0)));
        assert!(p.layers[0].weight.iter().all(|w| w.abs() < 0.05));
        assert!(p.layers[0].weight.iter().any(|w| w.abs() > 0.04));
    }

    #[test]
    fn actor_initial_outputs_are_small() {
        let spec = NetworkSpec::new(20, &[64, 64], 6, Head::TanhPi);
        let net: Mlp<f64> = Mlp::new(spec, &mut rng(1)).unwrap();
        let mut r = rng(2);
        for _ in 0..200 {
            let x: Vec<f64> = (0..20).map(|_| uniform(&mut r, -PI, PI)).collect();
            let out = net.predict(&Matrix::row_vector(x)).unwrap();
            assert!(out.as_slice().iter().all(|a| a.abs() < 0.1));
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let spec = NetworkSpec::new(3, &[4], 2, Head::Linear);
        let net = Mlp::from_params(spec.clone(), Params::<f32>::zeros_for(&spec)).unwrap();
        let out = net.predict(&Matrix::row_vector(vec![1.0, -2.0, 3.0])).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn relu_on_identity_layer() {
        // One hidden ReLU layer with identity weights, then identity output.
        let spec = NetworkSpec::new(2, &[2], 2, Head::Linear);
        let mut p = Params::<f64>::zeros_for(&spec);
        p.layers[0].weight = vec![1.0, 0.0, 0.0, 1.0];
        p.layers[1].weight = vec![1.0, 0.0, 0.0, 1.0];
        let net = Mlp::from_params(spec, p).unwrap();
        let out = net.predict(&Matrix::row_vector(vec![-1.0, 2.0])).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn scalar_linear_chain_rule() {
        let spec = NetworkSpec::new(1, &[], 1, Head::Linear);
        let mut p = Params::<f64>::zeros_for(&spec);
        p.layers[0].weight = vec![0.7];
        let net = Mlp::from_params(spec, p).unwrap();
        let (y, cache) = net.forward(&Matrix::row_vector(vec![2.5])).unwrap();
        assert!((y.get(0, 0) - 1.75).abs() < 1e-15);
        let (g, dx) = net.backward(&cache, &Matrix::row_vector(vec![1.0])).unwrap();
        assert_eq!(g.layers[0].weight, [2.5]);
        assert_eq!(g.layers[0].bias, [1.0]);
        assert_eq!(dx.as_slice(), &[0.7]);
    }

    #[test]
    fn dead_relu_blocks_gradient() {
        let spec = NetworkSpec::new(1, &[2], 1, Head::Linear);
        let mut p = Params::<f64>::zeros_for(&spec);
        p.layers[0].weight = vec![1.0, -1.0];
        p.layers[1].weight = vec![1.0, 1.0];
        let net = Mlp::from_params(spec, p).unwrap();
        let (_, cache) = net.forward(&Matrix::row_vector(vec![3.0])).unwrap();
        let (g, dx) = net.backward(&cache, &Matrix::row_vector(vec![1.0])).unwrap();
        // Second hidden unit has pre-activation −3: nothing flows through it.
        assert_eq!(g.layers[0].weight, [3.0, 0.0]);
        assert_eq!(g.layers[0].bias, [1.0, 0.0]);
        assert_eq!(g.layers[1].weight, [3.0, 0.0]);
        assert_eq!(dx.as_slice(), &[1.0]);
    }

    #[test]
    fn forward_matches_independent_evaluator() {
        let spec = NetworkSpec::new(5, &[7, 6], 3, Head::TanhPi);
        let net: Mlp<f64> = Mlp::new(spec, &mut rng(3)).unwrap();
        let mut r = rng(4);
        let xs: Vec<f64> = (0..10).map(|_| uniform(&mut r, -2.0, 2.0)).collect();
        let batch = Matrix::from_vec(2, 5, xs.clone()).unwrap();
        let out = net.predict(&batch).unwrap();
        let (out2, _) = net.forward(&batch).unwrap();
        assert_eq!(out, out2);
        for row in 0..2 {
            // Straight nested-loop evaluation with weights read as W[i][o].
            let mut a: Vec<f64> = xs[row * 5..row * 5 + 5].to_vec();
            for (li, l) in net.params.layers.iter().enumerate() {
                let mut z = l.bias.clone();
                for o in 0..l.outputs {
                    for i in 0..l.inputs {
                        z[o] += a[i] * l.weight[i * l.outputs + o];
                    }
                }
                if li + 1 < net.params.layers.len() {
                    z.iter_mut().for_each(|v| *v = v.max(0.0));
                } else {
                    z.iter_mut().for_each(|v| *v = PI * libm::tanh(*v));
                }
                a = z;
            }
            for (x, y) in a.iter().zip(out.row(row)) {
                assert!((x - y).abs() <= 1e-6 * x.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn input_mismatch_and_stale_cache() {
        let spec = NetworkSpec::new(3, &[4], 1, Head::Linear);
        let net: Mlp<f32> = Mlp::new(spec, &mut rng(5)).unwrap();
        assert!(net.predict(&Matrix::row_vector(vec![1.0, 2.0])).is_err());
        assert!(matches!(
            net.predict(&Matrix::row_vector(vec![1.0, f32::NAN, 0.0])),
            Err(Error::NonFinite(_))
        ));
        let (_, cache) = net.forward(&Matrix::row_vector(vec![1.0, 2.0, 3.0])).unwrap();
        let other: Mlp<f32> = Mlp::new(NetworkSpec::new(3, &[5], 1, Head::Linear), &mut rng(6)).unwrap();
        assert!(matches!(
            other.backward(&cache, &Matrix::row_vector(vec![1.0])),
            Err(Error::StaleCache)
        ));
        assert!(matches!(
            net.backward(&cache, &Matrix::from_vec(2, 1, vec![1.0, 1.0]).unwrap()),
            Err(Error::StaleCache)
        ));
    }

    #[test]
    fn actor_head_values() {
        assert_eq!(actor_head(0.0f64), 0.0);
        assert!((actor_head(1.0f64) - 2.392_618_605_367_55).abs() < 1e-12);
        assert!(actor_head(50.0f64) <= PI && actor_head(50.0f64) > 3.14);
        assert!(actor_head(5.0f32) < core::f32::consts::PI);
        assert!(actor_head(-50.0f64) >= -PI);
    }

    #[test]
    fn polyak_examples() {
        let spec = NetworkSpec::new(2, &[3], 1, Head::Linear);
        let main: Params<f64> = Params::init(&spec, &mut rng(7));
        let mut t = Params::<f64>::zeros_for(&spec);
        polyak_update(&mut t, &main, 0.0).unwrap();
        assert_eq!(t, Params::zeros_for(&spec));
        polyak_update(&mut t, &main, 1.0).unwrap();
        assert_eq!(t, main);

        let mut a = Params::<f64>::zeros_for(&spec);
        let mut b = a.clone();
        b.tensors_mut().for_each(|x| x.fill(2.0));
        polyak_update(&mut a, &b, 0.5).unwrap();
        assert!(a.tensors().all(|x| x.iter().all(|v| *v == 1.0)));
        assert!(polyak_update(&mut a, &b, 1.5).is_err());
        let other = Params::<f64>::zeros_for(&NetworkSpec::new(2, &[4], 1, Head::Linear));
        assert!(polyak_update(&mut a, &other, 0.5).is_err());
    }
}

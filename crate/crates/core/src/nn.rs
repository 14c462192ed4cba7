//! Fixed-topology feed-forward network with exact reverse-mode gradients and
//! an Adam optimizer.
//!
//! Parameters live in one flat vector. Layer `l` maps `n_l` inputs to
//! `n_{l+1}` outputs and stores its weights input-major (`w[i * n_out + o]`)
//! followed by its `n_{l+1}` biases. Batched inputs are row-major
//! `batch × width` slices.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, xs: &mut [f64]) {
        match self {
            Self::Linear => {}
            Self::Relu => xs.iter_mut().for_each(|x| *x = x.max(0.0)),
            Self::Tanh => xs.iter_mut().for_each(|x| *x = x.tanh()),
        }
    }

    /// Multiplies `grad` by the derivative, expressed through the activation output.
    fn backprop(self, post: &[f64], grad: &mut [f64]) {
        match self {
            Self::Linear => {}
            Self::Relu => grad.iter_mut().zip(post).for_each(|(g, &y)| {
                if y <= 0.0 {
                    *g = 0.0
                }
            }),
            Self::Tanh => grad
                .iter_mut()
                .zip(post)
                .for_each(|(g, &y)| *g *= 1.0 - y * y),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct LayerShape {
    inputs: usize,
    outputs: usize,
    weights: usize,
    biases: usize,
}

/// Multilayer perceptron.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpRecord", into = "MlpRecord")]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    hidden: Activation,
    output: Activation,
    params: Vec<f64>,
    shapes: Vec<LayerShape>,
}

/// Checkpoint form of an [`Mlp`].
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpRecord {
    layer_sizes: Vec<usize>,
    hidden_activation: Activation,
    output_activation: Activation,
    params: Vec<f64>,
}

impl From<Mlp> for MlpRecord {
    fn from(net: Mlp) -> Self {
        Self {
            layer_sizes: net.layer_sizes,
            hidden_activation: net.hidden,
            output_activation: net.output,
            params: net.params,
        }
    }
}

impl TryFrom<MlpRecord> for Mlp {
    type Error = Error;

    fn try_from(r: MlpRecord) -> Result<Self> {
        Mlp::from_params(
            &r.layer_sizes,
            r.hidden_activation,
            r.output_activation,
            r.params,
        )
    }
}

fn layout(layer_sizes: &[usize]) -> Result<(Vec<LayerShape>, usize)> {
    if layer_sizes.len() < 2 {
        return Err(domain(format!(
            "a network needs at least two layer sizes, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(domain(format!(
            "layer sizes must be positive, got {layer_sizes:?}"
        )));
    }
    let mut offset = 0;
    let shapes = layer_sizes
        .windows(2)
        .map(|w| {
            let shape = LayerShape {
                inputs: w[0],
                outputs: w[1],
                weights: offset,
                biases: offset + w[0] * w[1],
            };
            offset += w[0] * w[1] + w[1];
            shape
        })
        .collect();
    Ok((shapes, offset))
}

/// Activations kept from a forward pass.
#[derive(Clone, Debug)]
pub struct Cache {
    batch: usize,
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
}

impl Cache {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn input(&self) -> &[f64] {
        &self.acts[0]
    }

    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("cache holds at least the input")
    }
}

/// Parameter gradients, laid out like [`Mlp::params`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients(pub Vec<f64>);

impl Gradients {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Mlp {
    /// Random network: weights uniform in `±1/√fan_in`, zero biases.
    pub fn new<R: Rng + ?Sized>(
        layer_sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let (shapes, total) = layout(layer_sizes)?;
        let mut params = vec![0.0; total];
        for s in &shapes {
            let bound = 1.0 / (s.inputs as f64).sqrt();
            for w in &mut params[s.weights..s.biases] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            hidden,
            output,
            params,
            shapes,
        })
    }

    /// Network with explicit parameters in the flat layout.
    pub fn from_params(
        layer_sizes: &[usize],
        hidden: Activation,
        output: Activation,
        params: Vec<f64>,
    ) -> Result<Self> {
        let (shapes, total) = layout(layer_sizes)?;
        if params.len() != total {
            return Err(domain(format!(
                "expected {total} parameters, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("network parameters must be finite".into()));
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            hidden,
            output,
            params,
            shapes,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    pub fn layer_count(&self) -> usize {
        self.shapes.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `(outputs, inputs)` of each weight matrix.
    pub fn weight_shapes(&self) -> Vec<(usize, usize)> {
        self.shapes.iter().map(|s| (s.outputs, s.inputs)).collect()
    }

    /// Weight connecting input `i` to output `o` of layer `layer`.
    pub fn weight(&self, layer: usize, o: usize, i: usize) -> f64 {
        let s = self.shapes[layer];
        self.params[s.weights + i * s.outputs + o]
    }

    pub fn set_weight(&mut self, layer: usize, o: usize, i: usize, value: f64) {
        let s = self.shapes[layer];
        self.params[s.weights + i * s.outputs + o] = value;
    }

    pub fn bias(&self, layer: usize, o: usize) -> f64 {
        self.params[self.shapes[layer].biases + o]
    }

    pub fn set_bias(&mut self, layer: usize, o: usize, value: f64) {
        let b = self.shapes[layer].biases;
        self.params[b + o] = value;
    }

    pub fn same_topology(&self, other: &Mlp) -> bool {
        self.layer_sizes == other.layer_sizes
            && self.hidden == other.hidden
            && self.output == other.output
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.shapes.len() {
            self.output
        } else {
            self.hidden
        }
    }

    /// Forward pass for a single input vector.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, Cache)> {
        let cache = self.forward_batch(input, 1)?;
        Ok((cache.output().to_vec(), cache))
    }

    /// Output only, for evaluation.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.0)
    }

    /// Forward pass over `batch` row-major inputs.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Result<Cache> {
        if batch == 0 || inputs.len() != batch * self.input_size() {
            return Err(domain(format!(
                "expected {batch} inputs of width {}, got {} values",
                self.input_size(),
                inputs.len()
            )));
        }
        let mut acts = Vec::with_capacity(self.shapes.len() + 1);
        acts.push(inputs.to_vec());
        for (l, s) in self.shapes.iter().enumerate() {
            let x = acts.last().expect("nonempty");
            let w = &self.params[s.weights..s.biases];
            let b = &self.params[s.biases..s.biases + s.outputs];
            let mut y = vec![0.0; batch * s.outputs];
            for (xr, yr) in x.chunks_exact(s.inputs).zip(y.chunks_exact_mut(s.outputs)) {
                yr.copy_from_slice(b);
                for (&xi, wr) in xr.iter().zip(w.chunks_exact(s.outputs)) {
                    if xi != 0.0 {
                        axpy(xi, wr, yr);
                    }
                }
            }
            self.activation_of(l).apply(&mut y);
            acts.push(y);
        }
        Ok(Cache { batch, acts })
    }

    /// Reverse pass for the scalar `Σ output · output_grad`, returning
    /// gradients with respect to every parameter and to the input.
    pub fn backward(&self, cache: &Cache, output_grad: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let mut grads = vec![0.0; self.params.len()];
        let input_grad = self.backprop(cache, output_grad, Some(&mut grads))?;
        Ok((Gradients(grads), input_grad))
    }

    /// Gradient with respect to the input only.
    pub fn input_gradient(&self, cache: &Cache, output_grad: &[f64]) -> Result<Vec<f64>> {
        self.backprop(cache, output_grad, None)
    }

    fn backprop(
        &self,
        cache: &Cache,
        output_grad: &[f64],
        mut grads: Option<&mut Vec<f64>>,
    ) -> Result<Vec<f64>> {
        let batch = cache.batch;
        if cache.acts.len() != self.shapes.len() + 1
            || cache
                .acts
                .iter()
                .zip(&self.layer_sizes)
                .any(|(a, &n)| a.len() != batch * n)
        {
            return Err(domain("cache does not match this network"));
        }
        if output_grad.len() != batch * self.output_size() {
            return Err(domain(format!(
                "expected an output gradient of length {}, got {}",
                batch * self.output_size(),
                output_grad.len()
            )));
        }
        let mut delta = output_grad.to_vec();
        for (l, s) in self.shapes.iter().enumerate().rev() {
            self.activation_of(l)
                .backprop(&cache.acts[l + 1], &mut delta);
            let x = &cache.acts[l];
            if let Some(g) = grads.as_deref_mut() {
                let (gw, gb) =
                    g[s.weights..s.biases + s.outputs].split_at_mut(s.biases - s.weights);
                for (xr, dr) in x.chunks_exact(s.inputs).zip(delta.chunks_exact(s.outputs)) {
                    for (gb, &d) in gb.iter_mut().zip(dr) {
                        *gb += d;
                    }
                    for (&xi, gwr) in xr.iter().zip(gw.chunks_exact_mut(s.outputs)) {
                        if xi != 0.0 {
                            axpy(xi, dr, gwr);
                        }
                    }
                }
            }
            let w = &self.params[s.weights..s.biases];
            let mut prev = vec![0.0; batch * s.inputs];
            for (pr, dr) in prev
                .chunks_exact_mut(s.inputs)
                .zip(delta.chunks_exact(s.outputs))
            {
                for (p, wr) in pr.iter_mut().zip(w.chunks_exact(s.outputs)) {
                    *p = dot(wr, dr);
                }
            }
            delta = prev;
        }
        Ok(delta)
    }

    /// Polyak step toward `main`: `self ← (1 − τ)·self + τ·main`.
    pub fn soft_update_from(&mut self, main: &Mlp, tau: f64) -> Result<()> {
        if !self.same_topology(main) {
            return Err(domain("soft update between networks of different topology"));
        }
        for (t, &m) in self.params.iter_mut().zip(&main.params) {
            *t = (1.0 - tau) * *t + tau * m;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

/// Adam optimizer state for one network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(net: &Mlp) -> Self {
        Self::with_hyper(net, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyper(net: &Mlp, beta1: f64, beta2: f64, eps: f64) -> Self {
        let n = net.parameter_count();
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1,
            beta2,
            eps,
        }
    }

    /// One bias-corrected Adam step of `net` against `grads`.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients, lr: f64) -> Result<()> {
        let n = net.parameter_count();
        if grads.0.len() != n || self.m.len() != n || self.v.len() != n {
            return Err(domain("gradient/optimizer shapes do not match the network"));
        }
        if grads.0.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric("non-finite gradient".into()));
        }
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        for (((p, &g), m), v) in net
            .params
            .iter_mut()
            .zip(&grads.0)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Adam step as a free function.
pub fn adam_step(net: &mut Mlp, grads: &Gradients, state: &mut AdamState, lr: f64) -> Result<()> {
    state.step(net, grads, lr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_stream;

    const ACTOR: [usize; 5] = [7, 64, 32, 16, 1];
    const CRITIC: [usize; 5] = [8, 64, 32, 16, 1];

    fn scalar_net(w: f64, b: f64) -> Mlp {
        Mlp::from_params(&[1, 1], Activation::Relu, Activation::Linear, vec![w, b]).unwrap()
    }

    /// `Σ output · upstream` evaluated directly.
    fn objective(net: &Mlp, x: &[f64], upstream: &[f64]) -> f64 {
        net.predict(x)
            .unwrap()
            .iter()
            .zip(upstream)
            .map(|(y, g)| y * g)
            .sum()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / (a.abs() + b.abs()).max(1e-6)
    }

    #[test]
    fn init_shapes_and_determinism() {
        let net = Mlp::new(
            &ACTOR,
            Activation::Relu,
            Activation::Tanh,
            &mut rng_stream(1, 0),
        )
        .unwrap();
        assert_eq!(
            net.weight_shapes(),
            vec![(64, 7), (32, 64), (16, 32), (1, 16)]
        );
        assert_eq!(
            net.parameter_count(),
            (7 * 64 + 64) + (64 * 32 + 32) + (32 * 16 + 16) + (16 + 1)
        );
        let bound = 1.0 / 7f64.sqrt();
        assert!((0..64).all(|o| (0..7).all(|i| net.weight(0, o, i).abs() <= bound)));
        assert!((0..64).all(|o| net.bias(0, o) == 0.0));

        let a = Mlp::new(
            &[2, 1],
            Activation::Relu,
            Activation::Linear,
            &mut rng_stream(5, 0),
        )
        .unwrap();
        let b = Mlp::new(
            &[2, 1],
            Activation::Relu,
            Activation::Linear,
            &mut rng_stream(5, 0),
        )
        .unwrap();
        assert_eq!(a, b);
        assert!(Mlp::new(
            &[1],
            Activation::Relu,
            Activation::Linear,
            &mut rng_stream(5, 0)
        )
        .is_err());
        assert!(Mlp::new(
            &[3, 0, 1],
            Activation::Relu,
            Activation::Linear,
            &mut rng_stream(5, 0)
        )
        .is_err());
    }

    #[test]
    fn forward_examples() {
        let zero = Mlp::from_params(
            &[3, 4, 1],
            Activation::Relu,
            Activation::Linear,
            vec![0.0; 21],
        )
        .unwrap();
        assert_eq!(zero.predict(&[1.0, -2.0, 5.0]).unwrap(), vec![0.0]);
        assert_eq!(scalar_net(3.0, 0.5).predict(&[2.0]).unwrap(), vec![6.5]);
        let net = Mlp::new(
            &ACTOR,
            Activation::Relu,
            Activation::Tanh,
            &mut rng_stream(2, 0),
        )
        .unwrap();
        let mut rng = rng_stream(3, 0);
        for _ in 0..50 {
            let x: Vec<f64> = (0..7).map(|_| rng.random_range(-30.0..30.0)).collect();
            let y = net.predict(&x).unwrap()[0];
            assert!(y > -1.0 && y < 1.0);
        }
        assert!(net.predict(&[1.0; 3]).is_err());
    }

    #[test]
    fn forward_is_pure() {
        let net = Mlp::new(
            &CRITIC,
            Activation::Relu,
            Activation::Linear,
            &mut rng_stream(2, 0),
        )
        .unwrap();
        let x = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3];
        let a = net.predict(&x).unwrap();
        assert_eq!(a[0].to_bits(), net.predict(&x).unwrap()[0].to_bits());
    }

    #[test]
    fn batch_matches_single() {
        let net = Mlp::new(
            &CRITIC,
            Activation::Relu,
            Activation::Linear,
            &mut rng_stream(4, 0),
        )
        .unwrap();
        let mut rng = rng_stream(5, 0);
        let xs: Vec<f64> = (0..8 * 5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cache = net.forward_batch(&xs, 5).unwrap();
        for (b, x) in xs.chunks(8).enumerate() {
            assert_eq!(cache.output()[b], net.predict(x).unwrap()[0]);
        }
    }

    #[test]
    fn hand_derivative() {
        let net = scalar_net(3.0, 0.0);
        let (_, cache) = net.forward(&[2.0]).unwrap();
        let (g, dx) = net.backward(&cache, &[1.0]).unwrap();
        assert_eq!(g.0, vec![2.0, 1.0]);
        assert_eq!(dx, vec![3.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = Mlp::new(
            &CRITIC,
            Activation::Relu,
            Activation::Linear,
            &mut rng_stream(6, 0),
        )
        .unwrap();
        let (_, cache) = net.forward(&[0.5; 8]).unwrap();
        let (g, dx) = net.backward(&cache, &[0.0]).unwrap();
        assert!(g.0.iter().chain(&dx).all(|&v| v == 0.0));
        assert!(net.backward(&cache, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        // 100 probes per topology and head: each probe is a fresh random net
        // and input, checked on every input coordinate and 20 random parameters.
        let h = 1e-5;
        let mut rng = rng_stream(7, 0);
        let mut worst = 0.0f64;
        for sizes in [&ACTOR[..], &CRITIC[..]] {
            for head in [Activation::Linear, Activation::Tanh] {
                for probe in 0..100u64 {
                    let mut net = Mlp::new(
                        sizes,
                        Activation::Relu,
                        head,
                        &mut rng_stream(100 + probe, 1),
                    )
                    .unwrap();
                    for b in net.params_mut().iter_mut() {
                        *b += rng.random_range(-0.05..0.05);
                    }
                    let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let up = [rng.random_range(0.5..2.0)];
                    let (_, cache) = net.forward(&x).unwrap();
                    let (g, dx) = net.backward(&cache, &up).unwrap();

                    for i in 0..x.len() {
                        let (mut xp, mut xm) = (x.clone(), x.clone());
                        xp[i] += h;
                        xm[i] -= h;
                        let fd =
                            (objective(&net, &xp, &up) - objective(&net, &xm, &up)) / (2.0 * h);
                        if fd.abs() > 1e-7 || dx[i].abs() > 1e-7 {
                            worst = worst.max(rel_err(fd, dx[i]));
                        }
                    }
                    for _ in 0..20 {
                        let k = rng.random_range(0..net.parameter_count());
                        let orig = net.params()[k];
                        net.params_mut()[k] = orig + h;
                        let fp = objective(&net, &x, &up);
                        net.params_mut()[k] = orig - h;
                        let fm = objective(&net, &x, &up);
                        net.params_mut()[k] = orig;
                        let fd = (fp - fm) / (2.0 * h);
                        if fd.abs() > 1e-7 || g.0[k].abs() > 1e-7 {
                            worst = worst.max(rel_err(fd, g.0[k]));
                        }
                    }
                }
            }
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let mut net = Mlp::new(
            &[3, 2, 1],
            Activation::Relu,
            Activation::Linear,
            &mut rng_stream(8, 0),
        )
        .unwrap();
        let before = net.clone();
        let mut st = AdamState::new(&net);
        st.m.iter_mut().for_each(|m| *m = 0.5);
        st.v.iter_mut().for_each(|v| *v = 0.5);
        let zero = Gradients(vec![0.0; net.parameter_count()]);
        adam_step(&mut net, &zero, &mut st, 1e-3).unwrap();
        assert!(st.m.iter().all(|&m| m == 0.45));
        assert!(st.v.iter().all(|&v| v < 0.5));
        // Decayed moments still move parameters; with fresh state nothing moves.
        let mut fresh = AdamState::new(&before);
        let mut net2 = before.clone();
        adam_step(&mut net2, &zero, &mut fresh, 1e-3).unwrap();
        assert_eq!(net2, before);
        assert_eq!(fresh.t, 1);
    }

    #[test]
    fn adam_constant_gradient_moves_by_lr() {
        let mut net = scalar_net(0.0, 0.0);
        let mut st = AdamState::new(&net);
        let g = Gradients(vec![2.5, -0.3]);
        let lr = 1e-3;
        let mut prev = net.params().to_vec();
        for step in 0..500 {
            st.step(&mut net, &g, lr).unwrap();
            let now = net.params().to_vec();
            if step >= 10 {
                let (dw, db) = (now[0] - prev[0], now[1] - prev[1]);
                assert!((dw + lr).abs() < 1e-6 * lr.max(1.0), "{dw}");
                assert!((db - lr).abs() < 1e-6 * lr.max(1.0), "{db}");
            }
            prev = now;
        }
    }

    #[test]
    fn adam_is_deterministic_and_checks_finiteness() {
        let net = Mlp::new(
            &CRITIC,
            Activation::Relu,
            Activation::Linear,
            &mut rng_stream(9, 0),
        )
        .unwrap();
        let g = Gradients(
            (0..net.parameter_count())
                .map(|k| (k as f64).sin())
                .collect(),
        );
        let (mut a, mut b) = (net.clone(), net.clone());
        let (mut sa, mut sb) = (AdamState::new(&net), AdamState::new(&net));
        sa.step(&mut a, &g, 1e-3).unwrap();
        sb.step(&mut b, &g, 1e-3).unwrap();
        assert_eq!(a, b);
        let mut bad = g.clone();
        bad.0[3] = f64::NAN;
        assert!(matches!(
            sa.step(&mut a, &bad, 1e-3),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn soft_update_formula() {
        let main = scalar_net(0.0, 0.0);
        let mut target = scalar_net(1.0, 1.0);
        target.soft_update_from(&main, 0.005).unwrap();
        assert!((target.params()[0] - 0.995).abs() < 1e-15);
        target.soft_update_from(&main, 1.0).unwrap();
        assert_eq!(target, main);
        let other = Mlp::new(
            &[2, 1],
            Activation::Relu,
            Activation::Linear,
            &mut rng_stream(1, 0),
        )
        .unwrap();
        assert!(target.soft_update_from(&other, 0.5).is_err());
    }

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let net = Mlp::new(
            &ACTOR,
            Activation::Relu,
            Activation::Tanh,
            &mut rng_stream(10, 0),
        )
        .unwrap();
        let back = Mlp::from_json(&net.to_json().unwrap()).unwrap();
        assert!(net
            .params()
            .iter()
            .zip(back.params())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(net, back);
        let bad = r#"{"layer_sizes":[2,1],"hidden_activation":"relu","output_activation":"linear","params":[1.0]}"#;
        assert!(Mlp::from_json(bad).is_err());
    }
}

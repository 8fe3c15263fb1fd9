use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fully connected layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    pub fn weight_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.outputs, self.inputs, &self.weights)
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.bias
                .iter()
                .enumerate()
                .map(|(o, b)| b + dot(self.row(o), x)),
        );
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Multi-layer perceptron with tanh hidden activations and a linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParameters {
    pub layers: Vec<Dense>,
}

/// Layer activations recorded by [`MlpParameters::forward_cached`]:
/// `activations[0]` is the input, the last entry the network output.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("cache holds at least the input")
    }
}

/// Activations of a batch, one column per sample.
#[derive(Debug, Clone)]
pub struct BatchCache {
    pub activations: Vec<DMatrix<f64>>,
}

impl BatchCache {
    pub fn output(&self) -> &DMatrix<f64> {
        self.activations.last().expect("cache holds at least the input")
    }
}

impl MlpParameters {
    pub fn zeros(layer_sizes: &[usize]) -> Self {
        Self {
            layers: layer_sizes
                .windows(2)
                .map(|w| Dense::zeros(w[0], w[1]))
                .collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.layer_sizes())
    }

    /// Orthogonal weights scaled by `gains[l]`, zero biases.
    pub fn initialize(layer_sizes: &[usize], gains: &[f64], seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::InvalidInput(format!("invalid layer sizes {layer_sizes:?}")));
        }
        if gains.len() != layer_sizes.len() - 1 {
            return Err(Error::InvalidInput("one gain per layer is required".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Self::zeros(layer_sizes);
        for (layer, gain) in params.layers.iter_mut().zip(gains) {
            let q = orthogonal(layer.outputs, layer.inputs, &mut rng);
            for o in 0..layer.outputs {
                for i in 0..layer.inputs {
                    layer.weights[o * layer.inputs + i] = gain * q[(o, i)];
                }
            }
        }
        Ok(params)
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::InvalidInput(format!(
                "expected input of length {}, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        let mut y = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.affine(&x, &mut y);
            if l != last {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            std::mem::swap(&mut x, &mut y);
        }
        Ok(x)
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<ForwardCache> {
        self.check_input(input)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut y = Vec::with_capacity(layer.outputs);
            layer.affine(activations.last().unwrap(), &mut y);
            if l != last {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            activations.push(y);
        }
        Ok(ForwardCache { activations })
    }

    /// Reverse-mode pass for the scalar `output · output_gradient`.
    ///
    /// Parameter gradients are accumulated into `grads` (same shape as
    /// `self`); the gradient with respect to the input is returned.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_gradient: &[f64],
        grads: &mut MlpParameters,
    ) -> Vec<f64> {
        debug_assert_eq!(output_gradient.len(), self.output_dim());
        let mut delta = output_gradient.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let g = &mut grads.layers[l];
            let a_in = &cache.activations[l];
            let mut grad_in = vec![0.0; layer.inputs];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                g.bias[o] += d;
                let gw = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for ((gw, a), (gi, w)) in gw
                    .iter_mut()
                    .zip(a_in)
                    .zip(grad_in.iter_mut().zip(layer.row(o)))
                {
                    *gw += d * a;
                    *gi += d * w;
                }
            }
            if l > 0 {
                // a_in is a tanh output: d tanh = 1 − tanh².
                for (gi, h) in grad_in.iter_mut().zip(a_in) {
                    *gi *= 1.0 - h * h;
                }
            }
            delta = grad_in;
        }
        delta
    }

    /// Forward pass over the columns of `inputs` (`input_dim × batch`).
    pub fn forward_batch(&self, inputs: DMatrix<f64>) -> Result<BatchCache> {
        if inputs.nrows() != self.input_dim() {
            return Err(Error::InvalidInput(format!(
                "expected inputs with {} rows, got {}",
                self.input_dim(),
                inputs.nrows()
            )));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(inputs);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weight_matrix() * activations.last().unwrap();
            for mut col in z.column_iter_mut() {
                for (v, b) in col.iter_mut().zip(&layer.bias) {
                    *v += b;
                    if l != last {
                        *v = v.tanh();
                    }
                }
            }
            activations.push(z);
        }
        Ok(BatchCache { activations })
    }

    /// Batched [`backward`](Self::backward): accumulates the parameter
    /// gradients of `Σ_b output_b · output_gradient_b` into `grads`.
    pub fn backward_batch(&self, cache: &BatchCache, output_gradient: DMatrix<f64>, grads: &mut MlpParameters) {
        debug_assert_eq!(output_gradient.nrows(), self.output_dim());
        let mut delta = output_gradient;
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let g = &mut grads.layers[l];
            let a_in = &cache.activations[l];
            let gw = &delta * a_in.transpose();
            for o in 0..layer.outputs {
                for i in 0..layer.inputs {
                    g.weights[o * layer.inputs + i] += gw[(o, i)];
                }
                g.bias[o] += delta.row(o).sum();
            }
            if l > 0 {
                let mut grad_in = layer.weight_matrix().transpose() * &delta;
                grad_in.zip_apply(a_in, |gi, h| *gi *= 1.0 - h * h);
                delta = grad_in;
            }
        }
    }

    /// All parameters in buffer order (per layer: weights row-major, then bias).
    pub fn to_flat(&self) -> Vec<f64> {
        self.buffers().flatten().copied().collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_parameters(), "flat parameter length");
        let mut rest = flat;
        for buf in self.buffers_mut() {
            let (head, tail) = rest.split_at(buf.len());
            buf.copy_from_slice(head);
            rest = tail;
        }
    }

    /// Visits weight and bias buffers in a fixed order.
    pub fn buffers(&self) -> impl Iterator<Item = &[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    pub fn buffers_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
    }
}

/// `rows × cols` matrix with orthonormal columns (rows ≥ cols) or rows.
fn orthogonal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (r, c) = if rows >= cols { (rows, cols) } else { (cols, rows) };
    let a = DMatrix::<f64>::from_fn(r, c, |_, _| StandardNormal.sample(rng));
    let qr = a.qr();
    let mut q = qr.q();
    let rmat = qr.r();
    // Sign fix makes the decomposition unique (Haar-distributed Q).
    for j in 0..c {
        if rmat[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if rows >= cols {
        q
    } else {
        q.transpose()
    }
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;

    fn random_params(sizes: &[usize], rng: &mut ChaCha8Rng) -> MlpParameters {
        let mut p = MlpParameters::zeros(sizes);
        for b in p.buffers_mut() {
            b.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        }
        p
    }

    #[test]
    fn batch_passes_match_per_sample_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = random_params(&[5, 7, 6, 3], &mut rng);
        let batch = 9;
        let inputs = DMatrix::from_fn(5, batch, |_, _| rng.random_range(-2.0..2.0));
        let out_grad = DMatrix::from_fn(3, batch, |_, _| rng.random_range(-1.0..1.0));

        let cache = p.forward_batch(inputs.clone()).unwrap();
        let mut batched = p.zeros_like();
        p.backward_batch(&cache, out_grad.clone(), &mut batched);

        let mut single = p.zeros_like();
        for b in 0..batch {
            let x: Vec<f64> = inputs.column(b).iter().copied().collect();
            let c = p.forward_cached(&x).unwrap();
            for (o, v) in c.output().iter().enumerate() {
                assert!((v - cache.output()[(o, b)]).abs() < 1e-12);
            }
            let g: Vec<f64> = out_grad.column(b).iter().copied().collect();
            p.backward(&c, &g, &mut single);
        }
        for (a, b) in batched.to_flat().iter().zip(single.to_flat()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(p.forward_batch(DMatrix::zeros(4, 2)).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = MlpParameters::zeros(&[17, 64, 64, 4]);
        assert_eq!(p.forward(&[0.7; 17]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn identity_layers_reproduce_tanh() {
        let mut p = MlpParameters::zeros(&[3, 3, 3]);
        for l in &mut p.layers {
            for i in 0..3 {
                l.weights[i * 3 + i] = 1.0;
            }
        }
        let x = [-2.0, 0.1, 0.9];
        let y = p.forward(&x).unwrap();
        for i in 0..3 {
            assert_eq!(y[i], x[i].tanh());
        }
    }

    #[test]
    fn forward_matches_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sizes = [17, 64, 64, 4];
        let p = random_params(&sizes, &mut rng);
        let x: Vec<f64> = (0..17).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut h = nalgebra::DVector::from_vec(x.clone());
        for (l, layer) in p.layers.iter().enumerate() {
            let w = DMatrix::from_row_slice(layer.outputs, layer.inputs, &layer.weights);
            h = w * h + nalgebra::DVector::from_vec(layer.bias.clone());
            if l + 1 < p.layers.len() {
                h = h.map(f64::tanh);
            }
        }
        let y = p.forward(&x).unwrap();
        for i in 0..4 {
            assert!((y[i] - h[i]).abs() < 1e-12);
        }
        assert_eq!(p.forward_cached(&x).unwrap().output(), y.as_slice());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let p = MlpParameters::zeros(&[17, 8, 4]);
        assert!(matches!(p.forward(&[0.0; 16]), Err(Error::InvalidInput(_))));
    }

    fn loss(p: &MlpParameters, x: &[f64], g: &[f64]) -> f64 {
        p.forward(x).unwrap().iter().zip(g).map(|(y, g)| y * g).sum()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let eps = 1e-5;
        for case in 0..20 {
            let sizes = [3 + case % 3, 5, 4, 2];
            let mut p = random_params(&sizes, &mut rng);
            let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
            let og: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut grads = p.zeros_like();
            let cache = p.forward_cached(&x).unwrap();
            let gx = p.backward(&cache, &og, &mut grads);

            let mut worst: f64 = 0.0;
            let flat_grads = grads.to_flat();
            let theta = p.to_flat();
            for k in 0..theta.len() {
                let mut t = theta.clone();
                t[k] = theta[k] + eps;
                p.set_flat(&t);
                let up = loss(&p, &x, &og);
                t[k] = theta[k] - eps;
                p.set_flat(&t);
                let down = loss(&p, &x, &og);
                worst = worst.max(rel_err(flat_grads[k], (up - down) / (2.0 * eps)));
            }
            p.set_flat(&theta);
            for i in 0..x.len() {
                let mut xp = x.clone();
                xp[i] += eps;
                let mut xm = x.clone();
                xm[i] -= eps;
                let fd = (loss(&p, &xp, &og) - loss(&p, &xm, &og)) / (2.0 * eps);
                worst = worst.max(rel_err(gx[i], fd));
            }
            assert!(worst < 1e-5, "case {case}: {worst}");
        }
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_params(&[4, 6, 2], &mut rng);
        let mut g = p.zeros_like();
        let cache = p.forward_cached(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let gx = p.backward(&cache, &[0.0, 0.0], &mut g);
        assert!(g.buffers().flatten().all(|v| *v == 0.0));
        assert!(gx.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_network_gradient_is_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_params(&[3, 2], &mut rng);
        let x = [0.5, -1.5, 2.0];
        let og = [0.25, -4.0];
        let mut g = p.zeros_like();
        let gx = p.backward(&p.forward_cached(&x).unwrap(), &og, &mut g);
        for o in 0..2 {
            for i in 0..3 {
                assert_eq!(g.layers[0].weights[o * 3 + i], og[o] * x[i]);
            }
            assert_eq!(g.layers[0].bias[o], og[o]);
        }
        for i in 0..3 {
            let expect = og[0] * p.layers[0].weights[i] + og[1] * p.layers[0].weights[3 + i];
            assert!((gx[i] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn orthogonal_init() {
        let sizes = [17, 64, 64, 4];
        let gains = [2f64.sqrt(), 2f64.sqrt(), 0.01];
        let a = MlpParameters::initialize(&sizes, &gains, 5).unwrap();
        let b = MlpParameters::initialize(&sizes, &gains, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, MlpParameters::initialize(&sizes, &gains, 6).unwrap());
        for (layer, gain) in a.layers.iter().zip(gains).take(2) {
            let w = DMatrix::from_row_slice(layer.outputs, layer.inputs, &layer.weights);
            let wtw = w.transpose() * &w;
            let expect = DMatrix::<f64>::identity(layer.inputs, layer.inputs) * gain * gain;
            assert!((wtw - expect).abs().max() < 1e-6);
            assert!(layer.bias.iter().all(|b| *b == 0.0));
        }
        let out = &a.layers[2];
        let norm = out.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm <= 0.01 * ((out.inputs * out.outputs) as f64).sqrt());
        // Rows of the wide output layer are orthonormal up to the gain.
        let w = DMatrix::from_row_slice(out.outputs, out.inputs, &out.weights);
        let wwt = &w * w.transpose();
        assert!((wwt - DMatrix::<f64>::identity(4, 4) * 1e-4).abs().max() < 1e-12);
    }
}

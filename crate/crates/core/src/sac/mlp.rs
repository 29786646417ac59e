//! Fully connected network with rectifier hidden layers and a linear output.
//!
//! Batches are row-major `batch x dim` buffers. Matrix products go through
//! `matrixmultiply::dgemm`; everything else is plain loops.

use rand::Rng;

use crate::{Error, Result, SeededRng};

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Per-layer outputs of a batched forward pass. Entry 0 is the input.
#[derive(Debug, Clone)]
pub struct Activations {
    pub batch: usize,
    pub layers: Vec<Vec<f64>>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.layers.last().expect("at least the input")
    }
}

/// Parameter gradients, same layout as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn slices(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|&g| g == 0.0))
    }
}

/// `c = a * b (+ c if accumulate)` with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    c: &mut [f64],
    accumulate: bool,
) {
    debug_assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: the callers size `a`, `b` and `c` for the given dimensions and
    // strides; `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Mlp {
    /// Uniform init in `+-1/sqrt(fan_in)` for weights and biases.
    pub fn new(sizes: &[usize], rng: &mut SeededRng) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.in_dim as f64).sqrt();
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *w = rng.gen_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::config(
                "sac.layer_sizes",
                format!("need at least two nonzero layer sizes, got {sizes:?}"),
            ));
        }
        Ok(Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Checkpoint("network has no layers".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::Shape {
                    expected: pair[0].out_dim,
                    actual: pair[1].in_dim,
                });
            }
        }
        for layer in &layers {
            if layer.weights.len() != layer.in_dim * layer.out_dim {
                return Err(Error::Shape {
                    expected: layer.in_dim * layer.out_dim,
                    actual: layer.weights.len(),
                });
            }
            if layer.bias.len() != layer.out_dim {
                return Err(Error::Shape {
                    expected: layer.out_dim,
                    actual: layer.bias.len(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").out_dim
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.out_dim))
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Weight and bias buffers in a fixed order (layer by layer, weights first).
    pub fn params(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            weights: self.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: self.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let acts = self.forward_batch(input, 1)?;
        Ok(acts.layers.into_iter().last().expect("nonempty"))
    }

    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Result<Activations> {
        if inputs.len() != batch * self.input_dim() {
            return Err(Error::Shape {
                expected: batch * self.input_dim(),
                actual: inputs.len(),
            });
        }
        let mut layers = Vec::with_capacity(self.layers.len() + 1);
        layers.push(inputs.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let x = layers.last().expect("nonempty");
            let mut z = Vec::with_capacity(batch * layer.out_dim);
            for _ in 0..batch {
                z.extend_from_slice(&layer.bias);
            }
            // z (batch x out) += x (batch x in) * W^T (in x out)
            gemm(
                batch,
                layer.in_dim,
                layer.out_dim,
                x,
                layer.in_dim,
                1,
                &layer.weights,
                1,
                layer.in_dim,
                &mut z,
                true,
            );
            if i != last {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            layers.push(z);
        }
        Ok(Activations { batch, layers })
    }

    /// Gradients of `sum_b upstream_b . output_b` for a cached batch.
    pub fn backward_batch(&self, acts: &Activations, upstream: &[f64]) -> Result<Gradients> {
        let batch = acts.batch;
        if upstream.len() != batch * self.output_dim() {
            return Err(Error::Shape {
                expected: batch * self.output_dim(),
                actual: upstream.len(),
            });
        }
        let mut grads = self.zero_gradients();
        let mut delta = upstream.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let x = &acts.layers[i];
            // dW (out x in) = delta^T (out x batch) * x (batch x in)
            gemm(
                layer.out_dim,
                batch,
                layer.in_dim,
                &delta,
                1,
                layer.out_dim,
                x,
                layer.in_dim,
                1,
                &mut grads.weights[i],
                false,
            );
            let db = &mut grads.biases[i];
            for row in delta.chunks_exact(layer.out_dim) {
                for (g, d) in db.iter_mut().zip(row) {
                    *g += d;
                }
            }
            if i == 0 {
                break;
            }
            // dX (batch x in) = delta (batch x out) * W (out x in)
            let mut prev = vec![0.0; batch * layer.in_dim];
            gemm(
                batch,
                layer.out_dim,
                layer.in_dim,
                &delta,
                layer.out_dim,
                1,
                &layer.weights,
                layer.in_dim,
                1,
                &mut prev,
                false,
            );
            // Rectifier mask from the previous layer's output.
            for (d, &a) in prev.iter_mut().zip(x) {
                if a <= 0.0 {
                    *d = 0.0;
                }
            }
            delta = prev;
        }
        Ok(grads)
    }

    /// Gradients of `upstream . forward(input)` for a single input.
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Gradients> {
        let acts = self.forward_batch(input, 1)?;
        self.backward_batch(&acts, upstream)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    fn single(weight: f64, bias: f64) -> Mlp {
        Mlp::from_layers(vec![Dense {
            in_dim: 1,
            out_dim: 1,
            weights: vec![weight],
            bias: vec![bias],
        }])
        .unwrap()
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = Mlp::zeros(&[4, 8, 3]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn affine_output_is_linear() {
        assert_eq!(single(2.0, 1.0).forward(&[3.0]).unwrap(), vec![7.0]);
        assert_eq!(single(2.0, 1.0).forward(&[-3.0]).unwrap(), vec![-5.0]);
    }

    #[test]
    fn rectifier_clamps_hidden() {
        let net = Mlp::from_layers(vec![
            Dense {
                in_dim: 1,
                out_dim: 1,
                weights: vec![-1.0],
                bias: vec![0.0],
            },
            Dense {
                in_dim: 1,
                out_dim: 1,
                weights: vec![1.0],
                bias: vec![0.0],
            },
        ])
        .unwrap();
        let acts = net.forward_batch(&[5.0], 1).unwrap();
        assert_eq!(acts.layers[1], vec![0.0]);
        assert_eq!(acts.output(), &[0.0]);
    }

    #[test]
    fn shape_errors() {
        let net = Mlp::zeros(&[3, 2]).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::Shape { expected: 3, actual: 1 })));
        assert!(matches!(
            net.backward(&[1.0, 2.0, 3.0], &[1.0]),
            Err(Error::Shape { expected: 2, actual: 1 })
        ));
        assert!(Mlp::zeros(&[3]).is_err());
        assert!(Mlp::zeros(&[3, 0, 2]).is_err());
    }

    #[test]
    fn zero_upstream_zero_gradients() {
        let net = Mlp::new(&[5, 7, 3], &mut seeded_rng(1, 0)).unwrap();
        let g = net.backward(&[0.1, 0.2, 0.3, 0.4, 0.5], &[0.0; 3]).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn linear_weight_gradient_is_input() {
        let g = single(0.7, -0.2).backward(&[3.5], &[1.0]).unwrap();
        assert_eq!(g.weights[0], vec![3.5]);
        assert_eq!(g.biases[0], vec![1.0]);
    }

    #[test]
    fn batch_matches_single_rows() {
        let net = Mlp::new(&[6, 16, 16, 4], &mut seeded_rng(3, 0)).unwrap();
        let mut rng = seeded_rng(4, 0);
        let inputs: Vec<f64> = (0..5 * 6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upstream: Vec<f64> = (0..5 * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let acts = net.forward_batch(&inputs, 5).unwrap();
        let total = net.backward_batch(&acts, &upstream).unwrap();
        let mut summed = net.zero_gradients();
        for b in 0..5 {
            let x = &inputs[b * 6..(b + 1) * 6];
            let out = net.forward(x).unwrap();
            for (o, e) in out.iter().zip(&acts.output()[b * 4..(b + 1) * 4]) {
                assert!((o - e).abs() < 1e-12);
            }
            let g = net.backward(x, &upstream[b * 4..(b + 1) * 4]).unwrap();
            for (s, gi) in summed.weights.iter_mut().chain(summed.biases.iter_mut()).zip(g.weights.iter().chain(&g.biases)) {
                for (a, b) in s.iter_mut().zip(gi) {
                    *a += b;
                }
            }
        }
        for (a, b) in total.slices().iter().zip(summed.slices()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}

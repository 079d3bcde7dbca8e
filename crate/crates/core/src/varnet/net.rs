use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fully connected network: `tanh` on every hidden layer, linear output.
///
/// Layer `k` maps `sizes[k]` inputs to `sizes[k + 1]` outputs with weight
/// matrix `W_k` (`sizes[k+1] × sizes[k]`) and bias `b_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    sizes: Vec<usize>,
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
}

/// Activations recorded by [`DenseNet::forward_tape`]: `inputs[k]` is the
/// input to layer `k` (for `k > 0` already passed through `tanh`).
#[derive(Debug, Clone)]
pub struct Tape {
    inputs: Vec<DVector<f64>>,
    output: DVector<f64>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.output.as_slice()
    }
}

/// Reverse-mode result for one backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct NetGradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
    pub input: DVector<f64>,
}

impl NetGradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            weights: net
                .weights
                .iter()
                .map(|w| DMatrix::zeros(w.nrows(), w.ncols()))
                .collect(),
            biases: net.biases.iter().map(|b| DVector::zeros(b.len())).collect(),
            input: DVector::zeros(net.input_len()),
        }
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::config(
            "net.layers",
            format!("need >= 2 positive layer sizes, got {sizes:?}"),
        ));
    }
    Ok(())
}

impl DenseNet {
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        check_sizes(sizes)?;
        Ok(Self {
            sizes: sizes.to_vec(),
            weights: sizes.windows(2).map(|w| DMatrix::zeros(w[1], w[0])).collect(),
            biases: sizes[1..].iter().map(|&n| DVector::zeros(n)).collect(),
        })
    }

    /// Glorot-scaled normal weights, zero biases. The output layer is shrunk
    /// by `output_scale` so a fresh network starts close to zero output.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], output_scale: f64, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let last = net.weights.len() - 1;
        for (k, w) in net.weights.iter_mut().enumerate() {
            let mut std = (2.0 / (w.nrows() + w.ncols()) as f64).sqrt();
            if k == last {
                std *= output_scale;
            }
            for x in w.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *x = std * z;
            }
        }
        Ok(net)
    }

    pub fn from_parts(weights: Vec<DMatrix<f64>>, biases: Vec<DVector<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::DimensionMismatch {
                what: "layer count",
                expected: weights.len(),
                found: biases.len(),
            });
        }
        let mut sizes = vec![weights[0].ncols()];
        for (k, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.ncols() != sizes[k] {
                return Err(Error::DimensionMismatch {
                    what: "layer input width",
                    expected: sizes[k],
                    found: w.ncols(),
                });
            }
            if b.len() != w.nrows() {
                return Err(Error::DimensionMismatch {
                    what: "bias length",
                    expected: w.nrows(),
                    found: b.len(),
                });
            }
            sizes.push(w.nrows());
        }
        check_sizes(&sizes)?;
        Ok(Self { sizes, weights, biases })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn weights(&self) -> &[DMatrix<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[DVector<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [DMatrix<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [DVector<f64>] {
        &mut self.biases
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_len() {
            return Err(Error::DimensionMismatch {
                what: "network input",
                expected: self.input_len(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut a = DVector::from_column_slice(x);
        let last = self.weights.len() - 1;
        for (k, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = b.clone();
            z.gemv(1.0, w, &a, 1.0);
            if k < last {
                z.apply(|v| *v = v.tanh());
            }
            a = z;
        }
        Ok(a.data.into())
    }

    /// Forward pass keeping what the backward pass needs.
    pub fn forward_tape(&self, x: &[f64]) -> Result<Tape> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.weights.len());
        let mut a = DVector::from_column_slice(x);
        let last = self.weights.len() - 1;
        for (k, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = b.clone();
            z.gemv(1.0, w, &a, 1.0);
            if k < last {
                z.apply(|v| *v = v.tanh());
            }
            inputs.push(std::mem::replace(&mut a, z));
        }
        Ok(Tape { inputs, output: a })
    }

    /// Accumulate `∂L/∂(params, input)` given `∂L/∂output` into `grads`.
    /// Parameter gradients are added; the input gradient is overwritten.
    pub fn backward(&self, tape: &Tape, grad_output: &[f64], grads: &mut NetGradients) -> Result<()> {
        if grad_output.len() != self.output_len() {
            return Err(Error::DimensionMismatch {
                what: "output gradient",
                expected: self.output_len(),
                found: grad_output.len(),
            });
        }
        let mut delta = DVector::from_column_slice(grad_output);
        for k in (0..self.weights.len()).rev() {
            let a = &tape.inputs[k];
            grads.weights[k].ger(1.0, &delta, a, 1.0);
            grads.biases[k] += &delta;
            let mut back = self.weights[k].tr_mul(&delta);
            if k > 0 {
                // a = tanh(z), so dtanh/dz = 1 - a²
                back.zip_apply(a, |g, act| *g *= 1.0 - act * act);
            }
            delta = back;
        }
        grads.input = delta;
        Ok(())
    }

    /// Exact gradient of output coordinate `index` with respect to the input.
    pub fn gradient_of_output(&self, x: &[f64], index: usize) -> Result<Vec<f64>> {
        if index >= self.output_len() {
            return Err(Error::domain(format!(
                "output index {index} out of range for {} outputs",
                self.output_len()
            )));
        }
        let tape = self.forward_tape(x)?;
        Ok(self
            .input_jacobian_from_tape(&tape, &[index])
            .row(0)
            .iter()
            .copied()
            .collect())
    }

    /// Rows of the input Jacobian for the selected outputs, sharing one tape.
    pub fn input_jacobian_from_tape(&self, tape: &Tape, outputs: &[usize]) -> DMatrix<f64> {
        // Backpropagate all selected unit vectors at once: row r of `delta`
        // carries e_{outputs[r]}.
        let mut delta = DMatrix::zeros(outputs.len(), self.output_len());
        for (r, &o) in outputs.iter().enumerate() {
            delta[(r, o)] = 1.0;
        }
        for k in (0..self.weights.len()).rev() {
            let mut back = &delta * &self.weights[k];
            if k > 0 {
                let a = &tape.inputs[k];
                for (j, mut col) in back.column_iter_mut().enumerate() {
                    col *= 1.0 - a[j] * a[j];
                }
            }
            delta = back;
        }
        delta
    }

    /// Full input Jacobian (`output_len × input_len`).
    pub fn input_jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let tape = self.forward_tape(x)?;
        let all: Vec<usize> = (0..self.output_len()).collect();
        Ok(self.input_jacobian_from_tape(&tape, &all))
    }
}

//! Feed-forward binary classifier over a flat parameter vector.
//!
//! Hidden layers use a leaky rectifier, the single output unit uses the
//! logistic function. Parameters are stored layer by layer as a row-major
//! `fan_out x fan_in` weight block followed by `fan_out` biases.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Dataset;
use crate::error::{FairError, Result};
use crate::surrogate::sigmoid;

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;
pub const CHECKPOINT_FORMAT: &str = "fairsqp-model";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Outputs are kept this far away from 0 and 1 before taking logs.
const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub layer_sizes: Vec<usize>,
    pub leaky_slope: f64,
    pub weights: Vec<f64>,
}

/// Number of trainable parameters for the given layer widths.
pub fn param_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

fn check_layers(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(FairError::invalid("a network needs an input and an output layer"));
    }
    if layer_sizes.contains(&0) {
        return Err(FairError::invalid("layer widths must be positive"));
    }
    if *layer_sizes.last().unwrap() != 1 {
        return Err(FairError::invalid("the output layer must have width 1"));
    }
    Ok(())
}

impl ModelParams {
    pub fn zeros(layer_sizes: Vec<usize>, leaky_slope: f64) -> Result<Self> {
        check_layers(&layer_sizes)?;
        let n = param_count(&layer_sizes);
        Ok(Self {
            layer_sizes,
            leaky_slope,
            weights: vec![0.0; n],
        })
    }

    pub fn from_weights(layer_sizes: Vec<usize>, leaky_slope: f64, weights: Vec<f64>) -> Result<Self> {
        check_layers(&layer_sizes)?;
        let n = param_count(&layer_sizes);
        if weights.len() != n {
            return Err(FairError::Shape {
                expected: n,
                actual: weights.len(),
            });
        }
        Ok(Self {
            layer_sizes,
            leaky_slope,
            weights,
        })
    }

    /// Glorot-uniform weights in `+-sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init<R: Rng + ?Sized>(layer_sizes: Vec<usize>, leaky_slope: f64, rng: &mut R) -> Result<Self> {
        let mut params = Self::zeros(layer_sizes, leaky_slope)?;
        let mut offset = 0;
        for w in params.layer_sizes.clone().windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in &mut params.weights[offset..offset + fan_in * fan_out] {
                *v = rng.gen_range(-limit..limit);
            }
            offset += (fan_in + 1) * fan_out;
        }
        Ok(params)
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn layers(&self) -> impl Iterator<Item = LayerSlice> + '_ {
        let mut offset = 0;
        self.layer_sizes.windows(2).map(move |w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weight = offset;
            let bias = offset + fan_in * fan_out;
            offset = bias + fan_out;
            LayerSlice {
                fan_in,
                fan_out,
                weight,
                bias,
            }
        })
    }

    fn leaky(&self, z: f64) -> f64 {
        if z > 0.0 {
            z
        } else {
            self.leaky_slope * z
        }
    }

    fn leaky_derivative(&self, z: f64) -> f64 {
        if z > 0.0 {
            1.0
        } else {
            self.leaky_slope
        }
    }

    /// Network output for one feature row.
    pub fn forward(&self, features: &[f64]) -> Result<f64> {
        let x = ArrayView2::from_shape((1, features.len()), features).map_err(|e| FairError::invalid(e.to_string()))?;
        Ok(self.forward_pass(x)?.outputs[0])
    }

    /// Network outputs for every row of `features`.
    pub fn forward_batch(&self, features: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        Ok(self.forward_pass(features)?.outputs)
    }

    /// Forward evaluation that keeps the intermediate activations for
    /// reverse-mode products.
    pub fn forward_pass(&self, features: ArrayView2<'_, f64>) -> Result<ForwardPass> {
        if features.ncols() != self.input_width() {
            return Err(FairError::Shape {
                expected: self.input_width(),
                actual: features.ncols(),
            });
        }
        let n_layers = self.layer_sizes.len() - 1;
        let mut inputs: Vec<Array2<f64>> = Vec::with_capacity(n_layers);
        let mut pre: Vec<Array2<f64>> = Vec::with_capacity(n_layers);
        let mut current = features.to_owned();
        for (l, layer) in self.layers().enumerate() {
            let w = layer.weight_view(&self.weights);
            let mut z = current.dot(&w.t());
            let b = &self.weights[layer.bias..layer.bias + layer.fan_out];
            for mut row in z.rows_mut() {
                for (v, bj) in row.iter_mut().zip(b) {
                    *v += bj;
                }
            }
            let next = if l + 1 < n_layers {
                z.mapv(|v| self.leaky(v))
            } else {
                Array2::zeros((0, 0))
            };
            inputs.push(std::mem::replace(&mut current, next));
            pre.push(z);
        }
        let logits: Vec<f64> = pre.last().unwrap().column(0).to_vec();
        let outputs = logits.iter().map(|&z| sigmoid(z)).collect();
        Ok(ForwardPass {
            inputs,
            pre,
            logits,
            outputs,
        })
    }

    /// `sum_i seed_i * d logit_i / d w` by reverse accumulation.
    pub fn backward_logit(&self, pass: &ForwardPass, seed: &[f64]) -> Vec<f64> {
        assert_eq!(seed.len(), pass.len(), "seed length must match the batch");
        let mut grad = vec![0.0; self.len()];
        let layers: Vec<LayerSlice> = self.layers().collect();
        let mut delta = Array2::from_shape_vec((seed.len(), 1), seed.to_vec()).unwrap();
        for l in (0..layers.len()).rev() {
            let layer = &layers[l];
            let a = &pass.inputs[l];
            let dw = delta.t().dot(a);
            grad[layer.weight..layer.bias]
                .iter_mut()
                .zip(dw.iter())
                .for_each(|(g, v)| *g = *v);
            let db = delta.sum_axis(Axis(0));
            grad[layer.bias..layer.bias + layer.fan_out]
                .iter_mut()
                .zip(db.iter())
                .for_each(|(g, v)| *g = *v);
            if l > 0 {
                let w = layer.weight_view(&self.weights);
                let mut da = delta.dot(&w);
                da.zip_mut_with(&pass.pre[l - 1], |d, &z| *d *= self.leaky_derivative(z));
                delta = da;
            }
        }
        grad
    }

    /// `sum_i seed_i * d output_i / d w`.
    pub fn backward_output(&self, pass: &ForwardPass, seed: &[f64]) -> Vec<f64> {
        let logit_seed: Vec<f64> = seed
            .iter()
            .zip(&pass.outputs)
            .map(|(s, &p)| s * p * (1.0 - p))
            .collect();
        self.backward_logit(pass, &logit_seed)
    }

    /// Mean binary cross-entropy over `indices` and its gradient.
    pub fn bce_loss_and_grad(&self, dataset: &Dataset, indices: &[usize]) -> Result<(f64, Vec<f64>)> {
        if indices.is_empty() {
            return Err(FairError::invalid("empty sample index set"));
        }
        let x = dataset.features_for(indices)?;
        let pass = self.forward_pass(x.view())?;
        let labels: Vec<f64> = indices.iter().map(|&i| dataset.labels[i] as f64).collect();
        Ok(self.bce_from_pass(&pass, &labels))
    }

    pub(crate) fn bce_from_pass(&self, pass: &ForwardPass, labels: &[f64]) -> (f64, Vec<f64>) {
        let n = labels.len() as f64;
        let loss = pass.outputs.iter().zip(labels).map(|(&p, &y)| bce(p, y)).sum::<f64>() / n;
        let seed: Vec<f64> = pass.outputs.iter().zip(labels).map(|(&p, &y)| (p - y) / n).collect();
        (loss, self.backward_logit(pass, &seed))
    }

    /// One row per sample: the gradient of that sample's output.
    pub fn output_grads(&self, dataset: &Dataset, indices: &[usize]) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((indices.len(), self.len()));
        for (row, &i) in indices.iter().enumerate() {
            let x = dataset.features_for(&[i])?;
            let pass = self.forward_pass(x.view())?;
            let g = self.backward_output(&pass, &[1.0]);
            out.row_mut(row).iter_mut().zip(g).for_each(|(o, v)| *o = v);
        }
        Ok(out)
    }

    /// SHA-256 over the little-endian bit patterns of the weights.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for w in &self.weights {
            hasher.update(w.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let ckpt = Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            params: self.clone(),
        };
        fs::write(path, serde_json::to_string_pretty(&ckpt)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(FairError::invalid(format!(
                "unsupported checkpoint {} v{}",
                ckpt.format, ckpt.version
            )));
        }
        let p = ckpt.params;
        Self::from_weights(p.layer_sizes, p.leaky_slope, p.weights)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    #[serde(flatten)]
    params: ModelParams,
}

#[derive(Debug, Clone, Copy)]
struct LayerSlice {
    fan_in: usize,
    fan_out: usize,
    weight: usize,
    bias: usize,
}

impl LayerSlice {
    fn weight_view<'a>(&self, weights: &'a [f64]) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape((self.fan_out, self.fan_in), &weights[self.weight..self.bias]).unwrap()
    }
}

/// Cached activations of one forward evaluation.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    pub logits: Vec<f64>,
    pub outputs: Vec<f64>,
}

impl ForwardPass {
    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }
}

/// Binary cross-entropy of one prediction with clamped logs.
pub fn bce(p: f64, y: f64) -> f64 {
    let p = p.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_dataset(n: usize, width: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features = Array2::from_shape_fn((n, width), |_| rng.gen_range(-2.0..2.0));
        let sensitive = (0..n).map(|i| (i % 2) as u8).collect();
        let labels = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
        Dataset::new("toy", features, sensitive, labels).unwrap()
    }

    #[test]
    fn param_count_matches_layout() {
        assert_eq!(param_count(&[11, 1]), 12);
        assert_eq!(param_count(&[90, 128, 64, 1]), 91 * 128 + 129 * 64 + 65);
        assert!(ModelParams::zeros(vec![3, 2], 0.01).is_err());
        assert!(ModelParams::zeros(vec![3], 0.01).is_err());
    }

    #[test]
    fn zero_weights_give_half() {
        let m = ModelParams::zeros(vec![4, 3, 1], 0.01).unwrap();
        assert_eq!(m.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap(), 0.5);
    }

    #[test]
    fn linear_model_hand_weights() {
        let m = ModelParams::from_weights(vec![2, 1], 0.01, vec![1.0, -1.0, 0.0]).unwrap();
        // logistic(2 - 1)
        assert_relative_eq!(
            m.forward(&[2.0, 1.0]).unwrap(),
            0.731_058_578_630_004_9,
            epsilon = 1e-15
        );
    }

    #[test]
    fn width_mismatch_is_shape_error() {
        let m = ModelParams::zeros(vec![3, 1], 0.01).unwrap();
        assert!(matches!(
            m.forward(&[1.0, 2.0]),
            Err(FairError::Shape { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn batch_equals_single_calls() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = ModelParams::init(vec![5, 4, 3, 1], 0.01, &mut rng).unwrap();
        let d = toy_dataset(17, 5, 4);
        let batch = m.forward_batch(d.features.view()).unwrap();
        for (i, row) in d.features.rows().into_iter().enumerate() {
            assert_eq!(batch[i], m.forward(row.as_slice().unwrap()).unwrap());
        }
    }

    #[test]
    fn half_outputs_give_ln2_loss() {
        let m = ModelParams::zeros(vec![3, 1], 0.01).unwrap();
        let d = toy_dataset(9, 3, 1);
        let idx: Vec<usize> = (0..9).collect();
        let (loss, _) = m.bce_loss_and_grad(&d, &idx).unwrap();
        assert_relative_eq!(loss, std::f64::consts::LN_2, epsilon = 1e-15);
        assert!(m.bce_loss_and_grad(&d, &[]).is_err());
    }

    #[test]
    fn confident_correct_predictions_have_tiny_loss() {
        let features = Array2::from_shape_vec((2, 1), vec![1.0, -1.0]).unwrap();
        let d = Dataset::new("c", features, vec![0, 1], vec![1, 0]).unwrap();
        let m = ModelParams::from_weights(vec![1, 1], 0.01, vec![40.0, 0.0]).unwrap();
        let (loss, _) = m.bce_loss_and_grad(&d, &[0, 1]).unwrap();
        assert!(loss <= 1e-10 && loss > 0.0);
    }

    #[test]
    fn linear_output_gradient_closed_form() {
        let d = toy_dataset(6, 3, 9);
        let m = ModelParams::from_weights(vec![3, 1], 0.01, vec![0.3, -0.2, 0.5, 0.1]).unwrap();
        let rows = m.output_grads(&d, &[0, 1, 2, 2]).unwrap();
        for (r, &i) in [0usize, 1, 2, 2].iter().enumerate() {
            let x = d.features.row(i);
            let z = x[0] * 0.3 - 0.2 * x[1] + 0.5 * x[2] + 0.1;
            let s = sigmoid(z) * (1.0 - sigmoid(z));
            for j in 0..3 {
                assert_relative_eq!(rows[[r, j]], s * x[j], epsilon = 1e-15);
            }
            assert_relative_eq!(rows[[r, 3]], s, epsilon = 1e-15);
        }
        assert_eq!(rows.row(2), rows.row(3));
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = ModelParams::init(vec![4, 3, 1], 0.02, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        let back = ModelParams::load(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.checksum(), m.checksum());
    }
}

//! Multilayer perceptron: linear input/output transfer, sigmoid hidden
//! layers, trainable by per-event stochastic descent or full-batch BFGS.
//!
//! The default layout is 10-10-1: ten inputs, one equally sized hidden
//! layer, a single output node. The output node is linear — no squashing —
//! so raw outputs can leave `[0, 1]`; classification applies a threshold to
//! the raw output. Per-event error is `½(output − target)²` with targets
//! hadron = 0, gamma = 1.

mod bfgs;
mod gradient;
mod train;

pub use bfgs::{minimize, BfgsOptions, BfgsOutcome, StopReason};
pub use gradient::backprop_gradient;
pub use train::{
    train, write_error_curve_csv, LabeledSample, MlpTrainConfig, TrainMethod, TrainRecordMlp,
};

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::{ClassLabel, Normalizer, FEATURE_COUNT};

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    ModelFormat {
        path: String,
        line: usize,
        message: String,
    },
}

/// Layer sizes: input, any number of hidden layers, output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpLayout {
    pub input_size: usize,
    pub hidden_sizes: Vec<usize>,
    pub output_size: usize,
}

impl Default for MlpLayout {
    /// The 10-10-1 network: ten image parameters in, one decision value out.
    fn default() -> Self {
        MlpLayout {
            input_size: FEATURE_COUNT,
            hidden_sizes: vec![FEATURE_COUNT],
            output_size: 1,
        }
    }
}

impl MlpLayout {
    pub fn new(
        input_size: usize,
        hidden_sizes: Vec<usize>,
        output_size: usize,
    ) -> Result<Self, MlpError> {
        let layout = MlpLayout {
            input_size,
            hidden_sizes,
            output_size,
        };
        layout.validate()?;
        Ok(layout)
    }

    fn validate(&self) -> Result<(), MlpError> {
        if self.input_size == 0 || self.output_size == 0 {
            return Err(MlpError::InvalidLayout(
                "input and output sizes must be >= 1".into(),
            ));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(MlpError::InvalidLayout("hidden sizes must be >= 1".into()));
        }
        Ok(())
    }

    /// `(in_dim, out_dim)` per weighted layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let sizes: Vec<usize> = std::iter::once(self.input_size)
            .chain(self.hidden_sizes.iter().copied())
            .chain(std::iter::once(self.output_size))
            .collect();
        sizes.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// The logistic sigmoid `1/(1 + exp(−x))`, applied at hidden nodes only.
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-event error `½(output − target)²`.
pub fn event_error(output: f64, target: f64) -> f64 {
    let diff = output - target;
    0.5 * diff * diff
}

/// One weighted layer. `weights` is row-major `out_dim × in_dim`:
/// `weights[o * in_dim + i]` connects input `i` to output `o`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// A feed-forward perceptron. Treated as an immutable value: training
/// returns a new network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    layout: MlpLayout,
    pub(crate) layers: Vec<Layer>,
}

/// All per-layer activations of one forward evaluation: `activations[0]`
/// is the input itself, the last entry is the output layer.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub activations: Vec<Vec<f64>>,
}

impl ForwardPass {
    /// The scalar decision value: node 0 of the output layer.
    pub fn output(&self) -> f64 {
        self.activations.last().expect("non-empty pass")[0]
    }
}

impl MlpNetwork {
    /// Random initialization: weights uniform in `[−1/√fan_in, +1/√fan_in]`
    /// per layer, biases zero. Deterministic per seed.
    pub fn init(layout: MlpLayout, seed: u64) -> Result<MlpNetwork, MlpError> {
        layout.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layout
            .layer_dims()
            .into_iter()
            .map(|(in_dim, out_dim)| {
                let bound = 1.0 / (in_dim as f64).sqrt();
                let weights = (0..in_dim * out_dim)
                    .map(|_| rng.random_range(-bound..=bound))
                    .collect();
                Layer {
                    in_dim,
                    out_dim,
                    weights,
                    biases: vec![0.0; out_dim],
                }
            })
            .collect();
        Ok(MlpNetwork { layout, layers })
    }

    pub fn layout(&self) -> &MlpLayout {
        &self.layout
    }

    /// Total number of weights and biases.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Flattens all parameters: per layer, weights row-major then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.biases);
        }
        out
    }

    /// A copy of this network with parameters replaced from a flat slice
    /// (inverse of [`params`](Self::params)).
    pub fn with_params(&self, params: &[f64]) -> MlpNetwork {
        let mut net = self.clone();
        net.set_params(params);
        net
    }

    pub(crate) fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count(), "parameter count mismatch");
        let mut offset = 0;
        for layer in &mut self.layers {
            let w = layer.weights.len();
            layer.weights.copy_from_slice(&params[offset..offset + w]);
            offset += w;
            let b = layer.biases.len();
            layer.biases.copy_from_slice(&params[offset..offset + b]);
            offset += b;
        }
    }

    /// Forward evaluation. The input passes through unchanged, every hidden
    /// layer applies the sigmoid to its affine pre-activation, and the
    /// output layer stays affine (linear transfer).
    pub fn forward(&self, x: &[f64]) -> ForwardPass {
        assert_eq!(x.len(), self.layout.input_size, "input dimension mismatch");
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let prev = &activations[l];
            let mut next = Vec::with_capacity(layer.out_dim);
            for o in 0..layer.out_dim {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                let mut z = layer.biases[o];
                for (w, a) in row.iter().zip(prev) {
                    z += w * a;
                }
                next.push(if l == last { z } else { sigmoid(z) });
            }
            activations.push(next);
        }
        ForwardPass { activations }
    }

    /// The scalar decision value for `x`.
    pub fn output(&self, x: &[f64]) -> f64 {
        self.forward(x).output()
    }

    /// Mean per-event error over a labeled set.
    pub fn dataset_error(&self, data: &[LabeledSample]) -> f64 {
        assert!(!data.is_empty(), "dataset_error on empty data");
        let sum: f64 = data
            .iter()
            .map(|s| event_error(self.output(&s.input), s.target))
            .sum();
        sum / data.len() as f64
    }

    /// Thresholded decision: `Gamma` when the raw output is at or above the
    /// threshold, `Hadron` otherwise.
    pub fn classify(&self, x: &[f64], threshold: f64) -> ClassLabel {
        if self.output(x) >= threshold {
            ClassLabel::Gamma
        } else {
            ClassLabel::Hadron
        }
    }

    /// Writes the model in the versioned key-value text format. An attached
    /// normalizer (when the model was trained on normalized features) is
    /// embedded so classification can reproduce the training-time scaling.
    pub fn save(
        &self,
        path: impl AsRef<Path>,
        normalizer: Option<&Normalizer>,
    ) -> Result<(), MlpError> {
        let path = path.as_ref();
        let wrap = |source| MlpError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = File::create(path).map_err(wrap)?;
        let mut w = BufWriter::new(file);
        self.write_model(&mut w, normalizer).map_err(wrap)?;
        w.flush().map_err(wrap)
    }

    fn write_model<W: Write>(&self, w: &mut W, normalizer: Option<&Normalizer>) -> io::Result<()> {
        writeln!(w, "format mlp v1")?;
        let mut layout_line = format!("layout {}", self.layout.input_size);
        for h in &self.layout.hidden_sizes {
            layout_line.push_str(&format!(" {h}"));
        }
        layout_line.push_str(&format!(" {}", self.layout.output_size));
        writeln!(w, "{layout_line}")?;
        for (i, layer) in self.layers.iter().enumerate() {
            writeln!(w, "layer{i}_weights {}", join_numbers(&layer.weights))?;
            writeln!(w, "layer{i}_biases {}", join_numbers(&layer.biases))?;
        }
        if let Some(n) = normalizer {
            writeln!(w, "normalizer_mins {}", join_numbers(n.mins()))?;
            writeln!(w, "normalizer_maxs {}", join_numbers(n.maxs()))?;
        }
        Ok(())
    }

    /// Reads a model written by [`save`](Self::save).
    pub fn load(path: impl AsRef<Path>) -> Result<(MlpNetwork, Option<Normalizer>), MlpError> {
        let path = path.as_ref();
        let path_str = path.display().to_string();
        let file = File::open(path).map_err(|source| MlpError::Io {
            path: path_str.clone(),
            source,
        })?;
        let fail = |line: usize, message: String| MlpError::ModelFormat {
            path: path_str.clone(),
            line,
            message,
        };

        let mut lines = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| MlpError::Io {
                path: path_str.clone(),
                source,
            })?;
            if !line.trim().is_empty() {
                lines.push((i + 1, line));
            }
        }

        let mut iter = lines.into_iter();
        let (n, first) = iter.next().ok_or_else(|| fail(1, "empty model file".into()))?;
        if first.trim() != "format mlp v1" {
            return Err(fail(n, format!("expected \"format mlp v1\", found {first:?}")));
        }
        let (n, layout_line) = iter
            .next()
            .ok_or_else(|| fail(n, "missing layout line".into()))?;
        let mut tokens = layout_line.split_whitespace();
        if tokens.next() != Some("layout") {
            return Err(fail(n, "expected layout line".into()));
        }
        let sizes: Vec<usize> = tokens
            .map(|t| t.parse().map_err(|_| fail(n, format!("bad layout size {t:?}"))))
            .collect::<Result<_, _>>()?;
        if sizes.len() < 2 {
            return Err(fail(n, "layout needs at least input and output sizes".into()));
        }
        let layout = MlpLayout::new(
            sizes[0],
            sizes[1..sizes.len() - 1].to_vec(),
            sizes[sizes.len() - 1],
        )
        .map_err(|e| fail(n, e.to_string()))?;

        let mut layers = Vec::new();
        let mut last_line = n;
        for (i, (in_dim, out_dim)) in layout.layer_dims().into_iter().enumerate() {
            let weights = expect_numbers(
                &mut iter,
                &format!("layer{i}_weights"),
                in_dim * out_dim,
                &fail,
                &mut last_line,
            )?;
            let biases = expect_numbers(
                &mut iter,
                &format!("layer{i}_biases"),
                out_dim,
                &fail,
                &mut last_line,
            )?;
            layers.push(Layer {
                in_dim,
                out_dim,
                weights,
                biases,
            });
        }

        let mut normalizer = None;
        if let Some((n, line)) = iter.next() {
            let mins = parse_keyed_numbers(&line, "normalizer_mins", FEATURE_COUNT)
                .map_err(|m| fail(n, m))?;
            let (n2, line2) = iter
                .next()
                .ok_or_else(|| fail(n, "normalizer_mins without normalizer_maxs".into()))?;
            let maxs = parse_keyed_numbers(&line2, "normalizer_maxs", FEATURE_COUNT)
                .map_err(|m| fail(n2, m))?;
            let mut min_arr = [0.0; FEATURE_COUNT];
            let mut max_arr = [0.0; FEATURE_COUNT];
            min_arr.copy_from_slice(&mins);
            max_arr.copy_from_slice(&maxs);
            normalizer = Some(
                Normalizer::from_bounds(min_arr, max_arr).map_err(|e| fail(n2, e.to_string()))?,
            );
        }
        if let Some((n, line)) = iter.next() {
            return Err(fail(n, format!("unexpected trailing line {line:?}")));
        }

        Ok((MlpNetwork { layout, layers }, normalizer))
    }
}

/// Formats values with 17 significant digits so they round-trip exactly.
fn join_numbers(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_keyed_numbers(line: &str, key: &str, expected: usize) -> Result<Vec<f64>, String> {
    let mut tokens = line.split_whitespace();
    match tokens.next() {
        Some(k) if k == key => {}
        other => return Err(format!("expected key {key:?}, found {other:?}")),
    }
    let values: Vec<f64> = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| format!("bad number {t:?} under key {key:?}"))
        })
        .collect::<Result<_, _>>()?;
    if values.len() != expected {
        return Err(format!(
            "key {key:?}: expected {expected} values, found {}",
            values.len()
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(format!("key {key:?}: non-finite value"));
    }
    Ok(values)
}

fn expect_numbers(
    iter: &mut impl Iterator<Item = (usize, String)>,
    key: &str,
    expected: usize,
    fail: &impl Fn(usize, String) -> MlpError,
    last_line: &mut usize,
) -> Result<Vec<f64>, MlpError> {
    let (n, line) = iter
        .next()
        .ok_or_else(|| fail(*last_line, format!("missing {key} line")))?;
    *last_line = n;
    parse_keyed_numbers(&line, key, expected).map_err(|m| fail(n, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_closed_form() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(2.0) - 0.8807970779778823).abs() < 1e-15);
        for &x in &[-3.0, -0.7, 0.0, 1.3, 8.0] {
            assert!((sigmoid(x) - (1.0 - sigmoid(-x))).abs() < 1e-15);
            assert!(sigmoid(x) > 0.0 && sigmoid(x) < 1.0);
        }
    }

    #[test]
    fn event_error_values() {
        assert_eq!(event_error(0.7, 0.7), 0.0);
        assert_eq!(event_error(1.0, 0.0), 0.5);
        assert!((event_error(0.3, 1.0) - 0.245).abs() < 1e-15);
        assert!(event_error(-2.0, 1.0) >= 0.0);
    }

    #[test]
    fn layout_validation() {
        assert!(MlpLayout::new(0, vec![3], 1).is_err());
        assert!(MlpLayout::new(2, vec![0], 1).is_err());
        assert!(MlpLayout::new(2, vec![], 1).is_ok());
        let d = MlpLayout::default();
        assert_eq!((d.input_size, d.output_size), (10, 1));
        assert_eq!(d.hidden_sizes, vec![10]);
        assert_eq!(d.layer_dims(), vec![(10, 10), (10, 1)]);
    }

    #[test]
    fn init_shapes_and_determinism() {
        let net = MlpNetwork::init(MlpLayout::default(), 5).unwrap();
        assert_eq!(net.layers.len(), 2);
        assert_eq!(net.layers[0].weights.len(), 100);
        assert_eq!(net.layers[0].biases.len(), 10);
        assert_eq!(net.layers[1].weights.len(), 10);
        assert_eq!(net.layers[1].biases.len(), 1);
        assert_eq!(net.param_count(), 121);

        let again = MlpNetwork::init(MlpLayout::default(), 5).unwrap();
        assert_eq!(net, again);
        let other = MlpNetwork::init(MlpLayout::default(), 6).unwrap();
        assert_ne!(net, other);
    }

    #[test]
    fn init_bounds_and_zero_biases() {
        let layout = MlpLayout::new(2, vec![3], 1).unwrap();
        let net = MlpNetwork::init(layout, 11).unwrap();
        let b0 = 1.0 / 2f64.sqrt();
        assert!(net.layers[0].weights.iter().all(|w| w.abs() <= b0));
        let b1 = 1.0 / 3f64.sqrt();
        assert!(net.layers[1].weights.iter().all(|w| w.abs() <= b1));
        assert!(net.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn forward_zero_weights() {
        let mut net = MlpNetwork::init(MlpLayout::default(), 1).unwrap();
        let zeros = vec![0.0; net.param_count()];
        net.set_params(&zeros);
        let pass = net.forward(&[1.0, -2.0, 3.0, 0.0, 0.5, 9.0, -1.0, 2.0, 4.0, 8.0]);
        assert!(pass.activations[1].iter().all(|&a| a == 0.5));
        assert_eq!(pass.output(), 0.0);
    }

    #[test]
    fn forward_1_1_1_hand_computed() {
        let layout = MlpLayout::new(1, vec![1], 1).unwrap();
        let mut net = MlpNetwork::init(layout, 0).unwrap();
        net.set_params(&[1.0, 0.0, 1.0, 0.0]); // w1, b1, w2, b2
        assert_eq!(net.output(&[0.0]), 0.5);
        let x = 0.8;
        assert!((net.output(&[x]) - sigmoid(x)).abs() < 1e-15);
    }

    #[test]
    fn forward_matches_independent_recomputation() {
        let net = MlpNetwork::init(MlpLayout::default(), 99).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
            // layer-by-layer recomputation straight from the stored tensors
            let l0 = &net.layers[0];
            let hidden: Vec<f64> = (0..l0.out_dim)
                .map(|o| {
                    let z = l0.biases[o]
                        + x.iter()
                            .enumerate()
                            .map(|(i, xi)| l0.weights[o * l0.in_dim + i] * xi)
                            .sum::<f64>();
                    sigmoid(z)
                })
                .collect();
            let l1 = &net.layers[1];
            let expected = l1.biases[0]
                + hidden
                    .iter()
                    .enumerate()
                    .map(|(i, h)| l1.weights[i] * h)
                    .sum::<f64>();
            let got = net.output(&x);
            assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn hidden_unit_permutation_leaves_output_unchanged() {
        let net = MlpNetwork::init(MlpLayout::default(), 3).unwrap();
        let mut permuted = net.clone();
        // reverse the hidden units: rows of layer 0, entries of its bias,
        // and the matching columns of layer 1
        let h = net.layers[0].out_dim;
        let in_dim = net.layers[0].in_dim;
        for o in 0..h {
            let src = h - 1 - o;
            permuted.layers[0].weights[o * in_dim..(o + 1) * in_dim]
                .copy_from_slice(&net.layers[0].weights[src * in_dim..(src + 1) * in_dim]);
            permuted.layers[0].biases[o] = net.layers[0].biases[src];
            permuted.layers[1].weights[o] = net.layers[1].weights[src];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = net.output(&x);
            let b = permuted.output(&x);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn dataset_error_matches_naive_loop() {
        let net = MlpNetwork::init(MlpLayout::default(), 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let data: Vec<LabeledSample> = (0..100)
            .map(|i| LabeledSample {
                input: (0..10).map(|_| rng.random_range(-1.0..1.0)).collect(),
                target: (i % 2) as f64,
            })
            .collect();
        let mut sum = 0.0;
        for s in &data {
            let o = net.output(&s.input);
            sum += 0.5 * (o - s.target) * (o - s.target);
        }
        let naive = sum / data.len() as f64;
        let got = net.dataset_error(&data);
        assert!((got - naive).abs() <= 1e-12 * naive.abs().max(1.0));
    }

    #[test]
    fn classify_threshold_rules() {
        let layout = MlpLayout::new(1, vec![1], 1).unwrap();
        let mut net = MlpNetwork::init(layout, 0).unwrap();
        // output = x via: hidden irrelevant, weights 0, output bias set per case
        net.set_params(&[0.0, 0.0, 0.0, 0.9]);
        assert_eq!(net.classify(&[0.0], 0.5), ClassLabel::Gamma);
        net.set_params(&[0.0, 0.0, 0.0, 0.5]);
        assert_eq!(net.classify(&[0.0], 0.5), ClassLabel::Gamma); // >= rule
        net.set_params(&[0.0, 0.0, 0.0, 0.49]);
        assert_eq!(net.classify(&[0.0], 0.5), ClassLabel::Hadron);
    }

    #[test]
    fn classify_sweep_is_monotone() {
        let net = MlpNetwork::init(MlpLayout::default(), 17).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let inputs: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..10).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let mut last_count = usize::MAX;
        for step in 0..=10 {
            let threshold = step as f64 / 10.0;
            let count = inputs
                .iter()
                .filter(|x| net.classify(x, threshold) == ClassLabel::Gamma)
                .count();
            assert!(count <= last_count);
            last_count = count;
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        let net = MlpNetwork::init(MlpLayout::default(), 404).unwrap();
        net.save(&path, None).unwrap();
        let (back, norm) = MlpNetwork::load(&path).unwrap();
        assert_eq!(net, back);
        assert!(norm.is_none());
    }

    #[test]
    fn save_load_round_trip_with_normalizer() {
        use crate::data::FeatureVector;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        let net = MlpNetwork::init(MlpLayout::default(), 405).unwrap();
        let vectors = vec![
            FeatureVector([0.1, 2.0, -3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 1.5]),
            FeatureVector([1.1, 0.0, 3.0, 14.0, -5.0, 0.5, 7.5, 2.0, 0.0, 1.5]),
        ];
        let norm = Normalizer::fit(&vectors).unwrap();
        net.save(&path, Some(&norm)).unwrap();
        let (back, norm_back) = MlpNetwork::load(&path).unwrap();
        assert_eq!(net, back);
        assert_eq!(norm_back.unwrap(), norm);
    }

    #[test]
    fn load_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        std::fs::write(&path, "format mlp v2\nlayout 1 1\n").unwrap();
        assert!(matches!(
            MlpNetwork::load(&path),
            Err(MlpError::ModelFormat { line: 1, .. })
        ));
        std::fs::write(&path, "format mlp v1\nlayout 2 1\nlayer0_weights 1.0\nlayer0_biases 0.0\n")
            .unwrap();
        assert!(MlpNetwork::load(&path).is_err()); // wrong weight count
    }

    #[test]
    fn params_with_params_round_trip() {
        let net = MlpNetwork::init(MlpLayout::default(), 8).unwrap();
        let p = net.params();
        assert_eq!(p.len(), 121);
        let rebuilt = net.with_params(&p);
        assert_eq!(net, rebuilt);
        let mut p2 = p.clone();
        p2[0] += 1.0;
        assert_ne!(net.with_params(&p2), net);
    }
}

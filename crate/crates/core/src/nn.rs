//! A small fully connected sigmoid network trained with binary
//! cross-entropy, written without any ML framework.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::selector::encode_t_vector;
use crate::synthgen::Corpus;

/// Predictions are clamped to [ε, 1 − ε] inside the loss.
pub const BCE_CLAMP: f64 = 1e-12;

/// Logistic function, evaluated through exp(−|z|) so it never overflows.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
}

impl Activation {
    fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "sigmoid" => Some(Activation::Sigmoid),
            _ => None,
        }
    }
}

/// Weights and biases of a feed-forward network.
///
/// `weights[l]` is row-major with shape `dims[l + 1] × dims[l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub activations: Vec<Activation>,
}

/// Pre-activations and activations of every layer from one forward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    /// `activations[0]` is the input; `activations[l + 1]` is layer l's output.
    pub activations: Vec<Vec<f64>>,
    pub pre_activations: Vec<Vec<f64>>,
}

/// Gradients shaped like [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(params: &MlpParams) -> Self {
        Self {
            weights: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn clear(&mut self) {
        self.weights.iter_mut().for_each(|w| w.fill(0.0));
        self.biases.iter_mut().for_each(|b| b.fill(0.0));
    }

    pub fn norm(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

impl MlpParams {
    /// All-zero parameters for the given layer widths.
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::ConfigInvalid(format!(
                "layer dims {layer_dims:?} need at least two positive widths"
            )));
        }
        let layers = layer_dims.len() - 1;
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights: (0..layers)
                .map(|l| vec![0.0; layer_dims[l] * layer_dims[l + 1]])
                .collect(),
            biases: (0..layers).map(|l| vec![0.0; layer_dims[l + 1]]).collect(),
            activations: vec![Activation::Sigmoid; layers],
        })
    }

    /// Uniform(±√(6/(d_in+d_out))) weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(layer_dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(layer_dims)?;
        for (l, w) in p.weights.iter_mut().enumerate() {
            let limit = (6.0 / (layer_dims[l] + layer_dims[l + 1]) as f64).sqrt();
            for v in w.iter_mut() {
                *v = rng.random_range(-limit..=limit);
            }
        }
        Ok(p)
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("validated dims")
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    /// Checks shapes and finiteness.
    pub fn validate(&self) -> Result<()> {
        let layers = self.layer_dims.len().saturating_sub(1);
        if layers == 0
            || self.weights.len() != layers
            || self.biases.len() != layers
            || self.activations.len() != layers
        {
            return Err(Error::ConfigInvalid("inconsistent layer lists".into()));
        }
        for l in 0..layers {
            let (din, dout) = (self.layer_dims[l], self.layer_dims[l + 1]);
            if self.weights[l].len() != din * dout || self.biases[l].len() != dout {
                return Err(Error::DimensionMismatch {
                    expected: din * dout,
                    got: self.weights[l].len(),
                });
            }
        }
        if self
            .weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .any(|v| !v.is_finite())
        {
            return Err(Error::ConfigInvalid("non-finite parameter".into()));
        }
        Ok(())
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Network output only.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut a = input.to_vec();
        for l in 0..self.num_layers() {
            let mut z = vec![0.0; self.layer_dims[l + 1]];
            affine(&self.weights[l], &self.biases[l], &a, &mut z);
            z.iter_mut().for_each(|v| *v = sigmoid(*v));
            a = z;
        }
        Ok(a)
    }
}

/// `out = W·x + b` for row-major W.
#[inline]
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let din = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w[i * din..(i + 1) * din];
        *o = b[i] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Forward pass keeping every intermediate for backpropagation.
pub fn forward(params: &MlpParams, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
    params.check_input(input)?;
    let mut cache = ForwardCache {
        activations: vec![input.to_vec()],
        pre_activations: Vec::with_capacity(params.num_layers()),
    };
    for l in 0..params.num_layers() {
        let mut z = vec![0.0; params.layer_dims[l + 1]];
        affine(&params.weights[l], &params.biases[l], &cache.activations[l], &mut z);
        let a = z.iter().map(|&v| sigmoid(v)).collect();
        cache.pre_activations.push(z);
        cache.activations.push(a);
    }
    let out = cache.activations.last().cloned().unwrap_or_default();
    Ok((out, cache))
}

/// Mean binary cross-entropy over coordinates, predictions clamped.
pub fn bce_loss(predicted: &[f64], target: &[f64]) -> f64 {
    assert_eq!(predicted.len(), target.len());
    let d = predicted.len() as f64;
    predicted
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / d
}

/// Exact gradient of `bce_loss(forward(input), target)`.
pub fn backprop(params: &MlpParams, input: &[f64], target: &[f64]) -> Result<Gradients> {
    if target.len() != params.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.output_dim(),
            got: target.len(),
        });
    }
    let (_, cache) = forward(params, input)?;
    let mut grads = Gradients::zeros_like(params);
    accumulate_gradients(params, &cache.activations, target, 1.0, &mut grads);
    Ok(grads)
}

/// Adds `scale · ∇loss` to `grads` given the activations of a forward pass.
fn accumulate_gradients(
    params: &MlpParams,
    activations: &[Vec<f64>],
    target: &[f64],
    scale: f64,
    grads: &mut Gradients,
) {
    let layers = params.num_layers();
    let out = &activations[layers];
    let inv_d = 1.0 / out.len() as f64;
    // Sigmoid + cross-entropy: ∂L/∂z = (ŷ − t) / d.
    let mut delta: Vec<f64> = out
        .iter()
        .zip(target)
        .map(|(y, t)| (y - t) * inv_d * scale)
        .collect();
    for l in (0..layers).rev() {
        let a_prev = &activations[l];
        let din = a_prev.len();
        let w = &params.weights[l];
        let gw = &mut grads.weights[l];
        for (i, &di) in delta.iter().enumerate() {
            grads.biases[l][i] += di;
            if di != 0.0 {
                for (g, a) in gw[i * din..(i + 1) * din].iter_mut().zip(a_prev) {
                    *g += di * a;
                }
            }
        }
        if l > 0 {
            let mut prev = vec![0.0; din];
            for (i, &di) in delta.iter().enumerate() {
                if di != 0.0 {
                    for (p, wv) in prev.iter_mut().zip(&w[i * din..(i + 1) * din]) {
                        *p += wv * di;
                    }
                }
            }
            for (p, a) in prev.iter_mut().zip(a_prev) {
                *p *= a * (1.0 - a);
            }
            delta = prev;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    /// `w ← w − η ∂L/∂w`.
    GradientDescent,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    BinaryCrossEntropy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: LossKind,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 128,
            loss: LossKind::BinaryCrossEntropy,
            seed: 0,
            optimizer: Optimizer::adam(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub final_loss: f64,
    /// Mean training loss of each epoch, accumulated while the epoch ran.
    pub loss_history: Vec<f64>,
    pub epochs_run: usize,
    pub wall_clock_seconds: f64,
}

struct OptimizerState {
    kind: Optimizer,
    lr: f64,
    step: i32,
    m: Gradients,
    v: Gradients,
}

impl OptimizerState {
    fn new(kind: Optimizer, lr: f64, params: &MlpParams) -> Self {
        Self {
            kind,
            lr,
            step: 0,
            m: Gradients::zeros_like(params),
            v: Gradients::zeros_like(params),
        }
    }

    fn apply(&mut self, params: &mut MlpParams, g: &Gradients) {
        self.step += 1;
        let lr = self.lr;
        let pairs = params
            .weights
            .iter_mut()
            .zip(&g.weights)
            .zip(self.m.weights.iter_mut().zip(self.v.weights.iter_mut()))
            .chain(
                params
                    .biases
                    .iter_mut()
                    .zip(&g.biases)
                    .zip(self.m.biases.iter_mut().zip(self.v.biases.iter_mut())),
            );
        match self.kind {
            Optimizer::GradientDescent => {
                for ((p, g), _) in pairs {
                    for (pv, gv) in p.iter_mut().zip(g) {
                        *pv -= lr * gv;
                    }
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let c1 = 1.0 - beta1.powi(self.step);
                let c2 = 1.0 - beta2.powi(self.step);
                for ((p, g), (m, v)) in pairs {
                    for i in 0..p.len() {
                        let gi = g[i];
                        m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                        p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                    }
                }
            }
        }
    }
}

fn validate_train_config(cfg: &TrainConfig, samples: usize) -> Result<()> {
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::ConfigInvalid("learning rate must be positive".into()));
    }
    if cfg.epochs == 0 {
        return Err(Error::ConfigInvalid("epochs must be at least 1".into()));
    }
    if cfg.batch_size == 0 || cfg.batch_size > samples {
        return Err(Error::ConfigInvalid(format!(
            "batch size {} outside [1, {samples}]",
            cfg.batch_size
        )));
    }
    Ok(())
}

/// Trains on explicit (input, target) pairs.
///
/// Initialization uses substream (seed, 0) and epoch shuffles use
/// (seed, 1), so equal seeds give bit-identical parameters.
pub fn train_samples(
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    arch: &[usize],
    cfg: &TrainConfig,
) -> Result<(MlpParams, TrainReport)> {
    if inputs.is_empty() {
        return Err(Error::ConfigInvalid("empty training set".into()));
    }
    if inputs.len() != targets.len() {
        return Err(Error::LengthMismatch(format!(
            "{} inputs vs {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    validate_train_config(cfg, inputs.len())?;
    let mut params = MlpParams::glorot(arch, &mut StreamKey::root(cfg.seed).child(0).rng())?;
    for (x, t) in inputs.iter().zip(targets) {
        params.check_input(x)?;
        if t.len() != params.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: params.output_dim(),
                got: t.len(),
            });
        }
    }

    let started = Instant::now();
    let mut shuffle_rng = StreamKey::root(cfg.seed).child(1).rng();
    let mut opt = OptimizerState::new(cfg.optimizer, cfg.learning_rate, &params);
    let mut grads = Gradients::zeros_like(&params);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut acts: Vec<Vec<f64>> = arch.iter().map(|&d| vec![0.0; d]).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.clear();
            let scale = 1.0 / batch.len() as f64;
            for &k in batch {
                acts[0].copy_from_slice(&inputs[k]);
                for l in 0..params.num_layers() {
                    let (lo, hi) = acts.split_at_mut(l + 1);
                    affine(&params.weights[l], &params.biases[l], &lo[l], &mut hi[0]);
                    hi[0].iter_mut().for_each(|v| *v = sigmoid(*v));
                }
                epoch_loss += bce_loss(&acts[params.num_layers()], &targets[k]);
                accumulate_gradients(&params, &acts, &targets[k], scale, &mut grads);
            }
            opt.apply(&mut params, &grads);
        }
        epoch_loss /= inputs.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        history.push(epoch_loss);
    }

    let report = TrainReport {
        final_loss: *history.last().expect("epochs >= 1"),
        epochs_run: history.len(),
        loss_history: history,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((params, report))
}

/// Trains on a corpus: encoded padded t-vectors in, padded masks out.
///
/// Inputs go through [`encode_t_vector`], the same map the selector
/// applies at prediction time.
pub fn train(corpus: &Corpus, arch: &[usize], cfg: &TrainConfig) -> Result<(MlpParams, TrainReport)> {
    let width = corpus.p_max();
    if arch.first() != Some(&width) || arch.last() != Some(&width) {
        return Err(Error::ConfigInvalid(format!(
            "architecture {arch:?} must start and end with the corpus width {width}"
        )));
    }
    let inputs: Vec<Vec<f64>> = corpus
        .records
        .iter()
        .map(|r| encode_t_vector(&r.t_padded))
        .collect();
    let targets: Vec<Vec<f64>> = corpus
        .records
        .iter()
        .map(|r| r.gamma_padded.to_f64())
        .collect();
    train_samples(&inputs, &targets, arch, cfg)
}

/// Writes the textual weight format.
pub fn save_weights<W: Write>(params: &MlpParams, mut w: W) -> Result<()> {
    params.validate()?;
    writeln!(w, "MLPSEL v1")?;
    let dims: Vec<String> = params.layer_dims.iter().map(usize::to_string).collect();
    writeln!(w, "dims {}", dims.join(" "))?;
    let mut line = String::new();
    for l in 0..params.num_layers() {
        writeln!(w, "layer {l} {}", params.activations[l].name())?;
        let din = params.layer_dims[l];
        for i in 0..params.layer_dims[l + 1] {
            line.clear();
            for v in &params.weights[l][i * din..(i + 1) * din] {
                write!(line, "{v:.16e} ").unwrap();
            }
            write!(line, "{:.16e}", params.biases[l][i]).unwrap();
            writeln!(w, "{line}")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn ferr(line: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        line,
        msg: msg.into(),
    }
}

/// Reads the textual weight format.
pub fn load_weights<R: BufRead>(r: R) -> Result<MlpParams> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i, l)),
            Some((i, Err(e))) => Err(ferr(i, e.to_string())),
            None => Err(ferr(0, format!("unexpected end of file, expected {what}"))),
        }
    };
    let (i, magic) = next("header")?;
    if magic.trim_end() != "MLPSEL v1" {
        return Err(ferr(i, "expected 'MLPSEL v1'"));
    }
    let (i, dims_line) = next("dims line")?;
    let dims: Vec<usize> = dims_line
        .strip_prefix("dims ")
        .ok_or_else(|| ferr(i, "expected 'dims ...'"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| ferr(i, format!("bad dimension '{t}'"))))
        .collect::<Result<_>>()?;
    let mut params = MlpParams::zeros(&dims).map_err(|e| ferr(i, e.to_string()))?;
    for l in 0..params.num_layers() {
        let (i, head) = next("layer header")?;
        let mut toks = head.split_whitespace();
        if toks.next() != Some("layer") || toks.next() != Some(l.to_string().as_str()) {
            return Err(ferr(i, format!("expected 'layer {l} <activation>'")));
        }
        params.activations[l] = toks
            .next()
            .and_then(Activation::parse)
            .ok_or_else(|| ferr(i, "unknown activation"))?;
        let din = dims[l];
        for row in 0..dims[l + 1] {
            let (i, text) = next("weight row")?;
            let vals: Vec<f64> = text
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| ferr(i, format!("bad number '{t}'"))))
                .collect::<Result<_>>()?;
            if vals.len() != din + 1 {
                return Err(ferr(
                    i,
                    format!("expected {} values, found {}", din + 1, vals.len()),
                ));
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(ferr(i, "non-finite value"));
            }
            params.weights[l][row * din..(row + 1) * din].copy_from_slice(&vals[..din]);
            params.biases[l][row] = vals[din];
        }
    }
    if let Some((i, Ok(extra))) = lines.next() {
        if !extra.trim().is_empty() {
            return Err(ferr(i, "unexpected trailing content"));
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        let s = sigmoid(800.0);
        assert_eq!(s, 1.0);
        assert!(sigmoid(-800.0) >= 0.0);
        assert_relative_eq!(sigmoid(2.0), 0.8807970779778823, epsilon = 1e-16);
        for z in [-30.0, -2.5, 0.3, 7.0] {
            assert_relative_eq!(sigmoid(-z), 1.0 - sigmoid(z), epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_network_outputs_half() {
        let p = MlpParams::zeros(&[3, 4, 2]).unwrap();
        let (out, cache) = forward(&p, &[5.0, -1.0, 2.0]).unwrap();
        assert_eq!(out, vec![0.5, 0.5]);
        assert_eq!(cache.activations.len(), 3);
        assert_eq!(cache.pre_activations.len(), 2);
    }

    #[test]
    fn chained_unit_weights() {
        let mut p = MlpParams::zeros(&[1, 1, 1]).unwrap();
        p.weights[0][0] = 1.0;
        p.weights[1][0] = 1.0;
        let (out, _) = forward(&p, &[0.0]).unwrap();
        assert_relative_eq!(out[0], 0.6224593312018546, epsilon = 1e-12);
    }

    #[test]
    fn wrong_input_length() {
        let p = MlpParams::zeros(&[3, 2]).unwrap();
        assert_eq!(
            forward(&p, &[1.0]).unwrap_err(),
            Error::DimensionMismatch {
                expected: 3,
                got: 1
            }
        );
    }

    #[test]
    fn bce_values() {
        assert!(bce_loss(&[1.0, 0.0, 1.0], &[1.0, 0.0, 1.0]) <= 1e-11);
        assert_relative_eq!(
            bce_loss(&[0.5, 0.5], &[1.0, 0.0]),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            bce_loss(&[0.9, 0.1], &[1.0, 0.0]),
            -(0.9f64.ln()),
            epsilon = 1e-15
        );
    }

    #[test]
    fn single_unit_gradient() {
        let p = MlpParams::zeros(&[1, 1]).unwrap();
        let g = backprop(&p, &[1.0], &[1.0]).unwrap();
        assert_relative_eq!(g.weights[0][0], -0.5, epsilon = 1e-15);
        assert_relative_eq!(g.biases[0][0], -0.5, epsilon = 1e-15);
    }

    #[test]
    fn saturated_correct_outputs_have_no_gradient() {
        let mut p = MlpParams::zeros(&[2, 2]).unwrap();
        p.biases[0] = vec![60.0, -60.0];
        let g = backprop(&p, &[0.3, -0.2], &[1.0, 0.0]).unwrap();
        assert!(g.norm() < 1e-8);
    }

    #[test]
    fn train_rejects_bad_config() {
        let x = vec![vec![0.0]; 4];
        let t = vec![vec![1.0]; 4];
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_samples(&x, &t, &[1, 1], &cfg),
            Err(Error::ConfigInvalid(_))
        ));
        let cfg = TrainConfig {
            batch_size: 5,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_samples(&x, &t, &[1, 1], &cfg),
            Err(Error::ConfigInvalid(_))
        ));
    }

    #[test]
    fn divergence_is_reported() {
        // first step sends the weight to -inf, then -inf * 0 is NaN
        let x = vec![vec![1e300], vec![0.0]];
        let t = vec![vec![0.0], vec![1.0]];
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 2,
            learning_rate: 1e300,
            optimizer: Optimizer::GradientDescent,
            ..TrainConfig::default()
        };
        let r = train_samples(&x, &t, &[1, 1], &cfg);
        assert!(matches!(r, Err(Error::NonFiniteLoss { .. })), "{r:?}");
    }

    #[test]
    fn weights_round_trip_exactly() {
        let p = MlpParams::glorot(&[3, 5, 2], &mut StreamKey::root(3).rng()).unwrap();
        let mut buf = Vec::new();
        save_weights(&p, &mut buf).unwrap();
        let back = load_weights(&buf[..]).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn truncated_weight_file() {
        let p = MlpParams::glorot(&[2, 2], &mut StreamKey::root(3).rng()).unwrap();
        let mut buf = Vec::new();
        save_weights(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(matches!(load_weights(cut.as_bytes()), Err(Error::Format { .. })));
    }

    #[test]
    fn wrong_row_count_is_located() {
        let p = MlpParams::zeros(&[10, 10, 10]).unwrap();
        let mut buf = Vec::new();
        save_weights(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // drop the last row of layer 0 so "layer 1" appears where a row belongs
        let lines: Vec<&str> = text.lines().collect();
        let mut kept: Vec<&str> = lines[..12].to_vec();
        kept.extend_from_slice(&lines[13..]);
        let err = load_weights(kept.join("\n").as_bytes()).unwrap_err();
        assert_eq!(
            err,
            Error::Format {
                line: 13,
                msg: "bad number 'layer'".into()
            }
        );
    }
}

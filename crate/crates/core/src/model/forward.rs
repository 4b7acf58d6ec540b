use super::gemm::{gemm, View};
use super::{ParameterSet, BN_EPS, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::features::FeaturizedExample;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in batch norm, dropout active.
    Train,
    /// Running statistics, dropout is the identity.
    Eval,
}

/// Intermediates of one convolution block, all `[batch * positions][channels]`
/// row-major unless noted.
#[derive(Debug, Clone)]
pub struct ConvTrace {
    /// im2col input, `[batch * positions][in_ch * kernel]`.
    pub col: Vec<f64>,
    /// Normalized pre-activation before gain/shift.
    pub xhat: Vec<f64>,
    /// Per channel `1 / sqrt(var + eps)` of the statistics used.
    pub inv_std: Vec<f64>,
    /// Per channel batch mean and biased variance (train mode only).
    pub batch_mean: Vec<f64>,
    pub batch_var: Vec<f64>,
    /// Post-ReLU output.
    pub out: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub mode: Mode,
    pub batch: usize,
    pub conv: Vec<ConvTrace>,
    /// Inverted-dropout multipliers on the last conv output, if applied.
    pub dropout_mask: Option<Vec<f64>>,
    /// Position of the max per `(example, channel)`.
    pub pool_argmax: Vec<usize>,
    /// Inputs of the three dense layers: pooled+scalars, hidden 1, hidden 2.
    pub dense_inputs: Vec<Vec<f64>>,
    /// `[batch][2]` logits.
    pub logits: Vec<f64>,
}

impl Trace {
    pub fn logits_pairs(&self) -> Vec<[f64; 2]> {
        self.logits.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
    }
}

/// Builds the im2col matrix with "same" zero padding (left pad
/// `(k - 1) / 2`), column index `i * k + j` for input channel `i` and tap `j`.
fn im2col(x: &[f64], batch: usize, len: usize, ch: usize, k: usize) -> Vec<f64> {
    let pad = (k - 1) / 2;
    let width = ch * k;
    let mut col = vec![0.0; batch * len * width];
    for b in 0..batch {
        for t in 0..len {
            let row = &mut col[(b * len + t) * width..(b * len + t + 1) * width];
            for j in 0..k {
                let Some(src) = (t + j).checked_sub(pad).filter(|&s| s < len) else {
                    continue;
                };
                let xs = &x[(b * len + src) * ch..(b * len + src + 1) * ch];
                for (i, &v) in xs.iter().enumerate() {
                    row[i * k + j] = v;
                }
            }
        }
    }
    col
}

pub(crate) fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Runs the network on a batch, returning `[batch][2]` logits and the trace
/// needed by [`backward`](super::backward).
///
/// `rng` drives the dropout mask in train mode and is untouched in eval mode.
/// Train mode does not touch the running statistics; the training loop folds
/// the batch statistics in with [`ParameterSet::update_running_stats`].
pub fn forward(
    params: &ParameterSet,
    batch: &[&FeaturizedExample],
    mode: Mode,
    rng: &mut SplitMix64,
) -> Result<(Vec<[f64; 2]>, Trace)> {
    let cfg = &params.config;
    let b = batch.len();
    if b == 0 {
        return Err(Error::Shape("empty batch".into()));
    }
    let len = cfg.max_len;
    for e in batch {
        if e.max_len != len || e.dim != cfg.input_dim || e.matrix.len() != len * cfg.input_dim {
            return Err(Error::Shape(format!(
                "example {} is {}x{}, model expects {}x{}",
                e.id, e.max_len, e.dim, len, cfg.input_dim
            )));
        }
    }

    let mut x: Vec<f64> = Vec::with_capacity(b * len * cfg.input_dim);
    for e in batch {
        x.extend_from_slice(&e.matrix);
    }

    let rows = b * len;
    let mut conv_traces = Vec::with_capacity(params.conv.len());
    for layer in &params.conv {
        let (ci, co, k) = (layer.in_ch, layer.out_ch, layer.kernel_size);
        let col = im2col(&x, b, len, ci, k);
        let mut z = vec![0.0; rows * co];
        gemm(
            View::row_major(&col, rows, ci * k),
            View::row_major(&layer.kernel, co, ci * k).t(),
            0.0,
            &mut z,
        );
        for r in z.chunks_exact_mut(co) {
            for (v, bias) in r.iter_mut().zip(&layer.bias) {
                *v += bias;
            }
        }

        let (mean, var) = match mode {
            Mode::Train => channel_stats(&z, co),
            Mode::Eval => (layer.running_mean.clone(), layer.running_var.clone()),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let mut xhat = z;
        let mut out = vec![0.0; rows * co];
        for (xr, or) in xhat.chunks_exact_mut(co).zip(out.chunks_exact_mut(co)) {
            for c in 0..co {
                let h = (xr[c] - mean[c]) * inv_std[c];
                xr[c] = h;
                let y = layer.gain[c] * h + layer.shift[c];
                or[c] = if y > 0.0 { y } else { 0.0 };
            }
        }
        let (batch_mean, batch_var) = match mode {
            Mode::Train => (mean, var),
            Mode::Eval => (Vec::new(), Vec::new()),
        };
        x = out.clone();
        conv_traces.push(ConvTrace {
            col,
            xhat,
            inv_std,
            batch_mean,
            batch_var,
            out,
        });
    }

    let channels = params.conv.last().map(|c| c.out_ch).unwrap_or(0);
    let dropout_mask = if mode == Mode::Train && cfg.dropout_rate > 0.0 {
        let keep = 1.0 - cfg.dropout_rate;
        let scale = 1.0 / keep;
        let mask: Vec<f64> = (0..x.len())
            .map(|_| if rng.next_f64() < keep { scale } else { 0.0 })
            .collect();
        for (v, m) in x.iter_mut().zip(&mask) {
            *v *= m;
        }
        Some(mask)
    } else {
        None
    };

    // Global max pooling over positions, first maximum wins.
    let in0 = cfg.pooled_dim();
    let mut h = vec![0.0; b * in0];
    let mut pool_argmax = vec![0usize; b * channels];
    for bi in 0..b {
        let block = &x[bi * len * channels..(bi + 1) * len * channels];
        for c in 0..channels {
            let mut best = block[c];
            let mut arg = 0;
            for t in 1..len {
                let v = block[t * channels + c];
                if v > best {
                    best = v;
                    arg = t;
                }
            }
            h[bi * in0 + c] = best;
            pool_argmax[bi * channels + c] = arg;
        }
        h[bi * in0 + channels..(bi + 1) * in0].copy_from_slice(&batch[bi].scalars);
    }

    let mut dense_inputs = Vec::with_capacity(params.dense.len());
    let last = params.dense.len() - 1;
    for (li, layer) in params.dense.iter().enumerate() {
        let mut u = vec![0.0; b * layer.out_dim];
        gemm(
            View::row_major(&h, b, layer.in_dim),
            View::row_major(&layer.weight, layer.out_dim, layer.in_dim).t(),
            0.0,
            &mut u,
        );
        for r in u.chunks_exact_mut(layer.out_dim) {
            for (v, bias) in r.iter_mut().zip(&layer.bias) {
                *v += bias;
            }
        }
        if li != last {
            relu_in_place(&mut u);
        }
        dense_inputs.push(std::mem::replace(&mut h, u));
    }
    let logits = h;
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("logits".into()));
    }

    let trace = Trace {
        mode,
        batch: b,
        conv: conv_traces,
        dropout_mask,
        pool_argmax,
        dense_inputs,
        logits,
    };
    Ok((trace.logits_pairs(), trace))
}

/// Per channel mean and biased variance over all rows, summed in row order.
fn channel_stats(z: &[f64], channels: usize) -> (Vec<f64>, Vec<f64>) {
    let n = (z.len() / channels) as f64;
    let mut mean = vec![0.0; channels];
    for r in z.chunks_exact(channels) {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; channels];
    for r in z.chunks_exact(channels) {
        for c in 0..channels {
            let d = r[c] - mean[c];
            var[c] += d * d;
        }
    }
    var.iter_mut().for_each(|v| *v /= n);
    (mean, var)
}

impl ParameterSet {
    /// Folds the batch statistics of a train-mode trace into the running
    /// mean and variance (unbiased variance, as most frameworks do).
    pub fn update_running_stats(&mut self, trace: &Trace) {
        if trace.mode != Mode::Train {
            return;
        }
        let rows = (trace.batch * self.config.max_len) as f64;
        let correction = if rows > 1.0 { rows / (rows - 1.0) } else { 1.0 };
        for (layer, t) in self.conv.iter_mut().zip(&trace.conv) {
            for c in 0..layer.out_ch {
                layer.running_mean[c] = super::BN_MOMENTUM * layer.running_mean[c]
                    + (1.0 - super::BN_MOMENTUM) * t.batch_mean[c];
                layer.running_var[c] = super::BN_MOMENTUM * layer.running_var[c]
                    + (1.0 - super::BN_MOMENTUM) * t.batch_var[c] * correction;
            }
        }
    }
}

/// Numerically stable softmax over two logits.
pub fn softmax(logits: [f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

/// `-ln(max(p[gold], 1e-12))`.
pub fn cross_entropy(probs: [f64; NUM_CLASSES], gold: usize) -> f64 {
    -probs[gold].max(1e-12).ln()
}

/// Predicted class; ties go to class 0.
pub fn argmax(logits: [f64; NUM_CLASSES]) -> usize {
    if logits[1] > logits[0] {
        1
    } else {
        0
    }
}

/// Mean cross-entropy of a batch of logits.
pub fn mean_loss(logits: &[[f64; 2]], gold: &[usize]) -> f64 {
    let sum: f64 = logits
        .iter()
        .zip(gold)
        .map(|(l, &g)| cross_entropy(softmax(*l), g))
        .sum();
    sum / logits.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_model, ModelConfig};

    fn tiny_config() -> ModelConfig {
        ModelConfig {
            conv_channels: vec![2, 2, 2, 2, 2],
            kernel_size: 3,
            fc_dims: vec![4, 3, 2],
            dropout_rate: 0.3,
            max_len: 4,
            input_dim: 3,
            scalar_dim: 6,
        }
    }

    fn examples(n: usize, seed: u64) -> Vec<FeaturizedExample> {
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|i| FeaturizedExample {
                id: format!("e{i:07}"),
                max_len: 4,
                dim: 3,
                matrix: (0..12).map(|_| rng.normal()).collect(),
                scalars: std::array::from_fn(|_| rng.next_f64()),
                gold: i % 2,
            })
            .collect()
    }

    #[test]
    fn zero_network_gives_zero_logits() {
        let mut p = init_model(&tiny_config(), 1).unwrap();
        for t in p.learnable_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
        let ex = examples(3, 2);
        let refs: Vec<&FeaturizedExample> = ex.iter().collect();
        let (logits, _) = forward(&p, &refs, Mode::Eval, &mut SplitMix64::new(0)).unwrap();
        assert!(logits.iter().all(|l| *l == [0.0, 0.0]));
    }

    #[test]
    fn eval_is_repeatable_and_shaped() {
        let p = init_model(&tiny_config(), 4).unwrap();
        let ex = examples(4, 5);
        let refs: Vec<&FeaturizedExample> = ex.iter().collect();
        let (a, _) = forward(&p, &refs, Mode::Eval, &mut SplitMix64::new(1)).unwrap();
        let (b, _) = forward(&p, &refs, Mode::Eval, &mut SplitMix64::new(2)).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a, b);
    }

    #[test]
    fn eval_per_example_independent_of_batching() {
        let p = init_model(&tiny_config(), 4).unwrap();
        let ex = examples(5, 6);
        let refs: Vec<&FeaturizedExample> = ex.iter().collect();
        let (all, _) = forward(&p, &refs, Mode::Eval, &mut SplitMix64::new(0)).unwrap();
        for (i, e) in ex.iter().enumerate() {
            let (one, _) = forward(&p, &[e], Mode::Eval, &mut SplitMix64::new(0)).unwrap();
            assert_eq!(one[0], all[i]);
        }
    }

    #[test]
    fn batch_norm_normalizes_in_train_mode() {
        let p = init_model(&tiny_config(), 8).unwrap();
        let ex = examples(6, 9);
        let refs: Vec<&FeaturizedExample> = ex.iter().collect();
        let (_, trace) = forward(&p, &refs, Mode::Train, &mut SplitMix64::new(3)).unwrap();
        for layer in &trace.conv {
            let ch = layer.inv_std.len();
            let n = (layer.xhat.len() / ch) as f64;
            for c in 0..ch {
                let vals: Vec<f64> = layer.xhat.iter().skip(c).step_by(ch).copied().collect();
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                assert!(mean.abs() < 1e-6, "mean {mean}");
                // eps in the denominator pulls the variance just below one.
                let expected = layer.batch_var[c] / (layer.batch_var[c] + BN_EPS);
                assert!((var - expected).abs() < 1e-6, "var {var}");
                assert!((var - 1.0).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let p = init_model(&tiny_config(), 1).unwrap();
        let mut ex = examples(1, 1);
        ex[0].matrix.pop();
        let refs: Vec<&FeaturizedExample> = ex.iter().collect();
        assert!(forward(&p, &refs, Mode::Eval, &mut SplitMix64::new(0)).is_err());
        assert!(forward(&p, &[], Mode::Eval, &mut SplitMix64::new(0)).is_err());
    }

    #[test]
    fn softmax_cases() {
        assert_eq!(softmax([0.0, 0.0]), [0.5, 0.5]);
        let p = softmax([2f64.ln(), 0.0]);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
        let p = softmax([1000.0, 0.0]);
        assert!(p[0].is_finite() && p[1].is_finite());
        // Extended-precision reference: p1 = e^-1000 / (1 + e^-1000) ~ 5.08e-435,
        // which underflows f64 to exactly zero.
        assert_eq!(p[0], 1.0);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn cross_entropy_cases() {
        assert_eq!(cross_entropy([0.0, 1.0], 1), 0.0);
        assert!((cross_entropy([0.5, 0.5], 0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((cross_entropy([0.9, 0.1], 1) - std::f64::consts::LN_10).abs() < 1e-12);
        assert!((cross_entropy([1.0, 0.0], 1) - 27.631021115928547).abs() < 1e-9);
    }

    #[test]
    fn argmax_tie_goes_to_zero() {
        assert_eq!(argmax([0.3, 0.3]), 0);
        assert_eq!(argmax([0.3, 0.4]), 1);
    }

    proptest::proptest! {
        #[test]
        fn softmax_sums_to_one_and_shift_invariant(a in -50.0f64..50.0, b in -50.0f64..50.0, c in -100.0f64..100.0) {
            let p = softmax([a, b]);
            proptest::prop_assert!((p[0] + p[1] - 1.0).abs() <= 1e-12);
            let q = softmax([a + c, b + c]);
            proptest::prop_assert!((p[0] - q[0]).abs() <= 1e-12);
            proptest::prop_assert!((p[1] - q[1]).abs() <= 1e-12);
        }
    }
}

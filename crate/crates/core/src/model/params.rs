use super::{ModelConfig, CONV_LAYERS};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// One convolution block: kernel `out_ch x in_ch x kernel_size` (row-major),
/// bias, batch-norm gain/shift and running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel_size: usize,
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
    pub gain: Vec<f64>,
    pub shift: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

/// Fully connected layer, weight `out_dim x in_dim` (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub config: ModelConfig,
    pub conv: Vec<ConvLayer>,
    pub dense: Vec<DenseLayer>,
}

/// Gradients of the learnable tensors, in [`ParameterSet::learnable`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &ParameterSet) -> Self {
        Self {
            tensors: params
                .learnable()
                .iter()
                .map(|t| vec![0.0; t.len()])
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

fn he_normal(rng: &mut SplitMix64, n: usize, fan_in: usize) -> Vec<f64> {
    let std = (2.0 / fan_in as f64).sqrt();
    (0..n).map(|_| rng.normal() * std).collect()
}

/// He-normal kernels and weights, zero biases, unit gain, zero shift,
/// running mean 0 and variance 1. Deterministic per seed.
pub fn init_model(config: &ModelConfig, seed: u64) -> Result<ParameterSet> {
    config.validate()?;
    let mut rng = SplitMix64::derived(seed, 10);
    let k = config.kernel_size;
    let mut conv = Vec::with_capacity(CONV_LAYERS);
    let mut in_ch = config.input_dim;
    for &out_ch in &config.conv_channels {
        conv.push(ConvLayer {
            in_ch,
            out_ch,
            kernel_size: k,
            kernel: he_normal(&mut rng, out_ch * in_ch * k, in_ch * k),
            bias: vec![0.0; out_ch],
            gain: vec![1.0; out_ch],
            shift: vec![0.0; out_ch],
            running_mean: vec![0.0; out_ch],
            running_var: vec![1.0; out_ch],
        });
        in_ch = out_ch;
    }
    let mut dense = Vec::with_capacity(config.fc_dims.len());
    let mut in_dim = config.pooled_dim();
    for &out_dim in &config.fc_dims {
        dense.push(DenseLayer {
            in_dim,
            out_dim,
            weight: he_normal(&mut rng, out_dim * in_dim, in_dim),
            bias: vec![0.0; out_dim],
        });
        in_dim = out_dim;
    }
    Ok(ParameterSet {
        config: config.clone(),
        conv,
        dense,
    })
}

impl ParameterSet {
    /// Learnable tensors in fixed order: per conv layer kernel, bias, gain,
    /// shift; per dense layer weight, bias.
    pub fn learnable(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for c in &self.conv {
            out.extend([&c.kernel[..], &c.bias, &c.gain, &c.shift]);
        }
        for d in &self.dense {
            out.extend([&d.weight[..], &d.bias]);
        }
        out
    }

    pub fn learnable_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for c in &mut self.conv {
            out.push(&mut c.kernel);
            out.push(&mut c.bias);
            out.push(&mut c.gain);
            out.push(&mut c.shift);
        }
        for d in &mut self.dense {
            out.push(&mut d.weight);
            out.push(&mut d.bias);
        }
        out
    }

    /// Names matching [`ParameterSet::learnable`], e.g. `conv2.gain`.
    pub fn learnable_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..self.conv.len() {
            for n in ["kernel", "bias", "gain", "shift"] {
                out.push(format!("conv{i}.{n}"));
            }
        }
        for i in 0..self.dense.len() {
            for n in ["weight", "bias"] {
                out.push(format!("fc{i}.{n}"));
            }
        }
        out
    }

    pub fn num_learnable(&self) -> usize {
        self.learnable().iter().map(|t| t.len()).sum()
    }

    /// Shape and sanity check: widths chain, running variance positive, all
    /// values finite.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let cfg = &self.config;
        if self.conv.len() != CONV_LAYERS || self.dense.len() != cfg.fc_dims.len() {
            return Err(Error::Shape("layer count differs from config".into()));
        }
        let mut in_ch = cfg.input_dim;
        for (c, &out_ch) in self.conv.iter().zip(&cfg.conv_channels) {
            let ok = c.in_ch == in_ch
                && c.out_ch == out_ch
                && c.kernel_size == cfg.kernel_size
                && c.kernel.len() == out_ch * in_ch * cfg.kernel_size
                && [&c.bias, &c.gain, &c.shift, &c.running_mean, &c.running_var]
                    .iter()
                    .all(|v| v.len() == out_ch);
            if !ok {
                return Err(Error::Shape("conv layer shape differs from config".into()));
            }
            if c.running_var.iter().any(|&v| v.is_nan() || v <= 0.0) {
                return Err(Error::Shape("running variance must be positive".into()));
            }
            in_ch = out_ch;
        }
        let mut in_dim = cfg.pooled_dim();
        for (d, &out_dim) in self.dense.iter().zip(&cfg.fc_dims) {
            if d.in_dim != in_dim
                || d.out_dim != out_dim
                || d.weight.len() != in_dim * out_dim
                || d.bias.len() != out_dim
            {
                return Err(Error::Shape("dense layer shape differs from config".into()));
            }
            in_dim = out_dim;
        }
        let finite = self
            .learnable()
            .iter()
            .flat_map(|t| t.iter())
            .all(|v| v.is_finite())
            && self.conv.iter().all(|c| {
                c.running_mean
                    .iter()
                    .chain(&c.running_var)
                    .all(|v| v.is_finite())
            });
        if !finite {
            return Err(Error::NonFinite("parameters".into()));
        }
        Ok(())
    }
}

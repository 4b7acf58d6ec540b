//! Model checkpoint, little-endian:
//!
//! ```text
//! magic        8 bytes "CGCKPT01"
//! conv count   u32 (5), then each conv width u32
//! kernel_size  u32
//! fc count     u32 (3), then each fc width u32
//! dropout_rate f64
//! max_len      u32
//! input_dim    u32
//! scalar_dim   u32
//! seed         u64
//! per conv layer: kernel, bias, gain, shift, running_mean, running_var (f64)
//! per fc layer:   weight, bias (f64)
//! ```
//!
//! Tensor lengths follow from the config, so none are stored.

use std::path::Path;

use super::{init_model, ModelConfig, ParameterSet};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CGCKPT01";

pub fn encode_checkpoint(params: &ParameterSet, seed: u64) -> Vec<u8> {
    let cfg = &params.config;
    let mut out = Vec::new();
    let u32le = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    u32le(&mut out, cfg.conv_channels.len());
    for &c in &cfg.conv_channels {
        u32le(&mut out, c);
    }
    u32le(&mut out, cfg.kernel_size);
    u32le(&mut out, cfg.fc_dims.len());
    for &d in &cfg.fc_dims {
        u32le(&mut out, d);
    }
    out.extend_from_slice(&cfg.dropout_rate.to_le_bytes());
    u32le(&mut out, cfg.max_len);
    u32le(&mut out, cfg.input_dim);
    u32le(&mut out, cfg.scalar_dim);
    out.extend_from_slice(&seed.to_le_bytes());
    let mut put = |v: &[f64]| {
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    };
    for c in &params.conv {
        for t in [
            &c.kernel,
            &c.bias,
            &c.gain,
            &c.shift,
            &c.running_mean,
            &c.running_var,
        ] {
            put(t);
        }
    }
    for d in &params.dense {
        put(&d.weight);
        put(&d.bias);
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::data("checkpoint truncated"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn fill(&mut self, v: &mut [f64]) -> Result<()> {
        for x in v {
            *x = self.f64()?;
        }
        Ok(())
    }
}

/// Returns the parameters and the seed stored in the header.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<(ParameterSet, u64)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::data("not a checkpoint (bad magic)"));
    }
    let n_conv = r.u32()?;
    if n_conv > 64 {
        return Err(Error::data("checkpoint header corrupt"));
    }
    let conv_channels = (0..n_conv).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let kernel_size = r.u32()?;
    let n_fc = r.u32()?;
    if n_fc > 64 {
        return Err(Error::data("checkpoint header corrupt"));
    }
    let fc_dims = (0..n_fc).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let config = ModelConfig {
        conv_channels,
        kernel_size,
        fc_dims,
        dropout_rate: r.f64()?,
        max_len: r.u32()?,
        input_dim: r.u32()?,
        scalar_dim: r.u32()?,
    };
    let seed = r.u64()?;
    let mut params = init_model(&config, 0)?;
    for c in &mut params.conv {
        for t in [
            &mut c.kernel,
            &mut c.bias,
            &mut c.gain,
            &mut c.shift,
            &mut c.running_mean,
            &mut c.running_var,
        ] {
            r.fill(t)?;
        }
    }
    for d in &mut params.dense {
        r.fill(&mut d.weight)?;
        r.fill(&mut d.bias)?;
    }
    if r.pos != bytes.len() {
        return Err(Error::data("checkpoint has trailing bytes"));
    }
    params.validate()?;
    Ok((params, seed))
}

pub fn save_checkpoint(path: impl AsRef<Path>, params: &ParameterSet, seed: u64) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_checkpoint(params, seed)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ParameterSet, u64)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let mut p = init_model(&ModelConfig::default(), 17).unwrap();
        p.conv[2].running_var[3] = 0.123_456_789_012_345_6;
        p.conv[0].running_mean[0] = -1e-300;
        let bytes = encode_checkpoint(&p, 17);
        let (q, seed) = decode_checkpoint(&bytes).unwrap();
        assert_eq!(seed, 17);
        assert_eq!(q, p);
        assert_eq!(encode_checkpoint(&q, seed), bytes);
    }

    #[test]
    fn truncated_rejected() {
        let p = init_model(&ModelConfig::default(), 1).unwrap();
        let bytes = encode_checkpoint(&p, 1);
        assert!(decode_checkpoint(&bytes[..bytes.len() - 8]).is_err());
        assert!(decode_checkpoint(b"nonsense").is_err());
    }
}

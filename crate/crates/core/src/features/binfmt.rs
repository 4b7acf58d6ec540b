//! `features.bin`: featurized examples in one little-endian file.
//!
//! ```text
//! magic      8 bytes  "CGFEAT01"
//! max_len    u32
//! dim        u32
//! scalar_dim u32      (always 6)
//! count      u64
//! count x {
//!     id_len  u32
//!     id      id_len bytes, UTF-8
//!     gold    u32
//!     matrix  max_len * dim f64, row-major
//!     scalars scalar_dim f64
//! }
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{FeaturizedExample, SCALAR_DIM};
use crate::error::{Error, Result};

pub const FEATURES_MAGIC: &[u8; 8] = b"CGFEAT01";

pub fn encode_features(
    examples: &[FeaturizedExample],
    max_len: usize,
    dim: usize,
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(FEATURES_MAGIC);
    out.extend_from_slice(&(max_len as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(SCALAR_DIM as u32).to_le_bytes());
    out.extend_from_slice(&(examples.len() as u64).to_le_bytes());
    for e in examples {
        if e.max_len != max_len || e.dim != dim || e.matrix.len() != max_len * dim {
            return Err(Error::Shape(format!(
                "example {} does not match {max_len}x{dim}",
                e.id
            )));
        }
        out.extend_from_slice(&(e.id.len() as u32).to_le_bytes());
        out.extend_from_slice(e.id.as_bytes());
        out.extend_from_slice(&(e.gold as u32).to_le_bytes());
        for v in e.matrix.iter().chain(&e.scalars) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::data("features file truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_features(bytes: &[u8]) -> Result<Vec<FeaturizedExample>> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != FEATURES_MAGIC {
        return Err(Error::data("not a features file (bad magic)"));
    }
    let max_len = c.u32()? as usize;
    let dim = c.u32()? as usize;
    let scalar_dim = c.u32()? as usize;
    if scalar_dim != SCALAR_DIM {
        return Err(Error::data(format!(
            "features file has {scalar_dim} scalars, expected {SCALAR_DIM}"
        )));
    }
    let count = c.u64()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let id_len = c.u32()? as usize;
        let id = std::str::from_utf8(c.take(id_len)?)
            .map_err(|_| Error::data("features file: id is not UTF-8"))?
            .to_string();
        let gold = c.u32()? as usize;
        if gold > 1 {
            return Err(Error::data(format!(
                "features file: example {id} has gold {gold}"
            )));
        }
        let matrix = (0..max_len * dim)
            .map(|_| c.f64())
            .collect::<Result<Vec<_>>>()?;
        let mut scalars = [0.0; SCALAR_DIM];
        for s in &mut scalars {
            *s = c.f64()?;
        }
        out.push(FeaturizedExample {
            id,
            max_len,
            dim,
            matrix,
            scalars,
            gold,
        });
    }
    if c.pos != bytes.len() {
        return Err(Error::data("features file has trailing bytes"));
    }
    Ok(out)
}

pub fn write_features(
    path: impl AsRef<Path>,
    examples: &[FeaturizedExample],
    max_len: usize,
    dim: usize,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_features(examples, max_len, dim)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_features(path: impl AsRef<Path>) -> Result<Vec<FeaturizedExample>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_features(&bytes).map_err(|e| match e {
        Error::Data(m) => Error::data(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn encode_decode_round_trip(
            rows in prop::collection::vec((any::<bool>(), prop::collection::vec(-1e3f64..1e3, 6 + 6)), 0..8)
        ) {
            let examples: Vec<FeaturizedExample> = rows
                .iter()
                .enumerate()
                .map(|(i, (g, v))| FeaturizedExample {
                    id: format!("e{i:07}"),
                    max_len: 3,
                    dim: 2,
                    matrix: v[..6].to_vec(),
                    scalars: v[6..].try_into().unwrap(),
                    gold: *g as usize,
                })
                .collect();
            let bytes = encode_features(&examples, 3, 2).unwrap();
            prop_assert_eq!(decode_features(&bytes).unwrap(), examples);
        }
    }

    #[test]
    fn rejects_truncated_and_bad_magic() {
        assert!(decode_features(b"CGFEAT0").is_err());
        assert!(decode_features(b"XXXXXXXX\0\0\0\0").is_err());
        let ok = encode_features(&[], 4, 2).unwrap();
        assert!(decode_features(&ok).unwrap().is_empty());
        assert!(decode_features(&ok[..ok.len() - 1]).is_err());
    }
}

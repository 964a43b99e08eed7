//! Flat binary checkpoint encoding.
//!
//! ```text
//! "IRSRL1"
//! repeated until end of input:
//!   u32 name length | name (UTF-8) | u32 rank | rank × u32 dims | prod(dims) × f32
//! ```
//!
//! All integers and floats are little-endian.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Dense, Matrix, Params, Scalar};
use crate::{Error, Result};

pub const MAGIC: &[u8; 6] = b"IRSRL1";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl NamedTensor {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::DimensionMismatch {
                what: "tensor data",
                expected,
                got: data.len(),
            });
        }
        Ok(Self {
            name: name.into(),
            dims,
            data,
        })
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Checkpoint("value exceeds u32".to_string()))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub fn encode(tensors: &[NamedTensor]) -> Result<Vec<u8>> {
    let payload: usize = tensors
        .iter()
        .map(|t| 8 + t.name.len() + 4 * t.dims.len() + 4 * t.data.len())
        .sum();
    let mut out = Vec::with_capacity(MAGIC.len() + payload);
    out.extend_from_slice(MAGIC);
    for t in tensors {
        put_u32(&mut out, t.name.len())?;
        out.extend_from_slice(t.name.as_bytes());
        put_u32(&mut out, t.dims.len())?;
        for &d in &t.dims {
            put_u32(&mut out, d)?;
        }
        for x in &t.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated while reading {what} at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }
}

/// Decodes a whole checkpoint; any defect yields an error and no tensors.
pub fn decode(bytes: &[u8]) -> Result<Vec<NamedTensor>> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Checkpoint("bad magic".to_string()));
    }
    let mut r = Reader {
        bytes,
        pos: MAGIC.len(),
    };
    let mut tensors = Vec::new();
    while r.pos < bytes.len() {
        let len = r.u32("name length")?;
        let name = core::str::from_utf8(r.take(len, "name")?)
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".to_string()))?
            .to_string();
        let rank = r.u32("rank")?;
        let mut dims = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            dims.push(r.u32("dims")?);
        }
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Checkpoint(format!("tensor {name} is too large")))?;
        let raw = r.take(
            count
                .checked_mul(4)
                .ok_or_else(|| Error::Checkpoint(format!("tensor {name} is too large")))?,
            "tensor data",
        )?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        tensors.push(NamedTensor { name, dims, data });
    }
    Ok(tensors)
}

/// Tensors `"{prefix}.{layer}.weight"` (`inputs × outputs`) and
/// `"{prefix}.{layer}.bias"` for every layer.
pub fn params_to_tensors<F: Scalar>(prefix: &str, params: &Params<F>) -> Vec<NamedTensor> {
    let mut out = Vec::with_capacity(2 * params.layers.len());
    for (i, l) in params.layers.iter().enumerate() {
        out.push(NamedTensor {
            name: format!("{prefix}.{i}.weight"),
            dims: alloc::vec![l.inputs, l.outputs],
            data: l.weight.iter().map(|x| x.as_f64() as f32).collect(),
        });
        out.push(NamedTensor {
            name: format!("{prefix}.{i}.bias"),
            dims: alloc::vec![l.outputs],
            data: l.bias.iter().map(|x| x.as_f64() as f32).collect(),
        });
    }
    out
}

fn find<'a>(tensors: &'a [NamedTensor], name: &str) -> Result<&'a NamedTensor> {
    tensors
        .iter()
        .find(|t| t.name == name)
        .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))
}

pub fn params_from_tensors<F: Scalar>(prefix: &str, tensors: &[NamedTensor]) -> Result<Params<F>> {
    let mut layers = Vec::new();
    loop {
        let i = layers.len();
        let wname = format!("{prefix}.{i}.weight");
        if !tensors.iter().any(|t| t.name == wname) {
            break;
        }
        let w = find(tensors, &wname)?;
        let b = find(tensors, &format!("{prefix}.{i}.bias"))?;
        if w.dims.len() != 2 || b.dims.len() != 1 || b.dims[0] != w.dims[1] {
            return Err(Error::Checkpoint(format!("inconsistent shapes for {prefix}.{i}")));
        }
        layers.push(Dense {
            inputs: w.dims[0],
            outputs: w.dims[1],
            weight: w.data.iter().map(|&x| F::of(x as f64)).collect(),
            bias: b.data.iter().map(|&x| F::of(x as f64)).collect(),
        });
    }
    if layers.is_empty() {
        return Err(Error::Checkpoint(format!("no layers for {prefix}")));
    }
    Ok(Params { layers })
}

pub fn matrix_to_tensor<F: Scalar>(name: &str, m: &Matrix<F>) -> NamedTensor {
    NamedTensor {
        name: name.to_string(),
        dims: alloc::vec![m.rows(), m.cols()],
        data: m.as_slice().iter().map(|x| x.as_f64() as f32).collect(),
    }
}

pub fn matrix_from_tensors<F: Scalar>(name: &str, tensors: &[NamedTensor]) -> Result<Matrix<F>> {
    let t = find(tensors, name)?;
    if t.dims.len() != 2 {
        return Err(Error::Checkpoint(format!("{name} must have rank 2")));
    }
    Matrix::from_vec(
        t.dims[0],
        t.dims[1],
        t.data.iter().map(|&x| F::of(x as f64)).collect(),
    )
}

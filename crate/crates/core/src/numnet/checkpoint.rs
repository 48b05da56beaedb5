//! `FSNN` checkpoint format, all integers and floats little-endian:
//!
//! ```text
//! b"FSNN" | version: u32 | n_sizes: u32 | sizes: u32 * n_sizes
//! per layer: weights f64 * (out * in), row-major | biases f64 * out
//! ```
//!
//! Only leaky-ReLU networks are representable.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::net::{Activation, DenseNet, Layer};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FSNN";
const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(net: &DenseNet, mut w: W) -> Result<()> {
    if net.activation() != Activation::LeakyRelu {
        return Err(Error::invalid("checkpoints store leaky-relu networks only"));
    }
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let sizes = net.layer_sizes();
    w.write_all(&(sizes.len() as u32).to_le_bytes())?;
    for &s in sizes {
        let s = u32::try_from(s).map_err(|_| Error::invalid("layer size exceeds u32"))?;
        w.write_all(&s.to_le_bytes())?;
    }
    let mut buf = Vec::new();
    for layer in net.layers() {
        buf.clear();
        buf.reserve(8 * (layer.weights.len() + layer.biases.len()));
        for v in layer.weights.iter().chain(layer.biases.iter()) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<DenseNet> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format("not an FSNN checkpoint".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    if !(2..=64).contains(&n) {
        return Err(Error::Format(format!("implausible layer count {n}")));
    }
    let sizes = (0..n)
        .map(|_| read_u32(&mut r).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let mut layers = Vec::with_capacity(n - 1);
    for pair in sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let weights = Array2::from_shape_vec((fan_out, fan_in), read_f64s(&mut r, fan_in * fan_out)?)
            .map_err(|e| Error::Format(e.to_string()))?;
        let biases = Array1::from(read_f64s(&mut r, fan_out)?);
        layers.push(Layer { weights, biases });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after checkpoint".into()));
    }
    DenseNet::from_layers(layers, Activation::LeakyRelu)
}

pub fn save_checkpoint(net: &DenseNet, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = Vec::new();
    write_checkpoint(net, &mut bytes)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<DenseNet> {
    let bytes = fs::read(path)?;
    read_checkpoint(bytes.as_slice())
}

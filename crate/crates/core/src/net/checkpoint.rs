//! Binary parameter checkpoints.
//!
//! Layout, all integers `u64` little-endian: layer count, each layer size,
//! parameter count, then the parameters as little-endian `f64`.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::net::mlp::{MlpShape, ParamSet};
use crate::scalar::Real;

fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub fn write_params<T: Real, W: Write>(w: &mut W, shape: &MlpShape, params: &ParamSet<T>) -> Result<()> {
    write_u64(w, shape.layer_sizes().len() as u64)?;
    for &s in shape.layer_sizes() {
        write_u64(w, s as u64)?;
    }
    write_u64(w, params.len() as u64)?;
    for &v in &params.flat {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    Ok(())
}

/// Reads one checkpoint record; returns the stored layer sizes and parameters.
pub fn read_params<T: Real, R: Read>(r: &mut R) -> Result<(Vec<usize>, Vec<T>)> {
    const MAX_LAYERS: u64 = 1 << 16;
    let n_layers = read_u64(r)?;
    if n_layers > MAX_LAYERS {
        return Err(Error::Parse { line: 0, msg: format!("implausible layer count {n_layers}") });
    }
    let sizes = (0..n_layers).map(|_| read_u64(r).map(|s| s as usize)).collect::<Result<Vec<_>>>()?;
    let len = read_u64(r)? as usize;
    let expected: usize = sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum();
    if len != expected {
        return Err(Error::Parse {
            line: 0,
            msg: format!("parameter count {len} does not match layer sizes {sizes:?}"),
        });
    }
    let mut flat = Vec::with_capacity(len);
    let mut buf = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut buf)?;
        flat.push(T::of(f64::from_le_bytes(buf)));
    }
    Ok((sizes, flat))
}

/// Reads a checkpoint and checks it against an expected shape.
pub fn read_params_for<T: Real, R: Read>(r: &mut R, shape: &MlpShape) -> Result<ParamSet<T>> {
    let (sizes, flat) = read_params(r)?;
    if sizes != shape.layer_sizes() {
        return Err(Error::Input(format!(
            "checkpoint layer sizes {sizes:?} differ from expected {:?}",
            shape.layer_sizes()
        )));
    }
    ParamSet::from_flat(shape, flat)
}

//! Model checkpoints.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "MIPT-NN\0", version u16 = 1
//! rows, cols, in_rows, in_cols, filters, dense_units   u32 each
//! dropout f64, n_t u64
//! 8 tensors in layer order, each: element count u64, then f32 values
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{NnError, Result};
use crate::model::{Cnn, ModelConfig, Params};

pub const MAGIC: &[u8; 8] = b"MIPT-NN\0";
pub const VERSION: u16 = 1;

pub fn write_model<W: Write>(model: &Cnn<f32>, mut w: W) -> Result<()> {
    let c = &model.config;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [c.rows, c.cols, c.in_rows, c.in_cols, c.filters, c.dense_units] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    w.write_all(&c.dropout.to_le_bytes())?;
    w.write_all(&(c.n_t as u64).to_le_bytes())?;
    for t in model.params.slices() {
        w.write_all(&(t.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(4 * t.len());
        for v in t {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => NnError::Checkpoint("truncated".into()),
        _ => NnError::Io(e),
    })?;
    Ok(b)
}

pub fn read_model<R: Read>(mut r: R) -> Result<Cnn<f32>> {
    if &take::<8, _>(&mut r)? != MAGIC {
        return Err(NnError::Checkpoint("bad magic".into()));
    }
    let version = u16::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let mut dims = [0usize; 6];
    for d in &mut dims {
        *d = u32::from_le_bytes(take(&mut r)?) as usize;
    }
    let dropout = f64::from_le_bytes(take(&mut r)?);
    let n_t = u64::from_le_bytes(take(&mut r)?) as usize;
    let [rows, cols, in_rows, in_cols, filters, dense_units] = dims;
    let config = ModelConfig { rows, cols, in_rows, in_cols, filters, dense_units, dropout, n_t };
    let expected = ModelConfig::new(rows, cols, n_t).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    if (expected.in_rows, expected.in_cols) != (in_rows, in_cols) || filters == 0 || dense_units == 0 {
        return Err(NnError::Checkpoint("inconsistent architecture header".into()));
    }
    let mut params = Params::<f32>::zeros(&config);
    for t in params.slices_mut() {
        let n = u64::from_le_bytes(take(&mut r)?) as usize;
        if n != t.len() {
            return Err(NnError::Checkpoint(format!("tensor has {n} values, expected {}", t.len())));
        }
        for v in t.iter_mut() {
            *v = f32::from_le_bytes(take(&mut r)?);
        }
    }
    Ok(Cnn { config, params })
}

pub fn save_model(path: impl AsRef<Path>, model: &Cnn<f32>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_model(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Cnn<f32>> {
    read_model(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = ModelConfig::new(5, 10, 2500).unwrap();
        cfg.dense_units = 24;
        let m = Cnn::<f32>::new(cfg, 9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        save_model(&path, &m).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 8 + 2 + 24 + 8 + 8 + 8 * 8 + 4 * cfg.param_count());
        assert!(read_model(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[3] = b'x';
        assert!(matches!(read_model(&bad[..]), Err(NnError::Checkpoint(_))));
    }
}

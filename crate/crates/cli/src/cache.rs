//! Model construction with an in-process cache and optional on-disk
//! eigendecomposition checkpoints.
//!
//! When `DECOHIST_CACHE` names a directory, each model is stored there as
//! `model-<key>.bin` in little-endian layout:
//!
//! ```text
//! magic       8 bytes  "DHEIGv1\0"
//! d0, d1      u64, u64
//! delta_eps   f64
//! lambda      f64
//! seed        u64
//! diagonal    u64      0 = even, 1 = uniform
//! dim         u64
//! eigenvalues dim × f64
//! vectors     dim × dim × f64, row-major, column k is eigenvector k
//! ```
//!
//! The Hamiltonian is real symmetric, so the eigenvectors are stored as
//! real doubles.

use std::collections::HashMap;
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use decohist_core::histories::DiagonalKind;
use decohist_core::{ModelParams, ModelSpec};
use ndarray::{Array1, Array2};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 8] = b"DHEIGv1\0";
pub const CACHE_ENV: &str = "DECOHIST_CACHE";

type Key = (usize, usize, u64, u64, u64, u8);

fn key(p: &ModelParams) -> Key {
    (p.d0, p.d1, p.delta_eps.to_bits(), p.lambda.to_bits(), p.seed, diagonal_code(p.diagonal))
}

fn diagonal_code(d: DiagonalKind) -> u8 {
    match d {
        DiagonalKind::Even => 0,
        DiagonalKind::Uniform => 1,
    }
}

fn memory() -> &'static Mutex<HashMap<Key, Arc<ModelSpec>>> {
    static M: OnceLock<Mutex<HashMap<Key, Arc<ModelSpec>>>> = OnceLock::new();
    M.get_or_init(|| Mutex::new(HashMap::new()))
}

/// File name for `params` inside a cache directory.
pub fn cache_file(dir: &Path, p: &ModelParams) -> PathBuf {
    let (d0, d1, de, la, seed, diag) = key(p);
    dir.join(format!("model-{d0}-{d1}-{de:016x}-{la:016x}-{seed:016x}-{diag}.bin"))
}

/// Returns the model for `params`, reusing an in-process copy or a disk
/// checkpoint when available.
pub fn model(params: ModelParams) -> Result<Arc<ModelSpec>> {
    let k = key(&params);
    if let Some(m) = memory().lock().expect("cache lock").get(&k) {
        return Ok(Arc::clone(m));
    }
    let dir = std::env::var_os(CACHE_ENV).map(PathBuf::from);
    let m = match &dir {
        Some(d) => load_or_build(d, params)?,
        None => ModelSpec::from_params(params)?,
    };
    let m = Arc::new(m);
    memory().lock().expect("cache lock").insert(k, Arc::clone(&m));
    Ok(m)
}

fn load_or_build(dir: &Path, params: ModelParams) -> Result<ModelSpec> {
    let path = cache_file(dir, &params);
    if path.exists() {
        // A stale or damaged file is rebuilt rather than trusted.
        if let Ok(m) = read_checkpoint(&path, &params) {
            return Ok(m);
        }
    }
    let m = ModelSpec::from_params(params)?;
    fs::create_dir_all(dir)?;
    write_checkpoint(&path, &m)?;
    Ok(m)
}

pub fn write_checkpoint(path: &Path, m: &ModelSpec) -> Result<()> {
    let p = m.params();
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        w.write_all(MAGIC)?;
        for x in [p.d0 as u64, p.d1 as u64] {
            w.write_all(&x.to_le_bytes())?;
        }
        w.write_all(&p.delta_eps.to_le_bytes())?;
        w.write_all(&p.lambda.to_le_bytes())?;
        w.write_all(&p.seed.to_le_bytes())?;
        w.write_all(&(diagonal_code(p.diagonal) as u64).to_le_bytes())?;
        w.write_all(&(m.dim() as u64).to_le_bytes())?;
        for x in m.eigenvalues() {
            w.write_all(&x.to_le_bytes())?;
        }
        for row in m.eigenvectors().rows() {
            for x in row {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}

/// Reads a checkpoint and checks that it was written for `params`.
pub fn read_checkpoint(path: &Path, params: &ModelParams) -> Result<ModelSpec> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CliError::InvalidResult(format!("{} is not an eigendecomposition checkpoint", path.display())));
    }
    let d0 = read_u64(&mut r)?;
    let d1 = read_u64(&mut r)?;
    let delta_eps = f64::from_bits(read_u64(&mut r)?);
    let lambda = f64::from_bits(read_u64(&mut r)?);
    let seed = read_u64(&mut r)?;
    let diag = read_u64(&mut r)? as u8;
    let dim = read_u64(&mut r)? as usize;
    let stored = (d0 as usize, d1 as usize, delta_eps.to_bits(), lambda.to_bits(), seed, diag);
    if stored != key(params) || dim != params.dim() {
        return Err(CliError::InvalidResult(format!("{} was written for different parameters", path.display())));
    }
    let values = Array1::from(read_f64s(&mut r, dim)?);
    let vectors = Array2::from_shape_vec((dim, dim), read_f64s(&mut r, dim * dim)?)
        .map_err(|e| CliError::InvalidResult(e.to_string()))?;
    Ok(ModelSpec::from_cached(params.clone(), values, vectors)?)
}

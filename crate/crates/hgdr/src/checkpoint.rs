//! Binary model checkpoints.
//!
//! ```text
//! b"HGDR1"
//! u32 num_domains, u32 num_users, u32 items[d] for each domain,
//! u32 dim, u32 layers, u8 variant, u8 flags (bit 0 tied weights, bit 1 mean aggregation)
//! u32 matrix count
//! per matrix, in the order of ModelParams::entries: u32 rows, u32 cols, rows*cols f64
//! ```
//! All integers and floats are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use hgdr_core::model::ModelParams;
use hgdr_core::{ModelConfig, Variant};

use crate::binio::{expect_eof, get_f64, get_u32, get_u32s, get_u8, put_f64, put_len};
use crate::FormatError;

pub const MAGIC: &[u8; 5] = b"HGDR1";

const TIED: u8 = 1;
const MEAN: u8 = 2;

fn variant_code(v: Variant) -> u8 {
    match v {
        Variant::Full => 0,
        Variant::SpecificOnly => 1,
        Variant::SharedOnly => 2,
        Variant::Mf => 3,
    }
}

fn variant_from_code(c: u8) -> Result<Variant, FormatError> {
    Ok(match c {
        0 => Variant::Full,
        1 => Variant::SpecificOnly,
        2 => Variant::SharedOnly,
        3 => Variant::Mf,
        _ => return Err(FormatError::Invalid(format!("unknown variant code {c}"))),
    })
}

pub fn write_checkpoint<W: Write>(params: &ModelParams, mut w: W) -> Result<(), FormatError> {
    params.validate()?;
    let c = &params.config;
    w.write_all(MAGIC)?;
    put_len(&mut w, c.num_domains())?;
    put_len(&mut w, c.num_users)?;
    for &n in &c.items_per_domain {
        put_len(&mut w, n)?;
    }
    put_len(&mut w, c.dim)?;
    put_len(&mut w, c.layers)?;
    let flags = if c.tie_relation_weights { TIED } else { 0 } | if c.mean_aggregation { MEAN } else { 0 };
    w.write_all(&[variant_code(c.variant), flags])?;
    let entries = params.entries();
    put_len(&mut w, entries.len())?;
    for (_, m) in entries {
        put_len(&mut w, m.rows())?;
        put_len(&mut w, m.cols())?;
        for &x in m.as_slice() {
            put_f64(&mut w, x)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ModelParams, FormatError> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)
        .map_err(|_| FormatError::Invalid("file too short for a checkpoint".into()))?;
    if &magic != MAGIC {
        return Err(FormatError::Invalid("not an HGDR1 checkpoint".into()));
    }
    let nd = get_u32(&mut r)? as usize;
    let num_users = get_u32(&mut r)? as usize;
    let items_per_domain = get_u32s(&mut r, nd)?.into_iter().map(|x| x as usize).collect();
    let dim = get_u32(&mut r)? as usize;
    let layers = get_u32(&mut r)? as usize;
    let variant = variant_from_code(get_u8(&mut r)?)?;
    let flags = get_u8(&mut r)?;
    if flags & !(TIED | MEAN) != 0 {
        return Err(FormatError::Invalid(format!("unknown flag bits {flags:#04x}")));
    }
    let config = ModelConfig {
        num_users,
        items_per_domain,
        dim,
        layers,
        variant,
        tie_relation_weights: flags & TIED != 0,
        mean_aggregation: flags & MEAN != 0,
    };
    let mut params = ModelParams::zeros(&config)?;
    let count = get_u32(&mut r)? as usize;
    if count != params.num_matrices() {
        return Err(FormatError::Invalid(format!(
            "checkpoint holds {count} matrices, config implies {}",
            params.num_matrices()
        )));
    }
    for (name, m) in params.entries_mut() {
        let (rows, cols) = (get_u32(&mut r)? as usize, get_u32(&mut r)? as usize);
        if (rows, cols) != m.shape() {
            return Err(FormatError::Invalid(format!(
                "{name}: stored shape {rows}x{cols}, expected {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        for x in m.as_mut_slice() {
            *x = get_f64(&mut r)?;
        }
    }
    expect_eof(&mut r)?;
    params.validate()?;
    Ok(params)
}

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<(), FormatError> {
    write_checkpoint(params, BufWriter::new(File::create(path)?))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams, FormatError> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

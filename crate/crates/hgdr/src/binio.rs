//! Little-endian primitives shared by the binary formats.

use std::io::{Read, Write};

use crate::FormatError;

pub(crate) fn put_u32<W: Write>(w: &mut W, x: u32) -> std::io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

pub(crate) fn put_len<W: Write>(w: &mut W, x: usize) -> Result<(), FormatError> {
    let x = u32::try_from(x).map_err(|_| FormatError::Invalid(format!("{x} does not fit in u32")))?;
    Ok(put_u32(w, x)?)
}

pub(crate) fn put_f64<W: Write>(w: &mut W, x: f64) -> std::io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

pub(crate) fn get_u8<R: Read>(r: &mut R) -> Result<u8, FormatError> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(b[0])
}

pub(crate) fn get_u32<R: Read>(r: &mut R) -> Result<u32, FormatError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn get_f64<R: Read>(r: &mut R) -> Result<f64, FormatError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}

pub(crate) fn get_u32s<R: Read>(r: &mut R, n: usize) -> Result<Vec<u32>, FormatError> {
    (0..n).map(|_| get_u32(r)).collect()
}

pub(crate) fn expect_eof<R: Read>(r: &mut R) -> Result<(), FormatError> {
    let mut b = [0u8; 1];
    match r.read(&mut b)? {
        0 => Ok(()),
        _ => Err(FormatError::Invalid("trailing bytes after payload".into())),
    }
}

fn truncated(e: std::io::Error) -> FormatError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        FormatError::Invalid("file is truncated".into())
    } else {
        FormatError::Io(e)
    }
}

//! `.varm` matrix files.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "VARM"
//! 4       4     format version, u32 LE (= 1)
//! 8       8     rows, u64 LE
//! 16      8     cols, u64 LE
//! 24      4     dtype tag, u32 LE (1 = f64 LE)
//! 28      8*n   row-major payload, n = rows * cols
//! ```

use std::fs;
use std::path::Path;

use crate::analysis::WeightMatrix;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"VARM";
pub const MATRIX_VERSION: u32 = 1;
pub const DTYPE_F64_LE: u32 = 1;
pub const HEADER_LEN: usize = 28;

pub fn encode_matrix(m: &WeightMatrix) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * m.values().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
    buf.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    buf.extend_from_slice(&DTYPE_F64_LE.to_le_bytes());
    for v in m.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

/// Decodes a matrix file. `path` is only used in error messages; when
/// `expected` is given the header shape must equal it.
pub fn decode_matrix(
    bytes: &[u8],
    layer_name: &str,
    expected: Option<(usize, usize)>,
    path: &Path,
) -> Result<WeightMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::corrupt(
            path,
            format!("{} bytes is shorter than the header", bytes.len()),
        ));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::corrupt(
            path,
            format!("bad magic {:02x?}", &bytes[..4]),
        ));
    }
    let version = u32_at(bytes, 4);
    if version != MATRIX_VERSION {
        return Err(Error::Version {
            path: path.into(),
            detail: format!("matrix format version {version}"),
        });
    }
    let rows = u64_at(bytes, 8);
    let cols = u64_at(bytes, 16);
    let dtype = u32_at(bytes, 24);
    if dtype != DTYPE_F64_LE {
        return Err(Error::Version {
            path: path.into(),
            detail: format!("unknown dtype tag {dtype}"),
        });
    }
    let payload = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| Error::corrupt(path, format!("shape {rows}x{cols} overflows")))?;
    if bytes.len() - HEADER_LEN != payload {
        return Err(Error::corrupt(
            path,
            format!(
                "payload is {} bytes, shape {rows}x{cols} needs {payload}",
                bytes.len() - HEADER_LEN
            ),
        ));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    if let Some((er, ec)) = expected {
        if (rows, cols) != (er, ec) {
            return Err(Error::corrupt(
                path,
                format!("header shape {rows}x{cols} but manifest declares {er}x{ec}"),
            ));
        }
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    WeightMatrix::new(layer_name, rows, cols, values)
        .map_err(|e| Error::corrupt(path, e.to_string()))
}

pub fn write_matrix(path: &Path, m: &WeightMatrix) -> Result<()> {
    fs::write(path, encode_matrix(m)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(
    path: &Path,
    layer_name: &str,
    expected: Option<(usize, usize)>,
) -> Result<WeightMatrix> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::corrupt(path, "referenced matrix file is missing"),
        _ => Error::io(path, e),
    })?;
    decode_matrix(&bytes, layer_name, expected, path)
}

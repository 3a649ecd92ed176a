//! MSTK1: the crate's own binary stack format.
//!
//! Layout: ASCII magic "MSTK1\n", little-endian u64 counts N, r, c, one
//! label-presence flag byte, N·r·c little-endian f64 entries row-major per
//! sample, then (if flagged) N little-endian u32 labels. Saving and
//! re-loading is bitwise lossless.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::map_eof;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stack::MatrixStack;

pub(crate) const MAGIC: &[u8; 6] = b"MSTK1\n";

pub fn save_stack(stack: &MatrixStack, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(stack.len() as u64).to_le_bytes())?;
    w.write_all(&(stack.rows() as u64).to_le_bytes())?;
    w.write_all(&(stack.cols() as u64).to_le_bytes())?;
    w.write_all(&[u8::from(stack.labels().is_some())])?;
    for sample in stack.samples() {
        for v in sample.entries() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    if let Some(labels) = stack.labels() {
        for &l in labels {
            w.write_all(&l.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_stack(path: &Path) -> Result<MatrixStack> {
    let file = File::open(path)?;
    let file_len = file.metadata()?.len();
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 6];
    r.read_exact(&mut magic).map_err(|e| map_eof(e, "magic"))?;
    if &magic != MAGIC {
        return Err(Error::BadMagic {
            expected: String::from_utf8_lossy(MAGIC).trim_end().to_string(),
            got: String::from_utf8_lossy(&magic).trim_end().to_string(),
        });
    }

    let mut u64buf = [0u8; 8];
    let mut read_u64 = |r: &mut BufReader<File>, what: &str| -> Result<usize> {
        r.read_exact(&mut u64buf).map_err(|e| map_eof(e, what))?;
        usize::try_from(u64::from_le_bytes(u64buf)).map_err(|_| Error::DimensionOverflow)
    };
    let n = read_u64(&mut r, "sample count")?;
    let rows = read_u64(&mut r, "row count")?;
    let cols = read_u64(&mut r, "column count")?;

    let mut flag = [0u8; 1];
    r.read_exact(&mut flag).map_err(|e| map_eof(e, "label flag"))?;
    let labeled = match flag[0] {
        0 => false,
        1 => true,
        other => {
            return Err(Error::ParseFailure {
                line: 0,
                msg: format!("label flag must be 0 or 1, got {other}"),
            })
        }
    };

    let per_sample = rows.checked_mul(cols).ok_or(Error::DimensionOverflow)?;
    let total = n.checked_mul(per_sample).ok_or(Error::DimensionOverflow)?;
    let needed = (total as u64)
        .checked_mul(8)
        .and_then(|b| b.checked_add(if labeled { n as u64 * 4 } else { 0 }))
        .ok_or(Error::DimensionOverflow)?;
    if needed > file_len.saturating_sub(31) {
        return Err(Error::TruncatedFile(format!(
            "header promises {needed} payload bytes, file holds {}",
            file_len.saturating_sub(31)
        )));
    }

    let mut samples = Vec::with_capacity(n);
    let mut f64buf = [0u8; 8];
    for _ in 0..n {
        let mut entries = Vec::with_capacity(per_sample);
        for _ in 0..per_sample {
            r.read_exact(&mut f64buf).map_err(|e| map_eof(e, "entries"))?;
            entries.push(f64::from_le_bytes(f64buf));
        }
        samples.push(Matrix::from_vec(rows, cols, entries)?);
    }
    let stack = MatrixStack::new(samples)?;
    if labeled {
        let mut labels = Vec::with_capacity(n);
        let mut u32buf = [0u8; 4];
        for _ in 0..n {
            r.read_exact(&mut u32buf).map_err(|e| map_eof(e, "labels"))?;
            labels.push(u32::from_le_bytes(u32buf));
        }
        return stack.with_labels(labels);
    }
    Ok(stack)
}

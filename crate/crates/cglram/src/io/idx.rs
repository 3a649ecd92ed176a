//! IDX image and label files (the MNIST/EMNIST container): big-endian
//! magic, big-endian 32-bit counts, then raw unsigned bytes.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use super::map_eof;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stack::MatrixStack;

pub(crate) const IMAGES_MAGIC: u32 = 0x0000_0803;
pub(crate) const LABELS_MAGIC: u32 = 0x0000_0801;

/// How raw pixel bytes map to matrix entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelScale {
    /// Divide by 255 so entries live in [0, 1]. The default; keeps error
    /// magnitudes comparable across datasets.
    Unit,
    /// Keep raw 0..=255 values.
    Raw,
}

impl PixelScale {
    pub fn describe(&self) -> &'static str {
        match self {
            PixelScale::Unit => "pixels scaled to [0,1]",
            PixelScale::Raw => "raw pixel values",
        }
    }
}

fn read_u32_be(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| map_eof(e, what))?;
    Ok(u32::from_be_bytes(buf))
}

/// Load an IDX3 image file with pixels scaled to [0, 1].
pub fn load_idx_images(path: &Path) -> Result<MatrixStack> {
    load_idx_images_scaled(path, PixelScale::Unit)
}

/// Load an IDX3 image file with an explicit pixel scaling.
pub fn load_idx_images_scaled(path: &Path, scale: PixelScale) -> Result<MatrixStack> {
    let file = File::open(path)?;
    let file_len = file.metadata()?.len();
    let mut reader = BufReader::new(file);

    let magic = read_u32_be(&mut reader, "image magic")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::BadMagic {
            expected: format!("{IMAGES_MAGIC:#010x}"),
            got: format!("{magic:#010x}"),
        });
    }
    let n = read_u32_be(&mut reader, "image count")? as usize;
    let rows = read_u32_be(&mut reader, "row count")? as usize;
    let cols = read_u32_be(&mut reader, "column count")? as usize;
    let per_image = rows.checked_mul(cols).ok_or(Error::DimensionOverflow)?;
    let total = n.checked_mul(per_image).ok_or(Error::DimensionOverflow)?;

    let payload = file_len.saturating_sub(16);
    if (total as u64) > payload {
        return Err(Error::TruncatedFile(format!(
            "header promises {total} pixel bytes, file holds {payload}"
        )));
    }

    let mut bytes = vec![0u8; total];
    reader
        .read_exact(&mut bytes)
        .map_err(|e| map_eof(e, "pixel payload"))?;

    let samples: Result<Vec<Matrix>> = bytes
        .chunks_exact(per_image)
        .map(|chunk| {
            let entries = chunk
                .iter()
                .map(|&b| match scale {
                    PixelScale::Unit => f64::from(b) / 255.0,
                    PixelScale::Raw => f64::from(b),
                })
                .collect();
            Matrix::from_vec(rows, cols, entries)
        })
        .collect();
    MatrixStack::new(samples?)
}

/// Load an IDX1 label file.
pub fn load_idx_labels(path: &Path) -> Result<Vec<u32>> {
    let file = File::open(path)?;
    let file_len = file.metadata()?.len();
    let mut reader = BufReader::new(file);

    let magic = read_u32_be(&mut reader, "label magic")?;
    if magic != LABELS_MAGIC {
        return Err(Error::BadMagic {
            expected: format!("{LABELS_MAGIC:#010x}"),
            got: format!("{magic:#010x}"),
        });
    }
    let n = read_u32_be(&mut reader, "label count")? as usize;
    if (n as u64) > file_len.saturating_sub(8) {
        return Err(Error::TruncatedFile(format!(
            "header promises {n} labels, file holds {}",
            file_len.saturating_sub(8)
        )));
    }
    let mut bytes = vec![0u8; n];
    reader
        .read_exact(&mut bytes)
        .map_err(|e| map_eof(e, "label payload"))?;
    Ok(bytes.into_iter().map(u32::from).collect())
}

/// Load an image file and its companion label file.
pub fn load_idx_with_labels(images: &Path, labels: &Path) -> Result<MatrixStack> {
    let stack = load_idx_images(images)?;
    let labels = load_idx_labels(labels)?;
    stack.with_labels(labels)
}

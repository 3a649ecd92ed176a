//! Dataset ingestion and generation: IDX image files, the MSTK1 binary
//! stack format, CSV fixtures, and a seeded synthetic generator with
//! ground-truth clusters.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stack::MatrixStack;

pub mod csv;
pub mod idx;
pub mod mstk;
mod synth;

pub use self::csv::load_stack_csv;
pub use self::idx::{
    load_idx_images, load_idx_images_scaled, load_idx_labels, load_idx_with_labels, PixelScale,
};
pub use self::mstk::{load_stack, save_stack};
pub use self::synth::{synth_generate, SynthSpec};

/// Load a stack from any supported on-disk format, sniffing the leading
/// magic bytes: MSTK1, IDX3 images, or the CSV fixture format.
pub fn load_auto(path: &Path) -> Result<MatrixStack> {
    let mut head = [0u8; 6];
    let read = {
        let mut f = File::open(path)?;
        let mut filled = 0;
        while filled < head.len() {
            let n = f.read(&mut head[filled..])?;
            if n == 0 {
                break;
            }
            filled += n;
        }
        filled
    };
    if read >= 6 && &head == mstk::MAGIC {
        return load_stack(path);
    }
    if read >= 4 && head[..4] == idx::IMAGES_MAGIC.to_be_bytes() {
        return load_idx_images(path);
    }
    load_stack_csv(path)
}

pub(crate) fn map_eof(e: std::io::Error, what: &str) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::TruncatedFile(what.to_string())
    } else {
        Error::Io(e)
    }
}

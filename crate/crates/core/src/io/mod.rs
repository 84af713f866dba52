//! File formats: tensor files, seed CSVs and raster images.
//!
//! Tensor file layout, all integers little-endian:
//!
//! ```text
//! bytes 0..8    magic "SEEDPRI1"
//! bytes 8..12   u32 header length H
//! next H bytes  JSON {"shape":[..],"channels":n,"dtype":"f32"|"u8"|"u16","order":"row-major"}
//! remainder     product(shape) * channels samples, row-major, channels innermost
//! ```
//!
//! Objectness maps are stored as shape `(C, *grid)` `f32` with the
//! background mask in a sibling `<path>.bg` file of dtype `u8`.

mod image;
mod seeds;
mod tensor;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub use self::image::{decode_image, read_image};
pub use seeds::{encode_seeds, read_seeds, write_seeds};
pub use tensor::{
    bg_path, objectness_tensors, read_class_field, read_label_map, read_objectness, read_tensor,
    write_grid, write_label_map, write_objectness, write_tensor, Dtype, Tensor, TensorData, MAGIC,
};

/// Output staged next to its destination, moved into place by [`commit`].
pub struct Staged {
    file: tempfile::NamedTempFile,
    dest: PathBuf,
}

pub fn stage(dest: &Path, bytes: &[u8]) -> Result<Staged> {
    let dir = match dest.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut file = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dest, e))?;
    file.write_all(bytes).map_err(|e| Error::io(dest, e))?;
    file.as_file().sync_all().map_err(|e| Error::io(dest, e))?;
    Ok(Staged {
        file,
        dest: dest.to_path_buf(),
    })
}

/// Renames every staged file into place. Unstaged temporaries are removed on drop.
pub fn commit(staged: Vec<Staged>) -> Result<()> {
    for s in staged {
        s.file
            .persist(&s.dest)
            .map_err(|e| Error::io(&s.dest, e.error))?;
    }
    Ok(())
}

/// Atomic single-file write via temp file and rename.
pub fn write_atomic(dest: &Path, bytes: &[u8]) -> Result<()> {
    commit(vec![stage(dest, bytes)?])
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

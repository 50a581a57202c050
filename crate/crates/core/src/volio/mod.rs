//! Core data types and their on-disk formats.
//!
//! Axes follow one convention throughout: `x` runs left to right, `y` is
//! the posterior-anterior projection axis, and `z` is inferior to superior,
//! so axial slices are fixed-`z` planes. Voxels are stored x-fastest, then
//! y, then z. Projected 2D images are `nx` wide and `nz` tall with row `z`.

mod image;
mod manifest;
mod mask;
mod nodules;
mod volume;

pub use self::image::{read_image, write_image, GrayImage, ImageFormat, RangeTag};
pub use self::manifest::{read_manifest, write_manifest, Checksums, DatasetManifest, ManifestRecord};
pub use self::mask::{read_mask2d, read_mask3d, write_mask2d, write_mask3d, Mask2D, Mask3D, Occupancy};
pub use self::nodules::{read_nodules, write_nodules, NoduleAnnotation, Rating};
pub use self::volume::{read_volume, write_volume, CtVolume, LoadedVolume, HU_MAX, HU_MIN};

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

pub(crate) fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

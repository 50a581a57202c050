use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_all, write_all};
use crate::error::{Error, Result};

/// One radiologist's scores for a nodule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub texture: u8,
    pub subtlety: u8,
}

/// A nodule as an explicit voxel list plus per-radiologist ratings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoduleAnnotation {
    #[serde(rename = "id")]
    pub nodule_id: String,
    pub voxels: Vec<[usize; 3]>,
    pub ratings: Vec<Rating>,
}

#[derive(Deserialize)]
struct RawRating {
    texture: i64,
    subtlety: i64,
}

#[derive(Deserialize)]
struct RawNodule {
    id: String,
    voxels: Vec<[i64; 3]>,
    ratings: Vec<RawRating>,
}

fn validate(raw: RawNodule, dims: [usize; 3]) -> Result<NoduleAnnotation> {
    let mut voxels = Vec::with_capacity(raw.voxels.len());
    for [x, y, z] in raw.voxels {
        let inside = [x, y, z]
            .iter()
            .zip(dims)
            .all(|(&c, d)| c >= 0 && (c as usize) < d);
        if !inside {
            return Err(Error::NoduleOutOfBounds {
                id: raw.id,
                x,
                y,
                z,
                dims,
            });
        }
        voxels.push([x as usize, y as usize, z as usize]);
    }
    if raw.ratings.is_empty() {
        return Err(Error::InvalidData(format!("nodule {} has no ratings", raw.id)));
    }
    let mut ratings = Vec::with_capacity(raw.ratings.len());
    for r in raw.ratings {
        for (field, value) in [("texture", r.texture), ("subtlety", r.subtlety)] {
            if !(1..=5).contains(&value) {
                return Err(Error::InvalidRating {
                    id: raw.id,
                    field,
                    value,
                });
            }
        }
        ratings.push(Rating {
            texture: r.texture as u8,
            subtlety: r.subtlety as u8,
        });
    }
    Ok(NoduleAnnotation {
        nodule_id: raw.id,
        voxels,
        ratings,
    })
}

/// Reads a JSON nodule file, checking every voxel against `dims`.
///
/// An empty file (or one holding only whitespace) is an empty list.
pub fn read_nodules(path: impl AsRef<Path>, dims: [usize; 3]) -> Result<Vec<NoduleAnnotation>> {
    let path = path.as_ref();
    let bytes = read_all(path)?;
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(Vec::new());
    }
    let raw: Vec<RawNodule> = serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    raw.into_iter().map(|n| validate(n, dims)).collect()
}

pub fn write_nodules(nodules: &[NoduleAnnotation], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = serde_json::to_vec_pretty(nodules).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    write_all(path, &bytes)
}

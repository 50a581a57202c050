use std::path::{Path, PathBuf};

use super::{read_all, write_all};
use crate::error::{Error, Result};

/// Lowest representable HU value (12-bit CT range).
pub const HU_MIN: i16 = -1024;
/// Highest representable HU value (12-bit CT range).
pub const HU_MAX: i16 = 3071;

/// A CT volume of Hounsfield-unit voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct CtVolume {
    dims: [usize; 3],
    spacing_mm: [f64; 3],
    voxels: Vec<i16>,
}

impl CtVolume {
    /// Builds a volume, rejecting voxels outside `[HU_MIN, HU_MAX]`.
    pub fn new(dims: [usize; 3], spacing_mm: [f64; 3], voxels: Vec<i16>) -> Result<Self> {
        check_geometry(dims, spacing_mm, voxels.len())?;
        if let Some(v) = voxels.iter().find(|v| !(HU_MIN..=HU_MAX).contains(*v)) {
            return Err(Error::InvalidData(format!(
                "voxel value {v} outside [{HU_MIN}, {HU_MAX}]"
            )));
        }
        Ok(CtVolume {
            dims,
            spacing_mm,
            voxels,
        })
    }

    /// Builds a volume, clamping out-of-range voxels. Returns the number clamped.
    pub fn new_clamped(
        dims: [usize; 3],
        spacing_mm: [f64; 3],
        mut voxels: Vec<i16>,
    ) -> Result<(Self, usize)> {
        check_geometry(dims, spacing_mm, voxels.len())?;
        let mut clamped = 0;
        for v in voxels.iter_mut() {
            let c = (*v).clamp(HU_MIN, HU_MAX);
            if c != *v {
                *v = c;
                clamped += 1;
            }
        }
        Ok((
            CtVolume {
                dims,
                spacing_mm,
                voxels,
            },
            clamped,
        ))
    }

    /// A volume filled with a single HU value.
    pub fn filled(dims: [usize; 3], spacing_mm: [f64; 3], hu: i16) -> Result<Self> {
        let n = dims.iter().product();
        Self::new(dims, spacing_mm, vec![hu; n])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing_mm(&self) -> [f64; 3] {
        self.spacing_mm
    }

    pub fn voxels(&self) -> &[i16] {
        &self.voxels
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> i16 {
        self.voxels[self.index(x, y, z)]
    }

    /// Sets one voxel, clamping to the valid HU range.
    pub fn set(&mut self, x: usize, y: usize, z: usize, hu: i16) {
        let i = self.index(x, y, z);
        self.voxels[i] = hu.clamp(HU_MIN, HU_MAX);
    }

    /// The axial slice at `z`, laid out x-fastest (`nx * ny` values).
    pub fn slice(&self, z: usize) -> &[i16] {
        let n = self.dims[0] * self.dims[1];
        &self.voxels[z * n..(z + 1) * n]
    }

    pub(crate) fn from_parts_unchecked(
        dims: [usize; 3],
        spacing_mm: [f64; 3],
        voxels: Vec<i16>,
    ) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), voxels.len());
        CtVolume {
            dims,
            spacing_mm,
            voxels,
        }
    }
}

fn check_geometry(dims: [usize; 3], spacing_mm: [f64; 3], len: usize) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::InvalidData(format!("dims must be positive, got {dims:?}")));
    }
    if spacing_mm.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidData(format!(
            "spacing must be positive, got {spacing_mm:?}"
        )));
    }
    let n: usize = dims.iter().product();
    if n != len {
        return Err(Error::DimMismatch(format!(
            "dims {dims:?} imply {n} voxels, got {len}"
        )));
    }
    Ok(())
}

/// A volume read from disk plus the number of voxels clamped into range.
#[derive(Debug, Clone)]
pub struct LoadedVolume {
    pub volume: CtVolume,
    pub clamped: usize,
}

struct Header {
    dims: [usize; 3],
    spacing_mm: [f64; 3],
    data: PathBuf,
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Option<[T; 3]> {
    let parts: Vec<T> = value
        .trim_matches(|c| c == '(' || c == ')' || c == '[' || c == ']')
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().ok())
        .collect::<Option<_>>()?;
    parts.try_into().ok()
}

fn parse_header(path: &Path, text: &str) -> Result<Header> {
    let bad = |reason: String| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason,
    };
    let (mut dims, mut spacing, mut data) = (None, None, None);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected `key = value`", lineno + 1)))?;
        let value = value.trim();
        match key.trim() {
            "dims" => {
                dims = Some(
                    parse_list::<usize>(value)
                        .ok_or_else(|| bad(format!("bad dims `{value}`")))?,
                )
            }
            "spacing_mm" => {
                spacing = Some(
                    parse_list::<f64>(value)
                        .ok_or_else(|| bad(format!("bad spacing_mm `{value}`")))?,
                )
            }
            "data" => data = Some(PathBuf::from(value)),
            // unknown keys are carried as metadata and ignored
            _ => {}
        }
    }
    Ok(Header {
        dims: dims.ok_or_else(|| bad("missing key `dims`".into()))?,
        spacing_mm: spacing.ok_or_else(|| bad("missing key `spacing_mm`".into()))?,
        data: data.ok_or_else(|| bad("missing key `data`".into()))?,
    })
}

/// Reads a volume from a text header and its little-endian `i16` raw file.
///
/// Values outside the 12-bit HU range are clamped and counted.
pub fn read_volume(header_path: impl AsRef<Path>) -> Result<LoadedVolume> {
    let header_path = header_path.as_ref();
    let bytes = read_all(header_path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::MalformedHeader {
        path: header_path.to_path_buf(),
        reason: "not valid UTF-8".into(),
    })?;
    let header = parse_header(header_path, &text)?;
    if header.dims.contains(&0) || header.spacing_mm.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::MalformedHeader {
            path: header_path.to_path_buf(),
            reason: "dims and spacing must be positive".into(),
        });
    }
    let raw_path = header_path
        .parent()
        .unwrap_or_else(|| Path::new(""))
        .join(&header.data);
    let raw = read_all(&raw_path)?;
    let n: usize = header.dims.iter().product();
    let expected = 2 * n as u64;
    if raw.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            path: raw_path,
            expected,
            actual: raw.len() as u64,
        });
    }
    let voxels = raw
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]))
        .collect();
    let (volume, clamped) = CtVolume::new_clamped(header.dims, header.spacing_mm, voxels)?;
    Ok(LoadedVolume { volume, clamped })
}

/// Writes `vol` as `header_path` plus a raw file named after the header stem.
pub fn write_volume(vol: &CtVolume, header_path: impl AsRef<Path>) -> Result<()> {
    let header_path = header_path.as_ref();
    let stem = header_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("volume");
    let raw_name = format!("{stem}.raw");
    let [nx, ny, nz] = vol.dims;
    let [sx, sy, sz] = vol.spacing_mm;
    let header = format!("dims = {nx} {ny} {nz}\nspacing_mm = {sx} {sy} {sz}\ndata = {raw_name}\n");
    let mut raw = Vec::with_capacity(vol.voxels.len() * 2);
    for v in &vol.voxels {
        raw.extend_from_slice(&v.to_le_bytes());
    }
    let raw_path = header_path
        .parent()
        .unwrap_or_else(|| Path::new(""))
        .join(raw_name);
    write_all(&raw_path, &raw)?;
    write_all(header_path, header.as_bytes())
}

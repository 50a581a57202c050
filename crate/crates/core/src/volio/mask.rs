use std::path::Path;

use super::image::{decode_pgm, encode_pgm16};
use super::{read_all, write_all};
use crate::error::{Error, Result};

const F32_VOLUME_MAGIC: &[u8; 8] = b"F32XVOL\0";

/// Anything that is a flat binary occupancy grid.
pub trait Occupancy {
    fn bits(&self) -> &[bool];
    /// Grid extents; 2D masks report a unit third axis.
    fn shape(&self) -> [usize; 3];

    fn count(&self) -> usize {
        self.bits().iter().filter(|&&b| b).count()
    }

    fn is_empty(&self) -> bool {
        !self.bits().iter().any(|&b| b)
    }
}

/// Binary occupancy over a volume grid, indexed like [`super::CtVolume`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask3D {
    dims: [usize; 3],
    bits: Vec<bool>,
}

impl Mask3D {
    pub fn new(dims: [usize; 3], bits: Vec<bool>) -> Result<Self> {
        if bits.len() != dims.iter().product::<usize>() {
            return Err(Error::DimMismatch(format!(
                "mask dims {dims:?} vs {} bits",
                bits.len()
            )));
        }
        Ok(Mask3D { dims, bits })
    }

    pub fn empty(dims: [usize; 3]) -> Self {
        Mask3D {
            dims,
            bits: vec![false; dims.iter().product()],
        }
    }

    pub fn full(dims: [usize; 3]) -> Self {
        Mask3D {
            dims,
            bits: vec![true; dims.iter().product()],
        }
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(dims.iter().product());
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    bits.push(f(x, y, z));
                }
            }
        }
        Mask3D { dims, bits }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.bits[x + self.dims[0] * (y + self.dims[1] * z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, v: bool) {
        let i = x + self.dims[0] * (y + self.dims[1] * z);
        self.bits[i] = v;
    }

    pub fn slice(&self, z: usize) -> &[bool] {
        let n = self.dims[0] * self.dims[1];
        &self.bits[z * n..(z + 1) * n]
    }

    pub fn union(&self, other: &Mask3D) -> Result<Mask3D> {
        if self.dims != other.dims {
            return Err(Error::DimMismatch(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect();
        Ok(Mask3D { dims: self.dims, bits })
    }
}

impl Occupancy for Mask3D {
    fn bits(&self) -> &[bool] {
        &self.bits
    }

    fn shape(&self) -> [usize; 3] {
        self.dims
    }
}

/// Binary occupancy over a projected `(nx, nz)` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask2D {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask2D {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimMismatch(format!(
                "mask {width}x{height} vs {} bits",
                bits.len()
            )));
        }
        Ok(Mask2D { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Mask2D {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Mask2D {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                bits.push(f(col, row));
            }
        }
        Mask2D { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[col + self.width * row]
    }

    pub fn set(&mut self, col: usize, row: usize, v: bool) {
        self.bits[col + self.width * row] = v;
    }

    pub fn union(&self, other: &Mask2D) -> Result<Mask2D> {
        if self.dims() != other.dims() {
            return Err(Error::DimMismatch(format!("{:?} vs {:?}", self.dims(), other.dims())));
        }
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect();
        Ok(Mask2D {
            width: self.width,
            height: self.height,
            bits,
        })
    }

    /// True if every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Mask2D) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }
}

impl Occupancy for Mask2D {
    fn bits(&self) -> &[bool] {
        &self.bits
    }

    fn shape(&self) -> [usize; 3] {
        [self.width, self.height, 1]
    }
}

/// Writes a 2D mask as a 16-bit PGM with samples `{0, 65535}`.
pub fn write_mask2d(mask: &Mask2D, path: impl AsRef<Path>) -> Result<()> {
    let samples: Vec<u16> = mask.bits.iter().map(|&b| if b { 65535 } else { 0 }).collect();
    write_all(path.as_ref(), &encode_pgm16(mask.width, mask.height, &samples))
}

/// Reads a PGM mask. Samples must be `0` or the file's maxval.
pub fn read_mask2d(path: impl AsRef<Path>) -> Result<Mask2D> {
    let path = path.as_ref();
    let bytes = read_all(path)?;
    let pgm = decode_pgm(path, &bytes)?;
    let bits = pgm
        .samples
        .iter()
        .map(|&s| match s {
            0 => Ok(false),
            s if s == pgm.maxval => Ok(true),
            s => Err(Error::InvalidData(format!(
                "mask {} has non-binary sample {s}",
                path.display()
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    Mask2D::new(pgm.width, pgm.height, bits)
}

/// Writes a 3D mask as an `F32XVOL` stack of 0.0/1.0 values.
pub fn write_mask3d(mask: &Mask3D, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::with_capacity(20 + 4 * mask.bits.len());
    out.extend_from_slice(F32_VOLUME_MAGIC);
    for d in mask.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &b in &mask.bits {
        out.extend_from_slice(&(if b { 1.0f32 } else { 0.0 }).to_le_bytes());
    }
    write_all(path.as_ref(), &out)
}

pub fn read_mask3d(path: impl AsRef<Path>) -> Result<Mask3D> {
    let path = path.as_ref();
    let bytes = read_all(path)?;
    if !bytes.starts_with(F32_VOLUME_MAGIC) {
        return Err(Error::UnknownMagic(path.to_path_buf()));
    }
    let truncated = |expected: usize| Error::Truncated {
        path: path.to_path_buf(),
        expected: expected as u64,
        actual: bytes.len() as u64,
    };
    if bytes.len() < 20 {
        return Err(truncated(20));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
    let dims = [dim(0), dim(1), dim(2)];
    let expected = 20 + 4 * dims.iter().product::<usize>();
    if bytes.len() < expected {
        return Err(truncated(expected));
    }
    let bits = bytes[20..expected]
        .chunks_exact(4)
        .map(|b| {
            let v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            if v == 0.0 {
                Ok(false)
            } else if v == 1.0 {
                Ok(true)
            } else {
                Err(Error::InvalidData(format!("mask value {v} is not 0 or 1")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Mask3D::new(dims, bits)
}

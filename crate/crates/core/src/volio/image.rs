use std::path::Path;

use super::{read_all, write_all};
use crate::error::{Error, Result};

const F32_IMAGE_MAGIC: &[u8; 8] = b"F32XIMG\0";

/// What value range an image is known to occupy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RangeTag {
    /// No range guarantee (attenuation maps, resampled raw images).
    Raw,
    /// Output of DRR synthesis; strictly positive.
    RawDrr,
    /// All pixels in `[0, 1]`.
    Unit,
    /// Affinely normalized to a target mean and standard deviation.
    ZeroMean,
}

impl RangeTag {
    pub fn code(self) -> u8 {
        match self {
            RangeTag::Raw => 0,
            RangeTag::RawDrr => 1,
            RangeTag::Unit => 2,
            RangeTag::ZeroMean => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => RangeTag::Raw,
            1 => RangeTag::RawDrr,
            2 => RangeTag::Unit,
            3 => RangeTag::ZeroMean,
            _ => return None,
        })
    }
}

/// A single-channel `f32` image stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f32>,
    range: RangeTag,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f32>, range: RangeTag) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidData(format!(
                "image dims must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::DimMismatch(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite pixel {p}")));
        }
        match range {
            RangeTag::Unit => {
                if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return Err(Error::InvalidData(format!("unit image has pixel {p}")));
                }
            }
            RangeTag::RawDrr => {
                if let Some(p) = pixels.iter().find(|p| **p <= 0.0) {
                    return Err(Error::InvalidData(format!("DRR image has pixel {p}")));
                }
            }
            RangeTag::Raw | RangeTag::ZeroMean => {}
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
            range,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        range: RangeTag,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(col, row));
            }
        }
        Self::new(width, height, pixels, range)
    }

    pub fn filled(width: usize, height: usize, value: f32, range: RangeTag) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], range)
    }

    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        pixels: Vec<f32>,
        range: RangeTag,
    ) -> Self {
        debug_assert_eq!(pixels.len(), width * height);
        GrayImage {
            width,
            height,
            pixels,
            range,
        }
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

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f32> {
        self.pixels
    }

    pub fn range(&self) -> RangeTag {
        self.range
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f32 {
        self.pixels[col + self.width * row]
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.pixels
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &p| {
                (lo.min(p), hi.max(p))
            })
    }

    pub(crate) fn require_range(&self, tag: RangeTag, what: &str) -> Result<()> {
        if self.range != tag {
            return Err(Error::InvalidParam(format!(
                "{what} requires a {tag:?} image, got {:?}",
                self.range
            )));
        }
        Ok(())
    }

    pub(crate) fn require_same_dims(&self, other: &GrayImage) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimMismatch(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    /// 16-bit binary PGM (`P5`, maxval 65535). Unit images only.
    Pgm16,
    /// Lossless float32 with a range tag.
    F32Raw,
}

/// Quantizes a unit value to 16 bits, rounding half up.
pub(crate) fn quantize16(v: f32) -> u16 {
    let q = (f64::from(v) * 65535.0 + 0.5).floor();
    q.clamp(0.0, 65535.0) as u16
}

pub fn write_image(img: &GrayImage, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        ImageFormat::Pgm16 => {
            img.require_range(RangeTag::Unit, "pgm16 output")?;
            let samples: Vec<u16> = img.pixels.iter().map(|&p| quantize16(p)).collect();
            encode_pgm16(img.width, img.height, &samples)
        }
        ImageFormat::F32Raw => {
            let mut out = Vec::with_capacity(17 + 4 * img.pixels.len());
            out.extend_from_slice(F32_IMAGE_MAGIC);
            out.extend_from_slice(&(img.width as u32).to_le_bytes());
            out.extend_from_slice(&(img.height as u32).to_le_bytes());
            out.push(img.range.code());
            for p in &img.pixels {
                out.extend_from_slice(&p.to_le_bytes());
            }
            out
        }
    };
    write_all(path, &bytes)
}

pub(crate) fn encode_pgm16(width: usize, height: usize, samples: &[u16]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(samples.len() * 2);
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

pub(crate) struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

pub(crate) fn decode_pgm(path: &Path, bytes: &[u8]) -> Result<Pgm> {
    let malformed = |reason: &str| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if !bytes.starts_with(b"P5") {
        return Err(Error::UnknownMagic(path.to_path_buf()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("bad PGM header field"))?;
    }
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(malformed("missing separator after PGM header"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(malformed("PGM dims or maxval out of range"));
    }
    let bps = if maxval < 256 { 1 } else { 2 };
    let expected = width * height * bps;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: expected as u64,
            actual: payload.len() as u64,
        });
    }
    let samples = if bps == 1 {
        payload[..expected].iter().map(|&b| u16::from(b)).collect()
    } else {
        payload[..expected]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect()
    };
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        samples,
    })
}

/// Reads a PGM (mapped to `[0, 1]`) or f32raw image, detected by magic.
pub fn read_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = read_all(path)?;
    if bytes.starts_with(F32_IMAGE_MAGIC) {
        let truncated = |expected: usize| Error::Truncated {
            path: path.to_path_buf(),
            expected: expected as u64,
            actual: bytes.len() as u64,
        };
        if bytes.len() < 17 {
            return Err(truncated(17));
        }
        let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let height = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let range = RangeTag::from_code(bytes[16]).ok_or_else(|| Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: format!("unknown range tag {}", bytes[16]),
        })?;
        let expected = 17 + 4 * width * height;
        if bytes.len() < expected {
            return Err(truncated(expected));
        }
        let pixels = bytes[17..expected]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        GrayImage::new(width, height, pixels, range)
    } else if bytes.starts_with(b"P5") {
        let pgm = decode_pgm(path, &bytes)?;
        let scale = f32::from(pgm.maxval);
        let pixels = pgm.samples.iter().map(|&s| f32::from(s) / scale).collect();
        GrayImage::new(pgm.width, pgm.height, pixels, RangeTag::Unit)
    } else {
        Err(Error::UnknownMagic(path.to_path_buf()))
    }
}

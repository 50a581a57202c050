//! Radiograph preprocessing (global and contrast-limited adaptive histogram
//! equalization, lung-area standardization) and the fusion of a radiograph
//! with an extracted lung-structure image.

use crate::drr::normalize_unit;
use crate::error::{Error, Result};
use crate::exec;
use crate::lungseg::{components, select_and_fill, Connectivity, SegParams};
use crate::volio::{GrayImage, Mask2D, Occupancy, RangeTag};

const BINS: usize = 256;
/// Side of the box filter used by [`baseline_extract`].
pub const BASELINE_BOX: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceParams {
    /// Weight of the lung image in the fused sum.
    pub w: f64,
    /// CLAHE tile size `(width, height)`.
    pub clahe_window: (usize, usize),
    /// CLAHE clip limit as a fraction of tile pixel count.
    pub clahe_clip: f64,
    pub lung_mean: f64,
    pub lung_std: f64,
    /// Run HE then CLAHE on the radiograph before fusion.
    pub preprocess: bool,
}

impl Default for EnhanceParams {
    fn default() -> Self {
        EnhanceParams {
            w: 1.0,
            clahe_window: (40, 40),
            clahe_clip: 0.01,
            lung_mean: 0.0,
            lung_std: 0.5,
            preprocess: true,
        }
    }
}

impl EnhanceParams {
    pub fn validate(&self) -> Result<()> {
        check_weight(self.w)?;
        check_clahe(self.clahe_window, self.clahe_clip)?;
        if !(self.lung_std > 0.0 && self.lung_std.is_finite() && self.lung_mean.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "lung_std must be > 0 and lung_mean finite, got ({}, {})",
                self.lung_mean, self.lung_std
            )));
        }
        Ok(())
    }
}

fn check_weight(w: f64) -> Result<()> {
    if !(w >= 0.0 && w.is_finite()) {
        return Err(Error::InvalidParam(format!("w must be >= 0, got {w}")));
    }
    Ok(())
}

fn check_clahe(window: (usize, usize), clip: f64) -> Result<()> {
    if window.0 < 2 || window.1 < 2 {
        return Err(Error::InvalidParam(format!("CLAHE window must be >= 2, got {window:?}")));
    }
    if !(clip > 0.0 && clip <= 1.0) {
        return Err(Error::InvalidParam(format!("CLAHE clip must be in (0, 1], got {clip}")));
    }
    Ok(())
}

#[inline]
fn bin(v: f32) -> usize {
    ((v * BINS as f32) as usize).min(BINS - 1)
}

fn unit_image(width: usize, height: usize, pixels: Vec<f32>) -> GrayImage {
    GrayImage::from_parts_unchecked(width, height, pixels, RangeTag::Unit)
}

/// Cumulative histogram divided by the pixel count.
fn equalization_map(counts: &[f64; BINS], total: f64) -> [f64; BINS] {
    let mut map = [0.0; BINS];
    let mut acc = 0.0;
    for (m, &c) in map.iter_mut().zip(counts) {
        acc += c;
        *m = acc / total;
    }
    map
}

/// Global histogram equalization over 256 bins: each pixel maps to the
/// fraction of pixels in its bin or below.
pub fn hist_equalize(img: &GrayImage) -> Result<GrayImage> {
    img.require_range(RangeTag::Unit, "hist_equalize")?;
    let mut counts = [0.0; BINS];
    for &p in img.pixels() {
        counts[bin(p)] += 1.0;
    }
    let map = equalization_map(&counts, img.pixels().len() as f64);
    let pixels = img
        .pixels()
        .iter()
        .map(|&p| (map[bin(p)] as f32).clamp(0.0, 1.0))
        .collect();
    Ok(unit_image(img.width(), img.height(), pixels))
}

/// Tile extents along one axis and the (fractional) tile centers.
struct TileAxis {
    centers: Vec<f64>,
    bounds: Vec<(usize, usize)>,
}

impl TileAxis {
    fn new(len: usize, tile: usize) -> Self {
        let bounds: Vec<_> = (0..len.div_ceil(tile))
            .map(|i| (i * tile, ((i + 1) * tile).min(len)))
            .collect();
        let centers = bounds.iter().map(|&(a, b)| (a + b - 1) as f64 / 2.0).collect();
        TileAxis { centers, bounds }
    }

    /// The two tiles bracketing `pos` and the weight of the second.
    fn locate(&self, pos: usize) -> (usize, usize, f64) {
        let p = pos as f64;
        let last = self.centers.len() - 1;
        if p <= self.centers[0] {
            return (0, 0, 0.0);
        }
        if p >= self.centers[last] {
            return (last, last, 0.0);
        }
        let i = self.centers.partition_point(|&c| c <= p) - 1;
        let f = (p - self.centers[i]) / (self.centers[i + 1] - self.centers[i]);
        (i, i + 1, f)
    }
}

/// Contrast-limited adaptive histogram equalization.
///
/// The image is cut into `window`-sized tiles (edge tiles may be smaller).
/// Each tile's 256-bin histogram is clipped at `clip` times its pixel count,
/// the clipped excess is spread evenly over all bins, and the tile gets the
/// resulting equalization map. Pixels interpolate bilinearly between the
/// maps of the four nearest tile centers; beyond the outermost centers the
/// edge tiles are used as-is.
pub fn clahe(img: &GrayImage, window: (usize, usize), clip: f64) -> Result<GrayImage> {
    img.require_range(RangeTag::Unit, "clahe")?;
    check_clahe(window, clip)?;
    let (w, h) = img.dims();
    if window.0 > w || window.1 > h {
        return Err(Error::InvalidParam(format!(
            "CLAHE window {window:?} larger than image {w}x{h}"
        )));
    }
    let xs = TileAxis::new(w, window.0);
    let ys = TileAxis::new(h, window.1);
    let (tx, ty) = (xs.bounds.len(), ys.bounds.len());

    let maps: Vec<[f64; BINS]> = exec::map_indexed(tx * ty, |t| {
        let (x0, x1) = xs.bounds[t % tx];
        let (y0, y1) = ys.bounds[t / tx];
        let mut counts = [0.0; BINS];
        for row in y0..y1 {
            for col in x0..x1 {
                counts[bin(img.get(col, row))] += 1.0;
            }
        }
        let total = ((x1 - x0) * (y1 - y0)) as f64;
        let limit = clip * total;
        let mut excess = 0.0;
        for c in counts.iter_mut() {
            if *c > limit {
                excess += *c - limit;
                *c = limit;
            }
        }
        if excess > 0.0 {
            let share = excess / BINS as f64;
            counts.iter_mut().for_each(|c| *c += share);
        }
        equalization_map(&counts, total)
    });

    let mut out = vec![0.0f32; w * h];
    exec::for_each_chunk_mut(&mut out, w, |row, line| {
        let (r0, r1, fy) = ys.locate(row);
        for (col, o) in line.iter_mut().enumerate() {
            let (c0, c1, fx) = xs.locate(col);
            let b = bin(img.get(col, row));
            let m = |tr: usize, tc: usize| maps[tr * tx + tc][b];
            let top = m(r0, c0) + fx * (m(r0, c1) - m(r0, c0));
            let bottom = m(r1, c0) + fx * (m(r1, c1) - m(r1, c0));
            *o = ((top + fy * (bottom - top)) as f32).clamp(0.0, 1.0);
        }
    });
    Ok(unit_image(w, h, out))
}

/// Applies one affine map to the whole image so that pixels under `mask`
/// have the target mean and (population) standard deviation.
pub fn normalize_lung_area(img: &GrayImage, mask: &Mask2D, mean: f64, std: f64) -> Result<GrayImage> {
    if img.dims() != mask.dims() {
        return Err(Error::DimMismatch(format!("image {:?} vs mask {:?}", img.dims(), mask.dims())));
    }
    if !(std > 0.0 && std.is_finite() && mean.is_finite()) {
        return Err(Error::InvalidParam(format!("target stats ({mean}, {std}) invalid")));
    }
    let selected: Vec<f64> = img
        .pixels()
        .iter()
        .zip(mask.bits())
        .filter(|(_, &m)| m)
        .map(|(&p, _)| f64::from(p))
        .collect();
    if selected.is_empty() {
        return Err(Error::EmptyMask);
    }
    let n = selected.len() as f64;
    let mu = selected.iter().sum::<f64>() / n;
    let var = selected.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let a = std / var.sqrt();
    let b = mean - a * mu;
    let pixels = img
        .pixels()
        .iter()
        .map(|&p| (a * f64::from(p) + b) as f32)
        .collect();
    GrayImage::new(img.width(), img.height(), pixels, RangeTag::ZeroMean)
}

/// Min-max rescales `cxr + w * lung` to `[0, 1]`.
pub fn fuse(cxr: &GrayImage, lung: &GrayImage, w: f64) -> Result<GrayImage> {
    cxr.require_range(RangeTag::Unit, "fuse (radiograph)")?;
    lung.require_range(RangeTag::Unit, "fuse (lung image)")?;
    cxr.require_same_dims(lung)?;
    check_weight(w)?;
    let sum: Vec<f64> = cxr
        .pixels()
        .iter()
        .zip(lung.pixels())
        .map(|(&c, &l)| f64::from(c) + w * f64::from(l))
        .collect();
    let (lo, hi) = sum
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return Err(Error::DegenerateRange);
    }
    let pixels = sum
        .iter()
        .map(|&v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0) as f32)
        .collect();
    Ok(unit_image(cxr.width(), cxr.height(), pixels))
}

/// Mean over a `size` by `size` window truncated at the image edges.
fn box_blur(img: &GrayImage, size: usize) -> Vec<f64> {
    let (w, h) = img.dims();
    // summed-area table with a zero border row and column
    let mut sat = vec![0.0f64; (w + 1) * (h + 1)];
    for row in 0..h {
        let mut line = 0.0;
        for col in 0..w {
            line += f64::from(img.get(col, row));
            sat[(row + 1) * (w + 1) + col + 1] = sat[row * (w + 1) + col + 1] + line;
        }
    }
    let r = size / 2;
    let mut out = Vec::with_capacity(w * h);
    for row in 0..h {
        let (r0, r1) = (row.saturating_sub(r), (row + r + 1).min(h));
        for col in 0..w {
            let (c0, c1) = (col.saturating_sub(r), (col + r + 1).min(w));
            let s = sat[r1 * (w + 1) + c1] - sat[r0 * (w + 1) + c1] - sat[r1 * (w + 1) + c0]
                + sat[r0 * (w + 1) + c0];
            out.push(s / ((r1 - r0) * (c1 - c0)) as f64);
        }
    }
    out
}

/// Model-free stand-in for a lung-structure extractor: the high-pass detail
/// `cxr - box_blur(cxr)` restricted to `mask`, rescaled to `[0, 1]`.
/// Returns an all-zero image when the masked detail is constant.
pub fn baseline_extract(cxr: &GrayImage, mask: &Mask2D) -> Result<GrayImage> {
    cxr.require_range(RangeTag::Unit, "baseline_extract")?;
    if cxr.dims() != mask.dims() {
        return Err(Error::DimMismatch(format!("image {:?} vs mask {:?}", cxr.dims(), mask.dims())));
    }
    let blur = box_blur(cxr, BASELINE_BOX);
    let detail: Vec<f32> = cxr
        .pixels()
        .iter()
        .zip(&blur)
        .zip(mask.bits())
        .map(|((&p, &b), &m)| if m { (f64::from(p) - b) as f32 } else { 0.0 })
        .collect();
    let raw = GrayImage::from_parts_unchecked(cxr.width(), cxr.height(), detail, RangeTag::Raw);
    match normalize_unit(&raw) {
        Err(Error::DegenerateRange) => GrayImage::filled(cxr.width(), cxr.height(), 0.0, RangeTag::Unit),
        r => r,
    }
}

/// Otsu's threshold over 256 bins; returns the last bin of the dark class.
fn otsu_bin(values: impl Iterator<Item = f32>) -> Option<usize> {
    let mut hist = [0u64; BINS];
    let mut n = 0u64;
    for v in values {
        hist[bin(v)] += 1;
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let total: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0u64, 0.0);
    let mut best = (f64::NEG_INFINITY, None);
    for (t, &c) in hist.iter().enumerate() {
        w0 += c;
        sum0 += t as f64 * c as f64;
        let w1 = n - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let m0 = sum0 / w0 as f64;
        let m1 = (total - sum0) / w1 as f64;
        let between = w0 as f64 * w1 as f64 * (m0 - m1).powi(2);
        if between > best.0 {
            best = (between, Some(t));
        }
    }
    best.1
}

/// Heuristic lung mask for when no segmentation is supplied.
///
/// Dark regions connected to the image border are treated as background;
/// within the remaining body, pixels in the dark Otsu class form lung
/// candidates, of which the two largest interior regions are kept and
/// hole-filled.
pub fn fallback_lung_mask(cxr: &GrayImage) -> Result<Mask2D> {
    let unit = match cxr.range() {
        RangeTag::Unit => cxr.clone(),
        _ => normalize_unit(cxr)?,
    };
    let (w, h) = unit.dims();
    let px = unit.pixels();
    let Some(t_bg) = otsu_bin(px.iter().copied()) else {
        return Ok(Mask2D::empty(w, h));
    };
    let dark: Vec<bool> = px.iter().map(|&p| bin(p) <= t_bg).collect();
    let mut background = vec![false; px.len()];
    for c in components(&dark, w, h, Connectivity::Eight).into_iter().filter(|c| c.touches_border) {
        c.pixels.iter().for_each(|&i| background[i] = true);
    }
    let body = px.iter().zip(&background).filter(|(_, &bg)| !bg).map(|(&p, _)| p);
    let Some(t_lung) = otsu_bin(body) else {
        return Ok(Mask2D::empty(w, h));
    };
    let candidates: Vec<bool> = px
        .iter()
        .zip(&background)
        .map(|(&p, &bg)| !bg && bin(p) <= t_lung)
        .collect();
    let bits = select_and_fill(&candidates, w, h, &SegParams::default());
    Mask2D::new(w, h, bits)
}

/// Preprocessed inputs ready for fusion at any weight.
#[derive(Debug, Clone)]
pub struct PreparedEnhancement {
    /// Unit-scaled (and optionally equalized) radiograph.
    pub preprocessed: GrayImage,
    /// Unit-scaled lung-structure image.
    pub lung: GrayImage,
    /// Radiograph standardized over the lung mask, as fed to an extractor.
    pub lung_area_normalized: Option<GrayImage>,
}

impl PreparedEnhancement {
    pub fn fuse(&self, w: f64) -> Result<GrayImage> {
        fuse(&self.preprocessed, &self.lung, w)
    }
}

pub fn prepare(
    cxr: &GrayImage,
    lung_pred: &GrayImage,
    lung_mask: Option<&Mask2D>,
    params: &EnhanceParams,
) -> Result<PreparedEnhancement> {
    params.validate()?;
    cxr.require_same_dims(lung_pred)?;
    let unit = normalize_unit(cxr)?;
    let preprocessed = if params.preprocess {
        let eq = hist_equalize(&unit)?;
        normalize_unit(&clahe(&eq, params.clahe_window, params.clahe_clip)?)?
    } else {
        unit
    };
    let lung = normalize_unit(lung_pred)?;
    let lung_area_normalized = lung_mask
        .map(|m| normalize_lung_area(&preprocessed, m, params.lung_mean, params.lung_std))
        .transpose()?;
    Ok(PreparedEnhancement {
        preprocessed,
        lung,
        lung_area_normalized,
    })
}

#[derive(Debug, Clone)]
pub struct EnhanceOutput {
    pub prepared: PreparedEnhancement,
    pub enhanced: GrayImage,
}

/// Full enhancement: preprocess the radiograph, scale both images to the
/// unit range, and fuse with weight `params.w`.
pub fn enhance_pipeline(
    cxr: &GrayImage,
    lung_pred: &GrayImage,
    lung_mask: Option<&Mask2D>,
    params: &EnhanceParams,
) -> Result<EnhanceOutput> {
    let prepared = prepare(cxr, lung_pred, lung_mask, params)?;
    let enhanced = prepared.fuse(params.w)?;
    Ok(EnhanceOutput { prepared, enhanced })
}

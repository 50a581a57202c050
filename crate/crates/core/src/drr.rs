//! Parallel-projection radiograph synthesis.
//!
//! The attenuation map averages `mu_water * (HU + 1000) / 1000` along the
//! posterior-anterior (`y`) axis, and the radiograph is `exp(beta * map)`.
//! The exponent is positive, so denser columns render brighter, which gives
//! the display polarity of a clinical radiograph rather than physical
//! transmitted intensity.

use crate::error::{Error, Result};
use crate::exec;
use crate::volio::{CtVolume, GrayImage, RangeTag};

/// Water attenuation coefficient, cm^-1.
pub const DEFAULT_MU_WATER: f64 = 0.2;
/// Exponent scale applied to the attenuation map.
pub const DEFAULT_BETA: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrrParams {
    pub mu_water: f64,
    pub beta: f64,
}

impl Default for DrrParams {
    fn default() -> Self {
        DrrParams {
            mu_water: DEFAULT_MU_WATER,
            beta: DEFAULT_BETA,
        }
    }
}

impl DrrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_water > 0.0 && self.mu_water.is_finite()) {
            return Err(Error::InvalidParam(format!("mu_water must be > 0, got {}", self.mu_water)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParam(format!("beta must be > 0, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Per-column `(HU + 1000)` sums, exact in integer arithmetic so the result
/// does not depend on traversal order.
fn column_sums(vol: &CtVolume) -> Vec<i64> {
    let [nx, ny, nz] = vol.dims();
    let mut sums = vec![0i64; nx * nz];
    exec::for_each_chunk_mut(&mut sums, nx, |z, row| {
        let slab = vol.slice(z);
        for y in 0..ny {
            let line = &slab[y * nx..(y + 1) * nx];
            for (acc, &hu) in row.iter_mut().zip(line) {
                *acc += i64::from(hu) + 1000;
            }
        }
    });
    sums
}

fn map_values(vol: &CtVolume, params: &DrrParams) -> Vec<f64> {
    let ny = vol.dims()[1] as f64;
    let scale = params.mu_water / (ny * 1000.0);
    column_sums(vol).into_iter().map(|s| s as f64 * scale).collect()
}

/// Average attenuation along `y`; an `nx` by `nz` image tagged [`RangeTag::Raw`].
pub fn attenuation_map(vol: &CtVolume, params: &DrrParams) -> Result<GrayImage> {
    params.validate()?;
    let [nx, _, nz] = vol.dims();
    let pixels = map_values(vol, params).into_iter().map(|v| v as f32).collect();
    Ok(GrayImage::from_parts_unchecked(nx, nz, pixels, RangeTag::Raw))
}

/// The synthetic radiograph `exp(beta * attenuation_map)`.
pub fn drr(vol: &CtVolume, params: &DrrParams) -> Result<GrayImage> {
    params.validate()?;
    let [nx, _, nz] = vol.dims();
    let pixels = map_values(vol, params)
        .into_iter()
        .map(|m| (params.beta * m).exp() as f32)
        .collect();
    Ok(GrayImage::from_parts_unchecked(nx, nz, pixels, RangeTag::RawDrr))
}

/// Min-max rescale to `[0, 1]`. Fails on a constant image.
pub fn normalize_unit(img: &GrayImage) -> Result<GrayImage> {
    let (lo, hi) = img.min_max();
    if !(hi > lo) {
        return Err(Error::DegenerateRange);
    }
    let (lo, span) = (f64::from(lo), f64::from(hi) - f64::from(lo));
    let pixels = img
        .pixels()
        .iter()
        .map(|&p| ((f64::from(p) - lo) / span).clamp(0.0, 1.0) as f32)
        .collect();
    Ok(GrayImage::from_parts_unchecked(
        img.width(),
        img.height(),
        pixels,
        RangeTag::Unit,
    ))
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::volio::{GrayImage, Mask2D, Occupancy, RangeTag};

/// Random geometric augmentation ranges. Shifts and zoom are fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentParams {
    pub max_rotation_deg: f64,
    pub width_shift_frac: f64,
    pub height_shift_frac: f64,
    pub zoom_frac: f64,
    pub horizontal_flip: bool,
    pub seed: u64,
}

impl AugmentParams {
    /// Ranges used when training the lung-structure extraction network.
    pub fn extraction(seed: u64) -> Self {
        AugmentParams {
            max_rotation_deg: 4.0,
            width_shift_frac: 0.1,
            height_shift_frac: 0.1,
            zoom_frac: 0.2,
            horizontal_flip: true,
            seed,
        }
    }

    /// Ranges used when training the lung segmentation network.
    pub fn segmentation(seed: u64) -> Self {
        AugmentParams {
            max_rotation_deg: 2.0,
            width_shift_frac: 0.1,
            height_shift_frac: 0.2,
            zoom_frac: 0.3,
            horizontal_flip: false,
            seed,
        }
    }

    /// No-op ranges.
    pub fn identity(seed: u64) -> Self {
        AugmentParams {
            max_rotation_deg: 0.0,
            width_shift_frac: 0.0,
            height_shift_frac: 0.0,
            zoom_frac: 0.0,
            horizontal_flip: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..180.0).contains(&self.max_rotation_deg) {
            return Err(Error::InvalidParam(format!(
                "max_rotation_deg must be in [0, 180), got {}",
                self.max_rotation_deg
            )));
        }
        for (name, v) in [
            ("width_shift_frac", self.width_shift_frac),
            ("height_shift_frac", self.height_shift_frac),
            ("zoom_frac", self.zoom_frac),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidParam(format!("{name} must be in [0, 1), got {v}")));
            }
        }
        Ok(())
    }
}

/// One sampled geometric transform, applied about the image center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub rotation_rad: f64,
    pub shift_x: f64,
    pub shift_y: f64,
    pub zoom: f64,
    pub flip: bool,
}

fn symmetric(rng: &mut ChaCha8Rng, half: f64) -> f64 {
    if half > 0.0 {
        rng.gen_range(-half..=half)
    } else {
        0.0
    }
}

/// Draws the transform for `p.seed` on a `width` by `height` image.
pub fn sample_transform(p: &AugmentParams, width: usize, height: usize) -> Transform {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let rotation_rad = symmetric(&mut rng, p.max_rotation_deg).to_radians();
    let shift_x = symmetric(&mut rng, p.width_shift_frac) * width as f64;
    let shift_y = symmetric(&mut rng, p.height_shift_frac) * height as f64;
    let zoom = 1.0 + symmetric(&mut rng, p.zoom_frac);
    let flip = p.horizontal_flip && rng.gen_bool(0.5);
    Transform {
        rotation_rad,
        shift_x,
        shift_y,
        zoom,
        flip,
    }
}

/// An image or mask taking part in a paired augmentation.
#[derive(Debug, Clone, PartialEq)]
pub enum PairItem {
    Gray(GrayImage),
    Mask(Mask2D),
}

impl PairItem {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            PairItem::Gray(g) => g.dims(),
            PairItem::Mask(m) => m.dims(),
        }
    }
}

impl Transform {
    /// Maps an output pixel to its source coordinate.
    fn source(&self, col: usize, row: usize, w: usize, h: usize) -> (f64, f64) {
        let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
        let mut u = col as f64;
        let v = row as f64;
        if self.flip {
            u = (w - 1) as f64 - u;
        }
        let du = u - self.shift_x - cx;
        let dv = v - self.shift_y - cy;
        let (s, c) = self.rotation_rad.sin_cos();
        (
            cx + (c * du + s * dv) / self.zoom,
            cy + (c * dv - s * du) / self.zoom,
        )
    }

    fn apply_gray(&self, img: &GrayImage) -> GrayImage {
        let (w, h) = img.dims();
        let mut out = Vec::with_capacity(w * h);
        for row in 0..h {
            for col in 0..w {
                let (sx, sy) = self.source(col, row, w, h);
                out.push(bilinear(img, sx, sy));
            }
        }
        let range = match img.range() {
            RangeTag::Unit => {
                out.iter_mut().for_each(|p| *p = p.clamp(0.0, 1.0));
                RangeTag::Unit
            }
            // zero fill breaks strict positivity
            RangeTag::RawDrr | RangeTag::Raw => RangeTag::Raw,
            RangeTag::ZeroMean => RangeTag::ZeroMean,
        };
        GrayImage::from_parts_unchecked(w, h, out, range)
    }

    fn apply_mask(&self, mask: &Mask2D) -> Mask2D {
        let (w, h) = mask.dims();
        Mask2D::from_fn(w, h, |col, row| {
            let (sx, sy) = self.source(col, row, w, h);
            let (rx, ry) = (sx.round(), sy.round());
            rx >= 0.0
                && ry >= 0.0
                && rx <= (w - 1) as f64
                && ry <= (h - 1) as f64
                && mask.get(rx as usize, ry as usize)
        })
    }
}

fn bilinear(img: &GrayImage, x: f64, y: f64) -> f32 {
    let (w, h) = img.dims();
    if !(x >= 0.0 && y >= 0.0 && x <= (w - 1) as f64 && y <= (h - 1) as f64) {
        return 0.0;
    }
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let at = |c: usize, r: usize| f64::from(img.get(c, r));
    let top = at(x0, y0) + fx * (at(x1, y0) - at(x0, y0));
    let bottom = at(x0, y1) + fx * (at(x1, y1) - at(x0, y1));
    (top + fy * (bottom - top)) as f32
}

/// Applies one randomly drawn transform identically to every item.
///
/// Gray images are resampled bilinearly and masks by nearest neighbor;
/// samples falling outside the frame are zero. Raw DRR inputs come back
/// tagged [`RangeTag::Raw`] since zero fill is not a valid DRR value.
pub fn augment_pair(items: &[PairItem], p: &AugmentParams) -> Result<Vec<PairItem>> {
    p.validate()?;
    let Some(first) = items.first() else {
        return Ok(Vec::new());
    };
    let (w, h) = first.dims();
    if let Some(bad) = items.iter().find(|i| i.dims() != (w, h)) {
        return Err(Error::DimMismatch(format!("{:?} vs {:?}", bad.dims(), (w, h))));
    }
    let t = sample_transform(p, w, h);
    Ok(items
        .iter()
        .map(|item| match item {
            PairItem::Gray(g) => PairItem::Gray(t.apply_gray(g)),
            PairItem::Mask(m) => {
                let out = t.apply_mask(m);
                debug_assert!(out.bits().len() == w * h);
                PairItem::Mask(out)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, RangeTag::Unit, |c, r| ((c * 7 + r * 3) % 17) as f32 / 16.0).unwrap()
    }

    #[test]
    fn zero_ranges_are_identity() {
        let g = gradient(12, 9);
        let m = Mask2D::from_fn(12, 9, |c, r| c > r);
        let items = vec![PairItem::Gray(g.clone()), PairItem::Mask(m.clone())];
        let out = augment_pair(&items, &AugmentParams::identity(99)).unwrap();
        assert_eq!(out, items);
    }

    fn flip_only(seed: u64) -> AugmentParams {
        AugmentParams {
            horizontal_flip: true,
            ..AugmentParams::identity(seed)
        }
    }

    #[test]
    fn flip_twice_is_identity() {
        let seed = (0..64)
            .find(|&s| sample_transform(&flip_only(s), 10, 10).flip)
            .expect("some seed flips");
        let g = gradient(10, 7);
        let once = augment_pair(&[PairItem::Gray(g.clone())], &flip_only(seed)).unwrap();
        assert_ne!(once[0], PairItem::Gray(g.clone()));
        let twice = augment_pair(&once, &flip_only(seed)).unwrap();
        assert_eq!(twice[0], PairItem::Gray(g));
    }

    #[test]
    fn same_seed_same_output() {
        let items = vec![
            PairItem::Gray(gradient(20, 16)),
            PairItem::Mask(Mask2D::from_fn(20, 16, |c, r| (c / 4 + r / 4) % 2 == 0)),
        ];
        let p = AugmentParams::extraction(1234);
        assert_eq!(augment_pair(&items, &p).unwrap(), augment_pair(&items, &p).unwrap());
    }

    #[test]
    fn mismatched_dims_rejected() {
        let items = vec![PairItem::Gray(gradient(8, 8)), PairItem::Mask(Mask2D::empty(8, 9))];
        assert!(augment_pair(&items, &AugmentParams::extraction(0)).is_err());
    }

    #[test]
    fn ranges_validated() {
        let mut p = AugmentParams::extraction(0);
        p.zoom_frac = 1.0;
        assert!(p.validate().is_err());
        p = AugmentParams::extraction(0);
        p.max_rotation_deg = 180.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn shift_moves_content() {
        // pure integer shift of +2 columns
        let t = Transform {
            rotation_rad: 0.0,
            shift_x: 2.0,
            shift_y: 0.0,
            zoom: 1.0,
            flip: false,
        };
        let g = gradient(6, 3);
        let out = t.apply_gray(&g);
        for r in 0..3 {
            assert_eq!(out.get(0, r), 0.0);
            assert_eq!(out.get(1, r), 0.0);
            for c in 2..6 {
                assert_eq!(out.get(c, r), g.get(c - 2, r));
            }
        }
    }

    #[test]
    fn unit_images_stay_unit_and_raw_drr_is_retagged() {
        let g = gradient(16, 16);
        let out = augment_pair(&[PairItem::Gray(g)], &AugmentParams::extraction(5)).unwrap();
        let PairItem::Gray(o) = &out[0] else { unreachable!() };
        assert_eq!(o.range(), RangeTag::Unit);
        assert!(o.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
        let d = GrayImage::filled(16, 16, 1.2, RangeTag::RawDrr).unwrap();
        let out = augment_pair(&[PairItem::Gray(d)], &AugmentParams::extraction(5)).unwrap();
        let PairItem::Gray(o) = &out[0] else { unreachable!() };
        assert_eq!(o.range(), RangeTag::Raw);
    }
}

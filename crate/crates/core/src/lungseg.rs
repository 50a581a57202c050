//! CT lung masks: HU thresholding, per-slice component selection with hole
//! filling, and projection of the 3D mask onto the radiograph plane.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::exec;
use crate::volio::{CtVolume, GrayImage, Mask2D, Mask3D, RangeTag, HU_MAX, HU_MIN};

pub const DEFAULT_HU_THRESHOLD: i16 = -500;
pub const DEFAULT_PREDICTION_THRESHOLD: f32 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl std::str::FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "4" | "four" => Ok(Connectivity::Four),
            "8" | "eight" => Ok(Connectivity::Eight),
            _ => Err(Error::InvalidParam(format!("connectivity must be 4 or 8, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegParams {
    /// Voxels strictly below this HU value are lung candidates.
    pub hu_threshold: i16,
    pub connectivity: Connectivity,
    /// Largest components kept per axial slice.
    pub max_components: usize,
    /// Drop components that touch the slice boundary (exterior air).
    pub exclude_border_components: bool,
}

impl Default for SegParams {
    fn default() -> Self {
        SegParams {
            hu_threshold: DEFAULT_HU_THRESHOLD,
            connectivity: Connectivity::Eight,
            max_components: 2,
            exclude_border_components: true,
        }
    }
}

impl SegParams {
    pub fn validate(&self) -> Result<()> {
        if !(HU_MIN..=HU_MAX).contains(&self.hu_threshold) {
            return Err(Error::InvalidParam(format!(
                "hu_threshold {} outside [{HU_MIN}, {HU_MAX}]",
                self.hu_threshold
            )));
        }
        if self.max_components == 0 {
            return Err(Error::InvalidParam("max_components must be >= 1".into()));
        }
        Ok(())
    }
}

pub fn binarize(vol: &CtVolume, params: &SegParams) -> Mask3D {
    let bits = vol.voxels().iter().map(|&hu| hu < params.hu_threshold).collect();
    Mask3D::new(vol.dims(), bits).expect("dims match voxel count")
}

/// A connected set of foreground pixels in one 2D grid.
#[derive(Debug, Clone)]
pub(crate) struct Component {
    /// First pixel reached in row-major scan order.
    pub start: usize,
    pub pixels: Vec<usize>,
    pub touches_border: bool,
}

const N4: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
const N8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

fn offsets(conn: Connectivity) -> &'static [(isize, isize)] {
    match conn {
        Connectivity::Four => &N4,
        Connectivity::Eight => &N8,
    }
}

/// Labels foreground components, returned in scan order of their start pixel.
pub(crate) fn components(bits: &[bool], w: usize, h: usize, conn: Connectivity) -> Vec<Component> {
    let mut seen = vec![false; bits.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..bits.len() {
        if !bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        let mut touches_border = false;
        while let Some(i) = queue.pop_front() {
            pixels.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            if x == 0 || y == 0 || x as usize == w - 1 || y as usize == h - 1 {
                touches_border = true;
            }
            for &(dx, dy) in offsets(conn) {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                    continue;
                }
                let j = nx as usize + ny as usize * w;
                if bits[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        out.push(Component {
            start,
            pixels,
            touches_border,
        });
    }
    out
}

/// Sets every background pixel that cannot reach the grid border through
/// 4-connected background.
pub fn fill_holes(bits: &[bool], w: usize, h: usize) -> Vec<bool> {
    let mut outside = vec![false; bits.len()];
    let mut queue = VecDeque::new();
    let seed = |i: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<usize>| {
        if !bits[i] && !outside[i] {
            outside[i] = true;
            queue.push_back(i);
        }
    };
    for x in 0..w {
        seed(x, &mut outside, &mut queue);
        seed(x + (h - 1) * w, &mut outside, &mut queue);
    }
    for y in 0..h {
        seed(y * w, &mut outside, &mut queue);
        seed(w - 1 + y * w, &mut outside, &mut queue);
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for &(dx, dy) in &N4 {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                continue;
            }
            let j = nx as usize + ny as usize * w;
            if !bits[j] && !outside[j] {
                outside[j] = true;
                queue.push_back(j);
            }
        }
    }
    outside.into_iter().map(|o| !o).collect()
}

/// Keeps the largest interior components of a binary slice and fills their holes.
pub(crate) fn select_and_fill(binary: &[bool], w: usize, h: usize, params: &SegParams) -> Vec<bool> {
    let mut comps: Vec<Component> = components(binary, w, h, params.connectivity)
        .into_iter()
        .filter(|c| !(params.exclude_border_components && c.touches_border))
        .collect();
    // stable sort keeps scan order among equal sizes
    comps.sort_by(|a, b| b.pixels.len().cmp(&a.pixels.len()).then(a.start.cmp(&b.start)));
    let mut kept = vec![false; binary.len()];
    for c in comps.iter().take(params.max_components) {
        for &i in &c.pixels {
            kept[i] = true;
        }
    }
    fill_holes(&kept, w, h)
}

/// Per-slice lung mask stacked into a volume.
pub fn lung_mask_3d(vol: &CtVolume, params: &SegParams) -> Result<Mask3D> {
    params.validate()?;
    let [nx, ny, nz] = vol.dims();
    let plane = nx * ny;
    let mut bits = vec![false; plane * nz];
    exec::for_each_chunk_mut(&mut bits, plane, |z, out| {
        let binary: Vec<bool> = vol.slice(z).iter().map(|&hu| hu < params.hu_threshold).collect();
        out.copy_from_slice(&select_and_fill(&binary, nx, ny, params));
    });
    Mask3D::new([nx, ny, nz], bits)
}

/// Collapses `y`: a pixel is set if any voxel in its column is set.
pub fn project_mask(mask: &Mask3D) -> Mask2D {
    let [nx, ny, nz] = mask.dims();
    let mut out = vec![false; nx * nz];
    exec::for_each_chunk_mut(&mut out, nx, |z, row| {
        let slab = mask.slice(z);
        for y in 0..ny {
            for (o, &b) in row.iter_mut().zip(&slab[y * nx..(y + 1) * nx]) {
                *o |= b;
            }
        }
    });
    Mask2D::new(nx, nz, out).expect("dims match")
}

/// Binarizes a segmentation probability map: set where `pixel >= t`.
pub fn threshold_prediction(img: &GrayImage, t: f32) -> Result<Mask2D> {
    img.require_range(RangeTag::Unit, "threshold_prediction")?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParam(format!("threshold must be in (0, 1), got {t}")));
    }
    let bits = img.pixels().iter().map(|&p| p >= t).collect();
    Mask2D::new(img.width(), img.height(), bits)
}

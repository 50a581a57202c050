//! Deterministic synthetic CT volumes with analytic ground truth.
//!
//! The two-ellipsoid torso is a water block inside exterior air with one
//! air-density ellipsoid per side standing in for the lungs. Optional
//! features are a water pocket inside the left lung (a hole the
//! segmentation must fill) and a dense spherical nodule in the right lung.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::volio::{CtVolume, Mask3D, NoduleAnnotation, Rating};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    Air,
    Water,
    TwoEllipsoid,
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "air" | "all-air" => Ok(PhantomKind::Air),
            "water" | "all-water" => Ok(PhantomKind::Water),
            "two-ellipsoid" => Ok(PhantomKind::TwoEllipsoid),
            _ => Err(Error::InvalidParam(format!("unknown phantom kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoduleSpec {
    pub hu: i16,
    pub radius: f64,
    pub ratings: Vec<Rating>,
}

impl Default for NoduleSpec {
    fn default() -> Self {
        NoduleSpec {
            hu: 60,
            radius: 3.0,
            ratings: vec![
                Rating { texture: 5, subtlety: 5 },
                Rating { texture: 5, subtlety: 5 },
                Rating { texture: 4, subtlety: 5 },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomOptions {
    pub body_hu: i16,
    pub lung_hu: i16,
    /// Lower bound on every ellipsoid semi-axis, in voxels.
    pub min_radius: f64,
    pub hole: bool,
    pub nodule: Option<NoduleSpec>,
}

impl Default for PhantomOptions {
    fn default() -> Self {
        PhantomOptions {
            body_hu: 0,
            lung_hu: -850,
            min_radius: 8.0,
            hole: false,
            nodule: None,
        }
    }
}

/// Axis-aligned ellipsoid in voxel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipsoid {
    pub center: [f64; 3],
    pub radii: [f64; 3],
}

impl Ellipsoid {
    pub fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        let p = [x as f64, y as f64, z as f64];
        (0..3)
            .map(|i| ((p[i] - self.center[i]) / self.radii[i]).powi(2))
            .sum::<f64>()
            <= 1.0
    }

    fn sphere(center: [f64; 3], r: f64) -> Self {
        Ellipsoid {
            center,
            radii: [r; 3],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Phantom {
    pub volume: CtVolume,
    /// Analytic lung mask: union of the lung ellipsoids, holes included.
    pub lung_mask: Mask3D,
    pub lungs: Vec<Ellipsoid>,
    pub nodules: Vec<NoduleAnnotation>,
}

pub fn generate(kind: PhantomKind, dims: [usize; 3], seed: u64, opts: &PhantomOptions) -> Result<Phantom> {
    if dims.contains(&0) {
        return Err(Error::InvalidParam(format!("phantom dims must be positive, got {dims:?}")));
    }
    match kind {
        PhantomKind::Air | PhantomKind::Water => {
            let hu = if kind == PhantomKind::Air { -1000 } else { 0 };
            Ok(Phantom {
                volume: CtVolume::filled(dims, [1.0; 3], hu)?,
                lung_mask: Mask3D::empty(dims),
                lungs: Vec::new(),
                nodules: Vec::new(),
            })
        }
        PhantomKind::TwoEllipsoid => two_ellipsoid(dims, seed, opts),
    }
}

/// Samples a semi-axis and center so that `[c - r, c + r]` fits in `[lo, hi]`.
fn place(rng: &mut ChaCha8Rng, lo: f64, hi: f64, min_r: f64, axis: &str) -> Result<(f64, f64)> {
    let max_r = (hi - lo) / 2.0;
    if max_r < min_r {
        return Err(Error::InvalidParam(format!(
            "phantom too small along {axis}: room for radius {max_r:.1}, need {min_r}"
        )));
    }
    let r_lo = min_r.max(0.6 * max_r).min(max_r);
    let r = if max_r > r_lo { rng.gen_range(r_lo..=max_r) } else { max_r };
    let c = if hi - r > lo + r { rng.gen_range(lo + r..=hi - r) } else { (lo + hi) / 2.0 };
    Ok((r, c))
}

fn two_ellipsoid(dims: [usize; 3], seed: u64, opts: &PhantomOptions) -> Result<Phantom> {
    let [nx, ny, nz] = dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mx = (nx / 16).max(2);
    let my = (ny / 8).max(2);
    // body occupies [mx, nx - mx) x [my, ny - my) on every slice
    let body = |x: usize, y: usize| x >= mx && x < nx - mx && y >= my && y < ny - my;

    let half = nx as f64 / 2.0;
    let x_ranges = [
        (mx as f64 + 2.0, half - 1.5),
        (half + 0.5, (nx - mx) as f64 - 3.0),
    ];
    let y_range = (my as f64 + 2.0, (ny - my) as f64 - 3.0);
    let z_range = (2.0, nz as f64 - 3.0);

    let mut lungs = Vec::with_capacity(2);
    for (lo, hi) in x_ranges {
        let (rx, cx) = place(&mut rng, lo, hi, opts.min_radius, "x")?;
        let (ry, cy) = place(&mut rng, y_range.0, y_range.1, opts.min_radius, "y")?;
        let (rz, cz) = place(&mut rng, z_range.0, z_range.1, opts.min_radius, "z")?;
        lungs.push(Ellipsoid {
            center: [cx, cy, cz],
            radii: [rx, ry, rz],
        });
    }

    let min_axis = |e: &Ellipsoid| e.radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let pocket = opts
        .hole
        .then(|| Ellipsoid::sphere(lungs[0].center, min_axis(&lungs[0]) / 3.0));
    let nodule = opts.nodule.as_ref().map(|spec| {
        let r = spec.radius.min(min_axis(&lungs[1]) / 3.0);
        (Ellipsoid::sphere(lungs[1].center, r), spec)
    });

    let lung_mask = Mask3D::from_fn(dims, |x, y, z| lungs.iter().any(|e| e.contains(x, y, z)));
    let mut voxels = Vec::with_capacity(nx * ny * nz);
    let mut nodule_voxels = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let hu = if !body(x, y) {
                    -1000
                } else if lung_mask.get(x, y, z) {
                    if pocket.is_some_and(|p| p.contains(x, y, z)) {
                        opts.body_hu
                    } else if let Some((_, spec)) = nodule.filter(|(n, _)| n.contains(x, y, z)) {
                        nodule_voxels.push([x, y, z]);
                        spec.hu
                    } else {
                        opts.lung_hu
                    }
                } else {
                    opts.body_hu
                };
                voxels.push(hu);
            }
        }
    }
    let volume = CtVolume::new(dims, [1.0; 3], voxels)?;
    let nodules = match nodule {
        Some((_, spec)) if !nodule_voxels.is_empty() => vec![NoduleAnnotation {
            nodule_id: "nodule-1".into(),
            voxels: nodule_voxels,
            ratings: spec.ratings.clone(),
        }],
        _ => Vec::new(),
    };
    Ok(Phantom {
        volume,
        lung_mask,
        lungs,
        nodules,
    })
}

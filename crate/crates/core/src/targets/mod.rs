//! Training targets: the lung-only radiograph, filtered nodule masks,
//! paired augmentation, and on-disk dataset generation.

mod augment;
mod dataset;

pub use self::augment::{augment_pair, sample_transform, AugmentParams, PairItem, Transform};
pub use self::dataset::{build_dataset, discover_cases, read_case_list, CaseSpec, DatasetConfig, NORMALIZATION};

use crate::drr::{self, DrrParams};
use crate::error::{Error, Result};
use crate::volio::{CtVolume, GrayImage, Mask2D, Mask3D, NoduleAnnotation};

/// HU assigned to voxels outside the lung mask; contributes zero attenuation.
pub const NON_LUNG_HU: i16 = -1000;

/// Replaces every voxel outside `mask` with air.
pub fn lung_volume(vol: &CtVolume, mask: &Mask3D) -> Result<CtVolume> {
    if vol.dims() != mask.dims() {
        return Err(Error::DimMismatch(format!(
            "volume {:?} vs mask {:?}",
            vol.dims(),
            mask.dims()
        )));
    }
    let voxels = vol
        .voxels()
        .iter()
        .zip(crate::volio::Occupancy::bits(mask))
        .map(|(&hu, &keep)| if keep { hu } else { NON_LUNG_HU })
        .collect();
    Ok(CtVolume::from_parts_unchecked(vol.dims(), vol.spacing_mm(), voxels))
}

/// The radiograph of lung voxels only.
pub fn lung_xray(vol: &CtVolume, mask: &Mask3D, params: &DrrParams) -> Result<GrayImage> {
    drr::drr(&lung_volume(vol, mask)?, params)
}

/// Nodule selection rule. Median thresholds are exclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoduleFilter {
    pub min_median_texture: f64,
    pub min_median_subtlety: f64,
    pub min_radiologists: usize,
}

impl Default for NoduleFilter {
    fn default() -> Self {
        NoduleFilter {
            min_median_texture: 3.0,
            min_median_subtlety: 4.0,
            min_radiologists: 2,
        }
    }
}

impl NoduleFilter {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("min_median_texture", self.min_median_texture),
            ("min_median_subtlety", self.min_median_subtlety),
        ] {
            if !(1.0..=5.0).contains(&v) {
                return Err(Error::InvalidParam(format!("{name} must be in [1, 5], got {v}")));
            }
        }
        if self.min_radiologists == 0 {
            return Err(Error::InvalidParam("min_radiologists must be >= 1".into()));
        }
        Ok(())
    }

    pub fn accepts(&self, nodule: &NoduleAnnotation) -> bool {
        if nodule.ratings.len() < self.min_radiologists || nodule.ratings.is_empty() {
            return false;
        }
        let texture = median(nodule.ratings.iter().map(|r| r.texture));
        let subtlety = median(nodule.ratings.iter().map(|r| r.subtlety));
        texture > self.min_median_texture && subtlety > self.min_median_subtlety
    }
}

/// Median; even-length lists average the two middle values.
pub fn median(values: impl Iterator<Item = u8>) -> f64 {
    let mut v: Vec<u8> = values.collect();
    assert!(!v.is_empty(), "median of empty list");
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        f64::from(v[n / 2])
    } else {
        (f64::from(v[n / 2 - 1]) + f64::from(v[n / 2])) / 2.0
    }
}

pub fn filter_nodules(nodules: &[NoduleAnnotation], filter: &NoduleFilter) -> Vec<NoduleAnnotation> {
    nodules.iter().filter(|n| filter.accepts(n)).cloned().collect()
}

/// Projects nodule voxels along `y` onto an `nx` by `nz` mask.
pub fn nodule_mask(nodules: &[NoduleAnnotation], nx: usize, nz: usize) -> Result<Mask2D> {
    let mut m = Mask2D::empty(nx, nz);
    for n in nodules {
        for &[x, _, z] in &n.voxels {
            if x >= nx || z >= nz {
                return Err(Error::NoduleOutOfBounds {
                    id: n.nodule_id.clone(),
                    x: x as i64,
                    y: 0,
                    z: z as i64,
                    dims: [nx, 0, nz],
                });
            }
            m.set(x, z, true);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volio::{Occupancy, Rating};

    fn nodule(ratings: &[(u8, u8)]) -> NoduleAnnotation {
        NoduleAnnotation {
            nodule_id: "n".into(),
            voxels: vec![],
            ratings: ratings
                .iter()
                .map(|&(texture, subtlety)| Rating { texture, subtlety })
                .collect(),
        }
    }

    #[test]
    fn filter_truth_table() {
        let f = NoduleFilter::default();
        assert!(f.accepts(&nodule(&[(5, 5), (5, 5), (4, 5)])));
        assert!(!f.accepts(&nodule(&[(5, 5)])));
        assert!(!f.accepts(&nodule(&[(3, 5), (3, 5), (3, 5)])));
        // even count: medians (3+5)/2 = 4 > 3, (5+5)/2 = 5 > 4
        assert!(f.accepts(&nodule(&[(3, 5), (5, 5)])));
        // subtlety median exactly 4 fails
        assert!(!f.accepts(&nodule(&[(5, 4), (5, 4), (5, 5)])));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median([3u8, 1, 2].into_iter()), 2.0);
        assert_eq!(median([4u8, 1, 2, 5].into_iter()), 3.0);
    }

    #[test]
    fn nodule_mask_projects() {
        assert!(nodule_mask(&[], 8, 8).unwrap().is_empty());
        let mut n = nodule(&[(5, 5)]);
        n.voxels = vec![[3, 5, 7], [3, 6, 7]];
        let m = nodule_mask(&[n.clone()], 8, 8).unwrap();
        assert_eq!(m.count(), 1);
        assert!(m.get(3, 7));
        let mut other = n.clone();
        other.voxels = vec![[0, 0, 0]];
        let both = nodule_mask(&[n, other], 8, 8).unwrap();
        assert_eq!(both.count(), 2);
    }

    #[test]
    fn lung_volume_cases() {
        let v = CtVolume::filled([3, 4, 2], [1.0; 3], 40).unwrap();
        let dims = v.dims();
        assert_eq!(lung_volume(&v, &Mask3D::full(dims)).unwrap(), v);
        let empty = lung_volume(&v, &Mask3D::empty(dims)).unwrap();
        assert!(empty.voxels().iter().all(|&h| h == NON_LUNG_HU));
        assert!(lung_volume(&v, &Mask3D::empty([3, 4, 3])).is_err());
    }

    #[test]
    fn lung_xray_single_voxel() {
        // one 0 HU voxel in air, N = 10: exp(0.02 * 0.2 / 10)
        let mut v = CtVolume::filled([3, 10, 3], [1.0; 3], -1000).unwrap();
        v.set(1, 4, 2, 0);
        let mut m = Mask3D::empty(v.dims());
        m.set(1, 4, 2, true);
        let img = lung_xray(&v, &m, &DrrParams::default()).unwrap();
        let expected = (0.02f64 * 0.2 / 10.0).exp();
        assert!((f64::from(img.get(1, 2)) - expected).abs() < 1e-6);
        assert_eq!(img.get(0, 2), 1.0);
    }
}

//! Label semantics and the nested evaluation regions.
//!
//! | label | meaning | WT | TC | ET |
//! |-------|---------|----|----|----|
//! | 1 | necrotic core (NCR) | x | x |   |
//! | 2 | edema (ED)          | x |   |   |
//! | 3 | enhancing (ET)      | x | x | x |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Geometry, LabelVolume};

pub const NCR: u8 = 1;
pub const ED: u8 = 2;
pub const ET: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "WT")]
    Wt,
    #[serde(rename = "TC")]
    Tc,
    #[serde(rename = "ET")]
    Et,
}

impl Region {
    /// Coarse to fine.
    pub const ALL: [Region; 3] = [Region::Wt, Region::Tc, Region::Et];

    #[inline]
    pub fn contains(self, label: u8) -> bool {
        match self {
            Region::Wt => matches!(label, 1..=3),
            Region::Tc => label == NCR || label == ET,
            Region::Et => label == ET,
        }
    }

    pub fn channel(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Wt => "WT",
            Region::Tc => "TC",
            Region::Et => "ET",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "WT" => Ok(Region::Wt),
            "TC" => Ok(Region::Tc),
            "ET" => Ok(Region::Et),
            other => Err(Error::Validation(format!("unknown region '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    geometry: Geometry,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(geometry: Geometry, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != geometry.len() {
            return Err(Error::Validation(format!(
                "mask has {} voxels, geometry needs {}",
                bits.len(),
                geometry.len()
            )));
        }
        Ok(Self { geometry, bits })
    }

    pub fn empty(geometry: Geometry) -> Self {
        let n = geometry.len();
        Self {
            geometry,
            bits: vec![false; n],
        }
    }

    pub fn full(geometry: Geometry) -> Self {
        let n = geometry.len();
        Self {
            geometry,
            bits: vec![true; n],
        }
    }

    /// Mask that is true at the given linear indices.
    pub fn from_indices(geometry: Geometry, indices: &[usize]) -> Self {
        let mut m = Self::empty(geometry);
        for &i in indices {
            m.bits[i] = true;
        }
        m
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.bits[self.geometry.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, v: bool) {
        let i = self.geometry.index(x, y, z);
        self.bits[i] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Linear indices of true voxels, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

pub fn extract_region(labels: &LabelVolume, region: Region) -> BinaryMask {
    BinaryMask {
        geometry: labels.geometry().clone(),
        bits: labels.voxels().iter().map(|&l| region.contains(l)).collect(),
    }
}

/// Rebuilds labels from region masks. Assignments are applied WT, then TC,
/// then ET, each overriding the previous, so the result is always nested.
pub fn reconstruct_labels(wt: &BinaryMask, tc: &BinaryMask, et: &BinaryMask) -> Result<LabelVolume> {
    wt.geometry.ensure_compatible(&tc.geometry)?;
    wt.geometry.ensure_compatible(&et.geometry)?;
    let voxels = wt
        .bits
        .iter()
        .zip(&tc.bits)
        .zip(&et.bits)
        .map(|((&w, &t), &e)| {
            if e {
                ET
            } else if t {
                NCR
            } else if w {
                ED
            } else {
                0
            }
        })
        .collect();
    Ok(LabelVolume::from_raw(wt.geometry.clone(), voxels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_voxel(label: u8) -> LabelVolume {
        LabelVolume::new(Geometry::isotropic([1, 1, 1]).unwrap(), vec![label]).unwrap()
    }

    #[test]
    fn set_membership_per_label() {
        let expect = [
            (0, [false, false, false]),
            (1, [true, true, false]),
            (2, [true, false, false]),
            (3, [true, true, true]),
        ];
        for (label, regions) in expect {
            let v = one_voxel(label);
            for (r, want) in Region::ALL.iter().zip(regions) {
                assert_eq!(extract_region(&v, *r).bits()[0], want, "label {label} region {r}");
            }
        }
    }

    #[test]
    fn zero_labels_give_empty_masks() {
        let v = LabelVolume::zeros(Geometry::isotropic([3, 3, 3]).unwrap());
        for r in Region::ALL {
            assert!(extract_region(&v, r).is_empty());
        }
    }

    #[test]
    fn reconstruct_override_order() {
        let g = Geometry::isotropic([1, 1, 1]).unwrap();
        let f = BinaryMask::empty(g.clone());
        let t = BinaryMask::full(g);
        assert_eq!(reconstruct_labels(&f, &f, &t).unwrap().voxels(), &[3]);
        assert_eq!(reconstruct_labels(&f, &t, &f).unwrap().voxels(), &[1]);
        assert_eq!(reconstruct_labels(&t, &f, &f).unwrap().voxels(), &[2]);
        assert_eq!(reconstruct_labels(&f, &f, &f).unwrap().voxels(), &[0]);
    }

    #[test]
    fn reconstruct_rejects_mismatched_grids() {
        let a = BinaryMask::empty(Geometry::isotropic([2, 1, 1]).unwrap());
        let b = BinaryMask::empty(Geometry::isotropic([1, 2, 1]).unwrap());
        assert!(matches!(reconstruct_labels(&a, &a, &b), Err(Error::Incompatible(_))));
    }

    #[test]
    fn region_parse_and_display() {
        for r in Region::ALL {
            assert_eq!(r.to_string().parse::<Region>().unwrap(), r);
        }
        assert!("XX".parse::<Region>().is_err());
    }

    proptest! {
        #[test]
        fn regions_nest_and_round_trip(voxels in proptest::collection::vec(0u8..=3, 60)) {
            let v = LabelVolume::new(Geometry::isotropic([5, 4, 3]).unwrap(), voxels).unwrap();
            let [wt, tc, et] = Region::ALL.map(|r| extract_region(&v, r));
            prop_assert!(et.is_subset_of(&tc));
            prop_assert!(tc.is_subset_of(&wt));
            prop_assert_eq!(reconstruct_labels(&wt, &tc, &et).unwrap(), v);
        }
    }
}

//! Core volume types.
//!
//! All volumes are dense and stored X-fastest: voxel `(x, y, z)` lives at
//! `x + nx * (y + ny * z)`.

use crate::error::{Error, Result};
use crate::regions::BinaryMask;

/// Relative tolerance used when comparing voxel spacings.
pub const SPACING_REL_TOL: f64 = 1e-5;

/// Orientation fields carried through from a NIfTI header.
///
/// They are written back unchanged but never interpreted; every volume in a
/// computation is assumed to live on one co-registered grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    pub qform_code: i16,
    pub sform_code: i16,
    pub qfac: f32,
    pub quatern: [f32; 3],
    pub qoffset: [f32; 3],
    pub srow: [[f32; 4]; 3],
}

impl Default for Orientation {
    fn default() -> Self {
        Self {
            qform_code: 0,
            sform_code: 0,
            qfac: 1.0,
            quatern: [0.0; 3],
            qoffset: [0.0; 3],
            srow: [[0.0; 4]; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    dims: [usize; 3],
    spacing: [f32; 3],
    pub orientation: Orientation,
}

impl Geometry {
    pub fn new(dims: [usize; 3], spacing: [f32; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Validation(format!("dims must be >= 1, got {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::Validation(format!(
                "spacing must be finite and > 0, got {spacing:?}"
            )));
        }
        Ok(Self {
            dims,
            spacing,
            orientation: Orientation::default(),
        })
    }

    /// Unit-spacing geometry.
    pub fn isotropic(dims: [usize; 3]) -> Result<Self> {
        Self::new(dims, [1.0; 3])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f32; 3] {
        self.spacing
    }

    pub fn spacing_f64(&self) -> [f64; 3] {
        self.spacing.map(f64::from)
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let x = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [x, rest % self.dims[1], rest / self.dims[1]]
    }

    pub fn is_compatible(&self, other: &Geometry) -> bool {
        self.dims == other.dims
            && self.spacing.iter().zip(other.spacing.iter()).all(|(&a, &b)| {
                let (a, b) = (f64::from(a), f64::from(b));
                (a - b).abs() <= SPACING_REL_TOL * a.abs().max(b.abs())
            })
    }

    pub fn ensure_compatible(&self, other: &Geometry) -> Result<()> {
        if self.is_compatible(other) {
            Ok(())
        } else {
            Err(Error::Incompatible(format!(
                "dims {:?} spacing {:?} vs dims {:?} spacing {:?}",
                self.dims, self.spacing, other.dims, other.spacing
            )))
        }
    }

    /// Same spacing on a new extent, orientation reset. Used for crops.
    pub(crate) fn with_dims(&self, dims: [usize; 3]) -> Result<Self> {
        Self::new(dims, self.spacing)
    }
}

/// Discrete tumour labels in {0, 1, 2, 3}.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    geometry: Geometry,
    voxels: Vec<u8>,
}

pub const MAX_LABEL: u8 = 3;

impl LabelVolume {
    pub fn new(geometry: Geometry, voxels: Vec<u8>) -> Result<Self> {
        if voxels.len() != geometry.len() {
            return Err(Error::Validation(format!(
                "label payload has {} voxels, geometry needs {}",
                voxels.len(),
                geometry.len()
            )));
        }
        if let Some(pos) = voxels.iter().position(|&v| v > MAX_LABEL) {
            return Err(Error::Validation(format!(
                "label {} at voxel {pos} is outside {{0,1,2,3}}",
                voxels[pos]
            )));
        }
        Ok(Self { geometry, voxels })
    }

    pub fn zeros(geometry: Geometry) -> Self {
        let n = geometry.len();
        Self {
            geometry,
            voxels: vec![0; n],
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn voxels(&self) -> &[u8] {
        &self.voxels
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> u8 {
        self.voxels[self.geometry.index(x, y, z)]
    }

    /// Sets a voxel; panics on labels above 3.
    pub fn set(&mut self, x: usize, y: usize, z: usize, label: u8) {
        assert!(label <= MAX_LABEL, "label {label} out of range");
        let i = self.geometry.index(x, y, z);
        self.voxels[i] = label;
    }

    pub fn count_nonzero(&self) -> usize {
        self.voxels.iter().filter(|&&v| v != 0).count()
    }

    pub fn into_voxels(self) -> Vec<u8> {
        self.voxels
    }

    /// Builds a volume whose values are already known to be valid.
    pub(crate) fn from_raw(geometry: Geometry, voxels: Vec<u8>) -> Self {
        debug_assert_eq!(voxels.len(), geometry.len());
        debug_assert!(voxels.iter().all(|&v| v <= MAX_LABEL));
        Self { geometry, voxels }
    }

    pub(crate) fn voxels_mut(&mut self) -> &mut [u8] {
        &mut self.voxels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarVolume {
    geometry: Geometry,
    voxels: Vec<f32>,
}

impl ScalarVolume {
    /// Non-finite values are allowed in memory (distance transforms use an
    /// infinity sentinel) but are rejected by the NIfTI writer.
    pub fn new(geometry: Geometry, voxels: Vec<f32>) -> Result<Self> {
        if voxels.len() != geometry.len() {
            return Err(Error::Validation(format!(
                "scalar payload has {} voxels, geometry needs {}",
                voxels.len(),
                geometry.len()
            )));
        }
        Ok(Self { geometry, voxels })
    }

    pub fn filled(geometry: Geometry, value: f32) -> Self {
        let n = geometry.len();
        Self {
            geometry,
            voxels: vec![value; n],
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn voxels(&self) -> &[f32] {
        &self.voxels
    }

    pub fn voxels_mut(&mut self) -> &mut [f32] {
        &mut self.voxels
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.voxels[self.geometry.index(x, y, z)]
    }

    pub fn into_voxels(self) -> Vec<f32> {
        self.voxels
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.voxels.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::Validation(format!(
                "non-finite value {} at voxel {i}",
                self.voxels[i]
            ))),
        }
    }
}

/// Region probabilities in channel order WT, TC, ET.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionProbVolume {
    geometry: Geometry,
    channels: [Vec<f32>; 3],
}

impl RegionProbVolume {
    pub fn new(geometry: Geometry, channels: [Vec<f32>; 3]) -> Result<Self> {
        for (c, ch) in channels.iter().enumerate() {
            if ch.len() != geometry.len() {
                return Err(Error::Validation(format!(
                    "channel {c} has {} voxels, geometry needs {}",
                    ch.len(),
                    geometry.len()
                )));
            }
            if let Some(i) = ch.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Validation(format!(
                    "channel {c} voxel {i} holds {} outside [0, 1]",
                    ch[i]
                )));
            }
        }
        Ok(Self { geometry, channels })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn channel(&self, region: crate::Region) -> &[f32] {
        &self.channels[region.channel()]
    }

    pub fn channels(&self) -> &[Vec<f32>; 3] {
        &self.channels
    }
}

/// Z-score normalisation over the foreground; background becomes exactly 0.
///
/// Uses the population standard deviation.
pub fn zscore_normalize(volume: &ScalarVolume, foreground: &BinaryMask) -> Result<ScalarVolume> {
    volume.geometry.ensure_compatible(foreground.geometry())?;
    let bits = foreground.bits();
    let n = bits.iter().filter(|&&b| b).count();
    if n == 0 {
        return Err(Error::Degenerate("z-score foreground is empty".into()));
    }
    let values = || {
        volume
            .voxels
            .iter()
            .zip(bits)
            .filter(|(_, &b)| b)
            .map(|(&v, _)| f64::from(v))
    };
    let mean = values().sum::<f64>() / n as f64;
    let var = values().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if !(std > 0.0 && std.is_finite()) {
        return Err(Error::Degenerate(format!(
            "z-score foreground has zero or non-finite variance ({var})"
        )));
    }
    let voxels = volume
        .voxels
        .iter()
        .zip(bits)
        .map(|(&v, &b)| {
            if b {
                ((f64::from(v) - mean) / std) as f32
            } else {
                0.0
            }
        })
        .collect();
    Ok(ScalarVolume {
        geometry: volume.geometry.clone(),
        voxels,
    })
}

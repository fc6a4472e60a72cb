//! Data-side machinery for training a tumour-inpainting GAN.
//!
//! A 96³ crop is taken around the tumour centre, min-max normalised to
//! [-1, 1], noised and renormalised. Tumour voxels are then replaced by
//! Gaussian noise, and healthy voxels are replaced with a probability that
//! decays with distance from the crop centre:
//!
//! ```text
//! prob     = 83 / (exponent^distance + 82)
//! exponent = -(0.2 / 68) * max_size + 1.1 - 96 * (-(0.2 / 68))
//! ```
//!
//! where `max_size` is the largest bounding-box extent of the tumour. Larger
//! tumours get a flatter decay, so more of the surrounding tissue is masked.
//!
//! The module also places existing tumour labels into healthy brain and
//! provides the generator/discriminator losses and the second-stage loss
//! weight schedule as plain functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::regions::BinaryMask;
use crate::volume::{Geometry, LabelVolume, ScalarVolume};

/// Edge length of the GAN input crop.
pub const CROP_SIZE: usize = 96;

const DECAY_SLOPE: f64 = -(0.2 / 68.0);
const DECAY_AT_CROP_SIZE: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TumourGeometry {
    pub bbox_min: [usize; 3],
    pub bbox_max: [usize; 3],
    /// Midpoint of the first and last occupied slice on each axis, rounded
    /// down.
    pub center: [usize; 3],
    pub max_size: usize,
}

pub fn tumour_geometry(labels: &LabelVolume) -> Result<TumourGeometry> {
    let g = labels.geometry();
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let mut any = false;
    for (i, &v) in labels.voxels().iter().enumerate() {
        if v != 0 {
            any = true;
            let c = g.coords(i);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
    }
    if !any {
        return Err(Error::Degenerate("label volume contains no tumour".into()));
    }
    let center = [0, 1, 2].map(|a| (lo[a] + hi[a]) / 2);
    let max_size = (0..3).map(|a| hi[a] - lo[a] + 1).max().unwrap();
    Ok(TumourGeometry {
        bbox_min: lo,
        bbox_max: hi,
        center,
        max_size,
    })
}

/// Decay base for a tumour whose largest extent is `max_size` voxels.
///
/// Written as `1.1 + slope * (max_size - 96)`, which is the same affine map
/// and returns exactly 1.1 at 96.
pub fn decay_exponent(max_size: usize) -> Result<f64> {
    if !(1..=CROP_SIZE).contains(&max_size) {
        return Err(Error::Domain(format!(
            "max_size {max_size} outside [1, {CROP_SIZE}]"
        )));
    }
    Ok(DECAY_AT_CROP_SIZE + DECAY_SLOPE * (max_size as f64 - CROP_SIZE as f64))
}

/// `83 / (exponent^distance + 82)`, clamped to [0, 1].
pub fn replacement_probability(distance: f64, exponent: f64) -> f64 {
    (83.0 / (exponent.powf(distance) + 82.0)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionField {
    pub geometry: Geometry,
    pub probs: Vec<f64>,
    pub exponent: f64,
    /// Voxel the distances are measured from: `dims / 2` on each axis.
    pub center: [usize; 3],
}

impl CorruptionField {
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.probs[self.geometry.index(x, y, z)]
    }
}

/// Voxel-unit distance from each crop voxel to the crop centre voxel
/// (index 48 on each axis for a 96³ crop), mapped through
/// [`replacement_probability`].
pub fn build_corruption_field(tumour: &TumourGeometry, crop: &Geometry) -> Result<CorruptionField> {
    let exponent = decay_exponent(tumour.max_size)?;
    let dims = crop.dims();
    let center = dims.map(|d| d / 2);
    let probs = (0..crop.len())
        .map(|i| {
            let c = crop.coords(i);
            let d2: f64 = (0..3)
                .map(|a| {
                    let d = c[a] as f64 - center[a] as f64;
                    d * d
                })
                .sum();
            replacement_probability(d2.sqrt(), exponent)
        })
        .collect();
    Ok(CorruptionField {
        geometry: crop.clone(),
        probs,
        exponent,
        center,
    })
}

/// Top-left corner (may be negative) of a `size`³ crop whose centre voxel
/// `size / 2` lands on `center`.
pub fn crop_origin(center: [usize; 3], size: usize) -> [isize; 3] {
    center.map(|c| c as isize - (size / 2) as isize)
}

fn crop_with<T: Copy>(src: &[T], g: &Geometry, origin: [isize; 3], size: usize, pad: T) -> Vec<T> {
    let dims = g.dims();
    let mut out = Vec::with_capacity(size * size * size);
    for z in 0..size {
        for y in 0..size {
            for x in 0..size {
                let p = [x, y, z];
                let src_c: Option<[usize; 3]> = (|| {
                    let mut s = [0usize; 3];
                    for a in 0..3 {
                        let v = origin[a] + p[a] as isize;
                        if v < 0 || v >= dims[a] as isize {
                            return None;
                        }
                        s[a] = v as usize;
                    }
                    Some(s)
                })();
                out.push(match src_c {
                    Some(s) => src[g.index(s[0], s[1], s[2])],
                    None => pad,
                });
            }
        }
    }
    out
}

/// Cube crop centred on `center`; voxels outside the source are 0.
pub fn crop_scalar(volume: &ScalarVolume, center: [usize; 3], size: usize) -> Result<ScalarVolume> {
    let g = volume.geometry();
    let voxels = crop_with(volume.voxels(), g, crop_origin(center, size), size, 0.0);
    ScalarVolume::new(g.with_dims([size; 3])?, voxels)
}

/// Cube crop centred on `center`; voxels outside the source are background.
pub fn crop_labels(volume: &LabelVolume, center: [usize; 3], size: usize) -> Result<LabelVolume> {
    let g = volume.geometry();
    let voxels = crop_with(volume.voxels(), g, crop_origin(center, size), size, 0);
    LabelVolume::new(g.with_dims([size; 3])?, voxels)
}

/// Output of [`corrupt_crop_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionOutcome {
    pub image: ScalarVolume,
    /// The noised and renormalised crop before any replacement.
    pub renormalized: ScalarVolume,
    /// Voxels overwritten with fresh noise (all tumour voxels plus the
    /// healthy voxels selected by the field).
    pub replaced: BinaryMask,
}

pub fn corrupt_crop(
    image: &ScalarVolume,
    labels: &LabelVolume,
    field: &CorruptionField,
    seed: u64,
) -> Result<ScalarVolume> {
    Ok(corrupt_crop_detailed(image, labels, field, seed)?.image)
}

/// All randomness comes from one ChaCha8 stream seeded with `seed`, consumed
/// in voxel order: first one normal draw per voxel for the additive noise,
/// then per voxel either a normal draw (tumour) or a uniform draw followed by
/// a normal draw when the voxel is selected.
pub fn corrupt_crop_detailed(
    image: &ScalarVolume,
    labels: &LabelVolume,
    field: &CorruptionField,
    seed: u64,
) -> Result<CorruptionOutcome> {
    let g = image.geometry();
    g.ensure_compatible(labels.geometry())?;
    g.ensure_compatible(&field.geometry)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut values: Vec<f64> = image.voxels().iter().map(|&v| f64::from(v)).collect();
    minmax_to_unit(&mut values, "image")?;
    for v in values.iter_mut() {
        *v += rng.sample::<f64, _>(StandardNormal);
    }
    minmax_to_unit(&mut values, "noised image")?;
    let renormalized: Vec<f32> = values.iter().map(|&v| v as f32).collect();

    let mut out = renormalized.clone();
    let mut replaced = vec![false; out.len()];
    for (i, &label) in labels.voxels().iter().enumerate() {
        let hit = label != 0 || rng.random::<f64>() < field.probs[i];
        if hit {
            out[i] = rng.sample::<f64, _>(StandardNormal) as f32;
            replaced[i] = true;
        }
    }
    Ok(CorruptionOutcome {
        image: ScalarVolume::new(g.clone(), out)?,
        renormalized: ScalarVolume::new(g.clone(), renormalized)?,
        replaced: BinaryMask::new(g.clone(), replaced)?,
    })
}

fn minmax_to_unit(values: &mut [f64], what: &str) -> Result<()> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::Degenerate(format!("{what} has zero or non-finite range")));
    }
    for v in values.iter_mut() {
        *v = 2.0 * (*v - lo) / range - 1.0;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub placed: LabelVolume,
    pub crop_origin: [usize; 3],
    pub attempts: usize,
}

/// Default bound on placement attempts.
pub const DEFAULT_MAX_ATTEMPTS: usize = 100;

/// Drops `candidate`'s tumour voxels into healthy brain.
///
/// Origins are drawn uniformly; an origin is accepted when every nonzero
/// candidate voxel lands on a brain voxel that is background in `target`.
pub fn place_label(
    target: &LabelVolume,
    brain_mask: &BinaryMask,
    candidate: &LabelVolume,
    seed: u64,
    max_attempts: usize,
) -> Result<Placement> {
    let g = target.geometry();
    g.ensure_compatible(brain_mask.geometry())?;
    if max_attempts == 0 {
        return Err(Error::Validation("max_attempts must be >= 1".into()));
    }
    let td = g.dims();
    let cd = candidate.geometry().dims();
    if (0..3).any(|a| cd[a] > td[a]) {
        return Err(Error::Validation(format!(
            "candidate {cd:?} does not fit inside target {td:?}"
        )));
    }
    let cg = candidate.geometry();
    let tumour: Vec<([usize; 3], u8)> = candidate
        .voxels()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0)
        .map(|(i, &v)| (cg.coords(i), v))
        .collect();
    if tumour.is_empty() {
        return Err(Error::Degenerate("candidate label has no tumour voxels".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = brain_mask.bits();
    let labels = target.voxels();
    for attempt in 1..=max_attempts {
        let o = [0, 1, 2].map(|a| rng.random_range(0..=td[a] - cd[a]));
        let fits = tumour.iter().all(|(c, _)| {
            let i = g.index(o[0] + c[0], o[1] + c[1], o[2] + c[2]);
            bits[i] && labels[i] == 0
        });
        if fits {
            let mut placed = target.clone();
            for (c, v) in &tumour {
                let i = g.index(o[0] + c[0], o[1] + c[1], o[2] + c[2]);
                placed.voxels_mut()[i] = *v;
            }
            return Ok(Placement {
                placed,
                crop_origin: o,
                attempts: attempt,
            });
        }
    }
    Err(Error::PlacementFailed {
        attempts: max_attempts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaPair {
    /// Weight of the adversarial term.
    pub lambda1: f64,
    /// Weight of the mean-absolute-error term.
    pub lambda2: f64,
}

/// Weights used throughout the first training stage.
pub const FIRST_STAGE_LAMBDAS: LambdaPair = LambdaPair {
    lambda1: 1.0,
    lambda2: 5.0,
};
pub const FIRST_STAGE_ITERATIONS: usize = 200_000;
/// Length of the second stage, over which `lambda2` ramps from 1 to 100.
pub const SCHEDULE_EPOCHS: u32 = 1000;

/// Second-stage weights: `lambda2 = 99 / 1000 * epoch + 1`, `lambda1 = 1 / lambda2`.
pub fn lambda_schedule(epoch: u32) -> Result<LambdaPair> {
    if epoch > SCHEDULE_EPOCHS {
        return Err(Error::Domain(format!("epoch {epoch} outside [0, {SCHEDULE_EPOCHS}]")));
    }
    let lambda2 = 99.0 * f64::from(epoch) / f64::from(SCHEDULE_EPOCHS) + 1.0;
    Ok(LambdaPair {
        lambda1: 1.0 / lambda2,
        lambda2,
    })
}

fn mean_log(scores: &[f64], what: &str) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Domain(format!("{what} is empty")));
    }
    if let Some(s) = scores.iter().find(|&&s| !(s > 0.0 && s <= 1.0)) {
        return Err(Error::Domain(format!("{what} contains {s}, outside (0, 1]")));
    }
    Ok(scores.iter().map(|s| s.ln()).sum::<f64>() / scores.len() as f64)
}

/// `-lambda1 * mean(log D(G(z|y))) + lambda2 * mean|x - G(z|y)|`.
pub fn generator_loss(
    d_scores: &[f64],
    recon: &ScalarVolume,
    target: &ScalarVolume,
    lambdas: LambdaPair,
) -> Result<f64> {
    recon.geometry().ensure_compatible(target.geometry())?;
    let adv = mean_log(d_scores, "discriminator scores")?;
    let mae = recon
        .voxels()
        .iter()
        .zip(target.voxels())
        .map(|(&r, &t)| (f64::from(t) - f64::from(r)).abs())
        .sum::<f64>()
        / recon.voxels().len() as f64;
    Ok(-lambdas.lambda1 * adv + lambdas.lambda2 * mae)
}

/// `mean(log D(fake)) - mean(log D(real))`.
pub fn discriminator_loss(d_fake: &[f64], d_real: &[f64]) -> Result<f64> {
    Ok(mean_log(d_fake, "fake scores")? - mean_log(d_real, "real scores")?)
}

/// Per-case seed derived from a master seed and a case id (FNV-1a over the
/// id, mixed with SplitMix64), stable across platforms and releases.
pub fn case_seed(master_seed: u64, case_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in case_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = h ^ master_seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

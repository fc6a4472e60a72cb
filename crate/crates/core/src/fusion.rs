//! Ensemble fusion: probability averaging and per-region STAPLE.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regions::{extract_region, reconstruct_labels, BinaryMask, Region};
use crate::volume::{LabelVolume, RegionProbVolume};

/// Region probability at or above which a voxel is assigned to the region.
pub const BINARIZE_THRESHOLD: f32 = 0.5;

/// Channelwise mean of the inputs, then binarize each region and rebuild
/// labels.
pub fn average_fusion(maps: &[RegionProbVolume]) -> Result<(RegionProbVolume, LabelVolume)> {
    let first = maps
        .first()
        .ok_or_else(|| Error::Validation("average fusion needs at least one map".into()))?;
    let g = first.geometry();
    for m in &maps[1..] {
        g.ensure_compatible(m.geometry())?;
    }
    let n = maps.len() as f64;
    let channels: [Vec<f32>; 3] = Region::ALL.map(|r| {
        let mut acc = vec![0.0f64; g.len()];
        for m in maps {
            for (a, &v) in acc.iter_mut().zip(m.channel(r)) {
                *a += f64::from(v);
            }
        }
        acc.into_iter().map(|s| (s / n) as f32).collect()
    });
    let masks = channels.each_ref().map(|ch| {
        let bits = ch.iter().map(|&p| p >= BINARIZE_THRESHOLD).collect();
        BinaryMask::new(g.clone(), bits).expect("same geometry")
    });
    let labels = reconstruct_labels(&masks[0], &masks[1], &masks[2])?;
    Ok((RegionProbVolume::new(g.clone(), channels)?, labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StaplePrior {
    /// Per-voxel fraction of raters that marked the voxel.
    MeanOfMasks,
    /// One prior for every voxel: the mean foreground fraction over all
    /// raters and voxels.
    GlobalMean,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StapleParams {
    pub max_iters: usize,
    pub tol: f64,
    pub init_sensitivity: f64,
    pub init_specificity: f64,
    pub prior: StaplePrior,
}

impl Default for StapleParams {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-6,
            init_sensitivity: 0.99,
            init_specificity: 0.99,
            prior: StaplePrior::MeanOfMasks,
        }
    }
}

impl StapleParams {
    fn validate(&self) -> Result<()> {
        let open = |v: f64| v > 0.0 && v < 1.0;
        if self.max_iters == 0 {
            return Err(Error::Validation("STAPLE max_iters must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Validation(format!("STAPLE tol must be > 0, got {}", self.tol)));
        }
        if !open(self.init_sensitivity) || !open(self.init_specificity) {
            return Err(Error::Validation(
                "STAPLE initial sensitivity/specificity must lie in (0, 1)".into(),
            ));
        }
        if let StaplePrior::Fixed(p) = self.prior {
            if !open(p) {
                return Err(Error::Validation(format!("STAPLE fixed prior {p} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaterPerformance {
    pub sensitivity: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StapleResult {
    pub consensus: BinaryMask,
    /// Posterior probability that each voxel belongs to the true mask.
    pub weights: Vec<f64>,
    pub rater_performance: Vec<RaterPerformance>,
    pub iterations_run: usize,
    pub converged: bool,
}

/// Raters supported by the pattern encoding.
pub const MAX_RATERS: usize = 128;

// Keeps log() finite when a rater parameter reaches 0 or 1.
const PARAM_FLOOR: f64 = 1e-12;

/// Binary STAPLE by expectation maximisation.
///
/// Each voxel's posterior depends only on which raters marked it, so the EM
/// runs over the distinct rater patterns weighted by their voxel counts. The
/// E-step works in the log domain; the M-step sums patterns in a fixed order,
/// which makes results independent of the thread count.
pub fn staple_binary(masks: &[BinaryMask], params: &StapleParams) -> Result<StapleResult> {
    params.validate()?;
    if masks.len() < 2 {
        return Err(Error::Validation(format!(
            "STAPLE needs at least two raters, got {}",
            masks.len()
        )));
    }
    if masks.len() > MAX_RATERS {
        return Err(Error::Validation(format!(
            "STAPLE supports at most {MAX_RATERS} raters, got {}",
            masks.len()
        )));
    }
    let g = masks[0].geometry();
    for m in &masks[1..] {
        g.ensure_compatible(m.geometry())?;
    }
    let raters = masks.len();
    let nvox = g.len();

    if masks.iter().all(BinaryMask::is_empty) {
        return Ok(StapleResult {
            consensus: BinaryMask::empty(g.clone()),
            weights: vec![0.0; nvox],
            rater_performance: vec![
                RaterPerformance {
                    sensitivity: 1.0,
                    specificity: 1.0
                };
                raters
            ],
            iterations_run: 0,
            converged: true,
        });
    }

    // Pattern encoding: bit j set when rater j marks the voxel.
    let voxel_patterns: Vec<u128> = (0..nvox)
        .into_par_iter()
        .map(|i| {
            masks
                .iter()
                .enumerate()
                .fold(0u128, |acc, (j, m)| acc | ((m.bits()[i] as u128) << j))
        })
        .collect();
    let mut index: HashMap<u128, usize> = HashMap::new();
    let mut patterns: Vec<u128> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    let mut voxel_pattern_idx = Vec::with_capacity(nvox);
    for &p in &voxel_patterns {
        let k = *index.entry(p).or_insert_with(|| {
            patterns.push(p);
            counts.push(0.0);
            patterns.len() - 1
        });
        counts[k] += 1.0;
        voxel_pattern_idx.push(k);
    }
    // Sorted pattern order fixes the summation order.
    let mut order: Vec<usize> = (0..patterns.len()).collect();
    order.sort_by_key(|&k| patterns[k]);
    let patterns_sorted: Vec<u128> = order.iter().map(|&k| patterns[k]).collect();
    let counts_sorted: Vec<f64> = order.iter().map(|&k| counts[k]).collect();
    let mut remap = vec![0usize; order.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }

    let marks = |p: u128, j: usize| (p >> j) & 1 == 1;
    let global_mean = counts_sorted
        .iter()
        .zip(&patterns_sorted)
        .map(|(c, p)| c * p.count_ones() as f64)
        .sum::<f64>()
        / (nvox * raters) as f64;
    let priors: Vec<f64> = patterns_sorted
        .iter()
        .map(|&p| match params.prior {
            StaplePrior::MeanOfMasks => p.count_ones() as f64 / raters as f64,
            StaplePrior::GlobalMean => global_mean,
            StaplePrior::Fixed(v) => v,
        })
        .collect();

    let mut sens = vec![params.init_sensitivity; raters];
    let mut spec = vec![params.init_specificity; raters];
    let mut posterior = vec![0.0f64; patterns_sorted.len()];
    let mut iterations_run = 0;
    let mut converged = false;

    while iterations_run < params.max_iters {
        iterations_run += 1;
        // E-step
        for (k, &p) in patterns_sorted.iter().enumerate() {
            posterior[k] = pattern_posterior(p, priors[k], &sens, &spec);
        }
        // M-step
        let mut max_change: f64 = 0.0;
        let w_sum: f64 = posterior.iter().zip(&counts_sorted).map(|(w, c)| w * c).sum();
        let bg_sum: f64 = posterior.iter().zip(&counts_sorted).map(|(w, c)| (1.0 - w) * c).sum();
        for j in 0..raters {
            let mut tp = 0.0;
            let mut tn = 0.0;
            for (k, &p) in patterns_sorted.iter().enumerate() {
                if marks(p, j) {
                    tp += posterior[k] * counts_sorted[k];
                } else {
                    tn += (1.0 - posterior[k]) * counts_sorted[k];
                }
            }
            let new_sens = if w_sum > 0.0 { tp / w_sum } else { sens[j] };
            let new_spec = if bg_sum > 0.0 { tn / bg_sum } else { spec[j] };
            max_change = max_change
                .max((new_sens - sens[j]).abs())
                .max((new_spec - spec[j]).abs());
            sens[j] = new_sens;
            spec[j] = new_spec;
        }
        if max_change < params.tol {
            converged = true;
            break;
        }
    }
    // Posterior under the final parameters.
    for (k, &p) in patterns_sorted.iter().enumerate() {
        posterior[k] = pattern_posterior(p, priors[k], &sens, &spec);
    }

    let weights: Vec<f64> = voxel_pattern_idx.iter().map(|&k| posterior[remap[k]]).collect();
    let consensus = BinaryMask::new(g.clone(), weights.iter().map(|&w| w >= 0.5).collect())?;
    Ok(StapleResult {
        consensus,
        weights,
        rater_performance: sens
            .iter()
            .zip(&spec)
            .map(|(&sensitivity, &specificity)| RaterPerformance {
                sensitivity,
                specificity,
            })
            .collect(),
        iterations_run,
        converged,
    })
}

fn pattern_posterior(p: u128, prior: f64, sens: &[f64], spec: &[f64]) -> f64 {
    let clamp = |v: f64| v.clamp(PARAM_FLOOR, 1.0 - PARAM_FLOOR);
    let mut log_fg = prior.ln();
    let mut log_bg = (1.0 - prior).ln();
    for j in 0..sens.len() {
        let (s, q) = (clamp(sens[j]), clamp(spec[j]));
        if (p >> j) & 1 == 1 {
            log_fg += s.ln();
            log_bg += (1.0 - q).ln();
        } else {
            log_fg += (1.0 - s).ln();
            log_bg += q.ln();
        }
    }
    if log_fg == f64::NEG_INFINITY {
        return 0.0;
    }
    if log_bg == f64::NEG_INFINITY {
        return 1.0;
    }
    let w = 1.0 / (1.0 + (log_bg - log_fg).exp());
    w.clamp(0.0, 1.0)
}

/// Per-region STAPLE on label maps, then label reconstruction.
pub fn staple_fusion(labels: &[LabelVolume], params: &StapleParams) -> Result<LabelVolume> {
    if labels.len() < 2 {
        return Err(Error::Validation(format!(
            "STAPLE fusion needs at least two label maps, got {}",
            labels.len()
        )));
    }
    let mut consensus = Vec::with_capacity(3);
    for r in Region::ALL {
        let masks: Vec<BinaryMask> = labels.iter().map(|l| extract_region(l, r)).collect();
        consensus.push(staple_binary(&masks, params)?.consensus);
    }
    reconstruct_labels(&consensus[0], &consensus[1], &consensus[2])
}

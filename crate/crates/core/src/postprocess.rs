//! Small-lesion suppression.
//!
//! Regions are processed coarse to fine (WT, TC, ET). Suppressed voxels move
//! one step down the label hierarchy instead of being erased outright:
//! WT -> background, TC (labels 1 and 3) -> edema, ET -> necrotic core.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::{connected_components, Connectivity};
use crate::regions::{extract_region, Region, ED, ET, NCR};
use crate::volume::LabelVolume;

/// Threshold the legacy ET-to-NCR rule is usually run with.
pub const LEGACY_ET_THRESHOLD: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ThresholdScope {
    /// Each connected component is judged by its own size.
    #[default]
    PerComponent,
    /// The whole region is judged by its total size.
    WholeRegion,
}

impl fmt::Display for ThresholdScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdScope::PerComponent => "component",
            ThresholdScope::WholeRegion => "region",
        })
    }
}

impl FromStr for ThresholdScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "component" | "per-component" | "percomponent" => Ok(ThresholdScope::PerComponent),
            "region" | "whole-region" | "wholeregion" => Ok(ThresholdScope::WholeRegion),
            other => Err(Error::Validation(format!("unknown threshold scope '{other}'"))),
        }
    }
}

/// Minimum voxel counts per region. Anything strictly below is suppressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub wt: usize,
    pub tc: usize,
    pub et: usize,
    pub scope: ThresholdScope,
}

impl ThresholdSpec {
    pub fn per_component(wt: usize, tc: usize, et: usize) -> Self {
        Self {
            wt,
            tc,
            et,
            scope: ThresholdScope::PerComponent,
        }
    }

    pub fn get(&self, region: Region) -> usize {
        match region {
            Region::Wt => self.wt,
            Region::Tc => self.tc,
            Region::Et => self.et,
        }
    }

    pub fn is_noop(&self) -> bool {
        self.wt == 0 && self.tc == 0 && self.et == 0
    }
}

pub fn apply_thresholds(pred: &LabelVolume, spec: &ThresholdSpec, conn: Connectivity) -> LabelVolume {
    let mut out = pred.clone();
    for region in Region::ALL {
        let threshold = spec.get(region);
        if threshold == 0 {
            continue;
        }
        let mask = extract_region(&out, region);
        let suppress: Vec<bool> = match spec.scope {
            ThresholdScope::WholeRegion => {
                let below = mask.count() < threshold;
                mask.bits().iter().map(|&b| b && below).collect()
            }
            ThresholdScope::PerComponent => {
                let cc = connected_components(&mask, conn);
                cc.ids()
                    .iter()
                    .map(|&id| id != 0 && cc.size(id) < threshold)
                    .collect()
            }
        };
        for (v, s) in out.voxels_mut().iter_mut().zip(suppress) {
            if s {
                *v = demote(*v, region);
            }
        }
    }
    out
}

fn demote(label: u8, region: Region) -> u8 {
    match region {
        Region::Wt => 0,
        Region::Tc => ED,
        Region::Et => {
            debug_assert_eq!(label, ET);
            NCR
        }
    }
}

/// Whole-region rule: when fewer than `threshold` voxels carry ET, every ET
/// voxel becomes NCR.
pub fn legacy_et_to_ncr(pred: &LabelVolume, threshold: usize) -> LabelVolume {
    let et_count = pred.voxels().iter().filter(|&&v| v == ET).count();
    let mut out = pred.clone();
    if et_count < threshold {
        for v in out.voxels_mut() {
            if *v == ET {
                *v = NCR;
            }
        }
    }
    out
}

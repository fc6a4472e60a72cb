//! Dice and HD95 per region, case-level ("legacy") and lesion-wise.
//!
//! Empty-mask conventions follow the challenge: both masks empty scores
//! (DSC 1, HD95 0); exactly one empty scores (DSC 0, HD95 374). Lesion-wise
//! scoring applies the same (0, 374) penalty to every unmatched lesion.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::{
    connected_components, dilate_bits, squared_edt, surface_voxels, BoundingBox, Connectivity,
};
use crate::regions::{extract_region, BinaryMask, Region};
use crate::volume::{Geometry, LabelVolume};

/// HD95 assigned when exactly one side of a comparison is empty.
pub const HD95_PENALTY: f64 = 374.0;

/// Percentile used for the robust Hausdorff distance.
pub const HD_PERCENTILE: f64 = 95.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub dsc: f64,
    pub hd95: f64,
}

impl MetricPair {
    pub const PERFECT: MetricPair = MetricPair { dsc: 1.0, hd95: 0.0 };
    pub const PENALTY: MetricPair = MetricPair {
        dsc: 0.0,
        hd95: HD95_PENALTY,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Legacy,
    #[serde(rename = "lesionwise")]
    LesionWise,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::Legacy => "legacy",
            EvalMode::LesionWise => "lesionwise",
        })
    }
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "legacy" => Ok(EvalMode::Legacy),
            "lesionwise" | "lesion-wise" | "lesion_wise" => Ok(EvalMode::LesionWise),
            other => Err(Error::Validation(format!("unknown evaluation mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LesionCounts {
    pub matched: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseMetrics {
    pub case_id: String,
    pub mode: EvalMode,
    /// Indexed by [`Region::channel`].
    pub per_region: [MetricPair; 3],
    /// Present for lesion-wise results.
    pub lesion_counts: Option<[LesionCounts; 3]>,
}

impl CaseMetrics {
    pub fn get(&self, region: Region) -> MetricPair {
        self.per_region[region.channel()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchParams {
    pub dilation_iterations: usize,
    pub connectivity: Connectivity,
    /// Ground-truth lesions smaller than this are left out of scoring, along
    /// with predictions that only touch them. 0 disables the filter.
    pub min_gt_lesion_size: usize,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            dilation_iterations: 3,
            connectivity: Connectivity::Full26,
            min_gt_lesion_size: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedLesion {
    pub gt_id: u32,
    pub pred_ids: Vec<u32>,
    pub metrics: MetricPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LesionMatchReport {
    pub matched: Vec<MatchedLesion>,
    pub false_positives: Vec<u32>,
    pub false_negatives: Vec<u32>,
    /// Gt lesions below `min_gt_lesion_size`, and predictions assigned to
    /// them. Always empty when the filter is off.
    pub ignored_gt: Vec<u32>,
    pub ignored_pred: Vec<u32>,
    pub params: MatchParams,
}

impl LesionMatchReport {
    pub fn counts(&self) -> LesionCounts {
        LesionCounts {
            matched: self.matched.len(),
            false_positives: self.false_positives.len(),
            false_negatives: self.false_negatives.len(),
        }
    }

    /// Arithmetic mean over matched lesions plus one penalty per FP and FN.
    pub fn score(&self) -> MetricPair {
        let n = self.matched.len() + self.false_positives.len() + self.false_negatives.len();
        if n == 0 {
            return MetricPair::PERFECT;
        }
        let penalties = (self.false_positives.len() + self.false_negatives.len()) as f64;
        let dsc: f64 = self.matched.iter().map(|m| m.metrics.dsc).sum::<f64>();
        let hd: f64 = self.matched.iter().map(|m| m.metrics.hd95).sum::<f64>() + penalties * HD95_PENALTY;
        MetricPair {
            dsc: dsc / n as f64,
            hd95: hd / n as f64,
        }
    }
}

pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.geometry().ensure_compatible(b.geometry())?;
    let (mut na, mut nb, mut both) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.bits().iter().zip(b.bits()) {
        na += x as usize;
        nb += y as usize;
        both += (x && y) as usize;
    }
    Ok(dice_from_counts(na, nb, both))
}

fn dice_from_counts(na: usize, nb: usize, both: usize) -> f64 {
    if na + nb == 0 {
        1.0
    } else {
        2.0 * both as f64 / (na + nb) as f64
    }
}

pub fn hd95(a: &BinaryMask, b: &BinaryMask, spacing: [f64; 3]) -> Result<f64> {
    a.geometry().ensure_compatible(b.geometry())?;
    Ok(hd95_indices(a.geometry(), &a.indices(), &b.indices(), spacing))
}

/// Both metrics for two sorted index sets on one grid.
fn pair_metrics(g: &Geometry, a: &[usize], b: &[usize], spacing: [f64; 3]) -> MetricPair {
    MetricPair {
        dsc: dice_from_counts(a.len(), b.len(), sorted_intersection(a, b)),
        hd95: hd95_indices(g, a, b, spacing),
    }
}

fn sorted_intersection(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Works inside the bounding box of both sets padded by one voxel, which
/// leaves surfaces and surface-to-surface distances unchanged.
fn hd95_indices(g: &Geometry, a: &[usize], b: &[usize], spacing: [f64; 3]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return HD95_PENALTY,
        _ => {}
    }
    let bbox = BoundingBox::of_indices(g, a)
        .unwrap()
        .union(BoundingBox::of_indices(g, b).unwrap())
        .padded(1, g.dims());
    let local = g.with_dims(bbox.dims()).expect("box dims are positive");
    let to_mask = |idx: &[usize]| {
        let mut m = BinaryMask::empty(local.clone());
        for &i in idx {
            m.bits_mut()[bbox.local(g, i)] = true;
        }
        surface_voxels(&m)
    };
    let sa = to_mask(a);
    let sb = to_mask(b);
    let da = directed_p95(&sa, &sb, spacing);
    let db = directed_p95(&sb, &sa, spacing);
    da.max(db)
}

fn directed_p95(from: &BinaryMask, to: &BinaryMask, spacing: [f64; 3]) -> f64 {
    let dt = squared_edt(to.bits(), to.geometry().dims(), spacing);
    let mut d: Vec<f64> = from
        .bits()
        .iter()
        .zip(&dt)
        .filter(|(&f, _)| f)
        .map(|(_, &v)| v.sqrt())
        .collect();
    percentile(&mut d, HD_PERCENTILE)
}

/// Linear-interpolation percentile (the numpy default). Sorts in place.
pub fn percentile(values: &mut [f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    values[lo] + (values[hi] - values[lo]) * (pos - lo as f64)
}

pub fn case_metrics_legacy(case_id: &str, gt: &LabelVolume, pred: &LabelVolume) -> Result<CaseMetrics> {
    gt.geometry().ensure_compatible(pred.geometry())?;
    let spacing = gt.geometry().spacing_f64();
    let per_region = Region::ALL.map(|r| {
        let a = extract_region(gt, r).indices();
        let b = extract_region(pred, r).indices();
        pair_metrics(gt.geometry(), &a, &b, spacing)
    });
    Ok(CaseMetrics {
        case_id: case_id.to_string(),
        mode: EvalMode::Legacy,
        per_region,
        lesion_counts: None,
    })
}

pub fn lesion_match(gt_mask: &BinaryMask, pred_mask: &BinaryMask, params: &MatchParams) -> Result<LesionMatchReport> {
    let g = gt_mask.geometry();
    g.ensure_compatible(pred_mask.geometry())?;
    let spacing = g.spacing_f64();
    let gt_cc = connected_components(gt_mask, params.connectivity);
    let pred_cc = connected_components(pred_mask, params.connectivity);
    let gt_members = gt_cc.members();
    let pred_members = pred_cc.members();
    let pred_ids = pred_cc.ids();

    // best[pred] = (overlap with dilated gt, gt id)
    let mut best: Vec<Option<(usize, u32)>> = vec![None; pred_cc.count()];
    for (k, members) in gt_members.iter().enumerate() {
        let gt_id = k as u32 + 1;
        let bbox = BoundingBox::of_indices(g, members)
            .unwrap()
            .padded(params.dilation_iterations, g.dims());
        let dims = bbox.dims();
        let mut bits = vec![false; dims.iter().product()];
        for &i in members {
            bits[bbox.local(g, i)] = true;
        }
        dilate_bits(&mut bits, dims, params.dilation_iterations, params.connectivity);
        let mut overlap: BTreeMap<u32, usize> = BTreeMap::new();
        for (l, &on) in bits.iter().enumerate() {
            if on {
                let p = pred_ids[bbox.global(g, l)];
                if p != 0 {
                    *overlap.entry(p).or_default() += 1;
                }
            }
        }
        for (p, n) in overlap {
            let slot = &mut best[p as usize - 1];
            if slot.is_none_or(|(m, _)| n > m) {
                *slot = Some((n, gt_id));
            }
        }
    }

    let ignored = |gt_id: u32| gt_cc.size(gt_id) < params.min_gt_lesion_size;
    let mut assigned: Vec<Vec<u32>> = vec![Vec::new(); gt_cc.count()];
    let mut false_positives = Vec::new();
    let mut ignored_pred = Vec::new();
    for (k, slot) in best.iter().enumerate() {
        let pred_id = k as u32 + 1;
        match slot {
            None => false_positives.push(pred_id),
            Some((_, gt_id)) if ignored(*gt_id) => ignored_pred.push(pred_id),
            Some((_, gt_id)) => assigned[*gt_id as usize - 1].push(pred_id),
        }
    }

    let mut matched = Vec::new();
    let mut false_negatives = Vec::new();
    let mut ignored_gt = Vec::new();
    for (k, preds) in assigned.into_iter().enumerate() {
        let gt_id = k as u32 + 1;
        if ignored(gt_id) {
            ignored_gt.push(gt_id);
        } else if preds.is_empty() {
            false_negatives.push(gt_id);
        } else {
            let mut union: Vec<usize> = preds
                .iter()
                .flat_map(|&p| pred_members[p as usize - 1].iter().copied())
                .collect();
            union.sort_unstable();
            let metrics = pair_metrics(g, &gt_members[k], &union, spacing);
            matched.push(MatchedLesion {
                gt_id,
                pred_ids: preds,
                metrics,
            });
        }
    }

    Ok(LesionMatchReport {
        matched,
        false_positives,
        false_negatives,
        ignored_gt,
        ignored_pred,
        params: *params,
    })
}

pub fn case_metrics_lesionwise(
    case_id: &str,
    gt: &LabelVolume,
    pred: &LabelVolume,
    params: &MatchParams,
) -> Result<(CaseMetrics, [LesionMatchReport; 3])> {
    gt.geometry().ensure_compatible(pred.geometry())?;
    let mut reports = Vec::with_capacity(3);
    for r in Region::ALL {
        reports.push(lesion_match(&extract_region(gt, r), &extract_region(pred, r), params)?);
    }
    let reports: [LesionMatchReport; 3] = reports.try_into().expect("three regions");
    let metrics = CaseMetrics {
        case_id: case_id.to_string(),
        mode: EvalMode::LesionWise,
        per_region: [0, 1, 2].map(|k| reports[k].score()),
        lesion_counts: Some([0, 1, 2].map(|k| reports[k].counts())),
    };
    Ok((metrics, reports))
}

/// `case_id` of the per-region mean rows appended by batch evaluation.
pub const SUMMARY_CASE_ID: &str = "__mean__";

/// One line of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub case_id: String,
    pub mode: EvalMode,
    pub region: Region,
    pub dsc: f64,
    pub hd95: f64,
    pub n_matched: Option<usize>,
    pub n_fp: Option<usize>,
    pub n_fn: Option<usize>,
}

impl MetricsRow {
    pub fn is_summary(&self) -> bool {
        self.case_id == SUMMARY_CASE_ID
    }
}

pub fn metrics_rows(cases: &[CaseMetrics]) -> Vec<MetricsRow> {
    let mut rows: Vec<MetricsRow> = cases
        .iter()
        .flat_map(|c| {
            Region::ALL.into_iter().map(move |r| {
                let m = c.get(r);
                let counts = c.lesion_counts.map(|lc| lc[r.channel()]);
                MetricsRow {
                    case_id: c.case_id.clone(),
                    mode: c.mode,
                    region: r,
                    dsc: m.dsc,
                    hd95: m.hd95,
                    n_matched: counts.map(|c| c.matched),
                    n_fp: counts.map(|c| c.false_positives),
                    n_fn: counts.map(|c| c.false_negatives),
                }
            })
        })
        .collect();
    rows.sort_by(|a, b| (&a.case_id, a.region, a.mode).cmp(&(&b.case_id, b.region, b.mode)));
    rows
}

/// Per-(mode, region) mean rows over non-summary rows.
pub fn summary_rows(rows: &[MetricsRow]) -> Vec<MetricsRow> {
    let mut acc: BTreeMap<(EvalMode, Region), (f64, f64, usize)> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.is_summary()) {
        let e = acc.entry((r.mode, r.region)).or_default();
        e.0 += r.dsc;
        e.1 += r.hd95;
        e.2 += 1;
    }
    acc.into_iter()
        .map(|((mode, region), (d, h, n))| MetricsRow {
            case_id: SUMMARY_CASE_ID.to_string(),
            mode,
            region,
            dsc: d / n as f64,
            hd95: h / n as f64,
            n_matched: None,
            n_fp: None,
            n_fn: None,
        })
        .collect()
}

pub fn write_metrics_csv<W: io::Write>(writer: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: io::Read>(reader: R) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(d: [usize; 3]) -> Geometry {
        Geometry::isotropic(d).unwrap()
    }

    fn mask(dims: [usize; 3], on: &[[usize; 3]]) -> BinaryMask {
        let mut m = BinaryMask::empty(g(dims));
        for c in on {
            m.set(c[0], c[1], c[2], true);
        }
        m
    }

    fn block(lo: [usize; 3], hi: [usize; 3]) -> Vec<[usize; 3]> {
        let mut v = Vec::new();
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    v.push([x, y, z]);
                }
            }
        }
        v
    }

    #[test]
    fn dice_conventions() {
        let e = mask([4, 1, 1], &[]);
        let a = mask([4, 1, 1], &[[0, 0, 0], [1, 0, 0]]);
        let b = mask([4, 1, 1], &[[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]]);
        assert_eq!(dice(&e, &e).unwrap(), 1.0);
        assert_eq!(dice(&a, &e).unwrap(), 0.0);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        assert!((dice(&a, &b).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn dice_rejects_mismatched_grids() {
        let a = mask([2, 1, 1], &[]);
        let b = mask([1, 2, 1], &[]);
        assert!(matches!(dice(&a, &b), Err(Error::Incompatible(_))));
        assert!(matches!(hd95(&a, &b, [1.0; 3]), Err(Error::Incompatible(_))));
    }

    #[test]
    fn hd95_conventions() {
        let e = mask([8, 1, 1], &[]);
        let a = mask([8, 1, 1], &[[1, 0, 0]]);
        let b = mask([8, 1, 1], &[[4, 0, 0]]);
        assert_eq!(hd95(&e, &e, [1.0; 3]).unwrap(), 0.0);
        assert_eq!(hd95(&a, &e, [1.0; 3]).unwrap(), HD95_PENALTY);
        assert_eq!(hd95(&e, &a, [1.0; 3]).unwrap(), HD95_PENALTY);
        assert_eq!(hd95(&a, &a, [1.0; 3]).unwrap(), 0.0);
        assert_eq!(hd95(&a, &b, [1.0; 3]).unwrap(), 3.0);
        assert_eq!(hd95(&a, &b, [2.0, 1.0, 1.0]).unwrap(), 6.0);
    }

    #[test]
    fn percentile_interpolates() {
        let mut v: Vec<f64> = (0..21).map(f64::from).collect();
        assert_eq!(percentile(&mut v, 95.0), 19.0);
        let mut v = vec![0.0, 10.0];
        assert!((percentile(&mut v, 95.0) - 9.5).abs() < 1e-12);
        let mut v = vec![4.0];
        assert_eq!(percentile(&mut v, 95.0), 4.0);
    }

    fn labels(dims: [usize; 3], on: &[([usize; 3], u8)]) -> LabelVolume {
        let mut v = LabelVolume::zeros(g(dims));
        for (c, l) in on {
            v.set(c[0], c[1], c[2], *l);
        }
        v
    }

    #[test]
    fn legacy_identical_is_perfect() {
        let v = labels([6, 6, 6], &[([2, 2, 2], 3), ([2, 3, 2], 1), ([3, 3, 2], 2)]);
        let m = case_metrics_legacy("c", &v, &v).unwrap();
        for r in Region::ALL {
            assert_eq!(m.get(r), MetricPair::PERFECT);
        }
    }

    #[test]
    fn legacy_spurious_et_is_penalised() {
        let gt = labels([6, 6, 6], &[([2, 2, 2], 1)]);
        let pred = labels([6, 6, 6], &[([2, 2, 2], 3)]);
        let m = case_metrics_legacy("c", &gt, &pred).unwrap();
        assert_eq!(m.get(Region::Et), MetricPair::PENALTY);
        assert_eq!(m.get(Region::Tc), MetricPair::PERFECT);
    }

    #[test]
    fn lesion_match_identical() {
        let m = mask([8, 8, 8], &block([2, 2, 2], [4, 4, 4]));
        let r = lesion_match(&m, &m, &MatchParams::default()).unwrap();
        assert_eq!(r.matched.len(), 1);
        assert!(r.false_positives.is_empty() && r.false_negatives.is_empty());
        assert_eq!(r.matched[0].metrics, MetricPair::PERFECT);
    }

    #[test]
    fn lesion_match_extra_blob_is_false_positive() {
        let gt = mask([20, 8, 8], &block([1, 1, 1], [3, 3, 3]));
        let mut p = block([1, 1, 1], [3, 3, 3]);
        p.extend(block([14, 2, 2], [16, 4, 4]));
        let pred = mask([20, 8, 8], &p);
        let r = lesion_match(&gt, &pred, &MatchParams::default()).unwrap();
        assert_eq!(r.counts(), LesionCounts { matched: 1, false_positives: 1, false_negatives: 0 });
        assert_eq!(r.false_positives, vec![2]);
        let s = r.score();
        assert_eq!(s.dsc, 0.5);
        assert_eq!(s.hd95, 187.0);
    }

    #[test]
    fn lesion_match_missed_lesion_is_false_negative() {
        let mut t = block([1, 1, 1], [3, 3, 3]);
        t.extend(block([14, 2, 2], [16, 4, 4]));
        let gt = mask([20, 8, 8], &t);
        let pred = mask([20, 8, 8], &block([1, 1, 1], [3, 3, 3]));
        let r = lesion_match(&gt, &pred, &MatchParams::default()).unwrap();
        assert_eq!(r.counts(), LesionCounts { matched: 1, false_positives: 0, false_negatives: 1 });
        assert_eq!(r.false_negatives, vec![2]);
    }

    #[test]
    fn nearby_prediction_matches_through_dilation() {
        let gt = mask([12, 4, 4], &[[2, 1, 1]]);
        let near = mask([12, 4, 4], &[[5, 1, 1]]);
        let far = mask([12, 4, 4], &[[6, 1, 1]]);
        let p = MatchParams::default();
        assert_eq!(lesion_match(&gt, &near, &p).unwrap().matched.len(), 1);
        let r = lesion_match(&gt, &far, &p).unwrap();
        assert_eq!(r.counts(), LesionCounts { matched: 0, false_positives: 1, false_negatives: 1 });
    }

    #[test]
    fn shared_prediction_goes_to_largest_overlap() {
        // pred bridges two gt lesions; it overlaps the block (id 1, first in scan order) more.
        let mut t = vec![[1, 1, 1]];
        t.extend(block([10, 0, 0], [12, 2, 2]));
        let gt = mask([16, 3, 3], &t);
        let pred = mask([16, 3, 3], &block([1, 1, 1], [11, 1, 1]));
        let params = MatchParams { dilation_iterations: 0, ..Default::default() };
        let r = lesion_match(&gt, &pred, &params).unwrap();
        assert_eq!(r.matched.len(), 1);
        assert_eq!(r.matched[0].gt_id, 1);
        assert_eq!(r.false_negatives, vec![2]);
    }

    #[test]
    fn overlap_ties_go_to_lower_gt_id() {
        let gt = mask([7, 1, 1], &[[0, 0, 0], [6, 0, 0]]);
        let pred = mask([7, 1, 1], &block([0, 0, 0], [6, 0, 0]));
        let params = MatchParams { dilation_iterations: 0, ..Default::default() };
        let r = lesion_match(&gt, &pred, &params).unwrap();
        assert_eq!(r.matched[0].gt_id, 1);
        assert_eq!(r.false_negatives, vec![2]);
    }

    #[test]
    fn min_size_filter_ignores_small_gt() {
        let mut t = vec![[1, 1, 1]];
        t.extend(block([10, 0, 0], [12, 2, 2]));
        let gt = mask([16, 3, 3], &t);
        let params = MatchParams { min_gt_lesion_size: 2, ..Default::default() };
        let r = lesion_match(&gt, &gt, &params).unwrap();
        assert_eq!(r.ignored_gt, vec![2]);
        assert_eq!(r.ignored_pred, vec![2]);
        assert_eq!(r.score(), MetricPair::PERFECT);
    }

    #[test]
    fn lesionwise_empty_regions_are_perfect() {
        let v = labels([5, 5, 5], &[([2, 2, 2], 2)]);
        let (m, reports) = case_metrics_lesionwise("c", &v, &v, &MatchParams::default()).unwrap();
        assert_eq!(m.get(Region::Et), MetricPair::PERFECT);
        assert_eq!(reports[2].counts(), LesionCounts::default());
        assert_eq!(m.lesion_counts.unwrap()[0].matched, 1);
    }

    #[test]
    fn csv_rows_sorted_and_round_trip() {
        let v = labels([3, 3, 3], &[([1, 1, 1], 3)]);
        let a = case_metrics_legacy("b", &v, &v).unwrap();
        let (b, _) = case_metrics_lesionwise("a", &v, &v, &MatchParams::default()).unwrap();
        let rows = metrics_rows(&[a, b]);
        assert_eq!(rows[0].case_id, "a");
        assert_eq!(rows.iter().map(|r| r.region).collect::<Vec<_>>()[..3], Region::ALL);
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("case_id,mode,region,dsc,hd95,n_matched,n_fp,n_fn\n"));
        assert!(text.contains("a,lesionwise,WT,1.0,0.0,1,0,0\n"), "{text}");
        assert!(text.contains("b,legacy,ET,1.0,0.0,,,\n"), "{text}");
        assert_eq!(read_metrics_csv(&buf[..]).unwrap(), rows);
    }
}

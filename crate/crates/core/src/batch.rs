//! Multi-case evaluation over paired directories.
//!
//! Cases are paired by file stem (`<case_id>.nii` in both directories) and
//! reported in lexicographic order, so the output bytes do not depend on the
//! number of workers.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{
    case_metrics_legacy, case_metrics_lesionwise, metrics_rows, summary_rows, write_metrics_csv,
    CaseMetrics, MatchParams, MetricsRow,
};
use crate::morphology::Connectivity;
use crate::nifti::read_label;
use crate::postprocess::{apply_thresholds, ThresholdSpec};
use crate::volume::LabelVolume;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchMode {
    Legacy,
    LesionWise,
    #[default]
    Both,
}

impl fmt::Display for BatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BatchMode::Legacy => "legacy",
            BatchMode::LesionWise => "lesionwise",
            BatchMode::Both => "both",
        })
    }
}

impl FromStr for BatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "legacy" => Ok(BatchMode::Legacy),
            "lesionwise" | "lesion-wise" => Ok(BatchMode::LesionWise),
            "both" => Ok(BatchMode::Both),
            other => Err(Error::Validation(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub gt_dir: PathBuf,
    pub pred_dir: PathBuf,
    pub out_path: PathBuf,
    pub mode: BatchMode,
    pub match_params: MatchParams,
    /// Applied to every prediction before scoring.
    pub thresholds: Option<ThresholdSpec>,
    pub threshold_connectivity: Connectivity,
    pub workers: usize,
    pub master_seed: u64,
}

impl BatchConfig {
    pub fn new(gt_dir: impl Into<PathBuf>, pred_dir: impl Into<PathBuf>, out_path: impl Into<PathBuf>) -> Self {
        Self {
            gt_dir: gt_dir.into(),
            pred_dir: pred_dir.into(),
            out_path: out_path.into(),
            mode: BatchMode::default(),
            match_params: MatchParams::default(),
            thresholds: None,
            threshold_connectivity: Connectivity::Full26,
            workers: 1,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedCase {
    pub case_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateReport {
    pub cases_evaluated: usize,
    pub skipped: Vec<SkippedCase>,
    /// Rows as written, summary rows last.
    pub rows: Vec<MetricsRow>,
}

impl EvaluateReport {
    /// 0 when every case was scored, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.skipped.is_empty() {
            0
        } else {
            1
        }
    }
}

/// Scores one case in the configured mode(s).
pub fn evaluate_case(
    case_id: &str,
    gt: &LabelVolume,
    pred: &LabelVolume,
    mode: BatchMode,
    params: &MatchParams,
) -> Result<Vec<CaseMetrics>> {
    let mut out = Vec::with_capacity(2);
    if matches!(mode, BatchMode::Legacy | BatchMode::Both) {
        out.push(case_metrics_legacy(case_id, gt, pred)?);
    }
    if matches!(mode, BatchMode::LesionWise | BatchMode::Both) {
        out.push(case_metrics_lesionwise(case_id, gt, pred, params)?.0);
    }
    Ok(out)
}

fn stems(dir: &Path) -> Result<BTreeSet<String>> {
    if !dir.is_dir() {
        return Err(Error::Config(format!("{} is not a directory", dir.display())));
    }
    let mut out = BTreeSet::new();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name();
        if let Some(stem) = name.to_str().and_then(|n| n.strip_suffix(".nii")) {
            out.insert(stem.to_string());
        }
    }
    Ok(out)
}

pub fn run_evaluate(config: &BatchConfig) -> Result<EvaluateReport> {
    if config.workers == 0 {
        return Err(Error::Config("workers must be >= 1".into()));
    }
    let gt = stems(&config.gt_dir)?;
    let pred = stems(&config.pred_dir)?;
    let mut skipped: Vec<SkippedCase> = gt
        .symmetric_difference(&pred)
        .map(|id| SkippedCase {
            case_id: id.clone(),
            reason: if gt.contains(id) {
                "no matching prediction".into()
            } else {
                "no matching ground truth".into()
            },
        })
        .collect();
    let paired: Vec<&String> = gt.intersection(&pred).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<(String, Result<Vec<CaseMetrics>>)> = pool.install(|| {
        paired
            .par_iter()
            .map(|id| ((*id).clone(), score_files(id, config)))
            .collect()
    });

    let mut cases = Vec::new();
    let mut evaluated = 0;
    for (id, r) in results {
        match r {
            Ok(m) => {
                evaluated += 1;
                cases.extend(m);
            }
            Err(e) => skipped.push(SkippedCase {
                case_id: id,
                reason: e.to_string(),
            }),
        }
    }
    skipped.sort_by(|a, b| a.case_id.cmp(&b.case_id));

    let mut rows = metrics_rows(&cases);
    let summary = summary_rows(&rows);
    rows.extend(summary);
    write_metrics_csv(fs::File::create(&config.out_path)?, &rows)?;
    Ok(EvaluateReport {
        cases_evaluated: evaluated,
        skipped,
        rows,
    })
}

fn score_files(id: &str, config: &BatchConfig) -> Result<Vec<CaseMetrics>> {
    let name = format!("{id}.nii");
    let gt = read_label(config.gt_dir.join(&name))?.volume;
    let mut pred = read_label(config.pred_dir.join(&name))?.volume;
    gt.geometry().ensure_compatible(pred.geometry())?;
    if let Some(spec) = &config.thresholds {
        pred = apply_thresholds(&pred, spec, config.threshold_connectivity);
    }
    evaluate_case(id, &gt, &pred, config.mode, &config.match_params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_parse() {
        assert_eq!("both".parse::<BatchMode>().unwrap(), BatchMode::Both);
        assert_eq!("lesionwise".parse::<BatchMode>().unwrap(), BatchMode::LesionWise);
        assert!("x".parse::<BatchMode>().is_err());
    }

    #[test]
    fn zero_workers_is_a_config_error() {
        let mut c = BatchConfig::new(".", ".", "out.csv");
        c.workers = 0;
        assert!(matches!(run_evaluate(&c), Err(Error::Config(_))));
    }

    #[test]
    fn missing_directory_is_a_config_error() {
        let c = BatchConfig::new("/nonexistent/gt", "/nonexistent/pred", "out.csv");
        assert!(matches!(run_evaluate(&c), Err(Error::Config(_))));
    }
}

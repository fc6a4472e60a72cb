//! Rank-then-aggregate scoring.
//!
//! Every (case, region, metric) key ranks all solutions independently: DSC
//! descending, HD95 ascending, ties sharing the mean of their positions. A
//! solution's score is the mean of its normalized ranks over all keys, so 0
//! is best and 1 worst.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{read_metrics_csv, EvalMode, MetricsRow};
use crate::regions::Region;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    Dsc,
    Hd95,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Dsc, Metric::Hd95];

    fn higher_is_better(self) -> bool {
        matches!(self, Metric::Dsc)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Dsc => "DSC",
            Metric::Hd95 => "HD95",
        })
    }
}

/// (case, region, metric); one ranking is computed per key.
pub type RankKey = (String, Region, Metric);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricTable {
    solutions: Vec<String>,
    cases: BTreeSet<String>,
    entries: HashMap<(String, RankKey), f64>,
}

impl MetricTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, solution: &str, case: &str, region: Region, metric: Metric, value: f64) {
        if !self.solutions.iter().any(|s| s == solution) {
            self.solutions.push(solution.to_string());
        }
        self.cases.insert(case.to_string());
        self.entries
            .insert((solution.to_string(), (case.to_string(), region, metric)), value);
    }

    pub fn get(&self, solution: &str, case: &str, region: Region, metric: Metric) -> Option<f64> {
        self.entries
            .get(&(solution.to_string(), (case.to_string(), region, metric)))
            .copied()
    }

    pub fn solutions(&self) -> &[String] {
        &self.solutions
    }

    pub fn cases(&self) -> impl Iterator<Item = &String> {
        self.cases.iter()
    }

    /// Builds a table from per-solution metric CSV rows. Summary rows are
    /// skipped. When the rows mix evaluation modes, `mode` must pick one.
    pub fn from_solution_rows(
        solutions: &[(String, Vec<MetricsRow>)],
        mode: Option<EvalMode>,
    ) -> Result<Self> {
        let mut table = Self::new();
        for (solution, rows) in solutions {
            let rows: Vec<&MetricsRow> = rows
                .iter()
                .filter(|r| !r.is_summary() && mode.is_none_or(|m| r.mode == m))
                .collect();
            let modes: BTreeSet<EvalMode> = rows.iter().map(|r| r.mode).collect();
            if modes.len() > 1 {
                return Err(Error::Validation(format!(
                    "solution '{solution}' mixes evaluation modes; select one"
                )));
            }
            if table.solutions.iter().any(|s| s == solution) {
                return Err(Error::Validation(format!("duplicate solution id '{solution}'")));
            }
            table.solutions.push(solution.clone());
            for r in rows {
                for (metric, value) in [(Metric::Dsc, r.dsc), (Metric::Hd95, r.hd95)] {
                    let key = (solution.clone(), (r.case_id.clone(), r.region, metric));
                    if table.entries.insert(key, value).is_some() {
                        return Err(Error::Validation(format!(
                            "duplicate entry for solution '{solution}' case '{}' region {}",
                            r.case_id, r.region
                        )));
                    }
                }
                table.cases.insert(r.case_id.clone());
            }
        }
        Ok(table)
    }

    /// Loads one metrics CSV per solution; the solution id is the file stem.
    pub fn from_csv_files<P: AsRef<Path>>(paths: &[P], mode: Option<EvalMode>) -> Result<Self> {
        let mut solutions = Vec::new();
        for p in paths {
            let p = p.as_ref();
            let id = p
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::Validation(format!("cannot derive solution id from {}", p.display())))?
                .to_string();
            let rows = read_metrics_csv(std::fs::File::open(p)?)?;
            solutions.push((id, rows));
        }
        Self::from_solution_rows(&solutions, mode)
    }

    fn keys(&self) -> Vec<RankKey> {
        let mut keys = Vec::with_capacity(self.cases.len() * 6);
        for c in &self.cases {
            for r in Region::ALL {
                for m in Metric::ALL {
                    keys.push((c.clone(), r, m));
                }
            }
        }
        keys
    }

    fn validate(&self) -> Result<()> {
        if self.solutions.is_empty() {
            return Err(Error::Validation("metric table has no solutions".into()));
        }
        let mut missing = Vec::new();
        for s in &self.solutions {
            for key in self.keys() {
                match self.entries.get(&(s.clone(), key.clone())) {
                    None => missing.push(format!("{s}/{}/{}/{}", key.0, key.1, key.2)),
                    Some(v) if v.is_nan() => {
                        return Err(Error::Validation(format!(
                            "NaN entry for {s}/{}/{}/{}",
                            key.0, key.1, key.2
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingEntries(missing))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RankNormalization {
    /// (rank - 1) / (P - 1): best 0, worst 1; a single solution scores 0.
    #[default]
    ZeroToOne,
    /// rank / P.
    OverParticipants,
}

impl RankNormalization {
    fn apply(self, rank: f64, participants: usize) -> f64 {
        match self {
            RankNormalization::ZeroToOne if participants < 2 => 0.0,
            RankNormalization::ZeroToOne => (rank - 1.0) / (participants - 1) as f64,
            RankNormalization::OverParticipants => rank / participants as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    pub normalized_rank: BTreeMap<String, f64>,
    /// Raw (possibly fractional) rank in 1..=P per solution and key.
    pub per_key_ranks: HashMap<(String, RankKey), f64>,
}

pub fn rank_solutions(table: &MetricTable) -> Result<RankingResult> {
    rank_solutions_with(table, RankNormalization::default())
}

pub fn rank_solutions_with(table: &MetricTable, norm: RankNormalization) -> Result<RankingResult> {
    table.validate()?;
    let p = table.solutions.len();
    let keys = table.keys();
    let mut totals = vec![0.0f64; p];
    let mut per_key_ranks = HashMap::with_capacity(keys.len() * p);
    for key in &keys {
        let values: Vec<f64> = table
            .solutions
            .iter()
            .map(|s| table.entries[&(s.clone(), key.clone())])
            .collect();
        let ranks = average_ranks(&values, key.2.higher_is_better());
        for (i, r) in ranks.into_iter().enumerate() {
            totals[i] += norm.apply(r, p);
            per_key_ranks.insert((table.solutions[i].clone(), key.clone()), r);
        }
    }
    let n = keys.len().max(1) as f64;
    let normalized_rank = table
        .solutions
        .iter()
        .zip(totals)
        .map(|(s, t)| (s.clone(), t / n))
        .collect();
    Ok(RankingResult {
        normalized_rank,
        per_key_ranks,
    })
}

/// 1-based ranks with ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64], higher_is_better: bool) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let o = values[a].total_cmp(&values[b]);
        if higher_is_better {
            o.reverse()
        } else {
            o
        }
    });
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let mean = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub solution_id: String,
    pub normalized_rank: f64,
    pub mean_dsc: f64,
    pub mean_hd95: f64,
}

/// Rows sorted by ascending normalized rank, then solution id.
pub fn ranking_rows(table: &MetricTable, result: &RankingResult) -> Vec<RankingRow> {
    let keys = table.keys();
    let mut rows: Vec<RankingRow> = table
        .solutions
        .iter()
        .map(|s| {
            let mean = |m: Metric| {
                let v: Vec<f64> = keys
                    .iter()
                    .filter(|k| k.2 == m)
                    .map(|k| table.entries[&(s.clone(), k.clone())])
                    .collect();
                v.iter().sum::<f64>() / v.len().max(1) as f64
            };
            RankingRow {
                solution_id: s.clone(),
                normalized_rank: result.normalized_rank[s],
                mean_dsc: mean(Metric::Dsc),
                mean_hd95: mean(Metric::Hd95),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.normalized_rank
            .total_cmp(&b.normalized_rank)
            .then_with(|| a.solution_id.cmp(&b.solution_id))
    });
    rows
}

pub fn write_ranking_csv<W: io::Write>(writer: W, rows: &[RankingRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

//! Build a phantom corpus on disk and evaluate it with several workers.

use brats_toolkit::batch::{run_evaluate, BatchConfig, BatchMode};
use brats_toolkit::phantom::{NamedPhantom, PhantomDocument, PhantomSpec};

fn main() -> brats_toolkit::Result<()> {
    let dir = tempfile::tempdir()?;
    let doc = PhantomDocument {
        phantom: (0..20)
            .map(|k| NamedPhantom { case_id: format!("case{k:02}"), spec: PhantomSpec::random(k, [40, 40, 32]) })
            .collect(),
    };
    doc.write_corpus(dir.path())?;

    let mut config = BatchConfig::new(dir.path().join("gt"), dir.path().join("pred"), dir.path().join("metrics.csv"));
    config.mode = BatchMode::Both;
    config.workers = 4;
    let report = run_evaluate(&config)?;
    println!("evaluated {} cases, skipped {}", report.cases_evaluated, report.skipped.len());
    for row in report.rows.iter().filter(|r| r.is_summary()) {
        println!("mean {} {}: dsc {:.3} hd95 {:.2}", row.mode, row.region, row.dsc, row.hd95);
    }
    print!("{}", std::fs::read_to_string(dir.path().join("metrics.csv"))?.lines().take(4).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}

//! Rank three solutions case by case and region by region, then aggregate.

use brats_toolkit::ranking::{rank_solutions, ranking_rows, write_ranking_csv, Metric, MetricTable};
use brats_toolkit::Region;

fn main() -> brats_toolkit::Result<()> {
    let mut table = MetricTable::new();
    let scores = [("team-a", 0.91, 3.1), ("team-b", 0.88, 2.4), ("team-c", 0.75, 9.0)];
    for case in ["c01", "c02", "c03", "c04"] {
        for region in Region::ALL {
            for (k, (team, dsc, hd)) in scores.iter().enumerate() {
                // a little case-to-case variation so ranks are not constant
                let wobble = ((case.len() + k + region.channel()) % 3) as f64 * 0.01;
                table.insert(team, case, region, Metric::Dsc, dsc - wobble);
                table.insert(team, case, region, Metric::Hd95, hd + wobble * 10.0);
            }
        }
    }
    let result = rank_solutions(&table)?;
    let rows = ranking_rows(&table, &result);
    write_ranking_csv(std::io::stdout(), &rows)?;
    Ok(())
}

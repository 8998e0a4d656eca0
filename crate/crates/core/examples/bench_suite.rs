//! Runs the bundled suite with every planner and prints the success-rate table.
//!
//! ```bash
//! cargo run --release --example bench_suite
//! ```

use std::path::PathBuf;

use sail::eval::{run_suite, ReasonerChoice, Suite};
use sail::planner::{PlannerConfig, PlannerKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/suites/manifest.json");
    let suite = Suite::load(&manifest)?;
    let planners = [PlannerKind::Sail, PlannerKind::Trace, PlannerKind::Target, PlannerKind::Matcher];
    let report = run_suite(&suite, &planners, &[ReasonerChoice::Heuristic], &PlannerConfig::default(), 4)?;
    print!("{}", report.to_markdown());

    // pairs the skill planner could not finish
    if let Some(row) = report.row("sail/heuristic") {
        for r in row.results.iter().filter(|r| !r.verdict.passed()) {
            println!("sail failed on {}: {:?}", r.pair, r.verdict);
        }
    }
    Ok(())
}

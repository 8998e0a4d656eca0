//! Two browser tests perform the same events in different orders. Both
//! match every ground-truth event, so precision and recall are perfect,
//! yet only one ends on the intended page.
//!
//! ```bash
//! cargo run --example order_matters
//! ```

use std::path::PathBuf;

use sail::eval::{judge, precision_recall, Oracle};
use sail::planner::{classify_trace, replay_test, PlannerConfig};
use sail::sim::{reset, SimApp};
use sail::testcase::TestCase;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let app = SimApp::load_file(&root.join("apps/browser.json"))?.into_shared();
    let oracle = Oracle::load_file(&root.join("oracles/browser_back_to_ics.json"))?;

    for name in ["browser_visit_back", "browser_visit_back_swapped"] {
        let test = TestCase::load_file(&root.join(format!("tests/{name}.json")))?;
        let mut session = reset(&app);
        let trace = replay_test(&test, &mut session, &PlannerConfig::default());
        let pr = precision_recall(&classify_trace(&trace.events, &oracle.ground_truth));
        let verdict = judge(&oracle, &app, &trace, &session.state())?;
        println!("{name}: precision {} recall {} -> {verdict:?}", pr.precision, pr.recall);
    }
    Ok(())
}

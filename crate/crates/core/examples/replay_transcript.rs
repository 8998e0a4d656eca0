//! Records a migration's reasoner transcript as JSON lines, then reruns the
//! migration from the recording alone.
//!
//! ```bash
//! cargo run --example replay_transcript
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use sail::planner::{migrate_sail, PlannerConfig};
use sail::reasoner::{HeuristicBackend, Reasoner, ReplayBackend, Transcript};
use sail::sim::{reset, SimApp};
use sail::testcase::TestCase;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let test = TestCase::load_file(&root.join("tests/hotels_currency_then_search.json"))?;
    let app = SimApp::load_file(&root.join("apps/trivago.json"))?.into_shared();
    let cfg = PlannerConfig::default();

    let mut session = reset(&app);
    let mut live = Reasoner::new(Arc::new(HeuristicBackend::new(cfg.heuristic())));
    let first = migrate_sail(&test, &mut session, &mut live, &cfg);
    let jsonl = first.transcript.to_jsonl();
    println!("{} decisions recorded", first.transcript.len());
    for line in jsonl.lines().take(3) {
        println!("  {}", &line[..line.len().min(120)]);
    }

    let recorded = Transcript::from_jsonl(&jsonl)?;
    let mut session = reset(&app);
    let mut replay = Reasoner::new(Arc::new(ReplayBackend::from_transcript(&recorded)));
    let second = migrate_sail(&test, &mut session, &mut replay, &cfg);
    println!("first: {}, replayed: {}", first.outcome, second.outcome);
    assert_eq!(serde_json::to_string(&first.events)?, serde_json::to_string(&second.events)?);
    Ok(())
}

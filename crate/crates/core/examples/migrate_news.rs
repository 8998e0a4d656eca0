//! Migrates the "large font, then open a story" test from one news app to
//! another whose settings live behind a different menu, once with the
//! skill-driven planner and once with the widget matcher.
//!
//! ```bash
//! cargo run --example migrate_news
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use sail::eval::{judge, Oracle};
use sail::matcher::LexicalScorer;
use sail::planner::{migrate_matcher, migrate_sail, PlannerConfig};
use sail::reasoner::{HeuristicBackend, Reasoner};
use sail::sim::{reset, SimApp};
use sail::testcase::TestCase;

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let test = TestCase::load_file(&fixture("tests/abc_font_then_story.json"))?;
    let oracle = Oracle::load_file(&fixture("oracles/news_font_story.json"))?;
    let cfg = PlannerConfig::default();

    for target in ["smart_news", "fox_news"] {
        let app = SimApp::load_file(&fixture(&format!("apps/{target}.json")))?.into_shared();

        let mut session = reset(&app);
        let mut reasoner = Reasoner::new(Arc::new(HeuristicBackend::new(cfg.heuristic())));
        let trace = migrate_sail(&test, &mut session, &mut reasoner, &cfg);
        let verdict = judge(&oracle, &app, &trace, &session.state())?;
        println!("== sail -> {target}: {verdict:?}");
        println!("skills in order: {:?}", trace.skill_order());
        for e in &trace.events {
            println!("  {}", e.description);
        }

        let mut session = reset(&app);
        let trace = migrate_matcher(&test, &mut session, &LexicalScorer, &cfg);
        let verdict = judge(&oracle, &app, &trace, &session.state())?;
        println!("== matcher -> {target}: {verdict:?} ({} events)", trace.events.len());
    }
    Ok(())
}

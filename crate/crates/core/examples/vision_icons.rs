//! The gallery app's action buttons are bare icons. Without descriptions the
//! planner cannot tell them apart; a description table keyed by element hash
//! fills them in.
//!
//! ```bash
//! cargo run --example vision_icons
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use sail::driver::EnrichingDriver;
use sail::eval::{judge, Oracle};
use sail::planner::{migrate_sail, PlannerConfig};
use sail::reasoner::{DescriptionCache, FixtureProvider, HeuristicBackend, Reasoner};
use sail::sim::{reset, SimApp};
use sail::testcase::TestCase;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let test = TestCase::load_file(&root.join("tests/photos_share_link.json"))?;
    let app = SimApp::load_file(&root.join("apps/gallery.json"))?.into_shared();
    let oracle = Oracle::load_file(&root.join("oracles/gallery_share.json"))?;
    let provider = Arc::new(FixtureProvider::from_json(&std::fs::read_to_string(
        root.join("vision/gallery_descriptions.json"),
    )?)?);
    let cfg = PlannerConfig::default();

    for with_vision in [false, true] {
        let mut session = reset(&app);
        let mut reasoner = Reasoner::new(Arc::new(HeuristicBackend::new(cfg.heuristic())));
        let trace = if with_vision {
            let mut driver = EnrichingDriver::new(&mut session, provider.clone(), Arc::new(DescriptionCache::default()));
            migrate_sail(&test, &mut driver, &mut reasoner, &cfg)
        } else {
            migrate_sail(&test, &mut session, &mut reasoner, &cfg)
        };
        let verdict = judge(&oracle, &app, &trace, &session.state())?;
        let events: Vec<_> = trace.events.iter().map(|e| e.description.as_str()).collect();
        println!("vision {with_vision}: {verdict:?}\n  {}", events.join(" > "));
    }
    println!("provider calls: {}", provider.calls());
    Ok(())
}

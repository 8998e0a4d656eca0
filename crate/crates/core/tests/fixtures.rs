mod common;

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::Arc;

use common::{app, fixture, oracle, test_case};
use sail::driver::EnrichingDriver;
use sail::eval::{judge, Suite, Taxonomy};
use sail::matcher::load_dataset_file;
use sail::planner::{migrate_sail, PlannerConfig};
use sail::reasoner::{DescriptionCache, FixtureProvider, HeuristicBackend, Reasoner};
use sail::sim::{reset, SimApp};
use sail::testcase::TestCase;
use sail::ui::element_hash;

fn stems(dir: &str) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(fixture(dir))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn every_fixture_loads() {
    for a in stems("apps") {
        SimApp::load_file(&fixture(&format!("apps/{a}.json"))).unwrap_or_else(|e| panic!("{a}: {e}"));
    }
    for t in stems("tests") {
        let tc = TestCase::load_file(&fixture(&format!("tests/{t}.json"))).unwrap_or_else(|e| panic!("{t}: {e}"));
        assert!(!tc.steps.is_empty(), "{t}");
    }
    assert!(stems("oracles").len() >= 10);
    let suite = Suite::load(&fixture("suites/manifest.json")).unwrap();
    assert_eq!(suite.pairs.len(), 14);
    for tax in [Taxonomy::Plain, Taxonomy::Extra, Taxonomy::Missing, Taxonomy::Reversed] {
        assert!(suite.pairs.iter().filter(|p| p.taxonomy == tax).count() >= 3, "{tax:?}");
    }
    let queries = load_dataset_file(&fixture("match/dataset.json")).unwrap();
    assert_eq!(queries.len(), 20);
    for q in &queries {
        assert!((0..q.candidates.len()).any(|i| q.is_truth(i)));
    }
}

fn provider() -> FixtureProvider {
    FixtureProvider::from_json(&std::fs::read_to_string(fixture("vision/gallery_descriptions.json")).unwrap()).unwrap()
}

#[test]
fn vision_table_covers_gallery_icons() {
    let table: HashMap<String, String> =
        serde_json::from_str(&std::fs::read_to_string(fixture("vision/gallery_descriptions.json")).unwrap()).unwrap();
    let gallery = app("gallery");
    let icons: BTreeSet<String> = gallery
        .screens
        .values()
        .flat_map(|s| s.template.elements().into_iter().cloned().collect::<Vec<_>>())
        .filter(|e| e.is_interactable() && e.text.is_none() && e.content_desc.is_none())
        .map(|e| element_hash(&e))
        .collect();
    assert_eq!(table.keys().cloned().collect::<BTreeSet<_>>(), icons);
}

fn run_gallery(vision: bool) -> bool {
    let cfg = PlannerConfig::default();
    let gallery = app("gallery");
    let mut session = reset(&gallery);
    let mut reasoner = Reasoner::new(Arc::new(HeuristicBackend::new(cfg.heuristic())));
    let test = test_case("photos_share_link");
    let trace = if vision {
        let mut d = EnrichingDriver::new(&mut session, Arc::new(provider()), Arc::new(DescriptionCache::default()));
        migrate_sail(&test, &mut d, &mut reasoner, &cfg)
    } else {
        migrate_sail(&test, &mut session, &mut reasoner, &cfg)
    };
    judge(&oracle("gallery_share"), &gallery, &trace, &session.state()).unwrap().passed()
}

#[test]
fn gallery_needs_descriptions() {
    assert!(run_gallery(true));
    assert!(!run_gallery(false));
}

#[test]
fn manifest_paths_are_relative() {
    let text = std::fs::read_to_string(fixture("suites/manifest.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    for p in doc["pairs"].as_array().unwrap() {
        for key in ["source_test", "target_app", "oracle"] {
            assert!(Path::new(p[key].as_str().unwrap()).is_relative());
        }
    }
}

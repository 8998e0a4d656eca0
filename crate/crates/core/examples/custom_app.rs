//! Defines a two-screen app and a one-step test inline, then migrates it.
//!
//! ```bash
//! cargo run --example custom_app
//! ```

use std::sync::Arc;

use sail::planner::{migrate_sail, PlannerConfig};
use sail::reasoner::{HeuristicBackend, Reasoner};
use sail::sim::{reset, SimApp};
use sail::testcase::TestCase;

const APP: &str = r#"{
  "id": "todo",
  "initial": "list",
  "variables": {"title": ""},
  "screens": {
    "list": {"root": {"class": "android.widget.FrameLayout", "bounds": "[0,0][1080,1920]", "children": [
      {"class": "android.widget.ImageButton", "content_desc": "Create task", "clickable": true,
       "bounds": "[900,1700][1040,1840]"}
    ]}},
    "edit": {"parent": "list", "root": {"class": "android.widget.FrameLayout", "bounds": "[0,0][1080,1920]", "children": [
      {"class": "android.widget.EditText", "resource_id": "todo:id/title", "text": "Task title", "editable": true,
       "bounds": "[0,100][1080,220]"},
      {"class": "android.widget.Button", "text": "Done editing this task", "clickable": true, "bounds": "[0,250][1080,370]"}
    ]}}
  },
  "transitions": [
    {"from": "list", "to": "edit", "on": {"action": "click", "target": {"content_desc": "Create task"}}},
    {"from": "edit", "to": "edit", "on": {"action": "input", "target": {"resource_id": "todo:id/title"}, "value": "*"},
     "effects": {"title": "${value}"}},
    {"from": "edit", "to": "list", "on": {"action": "click", "target": {"text": "Done editing this task"}}}
  ]
}"#;

// The heuristic reasoner counts a step done once half of its words appear in
// one performed event, so short labels that share words finish early.
const TEST: &str = r#"{
  "id": "add_task",
  "source_app": "other_todo",
  "steps": [
    {"action": "click", "target": {"text": "New task"}, "note": "Add Task"},
    {"action": "input", "target": {"text": "Task title"}, "value": "buy milk"},
    {"action": "click", "target": {"text": "Done editing this task"}}
  ]
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let app = SimApp::load(APP)?.into_shared();
    let test = TestCase::load(TEST)?;
    let cfg = PlannerConfig::default();
    let mut session = reset(&app);
    let mut reasoner = Reasoner::new(Arc::new(HeuristicBackend::new(cfg.heuristic())));
    let trace = migrate_sail(&test, &mut session, &mut reasoner, &cfg);
    print!("{}", trace.summary());
    println!("screen {}, title {:?}", session.screen_id(), session.variable("title"));
    Ok(())
}

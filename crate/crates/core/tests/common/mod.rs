#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use sail::eval::Oracle;
use sail::reasoner::{DecisionKind, DecisionReply, Transcript};
use sail::sim::SimApp;
use sail::testcase::TestCase;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn test_case(name: &str) -> TestCase {
    TestCase::load_file(&fixture(&format!("tests/{name}.json"))).unwrap()
}

pub fn app(name: &str) -> Arc<SimApp> {
    SimApp::load_file(&fixture(&format!("apps/{name}.json"))).unwrap().into_shared()
}

pub fn oracle(name: &str) -> Oracle {
    Oracle::load_file(&fixture(&format!("oracles/{name}.json"))).unwrap()
}

const WORDS: &[&str] = &[
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliet", "kilo", "lima",
    "mike", "november", "oscar", "papa", "quebec", "romeo",
];

/// A random app, a random walk through it as the source test, and a
/// relabelled, reshuffled copy as the target.
pub struct RandomCase {
    pub source: TestCase,
    pub target: Arc<SimApp>,
    pub max_steps: usize,
}

struct Widget {
    label: String,
    input: bool,
    to: usize,
}

pub fn random_case(seed: u64) -> RandomCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_screens = rng.gen_range(2..=6);
    let mut used = BTreeSet::new();
    let mut screens: Vec<Vec<Widget>> = Vec::new();
    for _ in 0..n_screens {
        let k = rng.gen_range(1..=4);
        let mut ws = Vec::new();
        while ws.len() < k {
            let label = format!("{} {}", WORDS.choose(&mut rng).unwrap(), WORDS.choose(&mut rng).unwrap());
            if !used.insert(label.clone()) {
                continue;
            }
            ws.push(Widget { label, input: rng.gen_bool(0.2), to: rng.gen_range(0..n_screens) });
        }
        screens.push(ws);
    }

    let mut steps = Vec::new();
    let mut at = 0;
    for i in 0..rng.gen_range(1..=6) {
        let w = screens[at].choose(&mut rng).unwrap();
        let mut s = if w.input {
            json!({"action": "input", "target": {"text": w.label}, "value": format!("v{i}")})
        } else {
            json!({"action": "click", "target": {"text": w.label}})
        };
        if i == 0 || rng.gen_bool(0.3) {
            s["note"] = json!(format!("part {i}"));
        }
        steps.push(s);
        at = w.to;
    }
    let source = TestCase::load(&json!({"id": format!("random_{seed}"), "source_app": "gen", "steps": steps}).to_string())
        .unwrap();

    let mut target_screens = serde_json::Map::new();
    let mut transitions = Vec::new();
    for (si, ws) in screens.iter().enumerate() {
        let mut order: Vec<usize> = (0..ws.len()).collect();
        order.shuffle(&mut rng);
        let mut children = Vec::new();
        for (row, &wi) in order.iter().enumerate() {
            let w = &ws[wi];
            let label = if rng.gen_bool(0.3) {
                format!("{} {}", w.label.split(' ').next().unwrap(), WORDS.choose(&mut rng).unwrap())
            } else {
                w.label.clone()
            };
            let y = 100 + row as u32 * 150;
            let rid = format!("gen:id/w{si}_{wi}");
            let mut node = json!({"class": "android.widget.Button", "resource_id": rid, "text": label,
                                  "bounds": format!("[0,{y}][1080,{}]", y + 120)});
            let target = json!({"resource_id": rid});
            if w.input {
                node["class"] = json!("android.widget.EditText");
                node["editable"] = json!(true);
                transitions.push(json!({"from": format!("s{si}"), "to": format!("s{}", w.to),
                    "on": {"action": "input", "target": target, "value": "*"}, "effects": {"last": "${value}"}}));
            } else {
                node["clickable"] = json!(true);
                transitions.push(json!({"from": format!("s{si}"), "to": format!("s{}", w.to),
                    "on": {"action": "click", "target": target}, "effects": {"last": label}}));
            }
            children.push(node);
        }
        let mut screen = json!({"root": {"class": "android.widget.FrameLayout", "bounds": "[0,0][1080,1920]",
                                         "children": children}});
        if si > 0 {
            screen["parent"] = json!(format!("s{}", rng.gen_range(0..si)));
        }
        target_screens.insert(format!("s{si}"), screen);
    }
    let doc: Value = json!({"id": format!("gen_{seed}"), "initial": "s0", "variables": {"last": ""},
                            "screens": target_screens, "transitions": transitions});
    let target = SimApp::load(&doc.to_string()).unwrap().into_shared();
    RandomCase { source, target, max_steps: rng.gen_range(3..=15) }
}

/// Checks a SAIL transcript against the control loop: setup decisions, then
/// per iteration a goal check, a skill retrieval whenever skills remain,
/// one event selection, an optional fill decision, and a finish check for
/// the retrieved skill. Skills are removed at most once.
pub fn check_sail_transcript(t: &Transcript) -> Result<(), String> {
    let recs = t.records();
    let kinds: Vec<DecisionKind> = t.kinds();
    if kinds.len() < 2 || kinds[0] != DecisionKind::ConcludeGoal || kinds[1] != DecisionKind::DivideSkills {
        return Err(format!("setup is {:?}", &kinds[..kinds.len().min(2)]));
    }
    let DecisionReply::Skills(spans) = &recs[1].reply else { return Err("divide reply".into()) };
    let mut remaining: BTreeSet<String> = spans.iter().map(|s| s.name.clone()).collect();
    let mut removed: BTreeSet<String> = BTreeSet::new();
    let mut i = 2;
    let expect = |i: usize, k: DecisionKind| -> Result<(), String> {
        match kinds.get(i) {
            Some(got) if *got == k => Ok(()),
            got => Err(format!("record {i}: expected {k}, got {got:?}")),
        }
    };
    while i < recs.len() {
        expect(i, DecisionKind::GoalFinished)?;
        if recs[i].reply == DecisionReply::Finished(true) {
            return if i + 1 == recs.len() { Ok(()) } else { Err("records after goal finished".into()) };
        }
        i += 1;
        if i == recs.len() {
            return Ok(());
        }
        let mut retrieved = None;
        if !remaining.is_empty() {
            expect(i, DecisionKind::RetrieveSkill)?;
            if let DecisionReply::Skill(Some(n)) = recs[i].reply {
                let skills = recs[i].request.context.skills.as_ref().ok_or("retrieve without skills")?;
                retrieved = Some(skills[n - 1].name.clone());
            }
            i += 1;
        }
        expect(i, DecisionKind::SelectEvent)?;
        i += 1;
        if matches!(kinds.get(i), Some(DecisionKind::SwipeDirection | DecisionKind::InputText)) {
            i += 1;
        }
        if let Some(name) = retrieved {
            expect(i, DecisionKind::SkillFinished)?;
            let asked = recs[i].request.context.current_skill.as_ref().map(|s| s.name.clone());
            if asked.as_deref() != Some(name.as_str()) {
                return Err(format!("finish check for {asked:?} after retrieving {name}"));
            }
            if recs[i].reply == DecisionReply::Finished(true) && (!removed.insert(name.clone()) || !remaining.remove(&name)) {
                return Err(format!("skill {name} removed twice"));
            }
            i += 1;
        }
    }
    Ok(())
}

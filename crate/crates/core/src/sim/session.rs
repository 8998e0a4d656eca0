use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{SimApp, TransitionRule, VarValue};
use crate::driver::{Driver, DriverError, TransitionOutcome};
use crate::ui::{parse_hierarchy, serialize_hierarchy, Action, UiEvent, UiScreen};

/// Final app state as seen by oracles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimState {
    pub screen: String,
    /// Screen ids in visiting order, the initial one included.
    pub visited: Vec<String>,
    pub variables: BTreeMap<String, VarValue>,
}

/// One run of an app. Owns its valuation; the app itself is shared.
#[derive(Debug, Clone)]
pub struct SimSession {
    app: Arc<SimApp>,
    screen: String,
    vars: BTreeMap<String, VarValue>,
    count: usize,
    visited: Vec<String>,
}

/// A fresh session at the initial screen.
pub fn reset(app: &Arc<SimApp>) -> SimSession {
    SimSession {
        app: Arc::clone(app),
        screen: app.initial.clone(),
        vars: app.variables.clone(),
        count: 0,
        visited: vec![app.initial.clone()],
    }
}

fn render(s: &str, vars: &BTreeMap<String, VarValue>) -> String {
    let mut out = s.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("${{{k}}}"), &v.to_string());
    }
    out
}

impl SimSession {
    pub fn app(&self) -> &Arc<SimApp> {
        &self.app
    }

    pub fn screen_id(&self) -> &str {
        &self.screen
    }

    pub fn variable(&self, name: &str) -> Option<&VarValue> {
        self.vars.get(name)
    }

    pub fn state(&self) -> SimState {
        SimState { screen: self.screen.clone(), visited: self.visited.clone(), variables: self.vars.clone() }
    }

    /// The current screen with placeholders filled, passed through the
    /// dump dialect so it looks exactly like a parsed device dump.
    pub fn dump(&self) -> UiScreen {
        let mut screen = self.app.screens[&self.screen].template.clone();
        let vars = &self.vars;
        screen.map_elements(|e| {
            for field in [&mut e.text, &mut e.content_desc].into_iter().flatten() {
                if field.contains("${") {
                    *field = render(field, vars);
                }
            }
        });
        parse_hierarchy(&serialize_hierarchy(&screen)).expect("serialized screens parse")
    }

    fn matching_rule(&self, event: &UiEvent, target: Option<usize>) -> Option<&TransitionRule> {
        self.app.transitions.iter().find(|r| {
            r.from == self.screen
                && r.on.action == event.action
                && match (target, &r.on.target) {
                    (Some(i), Some(_)) => r.targets.contains(&i),
                    (None, None) => true,
                    _ => false,
                }
                && match r.on.value.as_deref() {
                    None | Some("*") => true,
                    Some(v) => event.value.as_deref() == Some(v),
                }
                && r.on.direction.map_or(true, |d| event.direction == Some(d))
                && r.guard.as_ref().map_or(true, |g| g.holds(&self.vars))
        })
    }

    fn go(&mut self, to: &str) -> TransitionOutcome {
        self.screen = to.to_string();
        self.visited.push(to.to_string());
        TransitionOutcome::Transitioned { to: to.to_string() }
    }

    pub fn perform(&mut self, event: &UiEvent) -> TransitionOutcome {
        self.count += 1;
        let target = match &event.target {
            Some(t) => {
                let screen = self.dump();
                let Some((idx, e)) = t.resolve_one(&screen) else {
                    return TransitionOutcome::Rejected { reason: "target not found".into() };
                };
                if !e.enabled || !e.supports(event.action) {
                    return TransitionOutcome::Rejected { reason: "target not interactable".into() };
                }
                Some(idx)
            }
            None => None,
        };
        if let Some(rule) = self.matching_rule(event, target) {
            let typed = event.value.clone().unwrap_or_default();
            let updates: Vec<(String, VarValue)> = rule
                .effects
                .iter()
                .map(|(k, v)| {
                    let v = match v {
                        VarValue::Str(s) => VarValue::Str(s.replace("${value}", &typed)),
                        other => other.clone(),
                    };
                    (k.clone(), v)
                })
                .collect();
            let to = rule.to.clone();
            self.vars.extend(updates);
            return self.go(&to);
        }
        if event.action == Action::Back {
            if let Some(parent) = self.app.screens[&self.screen].parent.clone() {
                return self.go(&parent);
            }
        }
        TransitionOutcome::NoOp
    }
}

impl Driver for SimSession {
    fn dump_hierarchy(&mut self) -> Result<UiScreen, DriverError> {
        Ok(self.dump())
    }

    fn perform(&mut self, event: &UiEvent) -> Result<TransitionOutcome, DriverError> {
        Ok(SimSession::perform(self, event))
    }

    fn interaction_count(&self) -> usize {
        self.count
    }
}

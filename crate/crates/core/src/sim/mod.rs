//! Declarative simulated apps.
//!
//! An app is a set of screen templates, typed variables and transition
//! rules. Text and content descriptions may contain `${var}` placeholders
//! that are filled in at dump time.

mod session;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::testcase::{from_json, SchemaError};
use crate::ui::{parse_hierarchy, Action, Bounds, Direction, ElementRef, UiElement, UiScreen};

pub use session::{reset, SimSession, SimState};

/// A variable value: string, integer or boolean.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VarValue {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl VarValue {
    fn type_name(&self) -> &'static str {
        match self {
            VarValue::Bool(_) => "bool",
            VarValue::Int(_) => "int",
            VarValue::Str(_) => "string",
        }
    }
}

impl fmt::Display for VarValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarValue::Bool(b) => write!(f, "{b}"),
            VarValue::Int(i) => write!(f, "{i}"),
            VarValue::Str(s) => f.write_str(s),
        }
    }
}

/// `var==value` or `var!=value`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard {
    pub var: String,
    pub equal: bool,
    pub value: String,
}

impl Guard {
    pub fn parse(s: &str) -> Option<Guard> {
        let (var, value, equal) = if let Some((a, b)) = s.split_once("!=") {
            (a, b, false)
        } else {
            let (a, b) = s.split_once("==")?;
            (a, b, true)
        };
        let var = var.trim();
        if var.is_empty() {
            return None;
        }
        Some(Guard { var: var.to_string(), equal, value: value.trim().to_string() })
    }

    pub fn holds(&self, vars: &BTreeMap<String, VarValue>) -> bool {
        vars.get(&self.var).map_or(false, |v| (v.to_string() == self.value) == self.equal)
    }

    /// True when no valuation satisfies both guards.
    fn disjoint(&self, other: &Guard) -> bool {
        self.var == other.var
            && match (self.equal, other.equal) {
                (true, true) => self.value != other.value,
                (true, false) | (false, true) => self.value == other.value,
                (false, false) => false,
            }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.var, if self.equal { "==" } else { "!=" }, self.value)
    }
}

/// The event side of a rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventPattern {
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<ElementRef>,
    /// Exact value, or `*` for any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRule {
    pub name: String,
    pub from: String,
    pub on: EventPattern,
    pub guard: Option<Guard>,
    pub to: String,
    /// Assignments; string values may use `${value}` for the typed text.
    pub effects: BTreeMap<String, VarValue>,
    /// Pre-order indices of the elements `on.target` picks out in the template.
    targets: BTreeSet<usize>,
}

impl TransitionRule {
    fn value_compatible(&self, other: &TransitionRule) -> bool {
        match (self.on.value.as_deref(), other.on.value.as_deref()) {
            (None | Some("*"), _) | (_, None | Some("*")) => true,
            (Some(a), Some(b)) => a == b,
        }
    }

    fn overlaps(&self, other: &TransitionRule) -> bool {
        self.from == other.from
            && self.on.action == other.on.action
            && match (&self.on.target, &other.on.target) {
                (None, None) => true,
                (Some(_), Some(_)) => !self.targets.is_disjoint(&other.targets),
                _ => false,
            }
            && self.value_compatible(other)
            && match (self.on.direction, other.on.direction) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
            && match (&self.guard, &other.guard) {
                (Some(a), Some(b)) => !a.disjoint(b),
                _ => true,
            }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScreen {
    pub template: UiScreen,
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimApp {
    pub id: String,
    pub initial: String,
    pub variables: BTreeMap<String, VarValue>,
    pub screens: BTreeMap<String, SimScreen>,
    pub transitions: Vec<TransitionRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("nondeterministic app: rules {first} and {second} can match the same event")]
    NondeterministicApp { first: String, second: String },
}

/// Inline element tree in app documents.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    class: String,
    #[serde(default)]
    resource_id: Option<String>,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    content_desc: Option<String>,
    bounds: Bounds,
    #[serde(default)]
    clickable: bool,
    #[serde(default)]
    long_clickable: bool,
    #[serde(default)]
    scrollable: bool,
    #[serde(default)]
    editable: bool,
    #[serde(default = "yes")]
    enabled: bool,
    #[serde(default)]
    children: Vec<NodeDoc>,
}

fn yes() -> bool {
    true
}

impl NodeDoc {
    fn into_element(self) -> UiElement {
        UiElement {
            class_role: self.class,
            resource_id: self.resource_id,
            text: self.text,
            content_desc: self.content_desc,
            bounds: self.bounds,
            clickable: self.clickable,
            long_clickable: self.long_clickable,
            scrollable: self.scrollable,
            editable: self.editable,
            enabled: self.enabled,
            children: self.children.into_iter().map(NodeDoc::into_element).collect(),
            vision_desc: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScreenDoc {
    Xml(String),
    Full(FullScreenDoc),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FullScreenDoc {
    #[serde(default)]
    activity: Option<String>,
    #[serde(default)]
    parent: Option<String>,
    #[serde(default)]
    hierarchy: Option<String>,
    #[serde(default)]
    root: Option<NodeDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    #[serde(default)]
    name: Option<String>,
    from: String,
    on: EventPattern,
    #[serde(default)]
    guard: Option<String>,
    to: String,
    #[serde(default)]
    effects: BTreeMap<String, VarValue>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AppDoc {
    id: String,
    initial: String,
    #[serde(default)]
    variables: BTreeMap<String, VarValue>,
    screens: BTreeMap<String, ScreenDoc>,
    #[serde(default)]
    transitions: Vec<RuleDoc>,
}

fn placeholders(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = s;
    while let Some(i) = rest.find("${") {
        match rest[i + 2..].find('}') {
            Some(j) => {
                out.push(&rest[i + 2..i + 2 + j]);
                rest = &rest[i + 3 + j..];
            }
            None => break,
        }
    }
    out
}

fn build_screen(id: &str, doc: ScreenDoc) -> Result<SimScreen, SchemaError> {
    let path = format!("screens.{id}");
    let (activity, parent, screen) = match doc {
        ScreenDoc::Xml(xml) => {
            (None, None, parse_hierarchy(&xml).map_err(|e| SchemaError::new(&path, e.to_string()))?)
        }
        ScreenDoc::Full(f) => {
            let screen = match (f.hierarchy, f.root) {
                (Some(xml), None) => parse_hierarchy(&xml).map_err(|e| SchemaError::new(&path, e.to_string()))?,
                (None, Some(root)) => UiScreen::new("unknown", root.into_element()),
                _ => return Err(SchemaError::new(&path, "exactly one of `hierarchy` or `root` is required")),
            };
            (f.activity, f.parent, screen)
        }
    };
    // A screen is known by its id unless it names its activity.
    let activity = activity.unwrap_or_else(|| {
        if screen.activity == "unknown" {
            id.to_string()
        } else {
            screen.activity.clone()
        }
    });
    Ok(SimScreen { template: UiScreen::new(activity, screen.root), parent })
}

impl SimApp {
    /// Parses and validates an app document, including the determinism check.
    pub fn load(doc: &str) -> Result<SimApp, AppError> {
        let raw: AppDoc = from_json(doc)?;
        let mut screens = BTreeMap::new();
        for (id, s) in raw.screens {
            let screen = build_screen(&id, s)?;
            screens.insert(id, screen);
        }
        if !screens.contains_key(&raw.initial) {
            return Err(SchemaError::new("initial", format!("unknown screen {:?}", raw.initial)).into());
        }
        for (id, s) in &screens {
            if let Some(p) = &s.parent {
                if !screens.contains_key(p) {
                    return Err(SchemaError::new(format!("screens.{id}.parent"), format!("unknown screen {p:?}")).into());
                }
            }
            for e in s.template.elements() {
                for field in [&e.text, &e.content_desc].into_iter().flatten() {
                    if let Some(v) = placeholders(field).into_iter().find(|v| !raw.variables.contains_key(*v)) {
                        return Err(SchemaError::new(format!("screens.{id}"), format!("unknown variable ${{{v}}}")).into());
                    }
                }
            }
        }

        let mut transitions = Vec::with_capacity(raw.transitions.len());
        for (i, r) in raw.transitions.into_iter().enumerate() {
            let path = format!("transitions[{i}]");
            let Some(from) = screens.get(&r.from) else {
                return Err(SchemaError::new(format!("{path}.from"), format!("unknown screen {:?}", r.from)).into());
            };
            if !screens.contains_key(&r.to) {
                return Err(SchemaError::new(format!("{path}.to"), format!("unknown screen {:?}", r.to)).into());
            }
            let targets: BTreeSet<usize> = match &r.on.target {
                Some(t) => {
                    let found: BTreeSet<usize> = t.resolve(&from.template).into_iter().map(|(i, _)| i).collect();
                    if found.is_empty() {
                        return Err(SchemaError::new(
                            format!("{path}.on.target"),
                            format!("matches no element on screen {:?}", r.from),
                        )
                        .into());
                    }
                    found
                }
                None if matches!(r.on.action, Action::Click | Action::LongClick | Action::Input) => {
                    return Err(SchemaError::new(format!("{path}.on"), "target is required for this action").into());
                }
                None => BTreeSet::new(),
            };
            let guard = match &r.guard {
                Some(g) => {
                    let g = Guard::parse(g)
                        .ok_or_else(|| SchemaError::new(format!("{path}.guard"), "expected var==value or var!=value"))?;
                    if !raw.variables.contains_key(&g.var) {
                        return Err(SchemaError::new(format!("{path}.guard"), format!("unknown variable {:?}", g.var)).into());
                    }
                    Some(g)
                }
                None => None,
            };
            for (var, value) in &r.effects {
                let Some(declared) = raw.variables.get(var) else {
                    return Err(SchemaError::new(format!("{path}.effects.{var}"), "unknown variable").into());
                };
                if declared.type_name() != value.type_name() {
                    return Err(SchemaError::new(
                        format!("{path}.effects.{var}"),
                        format!("expected {}, got {}", declared.type_name(), value.type_name()),
                    )
                    .into());
                }
            }
            transitions.push(TransitionRule {
                name: r.name.unwrap_or(path),
                from: r.from,
                on: r.on,
                guard,
                to: r.to,
                effects: r.effects,
                targets,
            });
        }

        for (i, a) in transitions.iter().enumerate() {
            if let Some(b) = transitions[i + 1..].iter().find(|b| a.overlaps(b)) {
                return Err(AppError::NondeterministicApp { first: a.name.clone(), second: b.name.clone() });
            }
        }

        Ok(SimApp { id: raw.id, initial: raw.initial, variables: raw.variables, screens, transitions })
    }

    pub fn load_file(path: &Path) -> Result<SimApp, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SchemaError::new(path.display().to_string(), e.to_string()))?;
        Self::load(&text)
    }

    pub fn into_shared(self) -> Arc<SimApp> {
        Arc::new(self)
    }

    pub fn has_screen(&self, id: &str) -> bool {
        self.screens.contains_key(id)
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.variables.contains_key(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SETTINGS_APP: &str = r#"{
  "id": "demo",
  "initial": "home",
  "variables": {"font_size": "small", "visits": 0},
  "screens": {
    "home": {"root": {"class": "FrameLayout", "bounds": "[0,0][1080,1920]", "children": [
      {"class": "Button", "text": "Settings", "bounds": "[0,100][1080,200]", "clickable": true},
      {"class": "Button", "text": "Help", "bounds": "[0,200][1080,300]", "clickable": true, "enabled": false},
      {"class": "ListView", "resource_id": "demo:id/list", "bounds": "[0,300][1080,1900]", "scrollable": true}
    ]}},
    "settings": {"parent": "home", "root": {"class": "FrameLayout", "bounds": "[0,0][1080,1920]", "children": [
      {"class": "TextView", "text": "Font size: ${font_size}", "bounds": "[0,100][1080,200]"},
      {"class": "Button", "text": "Bigger", "bounds": "[0,200][1080,300]", "clickable": true},
      {"class": "EditText", "resource_id": "demo:id/name", "bounds": "[0,300][1080,400]", "editable": true}
    ]}}
  },
  "transitions": [
    {"from": "home", "on": {"action": "click", "target": {"text": "Settings"}}, "to": "settings"},
    {"from": "settings", "on": {"action": "click", "target": {"text": "Bigger"}}, "to": "settings",
     "effects": {"font_size": "large"}},
    {"from": "settings", "on": {"action": "input", "target": {"resource_id": "demo:id/name"}, "value": "*"},
     "to": "settings", "effects": {"font_size": "${value}"}}
  ]
}"#;

    #[test]
    fn loads_and_names_activities() {
        let app = SimApp::load(SETTINGS_APP).unwrap();
        assert_eq!(app.screens.len(), 2);
        assert_eq!(app.screens["settings"].template.activity, "settings");
        assert_eq!(app.screens["settings"].parent.as_deref(), Some("home"));
        assert_eq!(app.variables["visits"], VarValue::Int(0));
    }

    #[test]
    fn missing_screen_is_schema_error() {
        let doc = SETTINGS_APP.replace(r#""to": "settings"}"#, r#""to": "nowhere"}"#);
        match SimApp::load(&doc).unwrap_err() {
            AppError::Schema(e) => assert_eq!(e.path, "transitions[0].to"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_rule_is_nondeterministic() {
        let doc = SETTINGS_APP.replace(
            r#""transitions": ["#,
            r#""transitions": [{"name": "dup", "from": "home", "on": {"action": "click", "target": {"text": "Settings"}}, "to": "home"},"#,
        );
        assert_eq!(
            SimApp::load(&doc).unwrap_err(),
            AppError::NondeterministicApp { first: "dup".into(), second: "transitions[1]".into() }
        );
    }

    #[test]
    fn disjoint_guards_are_deterministic() {
        let doc = SETTINGS_APP.replace(
            r#""to": "settings"},"#,
            r#""to": "settings", "guard": "font_size==small"},
    {"from": "home", "on": {"action": "click", "target": {"text": "Settings"}}, "guard": "font_size!=small", "to": "home"},"#,
        );
        SimApp::load(&doc).unwrap();
        let overlapping = doc.replace("font_size!=small", "font_size!=large");
        assert!(matches!(SimApp::load(&overlapping), Err(AppError::NondeterministicApp { .. })));
    }

    #[test]
    fn bad_documents() {
        let unresolved = SETTINGS_APP.replace(r#"{"text": "Bigger"}"#, r#"{"text": "Smaller"}"#);
        assert!(matches!(SimApp::load(&unresolved), Err(AppError::Schema(e)) if e.path == "transitions[1].on.target"));
        let typed = SETTINGS_APP.replace(r#""font_size": "large""#, r#""font_size": 3"#);
        assert!(matches!(SimApp::load(&typed), Err(AppError::Schema(e)) if e.path == "transitions[1].effects.font_size"));
        let placeholder = SETTINGS_APP.replace("${font_size}", "${size}");
        assert!(SimApp::load(&placeholder).is_err());
        let initial = SETTINGS_APP.replace(r#""initial": "home""#, r#""initial": "splash""#);
        assert!(matches!(SimApp::load(&initial), Err(AppError::Schema(e)) if e.path == "initial"));
    }

    #[test]
    fn xml_screens() {
        let doc = r#"{"id": "x", "initial": "main", "screens": {
            "main": "<hierarchy activity=\"MainActivity\"><node class=\"Button\" text=\"Go\" bounds=\"[0,0][10,10]\" clickable=\"true\" enabled=\"true\"/></hierarchy>",
            "other": {"hierarchy": "<hierarchy><node class=\"View\" bounds=\"[0,0][10,10]\"/></hierarchy>", "parent": "main"}
        }, "transitions": [{"from": "main", "on": {"action": "click", "target": {"text": "Go"}}, "to": "other"}]}"#;
        let app = SimApp::load(doc).unwrap();
        assert_eq!(app.screens["main"].template.activity, "MainActivity");
        assert_eq!(app.screens["other"].template.activity, "other");
    }

    #[test]
    fn guard_parsing() {
        let g = Guard::parse("mode != dark").unwrap();
        assert_eq!(g, Guard { var: "mode".into(), equal: false, value: "dark".into() });
        assert_eq!(g.to_string(), "mode!=dark");
        assert!(Guard::parse("mode").is_none());
        assert!(Guard::parse("==x").is_none());
    }
}

//! Source test cases and their goal → skills → events decomposition.

use std::collections::HashSet;
use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::ui::{describe_step, Action, Direction, ElementRef, UiEvent};

/// A document that does not fit its schema; `path` points at the offending field.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("schema error at {path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError { path: path.into(), message: message.into() }
    }
}

/// Strict JSON decoding that reports the path of the first bad field.
pub(crate) fn from_json<T: DeserializeOwned>(doc: &str) -> Result<T, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(doc);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        SchemaError::new(if path.is_empty() { ".".to_string() } else { path }, e.into_inner().to_string())
    })
}

/// One demonstrated action, optionally with the observation it was taken at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestStep {
    pub event: UiEvent,
    pub screen_hint: Option<String>,
    pub note: Option<String>,
}

impl TestStep {
    pub fn new(event: UiEvent) -> Self {
        TestStep { event, screen_hint: None, note: None }
    }

    pub fn describe(&self) -> String {
        describe_step(&self.event)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub id: String,
    pub source_app: String,
    pub steps: Vec<TestStep>,
    pub oracle: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepDoc {
    action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<ElementRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    screen_hint: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TestCaseDoc {
    id: String,
    source_app: String,
    steps: Vec<StepDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    oracle: Option<String>,
}

impl TestCase {
    /// Parses and validates a test-case document. Unknown and duplicate
    /// fields are rejected.
    pub fn load(doc: &str) -> Result<Self, SchemaError> {
        let raw: TestCaseDoc = from_json(doc)?;
        if raw.id.trim().is_empty() {
            return Err(SchemaError::new("id", "must not be empty"));
        }
        if raw.steps.is_empty() {
            return Err(SchemaError::new("steps", "must contain at least one step"));
        }
        let mut steps = Vec::with_capacity(raw.steps.len());
        for (i, s) in raw.steps.into_iter().enumerate() {
            let event = UiEvent { action: s.action, target: s.target, value: s.value, direction: s.direction };
            event.validate().map_err(|e| SchemaError::new(format!("steps[{i}]"), e.to_string()))?;
            steps.push(TestStep { event, screen_hint: s.screen_hint, note: s.note });
        }
        Ok(TestCase { id: raw.id, source_app: raw.source_app, steps, oracle: raw.oracle })
    }

    pub fn load_file(path: &std::path::Path) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SchemaError::new(path.display().to_string(), e.to_string()))?;
        Self::load(&text)
    }

    /// Canonical pretty-printed document.
    pub fn save(&self) -> String {
        let doc = TestCaseDoc {
            id: self.id.clone(),
            source_app: self.source_app.clone(),
            steps: self
                .steps
                .iter()
                .map(|s| StepDoc {
                    action: s.event.action,
                    target: s.event.target.clone(),
                    value: s.event.value.clone(),
                    direction: s.event.direction,
                    note: s.note.clone(),
                    screen_hint: s.screen_hint.clone(),
                })
                .collect(),
            oracle: self.oracle.clone(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("test case serializes");
        out.push('\n');
        out
    }
}

/// Checks that ids are unique across a suite of test cases.
pub fn check_unique_ids<'a>(cases: impl IntoIterator<Item = &'a TestCase>) -> Result<(), SchemaError> {
    let mut seen = HashSet::new();
    for tc in cases {
        if !seen.insert(tc.id.as_str()) {
            return Err(SchemaError::new("id", format!("duplicate test id {:?}", tc.id)));
        }
    }
    Ok(())
}

/// A named contiguous run of steps, `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Skill {
    pub name: String,
    pub description: String,
    #[serde(with = "range_pair")]
    pub range: (usize, usize),
}

mod range_pair {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(r: &(usize, usize), s: S) -> Result<S::Ok, S::Error> {
        [r.0, r.1].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(usize, usize), D::Error> {
        let [lo, hi] = <[usize; 2]>::deserialize(d)?;
        Ok((lo, hi))
    }
}

impl Skill {
    pub fn new(name: impl Into<String>, description: impl Into<String>, start: usize, end: usize) -> Self {
        Skill { name: name.into(), description: description.into(), range: (start, end) }
    }

    pub fn start(&self) -> usize {
        self.range.0
    }

    pub fn end(&self) -> usize {
        self.range.1
    }

    pub fn len(&self) -> usize {
        self.range.1.saturating_sub(self.range.0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("goal must not be empty")]
    EmptyGoal,
    #[error("at least one skill is required")]
    NoSkills,
    #[error("skill {skill:?} has empty range [{start}, {end})")]
    EmptyRange { skill: String, start: usize, end: usize },
    #[error("skill {skill:?} range [{start}, {end}) exceeds {len} steps")]
    OutOfRange { skill: String, start: usize, end: usize, len: usize },
    #[error("gap at step {at}")]
    Gap { at: usize },
    #[error("overlap at step {at} (skill {skill:?})")]
    Overlap { at: usize, skill: String },
}

/// Goal, skills partitioning the steps in order, and the steps themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchicalTestCase {
    pub goal: String,
    pub skills: Vec<Skill>,
    pub base: TestCase,
}

/// Builds the tree iff `skills` partition `[0, steps)` contiguously and in order.
pub fn build_hierarchy(
    tc: TestCase,
    goal: impl Into<String>,
    skills: Vec<Skill>,
) -> Result<HierarchicalTestCase, PartitionError> {
    let goal = goal.into();
    if goal.trim().is_empty() {
        return Err(PartitionError::EmptyGoal);
    }
    if skills.is_empty() {
        return Err(PartitionError::NoSkills);
    }
    let n = tc.steps.len();
    let mut cursor = 0;
    for s in &skills {
        let (start, end) = s.range;
        if start >= end {
            return Err(PartitionError::EmptyRange { skill: s.name.clone(), start, end });
        }
        if end > n {
            return Err(PartitionError::OutOfRange { skill: s.name.clone(), start, end, len: n });
        }
        if start > cursor {
            return Err(PartitionError::Gap { at: cursor });
        }
        if start < cursor {
            return Err(PartitionError::Overlap { at: start, skill: s.name.clone() });
        }
        cursor = end;
    }
    if cursor < n {
        return Err(PartitionError::Gap { at: cursor });
    }
    Ok(HierarchicalTestCase { goal, skills, base: tc })
}

/// The source steps a skill covers, in order.
pub fn skill_events<'a>(h: &'a HierarchicalTestCase, s: &Skill) -> &'a [TestStep] {
    &h.base.steps[s.start()..s.end()]
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HierarchyDoc {
    goal: String,
    skills: Vec<Skill>,
}

impl HierarchicalTestCase {
    /// The persisted `{goal, skills}` document.
    pub fn save(&self) -> String {
        let doc = HierarchyDoc { goal: self.goal.clone(), skills: self.skills.clone() };
        let mut out = serde_json::to_string_pretty(&doc).expect("hierarchy serializes");
        out.push('\n');
        out
    }

    /// Loads a persisted decomposition for `base`.
    pub fn load(doc: &str, base: TestCase) -> Result<Self, SchemaError> {
        let raw: HierarchyDoc = from_json(doc)?;
        build_hierarchy(base, raw.goal, raw.skills).map_err(|e| SchemaError::new("skills", e.to_string()))
    }
}

impl fmt::Display for HierarchicalTestCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "goal: {}", self.goal)?;
        for s in &self.skills {
            writeln!(f, "  skill {} [{}, {})", s.name, s.start(), s.end())?;
            for step in skill_events(self, s) {
                writeln!(f, "    {}", step.describe())?;
            }
        }
        Ok(())
    }
}

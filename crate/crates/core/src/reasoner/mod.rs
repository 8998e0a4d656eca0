//! Decision functions of the migration loop behind one interface.
//!
//! Every backend answers with raw text; [`Reasoner::decide`] renders the
//! prompt, parses the reply, retries once on an unparseable answer, and
//! appends the exchange to the session transcript. Backends:
//!
//! * [`HeuristicBackend`]: deterministic token-overlap rules, no network.
//! * [`ReplayBackend`]: plays back a recorded transcript or a list of raw replies.
//! * [`RemoteBackend`]: chat-completion HTTP endpoint.

mod heuristic;
mod parse;
mod prompt;
mod remote;
mod replay;
mod vision;

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ui::{Action, Direction};

pub use heuristic::{HeuristicBackend, HeuristicConfig};
pub use parse::parse_reply;
pub use prompt::{build_prompt, render_event_list, render_prompt, Prompt, FORMAT_REMINDER};
pub use remote::{RemoteBackend, RemoteConfig, ENV_API_KEY, ENV_MODEL, ENV_URL};
pub use replay::ReplayBackend;
pub use vision::{
    describe_element_visual, enrich_screen, DescriptionCache, DescriptionProvider, FixtureProvider,
    VisionError,
};

/// Prompts show at most this many trailing history entries.
pub const DEFAULT_HISTORY_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionKind {
    ConcludeGoal,
    DivideSkills,
    RetrieveSkill,
    SelectEvent,
    SkillFinished,
    GoalFinished,
    SwipeDirection,
    InputText,
}

impl DecisionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DecisionKind::ConcludeGoal => "conclude_goal",
            DecisionKind::DivideSkills => "divide_skills",
            DecisionKind::RetrieveSkill => "retrieve_skill",
            DecisionKind::SelectEvent => "select_event",
            DecisionKind::SkillFinished => "skill_finished",
            DecisionKind::GoalFinished => "goal_finished",
            DecisionKind::SwipeDirection => "swipe_direction",
            DecisionKind::InputText => "input_text",
        }
    }
}

impl fmt::Display for DecisionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A source step as the reasoner sees it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepView {
    pub description: String,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl StepView {
    pub fn from_step(step: &crate::testcase::TestStep) -> Self {
        StepView {
            description: step.describe(),
            action: step.event.action,
            value: step.event.value.clone(),
            direction: step.event.direction,
            note: step.note.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillView {
    pub name: String,
    pub description: String,
    pub steps: Vec<StepView>,
}

/// Everything a decision may look at. Which fields are required depends on
/// the kind:
///
/// | kind            | required                                   |
/// |-----------------|--------------------------------------------|
/// | conclude_goal   | `source_steps`                             |
/// | divide_skills   | `goal`, `source_steps`                     |
/// | retrieve_skill  | `skills` (non-empty), `events`             |
/// | select_event    | `events`, and `current_skill`, `source_steps` or `goal` |
/// | skill_finished  | `current_skill`                            |
/// | goal_finished   | `skills`, `source_steps` or `goal`         |
/// | swipe_direction | `target_event`                             |
/// | input_text      | `target_event`                             |
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionContext {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub source_steps: Vec<StepView>,
    /// Remaining skills; `None` when the caller does not track skills.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skills: Option<Vec<SkillView>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current_skill: Option<SkillView>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<String>,
    /// Full described history; prompts show only the tail.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activity: Option<String>,
    /// The already chosen event a swipe direction or input text is for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_event: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub kind: DecisionKind,
    pub context: DecisionContext,
}

impl DecisionRequest {
    pub fn new(kind: DecisionKind, context: DecisionContext) -> Self {
        DecisionRequest { kind, context }
    }

    /// Checks that the context carries what `kind` needs.
    pub fn validate(&self) -> Result<(), ReasonerError> {
        let c = &self.context;
        let missing = |what: &'static str| Err(ReasonerError::IncompleteRequest { kind: self.kind, missing: what });
        match self.kind {
            DecisionKind::ConcludeGoal if c.source_steps.is_empty() => missing("source_steps"),
            DecisionKind::DivideSkills if c.source_steps.is_empty() => missing("source_steps"),
            DecisionKind::DivideSkills if c.goal.is_none() => missing("goal"),
            DecisionKind::RetrieveSkill if c.skills.as_ref().map_or(true, Vec::is_empty) => missing("skills"),
            DecisionKind::RetrieveSkill | DecisionKind::SelectEvent if c.events.is_empty() => missing("events"),
            DecisionKind::SelectEvent
                if c.current_skill.is_none() && c.source_steps.is_empty() && c.goal.is_none() =>
            {
                missing("current_skill, source_steps or goal")
            }
            DecisionKind::SkillFinished if c.current_skill.is_none() => missing("current_skill"),
            DecisionKind::GoalFinished if c.skills.is_none() && c.source_steps.is_empty() && c.goal.is_none() => {
                missing("skills, source_steps or goal")
            }
            DecisionKind::SwipeDirection | DecisionKind::InputText if c.target_event.is_none() => {
                missing("target_event")
            }
            _ => Ok(()),
        }
    }
}

/// A skill span as answered: 1-based inclusive step numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillSpan {
    pub name: String,
    pub first: usize,
    pub last: usize,
}

/// Parsed answer. Event and skill choices keep the 1-based numbers shown
/// in the prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum DecisionReply {
    Goal(String),
    Skills(Vec<SkillSpan>),
    Skill(Option<usize>),
    Event(usize),
    Finished(bool),
    Direction(Direction),
    Text(String),
}

impl DecisionReply {
    pub fn kind_matches(&self, kind: DecisionKind) -> bool {
        matches!(
            (self, kind),
            (DecisionReply::Goal(_), DecisionKind::ConcludeGoal)
                | (DecisionReply::Skills(_), DecisionKind::DivideSkills)
                | (DecisionReply::Skill(_), DecisionKind::RetrieveSkill)
                | (DecisionReply::Event(_), DecisionKind::SelectEvent)
                | (DecisionReply::Finished(_), DecisionKind::SkillFinished | DecisionKind::GoalFinished)
                | (DecisionReply::Direction(_), DecisionKind::SwipeDirection)
                | (DecisionReply::Text(_), DecisionKind::InputText)
        )
    }

    /// Checks numbers against the ranges offered in the request.
    fn in_range(&self, req: &DecisionRequest) -> bool {
        let c = &req.context;
        match self {
            DecisionReply::Event(n) => (1..=c.events.len()).contains(n),
            DecisionReply::Skill(Some(n)) => (1..=c.skills.as_ref().map_or(0, Vec::len)).contains(n),
            DecisionReply::Skills(spans) => {
                !spans.is_empty()
                    && spans.iter().all(|s| s.first >= 1 && s.first <= s.last && s.last <= c.source_steps.len())
            }
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReasonerError {
    #[error("reasoner backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("unparseable {kind} reply: {raw:?}")]
    UnparseableReply { kind: DecisionKind, raw: String },
    #[error("replay fixtures exhausted after {consumed} replies")]
    FixtureExhausted { consumed: usize },
    #[error("replay diverged at record {position}: recorded {recorded}, requested {requested}")]
    ReplayDivergence { position: usize, recorded: DecisionKind, requested: DecisionKind },
    #[error("{kind} request is missing {missing}")]
    IncompleteRequest { kind: DecisionKind, missing: &'static str },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// What a backend hands back for one prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub latency_ms: Option<u64>,
    pub usage: Option<TokenUsage>,
}

impl Completion {
    pub fn text(text: impl Into<String>) -> Self {
        Completion { text: text.into(), latency_ms: None, usage: None }
    }
}

/// A source of raw replies. Implementations must be safe to share between
/// concurrent sessions.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;

    fn complete(&self, req: &DecisionRequest, prompt: &Prompt) -> Result<Completion, ReasonerError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub kind: DecisionKind,
    pub request: DecisionRequest,
    pub raw: String,
    /// Earlier raw replies for this request that failed to parse.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejected: Vec<String>,
    pub reply: DecisionReply,
    #[serde(default)]
    pub latency_ms: Option<u64>,
    #[serde(default)]
    pub usage: Option<TokenUsage>,
}

/// Append-only log of one session's decisions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub fn records(&self) -> &[TranscriptRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn kinds(&self) -> Vec<DecisionKind> {
        self.records.iter().map(|r| r.kind).collect()
    }

    /// Records from position `start` on.
    pub fn since(&self, start: usize) -> Transcript {
        Transcript { records: self.records.get(start..).unwrap_or_default().to_vec() }
    }

    fn push(&mut self, r: TranscriptRecord) {
        self.records.push(r);
    }

    /// One JSON record per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(self.to_jsonl().as_bytes())
    }

    pub fn from_jsonl(text: &str) -> Result<Self, crate::testcase::SchemaError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: TranscriptRecord = crate::testcase::from_json(line)
                .map_err(|e| crate::testcase::SchemaError::new(format!("line {}: {}", i + 1, e.path), e.message))?;
            records.push(r);
        }
        Ok(Transcript { records })
    }

    pub fn read_file(path: &Path) -> Result<Self, crate::testcase::SchemaError> {
        let f = std::fs::File::open(path)
            .map_err(|e| crate::testcase::SchemaError::new(path.display().to_string(), e.to_string()))?;
        let mut text = String::new();
        for line in std::io::BufReader::new(f).lines() {
            let line = line.map_err(|e| crate::testcase::SchemaError::new(path.display().to_string(), e.to_string()))?;
            text.push_str(&line);
            text.push('\n');
        }
        Self::from_jsonl(&text)
    }
}

/// A session-bound decision maker: a shared backend plus this session's transcript.
pub struct Reasoner {
    backend: Arc<dyn Backend>,
    transcript: Transcript,
    history_window: usize,
}

impl Reasoner {
    pub fn new(backend: Arc<dyn Backend>) -> Self {
        Reasoner { backend, transcript: Transcript::default(), history_window: DEFAULT_HISTORY_WINDOW }
    }

    pub fn with_history_window(mut self, window: usize) -> Self {
        self.history_window = window;
        self
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    /// Renders, asks, parses. One reformat retry on an unparseable or
    /// out-of-range answer, then [`ReasonerError::UnparseableReply`].
    pub fn decide(&mut self, req: &DecisionRequest) -> Result<DecisionReply, ReasonerError> {
        req.validate()?;
        let mut prompt = build_prompt(req, self.history_window);
        let mut rejected = Vec::new();
        for attempt in 0..2 {
            let completion = self.backend.complete(req, &prompt)?;
            match parse_reply(req.kind, &completion.text) {
                Ok(reply) if reply.in_range(req) => {
                    self.transcript.push(TranscriptRecord {
                        kind: req.kind,
                        request: req.clone(),
                        raw: completion.text,
                        rejected,
                        reply: reply.clone(),
                        latency_ms: completion.latency_ms,
                        usage: completion.usage,
                    });
                    return Ok(reply);
                }
                _ if attempt == 0 => {
                    rejected.push(completion.text);
                    prompt.user.push('\n');
                    prompt.user.push_str(FORMAT_REMINDER);
                }
                _ => return Err(ReasonerError::UnparseableReply { kind: req.kind, raw: completion.text }),
            }
        }
        unreachable!("loop returns on the second attempt")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sel(events: &[&str]) -> DecisionRequest {
        DecisionRequest::new(
            DecisionKind::SelectEvent,
            DecisionContext {
                goal: Some("g".into()),
                events: events.iter().map(|s| s.to_string()).collect(),
                ..Default::default()
            },
        )
    }

    #[test]
    fn retry_once_then_fail() {
        let backend = Arc::new(ReplayBackend::from_raw(["no idea", "still none"]));
        let mut r = Reasoner::new(backend);
        let err = r.decide(&sel(&["a", "b"])).unwrap_err();
        assert!(matches!(err, ReasonerError::UnparseableReply { raw, .. } if raw == "still none"));
        assert!(r.transcript().is_empty());
    }

    #[test]
    fn retry_recovers_and_records_rejected() {
        let backend = Arc::new(ReplayBackend::from_raw(["hmm", "2"]));
        let mut r = Reasoner::new(backend);
        assert_eq!(r.decide(&sel(&["a", "b"])).unwrap(), DecisionReply::Event(2));
        let rec = &r.transcript().records()[0];
        assert_eq!(rec.rejected, vec!["hmm".to_string()]);
        assert_eq!(rec.raw, "2");
    }

    #[test]
    fn out_of_range_counts_as_unparseable() {
        let backend = Arc::new(ReplayBackend::from_raw(["7", "1"]));
        let mut r = Reasoner::new(backend);
        assert_eq!(r.decide(&sel(&["a", "b"])).unwrap(), DecisionReply::Event(1));
    }

    #[test]
    fn incomplete_request_rejected_before_backend() {
        let backend = Arc::new(ReplayBackend::from_raw(Vec::<String>::new()));
        let mut r = Reasoner::new(backend);
        let req = DecisionRequest::new(DecisionKind::SkillFinished, DecisionContext::default());
        assert!(matches!(r.decide(&req), Err(ReasonerError::IncompleteRequest { .. })));
    }

    #[test]
    fn transcript_jsonl_round_trip() {
        let backend = Arc::new(ReplayBackend::from_raw(["1", "YES"]));
        let mut r = Reasoner::new(backend);
        r.decide(&sel(&["a"])).unwrap();
        let fin = DecisionRequest::new(
            DecisionKind::GoalFinished,
            DecisionContext { goal: Some("g".into()), ..Default::default() },
        );
        r.decide(&fin).unwrap();
        let text = r.transcript().to_jsonl();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(Transcript::from_jsonl(&text).unwrap(), *r.transcript());
    }
}

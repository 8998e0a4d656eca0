//! Migration planners: the skill-adaptive loop, its two ablations, the
//! sequential matching baseline, and a verbatim replayer.

mod agent;
mod baseline;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::driver::TransitionOutcome;
use crate::reasoner::Transcript;
use crate::testcase::Skill;
use crate::ui::{center_in_bounds, Action, Bounds, UiEvent};

pub use agent::{migrate_sail, migrate_target_ablation, migrate_trace_ablation};
pub use baseline::{migrate_matcher, replay_test};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Driver interactions allowed per migration.
    pub max_steps: usize,
    /// Minimum score for the matching baseline to act on a source step.
    pub tau: f64,
    pub skill_threshold: f64,
    pub done_threshold: f64,
    /// Executed events shown in prompts.
    pub history_window: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            max_steps: 25,
            tau: 0.4,
            skill_threshold: 0.2,
            done_threshold: 0.5,
            history_window: crate::reasoner::DEFAULT_HISTORY_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid planner config: {0}")]
pub struct ConfigError(pub String);

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_steps < 1 {
            return Err(ConfigError("max_steps must be at least 1".into()));
        }
        for (name, v) in [("tau", self.tau), ("skill_threshold", self.skill_threshold), ("done_threshold", self.done_threshold)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    pub fn heuristic(&self) -> crate::reasoner::HeuristicConfig {
        crate::reasoner::HeuristicConfig { skill_threshold: self.skill_threshold, done_threshold: self.done_threshold }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Sail,
    Trace,
    Target,
    Matcher,
    /// Verbatim replay of a test, outside the compared planners.
    Replay,
}

impl PlannerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlannerKind::Sail => "sail",
            PlannerKind::Trace => "trace",
            PlannerKind::Target => "target",
            PlannerKind::Matcher => "matcher",
            PlannerKind::Replay => "replay",
        }
    }

    pub fn uses_reasoner(&self) -> bool {
        !matches!(self, PlannerKind::Matcher | PlannerKind::Replay)
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sail" => Ok(PlannerKind::Sail),
            "trace" => Ok(PlannerKind::Trace),
            "target" => Ok(PlannerKind::Target),
            "matcher" => Ok(PlannerKind::Matcher),
            other => Err(format!("unknown planner {other:?} (expected sail, trace, target or matcher)")),
        }
    }
}

/// Skills still to do and skills done, in the order they finished.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillDatabase {
    pub remaining: Vec<Skill>,
    pub finished: Vec<Skill>,
}

impl SkillDatabase {
    pub fn new(skills: Vec<Skill>) -> Self {
        SkillDatabase { remaining: skills, finished: Vec::new() }
    }

    /// Moves a remaining skill to `finished`. False if it was not remaining.
    pub fn finish(&mut self, name: &str) -> bool {
        match self.remaining.iter().position(|s| s.name == name) {
            Some(i) => {
                let s = self.remaining.remove(i);
                self.finished.push(s);
                true
            }
            None => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    GoalReached,
    BudgetExhausted,
    /// The run ended with source steps it could not map (baselines only).
    Incomplete { unmatched: Vec<usize> },
    Error { detail: String },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::GoalReached => "goal_reached",
            Outcome::BudgetExhausted => "budget_exhausted",
            Outcome::Incomplete { .. } => "incomplete",
            Outcome::Error { .. } => "error",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Incomplete { unmatched } => write!(f, "incomplete (unmatched source steps {unmatched:?})"),
            Outcome::Error { detail } => write!(f, "error: {detail}"),
            other => f.write_str(other.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    /// As performed, with value and direction filled in.
    pub event: UiEvent,
    pub description: String,
    /// Activity of the screen the event was performed on.
    pub activity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skill: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_bounds: Option<Bounds>,
    pub result: TransitionOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenRecord {
    pub activity: String,
    pub digest: String,
}

/// Events a skill was active for, and after which event it was declared finished.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillLogEntry {
    pub skill: String,
    pub events: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_after: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigrationTrace {
    pub test_id: String,
    pub planner: PlannerKind,
    pub reasoner: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skills: Vec<Skill>,
    pub events: Vec<TraceEvent>,
    /// Initial screen first, then one per event.
    pub screens: Vec<ScreenRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skill_log: Vec<SkillLogEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub outcome: Outcome,
    #[serde(skip)]
    pub transcript: Transcript,
}

impl MigrationTrace {
    fn new(test_id: &str, planner: PlannerKind, reasoner: &str) -> Self {
        MigrationTrace {
            test_id: test_id.to_string(),
            planner,
            reasoner: reasoner.to_string(),
            goal: None,
            skills: Vec::new(),
            events: Vec::new(),
            screens: Vec::new(),
            skill_log: Vec::new(),
            notes: Vec::new(),
            outcome: Outcome::GoalReached,
            transcript: Transcript::default(),
        }
    }

    pub fn reached_goal(&self) -> bool {
        self.outcome == Outcome::GoalReached
    }

    /// Skill names in the order they were first worked on.
    pub fn skill_order(&self) -> Vec<&str> {
        self.skill_log.iter().map(|e| e.skill.as_str()).collect()
    }

    fn log_skill(&mut self, skill: &str, event: usize) {
        match self.skill_log.iter_mut().find(|e| e.skill == skill) {
            Some(e) => e.events.push(event),
            None => self.skill_log.push(SkillLogEntry { skill: skill.to_string(), events: vec![event], finished_after: None }),
        }
    }

    fn finish_skill(&mut self, skill: &str) {
        let last = self.events.len().checked_sub(1);
        if let Some(e) = self.skill_log.iter_mut().find(|e| e.skill == skill) {
            e.finished_after = last;
        }
    }

    /// Human-readable step list.
    pub fn summary(&self) -> String {
        let mut out = format!("test: {}\nplanner: {}\nreasoner: {}\n", self.test_id, self.planner, self.reasoner);
        if let Some(g) = &self.goal {
            out.push_str(&format!("goal: {g}\n"));
        }
        for s in &self.skills {
            out.push_str(&format!("skill: {} [{}, {})\n", s.name, s.start(), s.end()));
        }
        out.push_str(&format!("outcome: {}\n", self.outcome));
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out.push_str("events:\n");
        for (i, e) in self.events.iter().enumerate() {
            let skill = e.skill.as_deref().map(|s| format!(" [{s}]")).unwrap_or_default();
            let to = match &e.result {
                TransitionOutcome::Transitioned { to } => format!("-> {to}"),
                TransitionOutcome::NoOp => "(no change)".to_string(),
                TransitionOutcome::Rejected { reason } => format!("(rejected: {reason})"),
            };
            out.push_str(&format!("{:>3}. ({}) {}{} {}\n", i + 1, e.activity, e.description, skill, to));
        }
        out
    }

    /// Writes `trace.json`, `transcript.jsonl` and `summary.txt` into `dir`.
    pub fn write_report(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut json = serde_json::to_string_pretty(self).expect("trace serializes");
        json.push('\n');
        std::fs::write(dir.join("trace.json"), json)?;
        std::fs::write(dir.join("transcript.jsonl"), self.transcript.to_jsonl())?;
        std::fs::write(dir.join("summary.txt"), self.summary())
    }
}

/// A ground-truth target event for TP/FP/FN accounting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthEvent {
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepClass {
    TP,
    FP,
    FN,
}

/// Classifies one performed event against the truth events not yet
/// claimed, claiming the first that matches. A match needs the same action
/// and, for targeted events, the performed center inside the truth bounds.
pub fn classify_step(
    action: Action,
    bounds: Option<Bounds>,
    truth: &[GroundTruthEvent],
    claimed: &mut [bool],
) -> StepClass {
    let hit = truth.iter().zip(claimed.iter()).position(|(t, used)| {
        !used
            && t.action == action
            && match (bounds, t.bounds) {
                (Some(b), Some(tb)) => center_in_bounds(&b, &tb),
                (None, None) => true,
                _ => false,
            }
    });
    match hit {
        Some(i) => {
            claimed[i] = true;
            StepClass::TP
        }
        None => StepClass::FP,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Greedy in-order classification of a trace; unclaimed truth events are FN.
pub fn classify_trace(events: &[TraceEvent], truth: &[GroundTruthEvent]) -> Classification {
    let mut claimed = vec![false; truth.len()];
    let mut c = Classification::default();
    for e in events {
        match classify_step(e.event.action, e.target_bounds, truth, &mut claimed) {
            StepClass::TP => c.tp += 1,
            _ => c.fp += 1,
        }
    }
    c.fn_ = claimed.iter().filter(|u| !**u).count();
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(action: Action, bounds: Option<&str>) -> GroundTruthEvent {
        GroundTruthEvent { action, bounds: bounds.map(|b| b.parse().unwrap()) }
    }

    #[test]
    fn classes() {
        let truth = [gt(Action::Click, Some("[0,0][100,100]")), gt(Action::Back, None)];
        let mut claimed = [false; 2];
        assert_eq!(classify_step(Action::Click, Some("[40,40][60,60]".parse().unwrap()), &truth, &mut claimed), StepClass::TP);
        assert_eq!(classify_step(Action::Click, Some("[40,40][60,60]".parse().unwrap()), &truth, &mut claimed), StepClass::FP);
        assert_eq!(classify_step(Action::LongClick, Some("[0,0][10,10]".parse().unwrap()), &truth, &mut claimed), StepClass::FP);
        assert_eq!(claimed, [true, false]);
    }

    #[test]
    fn skill_database_moves_once() {
        let mut db = SkillDatabase::new(vec![Skill::new("a", "", 0, 1), Skill::new("b", "", 1, 2)]);
        assert!(db.finish("b"));
        assert!(!db.finish("b"));
        assert_eq!(db.remaining.len(), 1);
        assert_eq!(db.finished[0].name, "b");
    }

    #[test]
    fn config_bounds() {
        assert!(PlannerConfig::default().validate().is_ok());
        assert!(PlannerConfig { max_steps: 0, ..Default::default() }.validate().is_err());
        assert!(PlannerConfig { tau: 1.5, ..Default::default() }.validate().is_err());
        assert_eq!("matcher".parse::<PlannerKind>().unwrap(), PlannerKind::Matcher);
        assert!("craft".parse::<PlannerKind>().is_err());
    }
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::driver::TransitionOutcome;
use crate::planner::{GroundTruthEvent, MigrationTrace, Outcome, TraceEvent};
use crate::sim::{SimApp, SimState, VarValue};
use crate::testcase::{from_json, SchemaError};
use crate::ui::{Action, ElementRef};

/// Matches performed trace events. Every populated target field must equal
/// the performed target's field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventMatcher {
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<ElementRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

impl EventMatcher {
    pub fn matches(&self, e: &TraceEvent) -> bool {
        if e.event.action != self.action || matches!(e.result, TransitionOutcome::Rejected { .. }) {
            return false;
        }
        if self.value.is_some() && e.event.value != self.value {
            return false;
        }
        let Some(want) = &self.target else { return true };
        let Some(have) = &e.event.target else { return false };
        fn field<T: PartialEq>(w: &Option<T>, h: &Option<T>) -> bool {
            w.is_none() || w == h
        }
        field(&want.resource_id, &have.resource_id)
            && field(&want.text, &have.text)
            && field(&want.content_desc, &have.content_desc)
            && field(&want.class_role, &have.class_role)
            && field(&want.bounds, &have.bounds)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleCheck {
    StateEquals { var: String, value: VarValue },
    VisitedScreen { screen: String },
    FinalScreen { screen: String },
    EventPerformed { event: EventMatcher },
    Ordered { before: EventMatcher, after: EventMatcher },
    MaxEvents { n: usize },
}

impl OracleCheck {
    pub fn label(&self) -> String {
        match self {
            OracleCheck::StateEquals { var, value } => format!("state_equals({var}, {value})"),
            OracleCheck::VisitedScreen { screen } => format!("visited_screen({screen})"),
            OracleCheck::FinalScreen { screen } => format!("final_screen({screen})"),
            OracleCheck::EventPerformed { event } => format!("event_performed({})", event.action),
            OracleCheck::Ordered { .. } => "ordered".to_string(),
            OracleCheck::MaxEvents { n } => format!("max_events({n})"),
        }
    }

    fn holds(&self, trace: &MigrationTrace, state: &SimState) -> bool {
        match self {
            OracleCheck::StateEquals { var, value } => state.variables.get(var) == Some(value),
            OracleCheck::VisitedScreen { screen } => state.visited.contains(screen),
            OracleCheck::FinalScreen { screen } => state.screen == *screen,
            OracleCheck::EventPerformed { event } => trace.events.iter().any(|e| event.matches(e)),
            OracleCheck::Ordered { before, after } => {
                let first = trace.events.iter().position(|e| before.matches(e));
                let last = trace.events.iter().rposition(|e| after.matches(e));
                matches!((first, last), (Some(a), Some(b)) if a < b)
            }
            OracleCheck::MaxEvents { n } => trace.events.len() <= *n,
        }
    }
}

/// A conjunction of checks for one test, plus optional ground-truth events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Oracle {
    pub test_id: String,
    pub checks: Vec<OracleCheck>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ground_truth: Vec<GroundTruthEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("oracle {test_id} references unknown {what} {name:?}")]
pub struct OracleMismatch {
    pub test_id: String,
    pub what: &'static str,
    pub name: String,
}

impl Oracle {
    pub fn load(doc: &str) -> Result<Oracle, SchemaError> {
        let o: Oracle = from_json(doc)?;
        if o.checks.is_empty() {
            return Err(SchemaError::new("checks", "must contain at least one check"));
        }
        Ok(o)
    }

    pub fn load_file(path: &Path) -> Result<Oracle, SchemaError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| SchemaError::new(path.display().to_string(), e.to_string()))?;
        Self::load(&text)
    }

    /// Checks that every variable and screen named exists in `app`.
    pub fn validate(&self, app: &SimApp) -> Result<(), OracleMismatch> {
        let err = |what, name: &str| OracleMismatch { test_id: self.test_id.clone(), what, name: name.to_string() };
        for c in &self.checks {
            match c {
                OracleCheck::StateEquals { var, .. } if !app.has_variable(var) => return Err(err("variable", var)),
                OracleCheck::VisitedScreen { screen } | OracleCheck::FinalScreen { screen }
                    if !app.has_screen(screen) =>
                {
                    return Err(err("screen", screen))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail { check: String },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        *self == Verdict::Pass
    }
}

/// Pass iff the run ended normally and every check holds. Budget
/// exhaustion and errors fail outright.
pub fn judge(oracle: &Oracle, app: &SimApp, trace: &MigrationTrace, state: &SimState) -> Result<Verdict, OracleMismatch> {
    oracle.validate(app)?;
    match &trace.outcome {
        Outcome::BudgetExhausted | Outcome::Error { .. } => {
            return Ok(Verdict::Fail { check: format!("outcome {}", trace.outcome.label()) })
        }
        Outcome::GoalReached | Outcome::Incomplete { .. } => {}
    }
    Ok(match oracle.checks.iter().find(|c| !c.holds(trace, state)) {
        Some(c) => Verdict::Fail { check: c.label() },
        None => Verdict::Pass,
    })
}

//! Deterministic stand-in for a language model.
//!
//! All scores use [`step_overlap`]: the share of a reference step's tokens
//! that also appear in an event description. The rules:
//!
//! * conclude goal: the source step descriptions joined with `"; "`.
//! * divide skills: consecutive steps sharing a `note` form one skill named
//!   after it; steps without a note extend the current skill; no notes at
//!   all yields a single skill.
//! * retrieve skill: the remaining skill with the highest overlap between
//!   any of its steps and any available event (earliest wins ties), or
//!   `NONE` below `skill_threshold`.
//! * a step is done when some history event overlaps it by at least
//!   `done_threshold`; a skill is finished when all its steps are done and
//!   the goal when every remaining skill is.
//! * select event: the event with the highest overlap against the
//!   reference step, lowest index on ties. With a current skill the
//!   reference is its earliest unfinished step. With the source test only,
//!   the earliest unfinished source step. With a goal only, the goal is
//!   split back into clauses and any unfinished clause may serve.
//! * swipe direction and input text: taken from the best-matching source
//!   step of that action, falling back to `down` and `text`.

use super::{
    Backend, Completion, DecisionContext, DecisionKind, DecisionRequest, Prompt, ReasonerError, SkillView,
    StepView,
};
use crate::text::step_overlap;
use crate::ui::Action;

pub const GOAL_SEPARATOR: &str = "; ";

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HeuristicConfig {
    pub skill_threshold: f64,
    pub done_threshold: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig { skill_threshold: 0.2, done_threshold: 0.5 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct HeuristicBackend {
    cfg: HeuristicConfig,
}

impl HeuristicBackend {
    pub fn new(cfg: HeuristicConfig) -> Self {
        HeuristicBackend { cfg }
    }

    fn done(&self, step: &str, history: &[String]) -> bool {
        history.iter().any(|h| step_overlap(h, step) >= self.cfg.done_threshold)
    }

    fn skill_done(&self, skill: &SkillView, history: &[String]) -> bool {
        skill.steps.iter().all(|s| self.done(&s.description, history))
    }

    /// Steps or clauses the answer is measured against, in order.
    fn reference<'a>(&self, c: &'a DecisionContext) -> Vec<&'a str> {
        if let Some(s) = &c.current_skill {
            s.steps.iter().map(|s| s.description.as_str()).collect()
        } else if !c.source_steps.is_empty() {
            c.source_steps.iter().map(|s| s.description.as_str()).collect()
        } else {
            goal_clauses(c.goal.as_deref().unwrap_or(""))
        }
    }

    fn conclude_goal(&self, c: &DecisionContext) -> String {
        c.source_steps.iter().map(|s| s.description.as_str()).collect::<Vec<_>>().join(GOAL_SEPARATOR)
    }

    fn divide_skills(&self, c: &DecisionContext) -> String {
        let mut groups: Vec<(String, usize, usize)> = Vec::new();
        for (i, s) in c.source_steps.iter().enumerate() {
            match (&s.note, groups.last_mut()) {
                (Some(n), Some(g)) if g.0 == *n => g.2 = i + 1,
                (Some(n), _) => groups.push((n.clone(), i + 1, i + 1)),
                (None, Some(g)) => g.2 = i + 1,
                (None, None) => groups.push(("Whole test".to_string(), i + 1, i + 1)),
            }
        }
        groups.iter().map(|(n, a, b)| format!("SKILL {n}: {a}-{b}")).collect::<Vec<_>>().join("\n")
    }

    fn retrieve_skill(&self, c: &DecisionContext) -> String {
        let skills = c.skills.as_deref().unwrap_or(&[]);
        let mut best: Option<(usize, f64)> = None;
        for (i, skill) in skills.iter().enumerate() {
            let score = skill
                .steps
                .iter()
                .flat_map(|s| c.events.iter().map(move |e| step_overlap(e, &s.description)))
                .fold(0.0, f64::max);
            if best.map_or(true, |(_, b)| score > b) {
                best = Some((i, score));
            }
        }
        match best {
            Some((i, score)) if score >= self.cfg.skill_threshold => (i + 1).to_string(),
            _ => "NONE".to_string(),
        }
    }

    fn select_event(&self, c: &DecisionContext) -> String {
        let reference = self.reference(c);
        let unfinished: Vec<&str> = reference.iter().copied().filter(|s| !self.done(s, &c.history)).collect();
        let targets: Vec<&str> = if c.current_skill.is_some() || !c.source_steps.is_empty() {
            // Ordered reference: only the earliest open step counts.
            match unfinished.first().or(reference.last()) {
                Some(s) => vec![*s],
                None => vec![],
            }
        } else if unfinished.is_empty() {
            reference
        } else {
            unfinished
        };
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, e) in c.events.iter().enumerate() {
            let score = targets.iter().map(|t| step_overlap(e, t)).fold(0.0, f64::max);
            if score > best.1 {
                best = (i, score);
            }
        }
        (best.0 + 1).to_string()
    }

    fn goal_finished(&self, c: &DecisionContext) -> bool {
        if let Some(skills) = &c.skills {
            return skills.iter().all(|s| self.skill_done(s, &c.history));
        }
        let reference = self.reference(c);
        !reference.is_empty() && reference.iter().all(|s| self.done(s, &c.history))
    }

    /// Source steps of `action` ranked by overlap with the chosen event.
    fn best_step<'a>(&self, c: &'a DecisionContext, action: Action) -> Option<&'a StepView> {
        let target = c.target_event.as_deref().unwrap_or("");
        let pool: Vec<&StepView> = match &c.current_skill {
            Some(s) if s.steps.iter().any(|st| st.action == action) => s.steps.iter().collect(),
            _ => c.source_steps.iter().collect(),
        };
        let mut best: Option<(&StepView, f64)> = None;
        for s in pool.into_iter().filter(|s| s.action == action) {
            let score = step_overlap(target, &s.description);
            if best.map_or(true, |(_, b)| score > b) {
                best = Some((s, score));
            }
        }
        best.map(|(s, _)| s)
    }

    fn swipe_direction(&self, c: &DecisionContext) -> String {
        self.best_step(c, Action::Swipe)
            .and_then(|s| s.direction)
            .map_or("down".to_string(), |d| d.to_string())
    }

    fn input_text(&self, c: &DecisionContext) -> String {
        if let Some(v) = self.best_step(c, Action::Input).and_then(|s| s.value.clone()) {
            return v;
        }
        // Goal-only context: recover a typed value from the goal clauses.
        let target = c.target_event.as_deref().unwrap_or("");
        let mut best: Option<(String, f64)> = None;
        for clause in goal_clauses(c.goal.as_deref().unwrap_or("")) {
            if let Some(v) = typed_value(clause) {
                let score = step_overlap(target, clause);
                if best.as_ref().map_or(true, |(_, b)| score > *b) {
                    best = Some((v.to_string(), score));
                }
            }
        }
        best.map_or("text".to_string(), |(v, _)| v)
    }

    /// The raw reply this backend gives for a request.
    pub fn answer(&self, req: &DecisionRequest) -> String {
        let c = &req.context;
        let yes_no = |b: bool| if b { "YES" } else { "NO" }.to_string();
        match req.kind {
            DecisionKind::ConcludeGoal => self.conclude_goal(c),
            DecisionKind::DivideSkills => self.divide_skills(c),
            DecisionKind::RetrieveSkill => self.retrieve_skill(c),
            DecisionKind::SelectEvent => self.select_event(c),
            DecisionKind::SkillFinished => {
                yes_no(c.current_skill.as_ref().map_or(false, |s| self.skill_done(s, &c.history)))
            }
            DecisionKind::GoalFinished => yes_no(self.goal_finished(c)),
            DecisionKind::SwipeDirection => self.swipe_direction(c),
            DecisionKind::InputText => self.input_text(c),
        }
    }
}

fn goal_clauses(goal: &str) -> Vec<&str> {
    goal.split(GOAL_SEPARATOR).map(str::trim).filter(|s| !s.is_empty()).collect()
}

/// `type 'X' into ...` → `X`.
fn typed_value(clause: &str) -> Option<&str> {
    let rest = clause.strip_prefix("type '")?;
    let end = rest.rfind("' into")?;
    Some(&rest[..end])
}

impl Backend for HeuristicBackend {
    fn name(&self) -> &str {
        "heuristic"
    }

    fn complete(&self, req: &DecisionRequest, _prompt: &Prompt) -> Result<Completion, ReasonerError> {
        Ok(Completion::text(self.answer(req)))
    }
}

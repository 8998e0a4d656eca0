use std::fmt::{self, Write as _};

use super::{DecisionKind, DecisionRequest, SkillView, StepView};

pub const PREAMBLE: &str = "You are an expert mobile app tester. You migrate a UI test case recorded \
on a source app to a target app by reproducing its functionality, not by copying its events one by one.";

/// Appended to the user message when a reply could not be parsed.
pub const FORMAT_REMINDER: &str = "Answer with the required format only.";

/// A rendered prompt: the system preamble and the user message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

impl fmt::Display for Prompt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\n\n{}", self.system, self.user)
    }
}

/// Numbered list, 1-based, one entry per line.
pub fn render_event_list(events: &[String]) -> String {
    let mut out = String::new();
    for (i, e) in events.iter().enumerate() {
        let _ = writeln!(out, "{}. {}", i + 1, e);
    }
    out
}

fn steps_block(out: &mut String, steps: &[StepView]) {
    for (i, s) in steps.iter().enumerate() {
        let _ = write!(out, "{}. {}", i + 1, s.description);
        if let Some(n) = &s.note {
            let _ = write!(out, " (note: {n})");
        }
        out.push('\n');
    }
}

fn skill_block(out: &mut String, s: &SkillView) {
    let _ = writeln!(out, "Current skill: {}", s.name);
    if !s.description.is_empty() {
        let _ = writeln!(out, "Skill description: {}", s.description);
    }
    out.push_str("Source events of this skill:\n");
    steps_block(out, &s.steps);
}

fn instruction(kind: DecisionKind) -> &'static str {
    match kind {
        DecisionKind::ConcludeGoal => {
            "State the objective of the source test case in one sentence. Answer with the objective only."
        }
        DecisionKind::DivideSkills => {
            "Divide the source test case into skills: contiguous runs of steps that each achieve one \
sub-function, covering every step in order. Answer with one line per skill in the form \
`SKILL <name>: <first>-<last>` using the step numbers above."
        }
        DecisionKind::RetrieveSkill => {
            "Which remaining skill can be advanced on the current screen? Answer with exactly one number, \
or NONE if no skill applies."
        }
        DecisionKind::SelectEvent => {
            "Which available event should be performed next? Answer with exactly one number."
        }
        DecisionKind::SkillFinished => "Has the current skill been completed on the target app? Answer YES or NO.",
        DecisionKind::GoalFinished => "Has the goal been reached on the target app? Answer YES or NO.",
        DecisionKind::SwipeDirection => "In which direction should the swipe go? Answer with one of: up, down, left, right.",
        DecisionKind::InputText => "What text should be typed? Answer with the text only.",
    }
}

/// Builds the prompt for a request. Sections, in order: goal, source test,
/// remaining skills, current skill, activity, available events, history
/// tail (`window` entries), chosen event, answer instruction. Empty
/// sections are omitted.
pub fn build_prompt(req: &DecisionRequest, window: usize) -> Prompt {
    let c = &req.context;
    let mut out = String::new();
    if let Some(goal) = &c.goal {
        let _ = writeln!(out, "Goal: {goal}\n");
    }
    if !c.source_steps.is_empty() {
        out.push_str("Source test case:\n");
        steps_block(&mut out, &c.source_steps);
        out.push('\n');
    }
    if req.kind == DecisionKind::RetrieveSkill || req.kind == DecisionKind::GoalFinished {
        if let Some(skills) = &c.skills {
            out.push_str("Remaining skills:\n");
            if skills.is_empty() {
                out.push_str("(none)\n");
            }
            for (i, s) in skills.iter().enumerate() {
                let steps: Vec<_> = s.steps.iter().map(|st| st.description.as_str()).collect();
                let _ = writeln!(out, "{}. {}: {}", i + 1, s.name, steps.join("; "));
            }
            out.push('\n');
        }
    }
    if let Some(s) = &c.current_skill {
        skill_block(&mut out, s);
        out.push('\n');
    }
    if let Some(a) = &c.activity {
        let _ = writeln!(out, "Current activity: {a}\n");
    }
    if !c.events.is_empty() {
        out.push_str("Available events:\n");
        out.push_str(&render_event_list(&c.events));
        out.push('\n');
    }
    if !c.history.is_empty() {
        let start = c.history.len().saturating_sub(window);
        let _ = writeln!(out, "Executed events (last {} of {}):", c.history.len() - start, c.history.len());
        for (i, h) in c.history.iter().enumerate().skip(start) {
            let _ = writeln!(out, "{}. {}", i + 1, h);
        }
        out.push('\n');
    }
    if let Some(t) = &c.target_event {
        let _ = writeln!(out, "Chosen event: {t}\n");
    }
    out.push_str(instruction(req.kind));
    Prompt { system: PREAMBLE.to_string(), user: out }
}

pub fn render_prompt(req: &DecisionRequest, window: usize) -> String {
    build_prompt(req, window).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoner::DecisionContext;
    use crate::ui::Action;

    fn step(d: &str) -> StepView {
        StepView { description: d.into(), action: Action::Click, value: None, direction: None, note: None }
    }

    #[test]
    fn select_event_prompt() {
        let req = DecisionRequest::new(
            DecisionKind::SelectEvent,
            DecisionContext {
                goal: Some("enlarge font".into()),
                current_skill: Some(SkillView {
                    name: "Setting Font".into(),
                    description: String::new(),
                    steps: vec![step("click 'Font size'")],
                }),
                events: vec!["click 'A'".into(), "press back".into()],
                ..Default::default()
            },
        );
        let p = render_prompt(&req, 10);
        assert!(p.starts_with(PREAMBLE));
        assert!(p.contains("Available events:\n1. click 'A'\n2. press back\n"));
        assert!(p.contains("Answer with exactly one number."));
        let goal = p.find("Goal:").unwrap();
        let skill = p.find("Current skill:").unwrap();
        let events = p.find("Available events:").unwrap();
        assert!(goal < skill && skill < events);
        assert_eq!(p, render_prompt(&req, 10));
    }

    #[test]
    fn yes_no_prompts_end_with_instruction() {
        for kind in [DecisionKind::SkillFinished, DecisionKind::GoalFinished] {
            let req = DecisionRequest::new(kind, DecisionContext::default());
            assert!(render_prompt(&req, 10).ends_with("Answer YES or NO."));
        }
    }

    #[test]
    fn conclude_goal_embeds_steps() {
        let req = DecisionRequest::new(
            DecisionKind::ConcludeGoal,
            DecisionContext { source_steps: vec![step("click 'Menu'"), step("click 'Settings'")], ..Default::default() },
        );
        let p = render_prompt(&req, 10);
        assert!(p.contains("1. click 'Menu'\n2. click 'Settings'\n"));
    }

    #[test]
    fn history_is_windowed() {
        let req = DecisionRequest::new(
            DecisionKind::SelectEvent,
            DecisionContext {
                goal: Some("g".into()),
                events: vec!["press back".into()],
                history: (1..=12).map(|i| format!("click 'h{i}'")).collect(),
                ..Default::default()
            },
        );
        let p = render_prompt(&req, 10);
        assert!(p.contains("Executed events (last 10 of 12):\n3. click 'h3'\n"));
        assert!(!p.contains("'h2'"));
        assert!(p.contains("12. click 'h12'"));
    }
}

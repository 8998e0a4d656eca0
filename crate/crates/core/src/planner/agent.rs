use super::{MigrationTrace, Outcome, PlannerConfig, PlannerKind, ScreenRecord, SkillDatabase, TraceEvent};
use crate::driver::Driver;
use crate::reasoner::{
    DecisionContext, DecisionKind, DecisionReply, DecisionRequest, Reasoner, SkillView, StepView,
};
use crate::testcase::{build_hierarchy, Skill, TestCase};
use crate::ui::{describe_event, extract_events, Action, UiScreen};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Goal, skills, per-skill selection.
    Sail,
    /// Whole source test in every prompt, no decomposition.
    Trace,
    /// Goal only.
    Target,
}

impl Mode {
    fn kind(self) -> PlannerKind {
        match self {
            Mode::Sail => PlannerKind::Sail,
            Mode::Trace => PlannerKind::Trace,
            Mode::Target => PlannerKind::Target,
        }
    }
}

/// Skill-adaptive migration: conclude the goal, divide the source test into
/// skills, then repeatedly retrieve the skill that fits the current screen,
/// select an event for it, perform it and check whether the skill is done,
/// until the goal is reported finished or the step budget runs out.
pub fn migrate_sail(
    source: &TestCase,
    driver: &mut dyn Driver,
    reasoner: &mut Reasoner,
    cfg: &PlannerConfig,
) -> MigrationTrace {
    run(Mode::Sail, source, driver, reasoner, cfg)
}

/// Ablation without decomposition: every selection sees the whole source test.
pub fn migrate_trace_ablation(
    source: &TestCase,
    driver: &mut dyn Driver,
    reasoner: &mut Reasoner,
    cfg: &PlannerConfig,
) -> MigrationTrace {
    run(Mode::Trace, source, driver, reasoner, cfg)
}

/// Ablation that works from the concluded goal alone.
pub fn migrate_target_ablation(
    source: &TestCase,
    driver: &mut dyn Driver,
    reasoner: &mut Reasoner,
    cfg: &PlannerConfig,
) -> MigrationTrace {
    run(Mode::Target, source, driver, reasoner, cfg)
}

fn run(mode: Mode, source: &TestCase, driver: &mut dyn Driver, reasoner: &mut Reasoner, cfg: &PlannerConfig) -> MigrationTrace {
    let start = reasoner.transcript().len();
    let mut trace = MigrationTrace::new(&source.id, mode.kind(), reasoner.backend_name());
    trace.outcome = match cfg.validate() {
        Ok(()) => {
            let mut agent = Agent { mode, source, driver, reasoner, cfg, trace: &mut trace, history: Vec::new() };
            agent.drive().unwrap_or_else(|detail| Outcome::Error { detail })
        }
        Err(e) => Outcome::Error { detail: e.to_string() },
    };
    trace.transcript = reasoner.transcript().since(start);
    trace
}

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn record(screen: &UiScreen) -> ScreenRecord {
    ScreenRecord { activity: screen.activity.clone(), digest: screen.raw_digest.clone() }
}

struct Agent<'a> {
    mode: Mode,
    source: &'a TestCase,
    driver: &'a mut dyn Driver,
    reasoner: &'a mut Reasoner,
    cfg: &'a PlannerConfig,
    trace: &'a mut MigrationTrace,
    history: Vec<String>,
}

impl Agent<'_> {
    fn steps(&self) -> Vec<StepView> {
        self.source.steps.iter().map(StepView::from_step).collect()
    }

    fn skill_view(&self, s: &Skill) -> SkillView {
        SkillView {
            name: s.name.clone(),
            description: s.description.clone(),
            steps: self.source.steps[s.start()..s.end()].iter().map(StepView::from_step).collect(),
        }
    }

    fn decide(&mut self, kind: DecisionKind, context: DecisionContext) -> Result<DecisionReply, String> {
        self.reasoner.decide(&DecisionRequest::new(kind, context)).map_err(fail)
    }

    /// Context shared by every decision in the loop; what it carries
    /// depends on the planner variant.
    fn base(&self, db: Option<&SkillDatabase>, screen: &UiScreen) -> DecisionContext {
        DecisionContext {
            goal: self.trace.goal.clone(),
            source_steps: if self.mode == Mode::Trace { self.steps() } else { Vec::new() },
            skills: db.map(|db| db.remaining.iter().map(|s| self.skill_view(s)).collect()),
            history: self.history.clone(),
            activity: Some(screen.activity.clone()),
            ..Default::default()
        }
    }

    fn setup(&mut self) -> Result<Option<SkillDatabase>, String> {
        if self.mode == Mode::Trace {
            return Ok(None);
        }
        let steps = self.steps();
        let goal = match self.decide(DecisionKind::ConcludeGoal, DecisionContext { source_steps: steps.clone(), ..Default::default() })? {
            DecisionReply::Goal(g) => g,
            other => return Err(format!("unexpected reply {other:?}")),
        };
        self.trace.goal = Some(goal.clone());
        if self.mode == Mode::Target {
            return Ok(None);
        }
        let ctx = DecisionContext { goal: Some(goal.clone()), source_steps: steps.clone(), ..Default::default() };
        let spans = match self.decide(DecisionKind::DivideSkills, ctx)? {
            DecisionReply::Skills(spans) => spans,
            other => return Err(format!("unexpected reply {other:?}")),
        };
        let skills: Vec<Skill> = spans
            .iter()
            .map(|s| {
                let desc = steps[s.first - 1..s.last].iter().map(|v| v.description.as_str()).collect::<Vec<_>>();
                Skill::new(s.name.clone(), desc.join("; "), s.first - 1, s.last)
            })
            .collect();
        build_hierarchy(self.source.clone(), goal, skills.clone()).map_err(|e| format!("skill division rejected: {e}"))?;
        self.trace.skills = skills.clone();
        Ok(Some(SkillDatabase::new(skills)))
    }

    fn drive(&mut self) -> Result<Outcome, String> {
        let mut db = self.setup()?;
        let mut screen = self.driver.dump_hierarchy().map_err(fail)?;
        self.trace.screens.push(record(&screen));
        loop {
            // Termination is checked before anything is performed.
            let finished = self.decide(DecisionKind::GoalFinished, self.base(db.as_ref(), &screen))?;
            if finished == DecisionReply::Finished(true) {
                if self.trace.events.is_empty() {
                    self.trace.notes.push("goal reported finished before any event was performed".into());
                }
                return Ok(Outcome::GoalReached);
            }
            if self.driver.interaction_count() >= self.cfg.max_steps {
                return Ok(Outcome::BudgetExhausted);
            }

            let events = extract_events(&screen);
            let descriptions =
                events.iter().map(|e| describe_event(e, &screen)).collect::<Result<Vec<_>, _>>().map_err(fail)?;

            let mut current: Option<Skill> = None;
            if let Some(db) = db.as_ref().filter(|db| !db.remaining.is_empty()) {
                let mut ctx = self.base(Some(db), &screen);
                ctx.events = descriptions.clone();
                if let DecisionReply::Skill(Some(n)) = self.decide(DecisionKind::RetrieveSkill, ctx)? {
                    current = Some(db.remaining[n - 1].clone());
                }
            }

            let mut ctx = self.base(None, &screen);
            ctx.current_skill = current.as_ref().map(|s| self.skill_view(s));
            ctx.events = descriptions.clone();
            let chosen = match self.decide(DecisionKind::SelectEvent, ctx)? {
                DecisionReply::Event(n) => n - 1,
                other => return Err(format!("unexpected reply {other:?}")),
            };
            let mut event = events[chosen].clone();
            let fill_ctx = DecisionContext {
                goal: self.trace.goal.clone(),
                source_steps: self.steps(),
                current_skill: current.as_ref().map(|s| self.skill_view(s)),
                history: self.history.clone(),
                activity: Some(screen.activity.clone()),
                target_event: Some(descriptions[chosen].clone()),
                ..Default::default()
            };
            match event.action {
                Action::Swipe => {
                    if let DecisionReply::Direction(d) = self.decide(DecisionKind::SwipeDirection, fill_ctx)? {
                        event.direction = Some(d);
                    }
                }
                Action::Input => {
                    if let DecisionReply::Text(t) = self.decide(DecisionKind::InputText, fill_ctx)? {
                        event.value = Some(t);
                    }
                }
                _ => {}
            }

            let description = describe_event(&event, &screen).map_err(fail)?;
            let target_bounds = event.target.as_ref().and_then(|t| t.resolve_one(&screen)).map(|(_, e)| e.bounds);
            let result = self.driver.perform(&event).map_err(fail)?;
            let index = self.trace.events.len();
            self.trace.events.push(TraceEvent {
                event,
                description: description.clone(),
                activity: screen.activity.clone(),
                skill: current.as_ref().map(|s| s.name.clone()),
                target_bounds,
                result,
            });
            if let Some(s) = &current {
                self.trace.log_skill(&s.name, index);
            }
            self.history.push(description);
            screen = self.driver.dump_hierarchy().map_err(fail)?;
            self.trace.screens.push(record(&screen));

            // Only the skill retrieved in this iteration is checked.
            if let (Some(s), Some(db)) = (&current, db.as_mut()) {
                let ctx = DecisionContext {
                    goal: self.trace.goal.clone(),
                    current_skill: Some(self.skill_view(s)),
                    history: self.history.clone(),
                    activity: Some(screen.activity.clone()),
                    ..Default::default()
                };
                if self.decide(DecisionKind::SkillFinished, ctx)? == DecisionReply::Finished(true) {
                    db.finish(&s.name);
                    self.trace.finish_skill(&s.name);
                }
            }
        }
    }
}

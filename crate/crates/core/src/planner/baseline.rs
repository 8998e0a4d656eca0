use super::{MigrationTrace, Outcome, PlannerConfig, PlannerKind, ScreenRecord, TraceEvent};
use crate::driver::{Driver, TransitionOutcome};
use crate::matcher::{rank, Described, MatchQuery, Scorer};
use crate::testcase::TestCase;
use crate::ui::{describe_event, extract_events, UiEvent, UiScreen};

fn record(screen: &UiScreen) -> ScreenRecord {
    ScreenRecord { activity: screen.activity.clone(), digest: screen.raw_digest.clone() }
}

fn perform(
    driver: &mut dyn Driver,
    trace: &mut MigrationTrace,
    screen: &mut UiScreen,
    event: UiEvent,
) -> Result<TransitionOutcome, String> {
    let description = describe_event(&event, screen).unwrap_or_else(|_| crate::ui::describe_step(&event));
    let target_bounds = event.target.as_ref().and_then(|t| t.resolve_one(screen)).map(|(_, e)| e.bounds);
    let result = driver.perform(&event).map_err(|e| e.to_string())?;
    trace.events.push(TraceEvent {
        event,
        description,
        activity: screen.activity.clone(),
        skill: None,
        target_bounds,
        result: result.clone(),
    });
    *screen = driver.dump_hierarchy().map_err(|e| e.to_string())?;
    trace.screens.push(record(screen));
    Ok(result)
}

/// Sequential matching baseline. Each source step in order is matched
/// against the events of the current screen; the best one is performed when
/// its score reaches `cfg.tau`, otherwise the step is skipped. There is no
/// exploration and no goal reasoning.
pub fn migrate_matcher(
    source: &TestCase,
    driver: &mut dyn Driver,
    scorer: &dyn Scorer,
    cfg: &PlannerConfig,
) -> MigrationTrace {
    let mut trace = MigrationTrace::new(&source.id, PlannerKind::Matcher, "none");
    trace.notes.push("sequential matching without transition exploration".into());
    trace.outcome = match cfg.validate() {
        Ok(()) => matcher_loop(source, driver, scorer, cfg, &mut trace).unwrap_or_else(|detail| Outcome::Error { detail }),
        Err(e) => Outcome::Error { detail: e.to_string() },
    };
    trace
}

fn matcher_loop(
    source: &TestCase,
    driver: &mut dyn Driver,
    scorer: &dyn Scorer,
    cfg: &PlannerConfig,
    trace: &mut MigrationTrace,
) -> Result<Outcome, String> {
    let mut screen = driver.dump_hierarchy().map_err(|e| e.to_string())?;
    trace.screens.push(record(&screen));
    let mut unmatched = Vec::new();
    for (i, step) in source.steps.iter().enumerate() {
        if driver.interaction_count() >= cfg.max_steps {
            return Ok(Outcome::BudgetExhausted);
        }
        let events = extract_events(&screen);
        let candidates = events
            .iter()
            .map(|e| describe_event(e, &screen).map(|d| Described { event: e.clone(), description: d }))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let query = MatchQuery {
            source: Described { event: step.event.clone(), description: step.describe() },
            candidates,
            truth_bounds: None,
        };
        let ranked = rank(&query, scorer);
        let best = ranked.order[0];
        if ranked.scores[best] < cfg.tau {
            unmatched.push(i);
            continue;
        }
        let mut event = events[best].clone();
        if event.action == step.event.action {
            event.value = step.event.value.clone();
            event.direction = step.event.direction;
        }
        perform(driver, trace, &mut screen, event)?;
    }
    Ok(if unmatched.is_empty() { Outcome::GoalReached } else { Outcome::Incomplete { unmatched } })
}

/// Performs a test's steps verbatim on the target. Steps whose target is
/// not on screen are reported as unmatched.
pub fn replay_test(test: &TestCase, driver: &mut dyn Driver, cfg: &PlannerConfig) -> MigrationTrace {
    let mut trace = MigrationTrace::new(&test.id, PlannerKind::Replay, "none");
    let mut run = |trace: &mut MigrationTrace| -> Result<Outcome, String> {
        let mut screen = driver.dump_hierarchy().map_err(|e| e.to_string())?;
        trace.screens.push(record(&screen));
        let mut unmatched = Vec::new();
        for (i, step) in test.steps.iter().enumerate() {
            if driver.interaction_count() >= cfg.max_steps {
                return Ok(Outcome::BudgetExhausted);
            }
            if let TransitionOutcome::Rejected { .. } = perform(driver, trace, &mut screen, step.event.clone())? {
                unmatched.push(i);
            }
        }
        Ok(if unmatched.is_empty() { Outcome::GoalReached } else { Outcome::Incomplete { unmatched } })
    };
    trace.outcome = run(&mut trace).unwrap_or_else(|detail| Outcome::Error { detail });
    trace
}

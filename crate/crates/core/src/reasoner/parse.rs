use super::{DecisionKind, DecisionReply, ReasonerError, SkillSpan};
use crate::ui::Direction;

fn words(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty())
}

fn first_integer(raw: &str) -> Option<usize> {
    words(raw).find(|w| w.chars().all(|c| c.is_ascii_digit())).and_then(|w| w.parse().ok())
}

fn parse_span(line: &str) -> Option<SkillSpan> {
    let line = line.trim().trim_matches('`').trim();
    let head = line.get(..5)?;
    if !head.eq_ignore_ascii_case("skill") {
        return None;
    }
    let rest = line[5..].trim_start();
    let (name, range) = rest.rsplit_once(':')?;
    let (first, last) = range.trim().split_once('-')?;
    let name = name.trim();
    if name.is_empty() {
        return None;
    }
    Some(SkillSpan { name: name.to_string(), first: first.trim().parse().ok()?, last: last.trim().parse().ok()? })
}

/// Parses a raw reply for the given kind.
///
/// Yes/no kinds take the first standalone yes or no (any case); index kinds
/// the first standalone integer (`NONE` is accepted for skill retrieval);
/// skill division takes every `SKILL <name>: <first>-<last>` line.
pub fn parse_reply(kind: DecisionKind, raw: &str) -> Result<DecisionReply, ReasonerError> {
    let fail = || ReasonerError::UnparseableReply { kind, raw: raw.to_string() };
    match kind {
        DecisionKind::SkillFinished | DecisionKind::GoalFinished => words(raw)
            .find_map(|w| match w.to_ascii_lowercase().as_str() {
                "yes" => Some(true),
                "no" => Some(false),
                _ => None,
            })
            .map(DecisionReply::Finished)
            .ok_or_else(fail),
        DecisionKind::SelectEvent => first_integer(raw).map(DecisionReply::Event).ok_or_else(fail),
        DecisionKind::RetrieveSkill => {
            for w in words(raw) {
                if w.eq_ignore_ascii_case("none") {
                    return Ok(DecisionReply::Skill(None));
                }
                if w.chars().all(|c| c.is_ascii_digit()) {
                    return w.parse().map(|n| DecisionReply::Skill(Some(n))).map_err(|_| fail());
                }
            }
            Err(fail())
        }
        DecisionKind::DivideSkills => {
            let spans: Vec<_> = raw.lines().filter_map(parse_span).collect();
            if spans.is_empty() {
                Err(fail())
            } else {
                Ok(DecisionReply::Skills(spans))
            }
        }
        DecisionKind::SwipeDirection => {
            words(raw).find_map(|w| w.parse::<Direction>().ok()).map(DecisionReply::Direction).ok_or_else(fail)
        }
        DecisionKind::ConcludeGoal => {
            let goal = raw.trim();
            if goal.is_empty() {
                Err(fail())
            } else {
                Ok(DecisionReply::Goal(goal.to_string()))
            }
        }
        DecisionKind::InputText => {
            let t = raw.trim();
            let t = ['"', '\'', '`']
                .iter()
                .find_map(|q| t.strip_prefix(*q).and_then(|s| s.strip_suffix(*q)))
                .unwrap_or(t);
            if t.is_empty() {
                Err(fail())
            } else {
                Ok(DecisionReply::Text(t.to_string()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yes_no() {
        assert_eq!(parse_reply(DecisionKind::SkillFinished, "Yes, the font was enlarged.").unwrap(), DecisionReply::Finished(true));
        assert_eq!(parse_reply(DecisionKind::GoalFinished, "NO.").unwrap(), DecisionReply::Finished(false));
        assert_eq!(parse_reply(DecisionKind::GoalFinished, "nothing yet... no").unwrap(), DecisionReply::Finished(false));
        assert!(parse_reply(DecisionKind::GoalFinished, "maybe").is_err());
        assert!(parse_reply(DecisionKind::GoalFinished, "yesterday").is_err());
    }

    #[test]
    fn first_integer_rule() {
        assert_eq!(parse_reply(DecisionKind::SelectEvent, "I choose option 2 because it opens 3 menus").unwrap(), DecisionReply::Event(2));
        assert_eq!(parse_reply(DecisionKind::SelectEvent, "4.").unwrap(), DecisionReply::Event(4));
        assert!(matches!(
            parse_reply(DecisionKind::SelectEvent, "none of these"),
            Err(ReasonerError::UnparseableReply { raw, .. }) if raw == "none of these"
        ));
        assert!(parse_reply(DecisionKind::SelectEvent, "v2").is_err());
    }

    #[test]
    fn retrieve_none_or_number() {
        assert_eq!(parse_reply(DecisionKind::RetrieveSkill, "NONE").unwrap(), DecisionReply::Skill(None));
        assert_eq!(parse_reply(DecisionKind::RetrieveSkill, "Skill 2 fits").unwrap(), DecisionReply::Skill(Some(2)));
        assert!(parse_reply(DecisionKind::RetrieveSkill, "unclear").is_err());
    }

    #[test]
    fn partition_grammar() {
        let raw = "Here you go:\nSKILL Setting Font: 1-5\n  skill Open News: 6-6\nthanks";
        assert_eq!(
            parse_reply(DecisionKind::DivideSkills, raw).unwrap(),
            DecisionReply::Skills(vec![
                SkillSpan { name: "Setting Font".into(), first: 1, last: 5 },
                SkillSpan { name: "Open News".into(), first: 6, last: 6 },
            ])
        );
        assert_eq!(
            parse_reply(DecisionKind::DivideSkills, "SKILL Step: one: 1-2").unwrap(),
            DecisionReply::Skills(vec![SkillSpan { name: "Step: one".into(), first: 1, last: 2 }])
        );
        assert!(parse_reply(DecisionKind::DivideSkills, "one skill, all steps").is_err());
    }

    #[test]
    fn direction_goal_text() {
        assert_eq!(parse_reply(DecisionKind::SwipeDirection, "Swipe UP please").unwrap(), DecisionReply::Direction(Direction::Up));
        assert!(parse_reply(DecisionKind::SwipeDirection, "sideways").is_err());
        assert_eq!(parse_reply(DecisionKind::ConcludeGoal, "  Enlarge the font.\n").unwrap(), DecisionReply::Goal("Enlarge the font.".into()));
        assert!(parse_reply(DecisionKind::ConcludeGoal, "   ").is_err());
        assert_eq!(parse_reply(DecisionKind::InputText, "\"hello world\"").unwrap(), DecisionReply::Text("hello world".into()));
        assert_eq!(parse_reply(DecisionKind::InputText, "'x'").unwrap(), DecisionReply::Text("x".into()));
    }
}

use std::sync::Mutex;

use super::{Backend, Completion, DecisionKind, DecisionRequest, Prompt, ReasonerError, Transcript};

/// Plays back recorded replies in order.
///
/// Built from a transcript, each reply is checked against the recorded
/// request kind so a diverging run fails loudly instead of drifting.
#[derive(Debug)]
pub struct ReplayBackend {
    replies: Vec<(Option<DecisionKind>, String)>,
    cursor: Mutex<usize>,
}

impl ReplayBackend {
    pub fn from_transcript(t: &Transcript) -> Self {
        ReplayBackend {
            replies: t.records().iter().map(|r| (Some(r.kind), r.raw.clone())).collect(),
            cursor: Mutex::new(0),
        }
    }

    /// Untyped fixtures: any request consumes the next reply.
    pub fn from_raw<I, S>(raw: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ReplayBackend { replies: raw.into_iter().map(|s| (None, s.into())).collect(), cursor: Mutex::new(0) }
    }

    pub fn remaining(&self) -> usize {
        self.replies.len() - *self.cursor.lock().unwrap()
    }
}

impl Backend for ReplayBackend {
    fn name(&self) -> &str {
        "replay"
    }

    fn complete(&self, req: &DecisionRequest, _prompt: &Prompt) -> Result<Completion, ReasonerError> {
        let mut cursor = self.cursor.lock().unwrap();
        let (kind, raw) =
            self.replies.get(*cursor).ok_or(ReasonerError::FixtureExhausted { consumed: *cursor })?;
        if let Some(kind) = kind {
            if *kind != req.kind {
                return Err(ReasonerError::ReplayDivergence { position: *cursor, recorded: *kind, requested: req.kind });
            }
        }
        *cursor += 1;
        Ok(Completion::text(raw.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoner::{DecisionContext, DecisionReply, Reasoner};
    use std::sync::Arc;

    fn finished() -> DecisionRequest {
        DecisionRequest::new(DecisionKind::GoalFinished, DecisionContext { goal: Some("g".into()), ..Default::default() })
    }

    #[test]
    fn exhausted() {
        let mut r = Reasoner::new(Arc::new(ReplayBackend::from_raw(["yes"])));
        assert_eq!(r.decide(&finished()).unwrap(), DecisionReply::Finished(true));
        assert_eq!(r.decide(&finished()).unwrap_err(), ReasonerError::FixtureExhausted { consumed: 1 });
    }

    #[test]
    fn transcript_replay_checks_kind() {
        let mut rec = Reasoner::new(Arc::new(ReplayBackend::from_raw(["no"])));
        rec.decide(&finished()).unwrap();
        let backend = ReplayBackend::from_transcript(rec.transcript());
        let mut r = Reasoner::new(Arc::new(backend));
        let other = DecisionRequest::new(
            DecisionKind::SkillFinished,
            DecisionContext {
                current_skill: Some(crate::reasoner::SkillView { name: "s".into(), description: String::new(), steps: vec![] }),
                ..Default::default()
            },
        );
        assert!(matches!(r.decide(&other), Err(ReasonerError::ReplayDivergence { position: 0, .. })));
        assert_eq!(r.decide(&finished()).unwrap(), DecisionReply::Finished(false));
    }
}

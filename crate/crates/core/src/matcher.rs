//! Similarity-based event matching and its ranking metrics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::reasoner::{DecisionContext, DecisionKind, DecisionReply, DecisionRequest, Reasoner, ReasonerError, StepView};
use crate::testcase::{from_json, SchemaError, TestStep};
use crate::ui::{center_in_bounds, describe_step, Bounds, UiEvent};

pub use crate::text::lexical_similarity;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatchError {
    #[error("empty query set")]
    EmptyQuerySet,
    #[error("query {0} has no candidates")]
    NoCandidates(usize),
}

/// Scores a candidate description against a source description.
pub trait Scorer: Send + Sync {
    fn score(&self, source: &str, candidate: &str) -> f64;
}

/// Jaccard similarity over content tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalScorer;

impl Scorer for LexicalScorer {
    fn score(&self, source: &str, candidate: &str) -> f64 {
        lexical_similarity(source, candidate)
    }
}

impl<F: Fn(&str, &str) -> f64 + Send + Sync> Scorer for F {
    fn score(&self, source: &str, candidate: &str) -> f64 {
        self(source, candidate)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Described {
    pub event: UiEvent,
    pub description: String,
}

impl Described {
    pub fn new(event: UiEvent) -> Self {
        Described { description: describe_step(&event), event }
    }

    fn bounds(&self) -> Option<Bounds> {
        self.event.target.as_ref().and_then(|t| t.bounds)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchQuery {
    pub source: Described,
    pub candidates: Vec<Described>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_bounds: Option<Bounds>,
}

impl MatchQuery {
    /// Whether candidate `i` is the ground truth.
    pub fn is_truth(&self, i: usize) -> bool {
        match (self.truth_bounds, self.candidates.get(i).and_then(Described::bounds)) {
            (Some(truth), Some(b)) => center_in_bounds(&b, &truth),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub scores: Vec<f64>,
    pub order: Vec<usize>,
    /// 1-based position of the first candidate whose center lies in the truth bounds.
    pub rank_of_truth: Option<usize>,
}

/// Orders candidates by descending score; equal scores keep index order.
pub fn rank(query: &MatchQuery, scorer: &dyn Scorer) -> RankedResult {
    let scores: Vec<f64> =
        query.candidates.iter().map(|c| scorer.score(&query.source.description, &c.description)).collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let rank_of_truth = order.iter().position(|&i| query.is_truth(i)).map(|p| p + 1);
    RankedResult { scores, order, rank_of_truth }
}

/// Mean reciprocal rank; an absent rank contributes 0.
pub fn mrr(ranks: &[Option<usize>]) -> Result<f64, MatchError> {
    if ranks.is_empty() {
        return Err(MatchError::EmptyQuerySet);
    }
    let sum: f64 = ranks.iter().map(|r| r.map_or(0.0, |r| 1.0 / r as f64)).sum();
    Ok(sum / ranks.len() as f64)
}

/// Share of queries whose truth is ranked first.
pub fn top1(ranks: &[Option<usize>]) -> Result<f64, MatchError> {
    if ranks.is_empty() {
        return Err(MatchError::EmptyQuerySet);
    }
    Ok(ranks.iter().filter(|r| **r == Some(1)).count() as f64 / ranks.len() as f64)
}

/// Asks the reasoner to pick one candidate; returns its 0-based index.
pub fn reasoner_pick(query: &MatchQuery, reasoner: &mut Reasoner) -> Result<usize, ReasonerError> {
    let step = StepView::from_step(&TestStep::new(query.source.event.clone()));
    let req = DecisionRequest::new(
        DecisionKind::SelectEvent,
        DecisionContext {
            source_steps: vec![step],
            events: query.candidates.iter().map(|c| c.description.clone()).collect(),
            ..Default::default()
        },
    );
    match reasoner.decide(&req)? {
        DecisionReply::Event(n) => Ok(n - 1),
        other => unreachable!("select_event answered with {other:?}"),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryDoc {
    source: UiEvent,
    candidates: Vec<UiEvent>,
    #[serde(default)]
    truth_bounds: Option<Bounds>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetDoc {
    queries: Vec<QueryDoc>,
}

/// Loads a match dataset: `{"queries": [{"source", "candidates", "truth_bounds"}]}`.
pub fn load_dataset(doc: &str) -> Result<Vec<MatchQuery>, SchemaError> {
    let raw: DatasetDoc = from_json(doc)?;
    if raw.queries.is_empty() {
        return Err(SchemaError::new("queries", "must contain at least one query"));
    }
    let mut out = Vec::with_capacity(raw.queries.len());
    for (i, q) in raw.queries.into_iter().enumerate() {
        let check = |e: &UiEvent, path: String| e.validate().map_err(|err| SchemaError::new(path, err.to_string()));
        check(&q.source, format!("queries[{i}].source"))?;
        if q.candidates.is_empty() {
            return Err(SchemaError::new(format!("queries[{i}].candidates"), "must not be empty"));
        }
        for (j, c) in q.candidates.iter().enumerate() {
            check(c, format!("queries[{i}].candidates[{j}]"))?;
        }
        out.push(MatchQuery {
            source: Described::new(q.source),
            candidates: q.candidates.into_iter().map(Described::new).collect(),
            truth_bounds: q.truth_bounds,
        });
    }
    Ok(out)
}

pub fn load_dataset_file(path: &Path) -> Result<Vec<MatchQuery>, SchemaError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| SchemaError::new(path.display().to_string(), e.to_string()))?;
    load_dataset(&text)
}

/// `{n, top1, mrr}`; `mrr` is absent when the scorer only picks one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub n: usize,
    pub top1: f64,
    pub mrr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub source: String,
    pub chosen: String,
    pub rank_of_truth: Option<usize>,
    pub correct: bool,
}

/// Ranks every query with `scorer`.
pub fn evaluate_scorer(queries: &[MatchQuery], scorer: &dyn Scorer) -> Result<(MatchReport, Vec<QueryRow>), MatchError> {
    let mut ranks = Vec::with_capacity(queries.len());
    let mut rows = Vec::with_capacity(queries.len());
    for (i, q) in queries.iter().enumerate() {
        if q.candidates.is_empty() {
            return Err(MatchError::NoCandidates(i));
        }
        let r = rank(q, scorer);
        rows.push(QueryRow {
            source: q.source.description.clone(),
            chosen: q.candidates[r.order[0]].description.clone(),
            rank_of_truth: r.rank_of_truth,
            correct: r.rank_of_truth == Some(1),
        });
        ranks.push(r.rank_of_truth);
    }
    Ok((MatchReport { n: queries.len(), top1: top1(&ranks)?, mrr: Some(mrr(&ranks)?) }, rows))
}

#[derive(Debug, thiserror::Error)]
pub enum PickError {
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Reasoner(#[from] ReasonerError),
}

/// Lets the reasoner pick a candidate per query; Top-1 only.
pub fn evaluate_reasoner(queries: &[MatchQuery], reasoner: &mut Reasoner) -> Result<(MatchReport, Vec<QueryRow>), PickError> {
    if queries.is_empty() {
        return Err(MatchError::EmptyQuerySet.into());
    }
    let mut rows = Vec::with_capacity(queries.len());
    for q in queries {
        let pick = reasoner_pick(q, reasoner)?;
        rows.push(QueryRow {
            source: q.source.description.clone(),
            chosen: q.candidates[pick].description.clone(),
            rank_of_truth: None,
            correct: q.is_truth(pick),
        });
    }
    let top1 = rows.iter().filter(|r| r.correct).count() as f64 / rows.len() as f64;
    Ok((MatchReport { n: queries.len(), top1, mrr: None }, rows))
}

/// Per-query table as markdown.
pub fn render_rows(rows: &[QueryRow]) -> String {
    let mut out = String::from("| # | source | chosen | rank of truth | correct |\n|---|---|---|---|---|\n");
    for (i, r) in rows.iter().enumerate() {
        let rank = r.rank_of_truth.map_or("-".to_string(), |r| r.to_string());
        out.push_str(&format!("| {} | {} | {} | {} | {} |\n", i + 1, r.source, r.chosen, rank, r.correct));
    }
    out
}

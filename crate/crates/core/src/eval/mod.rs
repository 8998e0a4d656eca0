//! Functional oracles, success rate, and suite benchmarking.

mod oracle;
mod suite;

use serde::{Deserialize, Serialize};

use crate::planner::Classification;

pub use oracle::{judge, EventMatcher, Oracle, OracleCheck, OracleMismatch, Verdict};
pub use suite::{
    run_suite, Approach, Mapping, PairResult, ReasonerChoice, Row, Suite, SuiteError, SuitePair, SuiteReport,
    Taxonomy,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("empty suite")]
pub struct EmptySuite;

/// Passes over total.
pub fn success_rate(verdicts: &[Verdict]) -> Result<f64, EmptySuite> {
    if verdicts.is_empty() {
        return Err(EmptySuite);
    }
    Ok(verdicts.iter().filter(|v| v.passed()).count() as f64 / verdicts.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Precision, recall and F1; any 0/0 is 0.
pub fn precision_recall(c: &Classification) -> PrecisionRecall {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    PrecisionRecall { precision, recall, f1 }
}

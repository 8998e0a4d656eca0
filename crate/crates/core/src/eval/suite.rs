use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::oracle::{judge, Oracle, OracleMismatch, Verdict};
use super::{precision_recall, success_rate, PrecisionRecall};
use crate::matcher::LexicalScorer;
use crate::planner::{
    classify_trace, migrate_matcher, migrate_sail, migrate_target_ablation, migrate_trace_ablation, MigrationTrace,
    PlannerConfig, PlannerKind,
};
use crate::reasoner::{Backend, HeuristicBackend, Reasoner, RemoteBackend, RemoteConfig, ReplayBackend, Transcript};
use crate::sim::{reset, AppError, SimApp};
use crate::testcase::{from_json, SchemaError, TestCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mapping {
    #[serde(rename = "1to1")]
    OneToOne,
    #[serde(rename = "non1to1")]
    NonOneToOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Taxonomy {
    Extra,
    Missing,
    Reversed,
    Plain,
}

/// One manifest entry; paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuitePair {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub source_test: PathBuf,
    pub target_app: PathBuf,
    pub oracle: PathBuf,
    pub mapping: Mapping,
    pub taxonomy: Taxonomy,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestDoc {
    pairs: Vec<SuitePair>,
}

#[derive(Debug, Clone)]
pub struct LoadedPair {
    pub id: String,
    pub test: TestCase,
    pub app: Arc<SimApp>,
    pub oracle: Oracle,
    pub mapping: Mapping,
    pub taxonomy: Taxonomy,
}

#[derive(Debug, Clone)]
pub struct Suite {
    pub pairs: Vec<LoadedPair>,
}

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("{0}")]
    Schema(#[from] SchemaError),
    #[error("{path}: {source}")]
    App { path: String, source: AppError },
    #[error(transparent)]
    Oracle(#[from] OracleMismatch),
    #[error("empty suite")]
    Empty,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("writing report: {0}")]
    Io(#[from] std::io::Error),
}

impl Suite {
    /// Loads every pair named by the manifest and cross-checks oracles against apps.
    pub fn load(manifest: &Path) -> Result<Suite, SuiteError> {
        let text = std::fs::read_to_string(manifest)
            .map_err(|e| SchemaError::new(manifest.display().to_string(), e.to_string()))?;
        let doc: ManifestDoc = from_json(&text)?;
        if doc.pairs.is_empty() {
            return Err(SuiteError::Empty);
        }
        let base = manifest.parent().unwrap_or(Path::new("."));
        let mut apps: BTreeMap<PathBuf, Arc<SimApp>> = BTreeMap::new();
        let mut seen = HashSet::new();
        let mut pairs = Vec::with_capacity(doc.pairs.len());
        for (i, p) in doc.pairs.into_iter().enumerate() {
            let test = TestCase::load_file(&base.join(&p.source_test))?;
            let app_path = base.join(&p.target_app);
            let app = match apps.get(&app_path) {
                Some(a) => Arc::clone(a),
                None => {
                    let a = SimApp::load_file(&app_path)
                        .map_err(|source| SuiteError::App { path: app_path.display().to_string(), source })?
                        .into_shared();
                    apps.insert(app_path, Arc::clone(&a));
                    a
                }
            };
            let oracle = Oracle::load_file(&base.join(&p.oracle))?;
            oracle.validate(&app)?;
            let id = p.id.unwrap_or_else(|| test.id.clone());
            if !seen.insert(id.clone()) {
                return Err(SchemaError::new(format!("pairs[{i}].id"), format!("duplicate pair id {id:?}")).into());
            }
            pairs.push(LoadedPair { id, test, app, oracle, mapping: p.mapping, taxonomy: p.taxonomy });
        }
        Ok(Suite { pairs })
    }
}

/// How reasoner-driven planners get their decisions.
#[derive(Debug, Clone)]
pub enum ReasonerChoice {
    Heuristic,
    Remote(RemoteConfig),
    /// Transcripts from an earlier bench output directory.
    Replay(PathBuf),
}

impl ReasonerChoice {
    pub fn name(&self) -> &'static str {
        match self {
            ReasonerChoice::Heuristic => "heuristic",
            ReasonerChoice::Remote(_) => "remote",
            ReasonerChoice::Replay(_) => "replay",
        }
    }
}

/// A planner, plus the reasoner for planners that use one.
#[derive(Debug, Clone)]
pub struct Approach {
    pub planner: PlannerKind,
    pub reasoner: Option<ReasonerChoice>,
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.reasoner {
            Some(r) => write!(f, "{}/{}", self.planner, r.name()),
            None => write!(f, "{}", self.planner),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub pair: String,
    pub mapping: Mapping,
    pub taxonomy: Taxonomy,
    pub outcome: String,
    pub events: usize,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_recall: Option<PrecisionRecall>,
    #[serde(skip)]
    pub trace: Option<MigrationTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub approach: String,
    pub results: Vec<PairResult>,
    pub sr: f64,
    pub sr_1to1: Option<f64>,
    pub sr_non1to1: Option<f64>,
    /// Failed pairs per scenario tag; plain pairs count as `other`.
    pub failures: BTreeMap<String, usize>,
}

impl Row {
    fn new(approach: String, results: Vec<PairResult>) -> Row {
        let verdicts = |m: Option<Mapping>| -> Vec<Verdict> {
            results.iter().filter(|r| m.map_or(true, |m| r.mapping == m)).map(|r| r.verdict.clone()).collect()
        };
        let mut failures: BTreeMap<String, usize> =
            ["extra", "missing", "reversed", "other"].iter().map(|k| (k.to_string(), 0)).collect();
        for r in results.iter().filter(|r| !r.verdict.passed()) {
            let key = match r.taxonomy {
                Taxonomy::Extra => "extra",
                Taxonomy::Missing => "missing",
                Taxonomy::Reversed => "reversed",
                Taxonomy::Plain => "other",
            };
            *failures.get_mut(key).expect("all keys present") += 1;
        }
        Row {
            sr: success_rate(&verdicts(None)).unwrap_or(0.0),
            sr_1to1: success_rate(&verdicts(Some(Mapping::OneToOne))).ok(),
            sr_non1to1: success_rate(&verdicts(Some(Mapping::NonOneToOne))).ok(),
            failures,
            approach,
            results,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub pairs: usize,
    pub config: PlannerConfig,
    pub rows: Vec<Row>,
}

fn backend_for(choice: &ReasonerChoice, approach: &str, pair: &str, cfg: &PlannerConfig) -> Result<Arc<dyn Backend>, String> {
    Ok(match choice {
        ReasonerChoice::Heuristic => Arc::new(HeuristicBackend::new(cfg.heuristic())),
        ReasonerChoice::Remote(rc) => Arc::new(RemoteBackend::new(rc.clone()).map_err(|e| e.to_string())?),
        ReasonerChoice::Replay(dir) => {
            let path = recorded_transcript(dir, approach, pair)?;
            let t = Transcript::read_file(&path).map_err(|e| e.to_string())?;
            Arc::new(ReplayBackend::from_transcript(&t))
        }
    })
}

/// The transcript an earlier bench recorded for the same planner and pair,
/// taken from the first non-replay reasoner in name order.
fn recorded_transcript(dir: &Path, approach: &str, pair: &str) -> Result<PathBuf, String> {
    let planner = approach.split('/').next().unwrap_or(approach);
    let traces = dir.join("traces");
    let mut names: Vec<String> = std::fs::read_dir(&traces)
        .map_err(|e| format!("{}: {e}", traces.display()))?
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.strip_prefix(planner).and_then(|r| r.strip_prefix('-')).is_some_and(|r| r != "replay"))
        .collect();
    names.sort();
    names
        .iter()
        .map(|n| traces.join(n).join(pair).join("transcript.jsonl"))
        .find(|p| p.is_file())
        .ok_or_else(|| format!("no recorded {planner} transcript for {pair} under {}", traces.display()))
}

fn dir_name(approach: &str) -> String {
    approach.replace('/', "-")
}

fn run_pair(approach: &Approach, pair: &LoadedPair, cfg: &PlannerConfig) -> PairResult {
    let label = approach.to_string();
    let mut session = reset(&pair.app);
    let trace = match (&approach.reasoner, approach.planner) {
        (_, PlannerKind::Matcher) => migrate_matcher(&pair.test, &mut session, &LexicalScorer, cfg),
        (Some(choice), planner) => match backend_for(choice, &label, &pair.id, cfg) {
            Ok(backend) => {
                let mut reasoner = Reasoner::new(backend).with_history_window(cfg.history_window);
                match planner {
                    PlannerKind::Sail => migrate_sail(&pair.test, &mut session, &mut reasoner, cfg),
                    PlannerKind::Trace => migrate_trace_ablation(&pair.test, &mut session, &mut reasoner, cfg),
                    _ => migrate_target_ablation(&pair.test, &mut session, &mut reasoner, cfg),
                }
            }
            Err(detail) => {
                return PairResult {
                    pair: pair.id.clone(),
                    mapping: pair.mapping,
                    taxonomy: pair.taxonomy,
                    outcome: "error".into(),
                    events: 0,
                    verdict: Verdict::Fail { check: format!("reasoner: {detail}") },
                    precision_recall: None,
                    trace: None,
                }
            }
        },
        (None, _) => unreachable!("approaches are built with a reasoner for reasoner planners"),
    };
    let verdict = judge(&pair.oracle, &pair.app, &trace, &session.state()).expect("oracles are validated at load");
    let precision_recall = (!pair.oracle.ground_truth.is_empty())
        .then(|| precision_recall(&classify_trace(&trace.events, &pair.oracle.ground_truth)));
    PairResult {
        pair: pair.id.clone(),
        mapping: pair.mapping,
        taxonomy: pair.taxonomy,
        outcome: trace.outcome.label().to_string(),
        events: trace.events.len(),
        verdict,
        precision_recall,
        trace: Some(trace),
    }
}

/// Every planner (times every reasoner, for planners that use one) on
/// every pair. Results come back in manifest order whatever `jobs` is.
pub fn run_suite(
    suite: &Suite,
    planners: &[PlannerKind],
    reasoners: &[ReasonerChoice],
    cfg: &PlannerConfig,
    jobs: usize,
) -> Result<SuiteReport, SuiteError> {
    if suite.pairs.is_empty() {
        return Err(SuiteError::Empty);
    }
    if planners.is_empty() {
        return Err(SuiteError::Config("no planners given".into()));
    }
    cfg.validate().map_err(|e| SuiteError::Config(e.to_string()))?;
    let mut approaches = Vec::new();
    for &p in planners {
        if p == PlannerKind::Replay {
            return Err(SuiteError::Config("replay is not a benchmark planner".into()));
        }
        if p.uses_reasoner() {
            if reasoners.is_empty() {
                return Err(SuiteError::Config(format!("planner {p} needs at least one reasoner")));
            }
            approaches.extend(reasoners.iter().map(|r| Approach { planner: p, reasoner: Some(r.clone()) }));
        } else {
            approaches.push(Approach { planner: p, reasoner: None });
        }
    }
    let mut labels = HashSet::new();
    approaches.retain(|a| labels.insert(a.to_string()));

    let work: Vec<(usize, usize)> =
        (0..approaches.len()).flat_map(|a| (0..suite.pairs.len()).map(move |p| (a, p))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SuiteError::Config(e.to_string()))?;
    let results: Vec<PairResult> =
        pool.install(|| work.par_iter().map(|&(a, p)| run_pair(&approaches[a], &suite.pairs[p], cfg)).collect());

    let mut results = results.into_iter();
    let rows = approaches
        .iter()
        .map(|a| Row::new(a.to_string(), results.by_ref().take(suite.pairs.len()).collect()))
        .collect();
    Ok(SuiteReport { pairs: suite.pairs.len(), config: *cfg, rows })
}

fn pct(v: Option<f64>) -> String {
    v.map_or("-".to_string(), |v| format!("{:.1}", v * 100.0))
}

impl SuiteReport {
    pub fn row(&self, approach: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.approach == approach)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Approach | Overall SR | 1-to-1 SR | Non-1-to-1 SR |\n|---|---|---|---|\n");
        for r in &self.rows {
            out.push_str(&format!("| {} | {} | {} | {} |\n", r.approach, pct(Some(r.sr)), pct(r.sr_1to1), pct(r.sr_non1to1)));
        }
        out.push_str("\nFailed pairs by scenario:\n\n| Approach | extra | missing | reversed | other |\n|---|---|---|---|---|\n");
        for r in &self.rows {
            let f = |k: &str| r.failures.get(k).copied().unwrap_or(0);
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                r.approach,
                f("extra"),
                f("missing"),
                f("reversed"),
                f("other")
            ));
        }
        out.push_str("\nPer pair:\n\n| Approach | Pair | Scenario | Outcome | Events | Verdict | P | R | F1 |\n|---|---|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            for p in &r.results {
                let verdict = match &p.verdict {
                    Verdict::Pass => "pass".to_string(),
                    Verdict::Fail { check } => format!("fail ({check})"),
                };
                let (pr, rc, f1) = match p.precision_recall {
                    Some(x) => (format!("{:.2}", x.precision), format!("{:.2}", x.recall), format!("{:.2}", x.f1)),
                    None => ("-".into(), "-".into(), "-".into()),
                };
                let scenario = serde_json::to_value(p.taxonomy).expect("tag serializes");
                out.push_str(&format!(
                    "| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                    r.approach,
                    p.pair,
                    scenario.as_str().unwrap_or_default(),
                    p.outcome,
                    p.events,
                    verdict,
                    pr,
                    rc,
                    f1
                ));
            }
        }
        out
    }

    /// Writes `report.json`, `report.md` and one trace directory per run under `traces/`.
    pub fn write(&self, dir: &Path) -> Result<(), SuiteError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        std::fs::write(dir.join("report.md"), self.to_markdown())?;
        for r in &self.rows {
            for p in &r.results {
                if let Some(t) = &p.trace {
                    t.write_report(&dir.join("traces").join(dir_name(&r.approach)).join(&p.pair))?;
                }
            }
        }
        Ok(())
    }
}

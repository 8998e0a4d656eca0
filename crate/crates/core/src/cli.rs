//! Command-line front end. `sail migrate | bench | match-eval | parse`.
//!
//! Exit codes: 0 success, 1 migration failed, 2 operator or configuration
//! error, 3 infrastructure error. Settings resolve flags > environment >
//! `--config` TOML file > defaults.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::driver::{Driver, EnrichingDriver};
use crate::eval::{judge, run_suite, Oracle, ReasonerChoice, Suite, SuiteError};
use crate::matcher::{evaluate_reasoner, evaluate_scorer, load_dataset_file, render_rows, LexicalScorer};
use crate::planner::{
    migrate_matcher, migrate_sail, migrate_target_ablation, migrate_trace_ablation, Outcome, PlannerConfig,
    PlannerKind,
};
use crate::reasoner::{
    render_event_list, Backend, DescriptionCache, FixtureProvider, HeuristicBackend, Reasoner,
    RemoteBackend, RemoteConfig, ReplayBackend, Transcript,
};
use crate::sim::{reset, SimApp};
use crate::testcase::TestCase;
use crate::ui::{describe_event, extract_events, parse_hierarchy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFRA: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sail", version, about = "Migrate UI tests between apps with goal and skill reasoning")]
pub struct Cli {
    /// TOML file whose keys mirror the long flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Migrate one source test onto a simulated target app.
    Migrate(MigrateArgs),
    /// Run planners over a suite manifest and write SR tables.
    Bench(BenchArgs),
    /// Score event matching on a labelled dataset.
    MatchEval(MatchEvalArgs),
    /// Parse a hierarchy dump and print a summary.
    Parse(ParseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlannerArg {
    Sail,
    Trace,
    Target,
    Matcher,
}

impl From<PlannerArg> for PlannerKind {
    fn from(p: PlannerArg) -> Self {
        match p {
            PlannerArg::Sail => PlannerKind::Sail,
            PlannerArg::Trace => PlannerKind::Trace,
            PlannerArg::Target => PlannerKind::Target,
            PlannerArg::Matcher => PlannerKind::Matcher,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReasonerArg {
    Heuristic,
    Replay,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerArg {
    Lexical,
    Reasoner,
}

/// Planner knobs shared by `migrate` and `bench`.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct TuningArgs {
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub skill_threshold: Option<f64>,
    #[arg(long)]
    pub done_threshold: Option<f64>,
    #[arg(long)]
    pub history_window: Option<usize>,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct RemoteArgs {
    /// Base URL of a chat-completions endpoint.
    #[arg(long)]
    pub reasoner_url: Option<String>,
    #[arg(long)]
    pub reasoner_model: Option<String>,
}

#[derive(Debug, clap::Args)]
pub struct MigrateArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub app: PathBuf,
    #[arg(long, value_enum, default_value = "sail")]
    pub planner: PlannerArg,
    #[arg(long, value_enum, default_value = "heuristic")]
    pub reasoner: ReasonerArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Recorded transcript for `--reasoner replay`.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Oracle document; the verdict is written to `verdict.json`.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    /// JSON table of element hash to description for icon-only elements.
    #[arg(long)]
    pub descriptions: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[command(flatten)]
    pub remote: RemoteArgs,
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub suite: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "sail,matcher")]
    pub planners: Vec<PlannerArg>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "heuristic")]
    pub reasoners: Vec<ReasonerArg>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Earlier bench output whose transcripts `--reasoners replay` reads.
    #[arg(long)]
    pub replay_dir: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[command(flatten)]
    pub remote: RemoteArgs,
}

#[derive(Debug, clap::Args)]
pub struct MatchEvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value = "lexical")]
    pub scorer: ScorerArg,
    /// Backend for `--scorer reasoner`.
    #[arg(long, value_enum, default_value = "heuristic")]
    pub reasoner: ReasonerArg,
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub remote: RemoteArgs,
}

#[derive(Debug, clap::Args)]
pub struct ParseArgs {
    #[arg(long)]
    pub dump: PathBuf,
    /// Print the numbered event list as prompts render it.
    #[arg(long)]
    pub events: bool,
}

/// Keys of the `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub max_steps: Option<usize>,
    pub tau: Option<f64>,
    pub skill_threshold: Option<f64>,
    pub done_threshold: Option<f64>,
    pub history_window: Option<usize>,
    pub jobs: Option<usize>,
    pub reasoner_url: Option<String>,
    pub reasoner_model: Option<String>,
    pub reasoner_api_key: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Infra(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Infra(_) => EXIT_INFRA,
        }
    }
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn infra(msg: impl std::fmt::Display) -> CliError {
    CliError::Infra(msg.to_string())
}

fn planner_config(t: &TuningArgs, file: &FileConfig) -> Result<PlannerConfig, CliError> {
    let d = PlannerConfig::default();
    let cfg = PlannerConfig {
        max_steps: t.max_steps.or(file.max_steps).unwrap_or(d.max_steps),
        tau: t.tau.or(file.tau).unwrap_or(d.tau),
        skill_threshold: t.skill_threshold.or(file.skill_threshold).unwrap_or(d.skill_threshold),
        done_threshold: t.done_threshold.or(file.done_threshold).unwrap_or(d.done_threshold),
        history_window: t.history_window.or(file.history_window).unwrap_or(d.history_window),
    };
    cfg.validate().map_err(|e| config(e.to_string()))?;
    Ok(cfg)
}

/// Remote endpoint settings: flags, then environment, then the config file.
pub fn remote_config(flags: &RemoteArgs, file: &FileConfig) -> Result<RemoteConfig, CliError> {
    let env = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
    let url = flags.reasoner_url.clone().or_else(|| env(crate::reasoner::ENV_URL)).or_else(|| file.reasoner_url.clone());
    let model =
        flags.reasoner_model.clone().or_else(|| env(crate::reasoner::ENV_MODEL)).or_else(|| file.reasoner_model.clone());
    let (Some(url), Some(model)) = (url, model) else {
        return Err(config(format!(
            "the remote reasoner needs a URL and a model (--reasoner-url/--reasoner-model, {}/{}, or the config file)",
            crate::reasoner::ENV_URL,
            crate::reasoner::ENV_MODEL
        )));
    };
    let mut rc = RemoteConfig::new(url, model);
    rc.api_key = env(crate::reasoner::ENV_API_KEY).or_else(|| file.reasoner_api_key.clone());
    Ok(rc)
}

fn backend(
    kind: ReasonerArg,
    transcript: Option<&Path>,
    remote: &RemoteArgs,
    file: &FileConfig,
    cfg: &PlannerConfig,
) -> Result<Arc<dyn Backend>, CliError> {
    Ok(match kind {
        ReasonerArg::Heuristic => Arc::new(HeuristicBackend::new(cfg.heuristic())),
        ReasonerArg::Replay => {
            let path = transcript.ok_or_else(|| config("--reasoner replay needs --transcript"))?;
            let t = Transcript::read_file(path).map_err(|e| config(e.to_string()))?;
            Arc::new(ReplayBackend::from_transcript(&t))
        }
        ReasonerArg::Remote => Arc::new(RemoteBackend::new(remote_config(remote, file)?).map_err(infra)?),
    })
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    path.map_or(Ok(FileConfig::default()), FileConfig::load)
}

pub fn cmd_migrate(args: &MigrateArgs, file: &FileConfig) -> Result<i32, CliError> {
    let cfg = planner_config(&args.tuning, file)?;
    let source = TestCase::load_file(&args.source).map_err(|e| config(format!("--source: {e}")))?;
    let app = SimApp::load_file(&args.app).map_err(|e| config(format!("--app: {e}")))?.into_shared();
    let oracle = match &args.oracle {
        Some(p) => {
            let o = Oracle::load_file(p).map_err(|e| config(format!("--oracle: {e}")))?;
            o.validate(&app).map_err(|e| config(e.to_string()))?;
            Some(o)
        }
        None => None,
    };
    let provider = match &args.descriptions {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| config(format!("--descriptions: {e}")))?;
            Some(Arc::new(FixtureProvider::from_json(&text).map_err(|e| config(format!("--descriptions: {e}")))?))
        }
        None => None,
    };

    let mut session = reset(&app);
    let trace = {
        let mut enriching;
        let driver: &mut dyn Driver = match &provider {
            Some(p) => {
                enriching = EnrichingDriver::new(&mut session, p.clone(), Arc::new(DescriptionCache::default()));
                &mut enriching
            }
            None => &mut session,
        };
        let planner = PlannerKind::from(args.planner);
        if planner == PlannerKind::Matcher {
            migrate_matcher(&source, driver, &LexicalScorer, &cfg)
        } else {
            let b = backend(args.reasoner, args.transcript.as_deref(), &args.remote, file, &cfg)?;
            let mut reasoner = Reasoner::new(b).with_history_window(cfg.history_window);
            match planner {
                PlannerKind::Sail => migrate_sail(&source, driver, &mut reasoner, &cfg),
                PlannerKind::Trace => migrate_trace_ablation(&source, driver, &mut reasoner, &cfg),
                _ => migrate_target_ablation(&source, driver, &mut reasoner, &cfg),
            }
        }
    };
    trace.write_report(&args.out).map_err(|e| infra(format!("writing {}: {e}", args.out.display())))?;
    print!("{}", trace.summary());

    let mut passed = true;
    if let Some(o) = &oracle {
        let verdict = judge(o, &app, &trace, &session.state()).map_err(|e| config(e.to_string()))?;
        let mut json = serde_json::to_string_pretty(&verdict).expect("verdict serializes");
        json.push('\n');
        std::fs::write(args.out.join("verdict.json"), json).map_err(infra)?;
        println!("verdict: {}", if verdict.passed() { "pass".to_string() } else { format!("{verdict:?}") });
        passed = verdict.passed();
    }
    Ok(match &trace.outcome {
        Outcome::Error { detail } => return Err(infra(format!("migration aborted: {detail}"))),
        Outcome::GoalReached if passed => EXIT_OK,
        _ => EXIT_FAILED,
    })
}

pub fn cmd_bench(args: &BenchArgs, file: &FileConfig) -> Result<i32, CliError> {
    let cfg = planner_config(&args.tuning, file)?;
    let suite = Suite::load(&args.suite).map_err(|e| match e {
        SuiteError::Io(e) => infra(e),
        other => config(other.to_string()),
    })?;
    let mut reasoners = Vec::new();
    for r in &args.reasoners {
        reasoners.push(match r {
            ReasonerArg::Heuristic => ReasonerChoice::Heuristic,
            ReasonerArg::Remote => ReasonerChoice::Remote(remote_config(&args.remote, file)?),
            ReasonerArg::Replay => ReasonerChoice::Replay(
                args.replay_dir.clone().ok_or_else(|| config("--reasoners replay needs --replay-dir"))?,
            ),
        });
    }
    let planners: Vec<PlannerKind> = args.planners.iter().map(|&p| p.into()).collect();
    let jobs = args.jobs.or(file.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(config("--jobs must be at least 1"));
    }
    let report = run_suite(&suite, &planners, &reasoners, &cfg, jobs).map_err(|e| config(e.to_string()))?;
    report.write(&args.out).map_err(infra)?;
    print!("{}", report.to_markdown());
    let errored = report.rows.iter().flat_map(|r| &r.results).filter(|p| p.outcome == "error").count();
    if errored > 0 {
        return Err(infra(format!("{errored} migration(s) ended in an infrastructure error")));
    }
    Ok(EXIT_OK)
}

pub fn cmd_match_eval(args: &MatchEvalArgs, file: &FileConfig) -> Result<i32, CliError> {
    let queries = load_dataset_file(&args.dataset).map_err(|e| config(format!("--dataset: {e}")))?;
    let (report, rows) = match args.scorer {
        ScorerArg::Lexical => evaluate_scorer(&queries, &LexicalScorer).map_err(|e| config(e.to_string()))?,
        ScorerArg::Reasoner => {
            let cfg = PlannerConfig::default();
            let b = backend(args.reasoner, args.transcript.as_deref(), &args.remote, file, &cfg)?;
            let mut reasoner = Reasoner::new(b);
            let out = evaluate_reasoner(&queries, &mut reasoner).map_err(infra)?;
            std::fs::create_dir_all(&args.out).map_err(infra)?;
            std::fs::write(args.out.join("transcript.jsonl"), reasoner.transcript().to_jsonl()).map_err(infra)?;
            out
        }
    };
    std::fs::create_dir_all(&args.out).map_err(infra)?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    std::fs::write(args.out.join("report.json"), &json).map_err(infra)?;
    std::fs::write(args.out.join("rows.md"), render_rows(&rows)).map_err(infra)?;
    print!("{json}");
    Ok(EXIT_OK)
}

pub fn cmd_parse(args: &ParseArgs) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&args.dump).map_err(|e| config(format!("{}: {e}", args.dump.display())))?;
    let screen = parse_hierarchy(&text).map_err(|e| config(format!("{}: {e}", args.dump.display())))?;
    let elements = screen.elements();
    println!("activity: {}", screen.activity);
    println!("elements: {}", elements.len());
    println!("interactable: {}", elements.iter().filter(|e| e.is_interactable()).count());
    println!("digest: {}", screen.raw_digest);
    if args.events {
        let described = extract_events(&screen)
            .iter()
            .map(|e| describe_event(e, &screen))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| config(e.to_string()))?;
        print!("{}", render_event_list(&described));
    }
    Ok(EXIT_OK)
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = load_file_config(cli.config.as_deref()).and_then(|file| match &cli.command {
        Command::Migrate(a) => cmd_migrate(a, &file),
        Command::Bench(a) => cmd_bench(a, &file),
        Command::MatchEval(a) => cmd_match_eval(a, &file),
        Command::Parse(a) => cmd_parse(a),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flag_over_file_over_default() {
        let file = FileConfig { max_steps: Some(7), tau: Some(0.3), ..Default::default() };
        let flags = TuningArgs { max_steps: Some(9), ..Default::default() };
        let cfg = planner_config(&flags, &file).unwrap();
        assert_eq!((cfg.max_steps, cfg.tau, cfg.done_threshold), (9, 0.3, 0.5));
    }

    #[test]
    fn invalid_tuning_is_config_error() {
        let flags = TuningArgs { tau: Some(1.5), ..Default::default() };
        assert!(matches!(planner_config(&flags, &FileConfig::default()), Err(CliError::Config(_))));
    }

    #[test]
    fn file_config_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sail.toml");
        std::fs::write(&p, "max-steps = 12\nreasoner-url = \"http://x\"\n").unwrap();
        assert_eq!(FileConfig::load(&p).unwrap().max_steps, Some(12));
        std::fs::write(&p, "max_stepz = 12\n").unwrap();
        assert!(FileConfig::load(&p).is_err());
    }

    #[test]
    fn remote_flags_win() {
        let flags = RemoteArgs { reasoner_url: Some("http://flag".into()), reasoner_model: Some("m".into()) };
        let file = FileConfig { reasoner_url: Some("http://file".into()), ..Default::default() };
        let rc = remote_config(&flags, &file).unwrap();
        assert_eq!(rc.base_url, "http://flag");
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["sail", "migrate", "--source", "x.json", "--out", "o"]), EXIT_CONFIG);
        assert_eq!(run(["sail", "frobnicate"]), EXIT_CONFIG);
        assert_eq!(run(["sail", "parse", "--dump", "x", "--bogus"]), EXIT_CONFIG);
        assert_eq!(run(["sail", "--help"]), EXIT_OK);
    }
}

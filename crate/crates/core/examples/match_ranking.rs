//! Ranks candidate widgets for each query of the matching dataset, then
//! asks the reasoner to pick one instead.
//!
//! ```bash
//! cargo run --example match_ranking
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use sail::matcher::{evaluate_reasoner, evaluate_scorer, load_dataset_file, render_rows, LexicalScorer};
use sail::reasoner::{HeuristicBackend, HeuristicConfig, Reasoner};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dataset = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/match/dataset.json");
    let queries = load_dataset_file(&dataset)?;

    let (report, rows) = evaluate_scorer(&queries, &LexicalScorer)?;
    println!("lexical: {}", serde_json::to_string(&report)?);
    print!("{}", render_rows(&rows[..5.min(rows.len())]));

    let mut reasoner = Reasoner::new(Arc::new(HeuristicBackend::new(HeuristicConfig::default())));
    let (report, _) = evaluate_reasoner(&queries, &mut reasoner)?;
    println!("reasoner pick: {}", serde_json::to_string(&report)?);
    Ok(())
}

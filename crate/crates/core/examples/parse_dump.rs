//! Parses a UI hierarchy dump, lists the events it offers, and shows the
//! canonical serialization.
//!
//! ```bash
//! cargo run --example parse_dump [path/to/dump.xml]
//! ```

use std::path::PathBuf;

use sail::ui::{describe_event, element_hash, extract_events, parse_hierarchy, serialize_hierarchy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/dumps/settings_list.xml"));
    let screen = parse_hierarchy(&std::fs::read_to_string(&path)?)?;
    println!("activity {}", screen.activity);

    for e in screen.elements().iter().filter(|e| e.is_interactable()) {
        let label = e.text.as_deref().or(e.content_desc.as_deref()).unwrap_or("-");
        println!("  {:<32} {:<24} {}", e.class_role, label, &element_hash(e)[..12]);
    }
    for (i, ev) in extract_events(&screen).iter().enumerate() {
        println!("{}. {}", i + 1, describe_event(ev, &screen)?);
    }

    let canonical = serialize_hierarchy(&screen);
    assert_eq!(serialize_hierarchy(&parse_hierarchy(&canonical)?), canonical);
    println!("{} bytes canonical", canonical.len());
    Ok(())
}

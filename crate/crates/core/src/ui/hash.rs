use sha2::{Digest, Sha256};

use super::UiElement;

/// Structural identity of an element, stable across screens and dumps.
///
/// Covers class, resource id, bounds size (not position), and the multiset
/// of text and content descriptions in the element's subtree.
pub fn element_hash(e: &UiElement) -> String {
    let mut texts: Vec<String> = Vec::new();
    for n in e.preorder() {
        texts.extend(n.text.iter().map(|t| format!("t:{t}")));
        texts.extend(n.content_desc.iter().map(|d| format!("d:{d}")));
    }
    texts.sort();

    let mut h = Sha256::new();
    let mut field = |bytes: &[u8]| {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    };
    field(e.class_role.as_bytes());
    field(e.resource_id.as_deref().unwrap_or("").as_bytes());
    field(&e.bounds.width().to_le_bytes());
    field(&e.bounds.height().to_le_bytes());
    field(&(texts.len() as u64).to_le_bytes());
    for t in &texts {
        field(t.as_bytes());
    }
    hex::encode(h.finalize())
}

//! Tokenization and the overlap scores shared by the matcher and the
//! heuristic reasoner.

use std::collections::BTreeSet;

/// Function words dropped before comparing descriptions.
pub const STOPWORDS: [&str; 9] = ["the", "a", "an", "to", "of", "on", "in", "and", "or"];

/// Lowercased alphanumeric runs, stopwords removed, as a set.
pub fn tokens(s: &str) -> BTreeSet<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .collect()
}

/// Jaccard similarity of the token sets. Two empty descriptions are identical.
pub fn lexical_similarity(a: &str, b: &str) -> f64 {
    let (ta, tb) = (tokens(a), tokens(b));
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    let inter = ta.intersection(&tb).count();
    let union = ta.union(&tb).count();
    inter as f64 / union as f64
}

/// Fraction of the reference step's tokens present in the event description.
pub fn step_overlap(event: &str, step: &str) -> f64 {
    let step_tokens = tokens(step);
    if step_tokens.is_empty() {
        return 0.0;
    }
    let ev = tokens(event);
    step_tokens.intersection(&ev).count() as f64 / step_tokens.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenization() {
        let t: Vec<_> = tokens("Type 'Hello' into the com.app:id/search_box").into_iter().collect();
        assert_eq!(t, vec!["app", "box", "com", "hello", "id", "into", "search", "type"]);
    }

    #[test]
    fn jaccard_cases() {
        assert_eq!(lexical_similarity("click 'Settings'", "click 'Settings'"), 1.0);
        assert_eq!(lexical_similarity("click 'Settings'", "type 'hello' into 'search'"), 0.0);
        assert_eq!(lexical_similarity("click 'font size'", "click 'text size'"), 0.5);
        assert_eq!(lexical_similarity("", "the"), 1.0);
        assert_eq!(lexical_similarity("", "x"), 0.0);
    }

    #[test]
    fn overlap_is_directional() {
        assert_eq!(step_overlap("click 'Top news'", "click 'Read top story'"), 0.5);
        assert_eq!(step_overlap("click 'Read top story'", "click 'Top news'"), 2.0 / 3.0);
        assert_eq!(step_overlap("anything", "the of"), 0.0);
    }

    proptest::proptest! {
        #[test]
        fn jaccard_symmetric_bounded(a in "[a-z ]{0,30}", b in "[a-z ]{0,30}") {
            let s = lexical_similarity(&a, &b);
            proptest::prop_assert_eq!(s, lexical_similarity(&b, &a));
            proptest::prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}

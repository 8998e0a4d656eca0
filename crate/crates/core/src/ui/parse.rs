use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::{Bounds, UiElement, UiScreen};

/// A dump that could not be turned into a [`UiScreen`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed dump at {line}:{column}: {message}")]
pub struct MalformedDump {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

fn malformed(doc: &roxmltree::Document, node: roxmltree::Node, message: impl Into<String>) -> MalformedDump {
    let pos = doc.text_pos_at(node.range().start);
    MalformedDump { line: pos.row, column: pos.col, message: message.into() }
}

/// Parses a uiautomator-style hierarchy dump.
///
/// Missing boolean attributes default to `false`, missing or empty string
/// attributes to `None`. Several top-level nodes are wrapped in a synthetic
/// `hierarchy` node spanning their union.
pub fn parse_hierarchy(xml_text: &str) -> Result<UiScreen, MalformedDump> {
    let doc = roxmltree::Document::parse(xml_text).map_err(|e| {
        let pos = e.pos();
        MalformedDump { line: pos.row, column: pos.col, message: e.to_string() }
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "hierarchy" {
        return Err(malformed(&doc, root, format!("expected <hierarchy>, found <{}>", root.tag_name().name())));
    }
    let activity = root
        .attribute("activity")
        .filter(|a| !a.trim().is_empty())
        .unwrap_or("unknown")
        .to_string();

    let mut tops = Vec::new();
    for child in root.children().filter(|n| n.is_element()) {
        tops.push(parse_node(&doc, child)?);
    }
    let root_element = match tops.len() {
        0 => return Err(malformed(&doc, root, "no root node")),
        1 => tops.pop().unwrap(),
        _ => {
            let bounds = tops.iter().skip(1).fold(tops[0].bounds, |acc, e| Bounds {
                x1: acc.x1.min(e.bounds.x1),
                y1: acc.y1.min(e.bounds.y1),
                x2: acc.x2.max(e.bounds.x2),
                y2: acc.y2.max(e.bounds.y2),
            });
            let mut wrapper = UiElement::new("hierarchy", bounds);
            wrapper.enabled = false;
            wrapper.children = tops;
            wrapper
        }
    };
    Ok(UiScreen::new(activity, root_element))
}

fn parse_node(doc: &roxmltree::Document, node: roxmltree::Node) -> Result<UiElement, MalformedDump> {
    if node.tag_name().name() != "node" {
        return Err(malformed(doc, node, format!("unexpected element <{}>", node.tag_name().name())));
    }
    let opt = |name: &str| node.attribute(name).filter(|v| !v.is_empty()).map(str::to_string);
    let flag = |name: &str| -> Result<bool, MalformedDump> {
        match node.attribute(name) {
            None => Ok(false),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(malformed(doc, node, format!("attribute {name}={other:?} is not a boolean"))),
        }
    };
    let bounds_text = node
        .attribute("bounds")
        .ok_or_else(|| malformed(doc, node, "missing bounds attribute"))?;
    let bounds: Bounds =
        bounds_text.parse().map_err(|e: super::BoundsError| malformed(doc, node, e.to_string()))?;

    let mut children = Vec::new();
    for child in node.children().filter(|n| n.is_element()) {
        children.push(parse_node(doc, child)?);
    }
    Ok(UiElement {
        class_role: opt("class").unwrap_or_default(),
        resource_id: opt("resource-id"),
        text: opt("text"),
        content_desc: opt("content-desc"),
        bounds,
        clickable: flag("clickable")?,
        long_clickable: flag("long-clickable")?,
        scrollable: flag("scrollable")?,
        editable: flag("editable")?,
        enabled: flag("enabled")?,
        children,
        vision_desc: opt("vision-desc"),
    })
}

/// Canonical serialization in the dump dialect accepted by [`parse_hierarchy`].
pub fn serialize_hierarchy(screen: &UiScreen) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<hierarchy activity=\"{}\">", escape(&screen.activity));
    write_node(&mut out, &screen.root, 1);
    out.push_str("</hierarchy>\n");
    out
}

fn write_node(out: &mut String, e: &UiElement, depth: usize) {
    let pad = "  ".repeat(depth);
    let _ = write!(out, "{pad}<node class=\"{}\"", escape(&e.class_role));
    for (name, value) in [
        ("resource-id", &e.resource_id),
        ("text", &e.text),
        ("content-desc", &e.content_desc),
        ("vision-desc", &e.vision_desc),
    ] {
        if let Some(v) = value {
            let _ = write!(out, " {name}=\"{}\"", escape(v));
        }
    }
    let _ = write!(out, " bounds=\"{}\"", e.bounds);
    for (name, value) in [
        ("clickable", e.clickable),
        ("long-clickable", e.long_clickable),
        ("scrollable", e.scrollable),
        ("editable", e.editable),
        ("enabled", e.enabled),
    ] {
        let _ = write!(out, " {name}=\"{value}\"");
    }
    if e.children.is_empty() {
        out.push_str("/>\n");
    } else {
        out.push_str(">\n");
        for c in &e.children {
            write_node(out, c, depth + 1);
        }
        let _ = writeln!(out, "{pad}</node>");
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"<hierarchy activity="Main"><node class="android.widget.Button" text="Settings" bounds="[0,0][100,50]" clickable="true" enabled="true"/></hierarchy>"#;

    #[test]
    fn single_node() {
        let s = parse_hierarchy(ONE).unwrap();
        assert_eq!(s.activity, "Main");
        assert_eq!(s.elements().len(), 1);
        assert!(s.root.clickable);
        assert_eq!(s.root.text.as_deref(), Some("Settings"));
        assert_eq!(s.root.resource_id, None);
        assert!(!s.root.scrollable);
    }

    #[test]
    fn empty_hierarchy_rejected() {
        let err = parse_hierarchy("<hierarchy/>").unwrap_err();
        assert!(err.message.contains("no root node"));
        assert_eq!((err.line, err.column), (1, 1));
    }

    #[test]
    fn inverted_bounds_rejected_with_position() {
        let xml = "<hierarchy>\n  <node class=\"x\" bounds=\"[30,10][10,10]\"/>\n</hierarchy>";
        let err = parse_hierarchy(xml).unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.column, 3);
        assert!(err.message.contains("inverted"));
    }

    #[test]
    fn activity_defaults_to_unknown() {
        let s = parse_hierarchy(r#"<hierarchy><node bounds="[0,0][1,1]"/></hierarchy>"#).unwrap();
        assert_eq!(s.activity, "unknown");
    }

    #[test]
    fn unknown_attributes_ignored() {
        let xml = r#"<hierarchy><node index="0" package="p" checkable="false" bounds="[0,0][1,1]"/></hierarchy>"#;
        assert!(parse_hierarchy(xml).is_ok());
    }

    #[test]
    fn bad_boolean_rejected() {
        let xml = r#"<hierarchy><node clickable="yes" bounds="[0,0][1,1]"/></hierarchy>"#;
        assert!(parse_hierarchy(xml).unwrap_err().message.contains("boolean"));
    }

    #[test]
    fn multiple_tops_wrapped() {
        let xml = r#"<hierarchy><node bounds="[0,0][10,10]"/><node bounds="[5,5][20,30]"/></hierarchy>"#;
        let s = parse_hierarchy(xml).unwrap();
        assert_eq!(s.root.class_role, "hierarchy");
        assert_eq!(s.root.bounds.to_string(), "[0,0][20,30]");
        assert_eq!(parse_hierarchy(&serialize_hierarchy(&s)).unwrap(), s);
    }

    #[test]
    fn round_trip_with_escapes() {
        let xml = r#"<hierarchy activity="A&amp;B"><node class="c" text="a &lt;b&gt; &quot;q&quot; it's" bounds="[0,0][1,1]"><node class="d" bounds="[0,0][1,1]"/></node></hierarchy>"#;
        let s = parse_hierarchy(xml).unwrap();
        assert_eq!(s.root.text.as_deref(), Some("a <b> \"q\" it's"));
        let again = parse_hierarchy(&serialize_hierarchy(&s)).unwrap();
        assert_eq!(again, s);
    }
}

use super::{Action, ElementRef, UiElement, UiEvent, UiScreen};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("event target {0} matches nothing on the screen")]
pub struct UnresolvedTarget(pub String);

/// Interactable events of a screen in document pre-order, followed by one `back`.
///
/// A non-interactable descendant lying inside an interactable ancestor is
/// folded into that ancestor's label (see [`element_label`]) and yields no
/// event. Disabled elements yield nothing.
pub fn extract_events(screen: &UiScreen) -> Vec<UiEvent> {
    let elements = screen.elements();
    let mut events = Vec::new();
    for e in &elements {
        if !e.is_interactable() {
            continue;
        }
        let target = reference_for(e, &elements);
        for action in [Action::Click, Action::LongClick, Action::Input, Action::Swipe] {
            if e.supports(action) {
                events.push(UiEvent {
                    action,
                    target: Some(target.clone()),
                    value: None,
                    direction: None,
                });
            }
        }
    }
    events.push(UiEvent::back());
    events
}

fn reference_for(e: &UiElement, all: &[&UiElement]) -> ElementRef {
    let mut r = ElementRef {
        resource_id: e.resource_id.clone(),
        text: e.text.clone(),
        content_desc: e.content_desc.clone(),
        class_role: Some(e.class_role.clone()),
        bounds: Some(e.bounds),
        index: None,
    };
    let matches: Vec<_> = all.iter().filter(|c| r.matches(c)).collect();
    if matches.len() > 1 {
        r.index = matches.iter().position(|c| std::ptr::eq(**c, e));
    }
    r
}

fn tail(s: &str, sep: char) -> &str {
    s.rsplit(sep).next().unwrap_or(s)
}

/// Text carried by non-interactable descendants inside `e`'s bounds.
fn aggregated_text(e: &UiElement) -> Option<String> {
    fn walk(parent: &UiElement, outer: &UiElement, acc: &mut Vec<String>) {
        for c in &parent.children {
            if c.is_interactable() {
                continue;
            }
            if outer.bounds.contains(&c.bounds) {
                acc.extend(c.text.iter().cloned());
                acc.extend(c.content_desc.iter().cloned());
            }
            walk(c, outer, acc);
        }
    }
    let mut acc = Vec::new();
    walk(e, e, &mut acc);
    (!acc.is_empty()).then(|| acc.join(" "))
}

/// Best human-readable descriptor of an element:
/// text > content-desc > vision description > text folded in from
/// descendants > resource-id tail > class name.
pub fn element_label(e: &UiElement) -> String {
    e.text
        .clone()
        .or_else(|| e.content_desc.clone())
        .or_else(|| e.vision_desc.clone())
        .or_else(|| aggregated_text(e))
        .or_else(|| e.resource_id.as_deref().map(|r| tail(r, '/').to_string()))
        .unwrap_or_else(|| tail(&e.class_role, '.').to_string())
}

fn ref_label(r: &ElementRef) -> String {
    r.text
        .clone()
        .or_else(|| r.content_desc.clone())
        .or_else(|| r.resource_id.as_deref().map(|id| tail(id, '/').to_string()))
        .or_else(|| r.class_role.as_deref().map(|c| tail(c, '.').to_string()))
        .unwrap_or_else(|| "element".to_string())
}

fn render(e: &UiEvent, label: Option<&str>) -> String {
    let quoted = label.map(|l| format!("'{l}'"));
    match e.action {
        Action::Back => "press back".to_string(),
        Action::Click => format!("click {}", quoted.unwrap_or_default()),
        Action::LongClick => format!("long click {}", quoted.unwrap_or_default()),
        Action::Input => match (&e.value, quoted) {
            (Some(v), Some(q)) => format!("type '{v}' into {q}"),
            (None, Some(q)) => format!("type into {q}"),
            (Some(v), None) => format!("type '{v}'"),
            (None, None) => "type".to_string(),
        },
        Action::Swipe => {
            let mut s = String::from("swipe");
            if let Some(d) = e.direction {
                s.push(' ');
                s.push_str(d.as_str());
            }
            if let Some(q) = quoted {
                s.push_str(" on ");
                s.push_str(&q);
            }
            s
        }
    }
}

/// One-line natural-language rendering of an event on a screen.
pub fn describe_event(e: &UiEvent, screen: &UiScreen) -> Result<String, UnresolvedTarget> {
    let label = match &e.target {
        None => None,
        Some(t) => {
            let (_, el) = t
                .resolve_one(screen)
                .ok_or_else(|| UnresolvedTarget(serde_json::to_string(t).unwrap_or_default()))?;
            Some(element_label(el))
        }
    };
    Ok(render(e, label.as_deref()))
}

/// Renders a recorded event without a screen, using the reference's own fields.
pub fn describe_step(e: &UiEvent) -> String {
    let label = e.target.as_ref().map(ref_label);
    render(e, label.as_deref())
}

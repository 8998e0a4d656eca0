//! UI model: parsed hierarchy dumps, interactable events, and the
//! geometry helpers used to judge event matches.

mod extract;
mod hash;
mod parse;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use extract::{describe_event, describe_step, element_label, extract_events};
pub use hash::element_hash;
pub use parse::{parse_hierarchy, serialize_hierarchy, MalformedDump};

/// Axis-aligned rectangle in screen pixels, `[x1,y1][x2,y2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bounds {
    pub x1: u32,
    pub y1: u32,
    pub x2: u32,
    pub y2: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BoundsError {
    #[error("bounds must look like [x1,y1][x2,y2], got {0:?}")]
    Syntax(String),
    #[error("negative coordinate in bounds {0:?}")]
    Negative(String),
    #[error("inverted bounds {0:?} (x1>x2 or y1>y2)")]
    Inverted(String),
}

impl Bounds {
    pub fn new(x1: u32, y1: u32, x2: u32, y2: u32) -> Result<Self, BoundsError> {
        if x1 > x2 || y1 > y2 {
            return Err(BoundsError::Inverted(format!("[{x1},{y1}][{x2},{y2}]")));
        }
        Ok(Bounds { x1, y1, x2, y2 })
    }

    pub fn width(&self) -> u32 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> u32 {
        self.y2 - self.y1
    }

    /// Integer midpoint, rounding toward zero.
    pub fn center(&self) -> (u32, u32) {
        (
            ((self.x1 as u64 + self.x2 as u64) / 2) as u32,
            ((self.y1 as u64 + self.y2 as u64) / 2) as u32,
        )
    }

    /// Boundary-inclusive point containment.
    pub fn contains_point(&self, (x, y): (u32, u32)) -> bool {
        self.x1 <= x && x <= self.x2 && self.y1 <= y && y <= self.y2
    }

    pub fn contains(&self, other: &Bounds) -> bool {
        self.x1 <= other.x1 && self.y1 <= other.y1 && other.x2 <= self.x2 && other.y2 <= self.y2
    }
}

/// True iff the center of `candidate` falls inside `truth` (edges included).
pub fn center_in_bounds(candidate: &Bounds, truth: &Bounds) -> bool {
    truth.contains_point(candidate.center())
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}][{},{}]", self.x1, self.y1, self.x2, self.y2)
    }
}

impl FromStr for Bounds {
    type Err = BoundsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || BoundsError::Syntax(s.to_string());
        let rest = s.trim().strip_prefix('[').ok_or_else(syntax)?;
        let (first, rest) = rest.split_once("][").ok_or_else(syntax)?;
        let second = rest.strip_suffix(']').ok_or_else(syntax)?;
        let pair = |p: &str| -> Result<(i64, i64), BoundsError> {
            let (a, b) = p.split_once(',').ok_or_else(syntax)?;
            let a = a.trim().parse::<i64>().map_err(|_| syntax())?;
            let b = b.trim().parse::<i64>().map_err(|_| syntax())?;
            Ok((a, b))
        };
        let (x1, y1) = pair(first)?;
        let (x2, y2) = pair(second)?;
        if [x1, y1, x2, y2].iter().any(|v| *v < 0) {
            return Err(BoundsError::Negative(s.to_string()));
        }
        if [x1, y1, x2, y2].iter().any(|v| *v > u32::MAX as i64) {
            return Err(syntax());
        }
        Bounds::new(x1 as u32, y1 as u32, x2 as u32, y2 as u32)
            .map_err(|_| BoundsError::Inverted(s.to_string()))
    }
}

impl Serialize for Bounds {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bounds {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One node of a UI hierarchy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UiElement {
    pub class_role: String,
    pub resource_id: Option<String>,
    pub text: Option<String>,
    pub content_desc: Option<String>,
    pub bounds: Bounds,
    pub clickable: bool,
    pub long_clickable: bool,
    pub scrollable: bool,
    pub editable: bool,
    pub enabled: bool,
    pub children: Vec<UiElement>,
    /// Description injected for elements that carry no text of their own.
    pub vision_desc: Option<String>,
}

impl UiElement {
    pub fn new(class_role: impl Into<String>, bounds: Bounds) -> Self {
        UiElement {
            class_role: class_role.into(),
            resource_id: None,
            text: None,
            content_desc: None,
            bounds,
            clickable: false,
            long_clickable: false,
            scrollable: false,
            editable: false,
            enabled: true,
            children: Vec::new(),
            vision_desc: None,
        }
    }

    /// Whether the element can be the target of any event.
    pub fn is_interactable(&self) -> bool {
        self.enabled && (self.clickable || self.long_clickable || self.editable || self.scrollable)
    }

    pub fn supports(&self, action: Action) -> bool {
        match action {
            Action::Click => self.clickable,
            Action::LongClick => self.long_clickable,
            Action::Input => self.editable,
            Action::Swipe => self.scrollable,
            Action::Back => false,
        }
    }

    /// Pre-order traversal including `self`.
    pub fn preorder(&self) -> Vec<&UiElement> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            out.push(e);
            stack.extend(e.children.iter().rev());
        }
        out
    }

    pub(crate) fn preorder_mut(&mut self, f: &mut impl FnMut(&mut UiElement)) {
        f(self);
        for c in &mut self.children {
            c.preorder_mut(f);
        }
    }
}

/// A parsed observation of the app: activity name plus element tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UiScreen {
    pub activity: String,
    pub root: UiElement,
    /// Hex SHA-256 over the canonical serialization.
    pub raw_digest: String,
}

impl UiScreen {
    /// Builds a screen and computes its digest.
    pub fn new(activity: impl Into<String>, root: UiElement) -> Self {
        let mut screen = UiScreen { activity: activity.into(), root, raw_digest: String::new() };
        screen.raw_digest = parse::digest(&serialize_hierarchy(&screen));
        screen
    }

    pub fn elements(&self) -> Vec<&UiElement> {
        self.root.preorder()
    }

    /// Applies `f` to every element and recomputes the digest.
    pub fn map_elements(&mut self, mut f: impl FnMut(&mut UiElement)) {
        self.root.preorder_mut(&mut f);
        self.raw_digest = parse::digest(&serialize_hierarchy(self));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Click,
    LongClick,
    Input,
    Swipe,
    Back,
}

impl Action {
    pub fn as_str(&self) -> &'static str {
        match self {
            Action::Click => "click",
            Action::LongClick => "long_click",
            Action::Input => "input",
            Action::Swipe => "swipe",
            Action::Back => "back",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Direction::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown direction {s:?}"))
    }
}

/// Declarative reference to an element on a screen. Every populated field
/// must match exactly; `index` picks among multiple matches in pre-order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_desc: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_role: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
}

impl ElementRef {
    pub fn by_text(text: impl Into<String>) -> Self {
        ElementRef { text: Some(text.into()), ..Default::default() }
    }

    pub fn by_id(id: impl Into<String>) -> Self {
        ElementRef { resource_id: Some(id.into()), ..Default::default() }
    }

    pub fn by_desc(desc: impl Into<String>) -> Self {
        ElementRef { content_desc: Some(desc.into()), ..Default::default() }
    }

    pub fn has_matcher(&self) -> bool {
        self.resource_id.is_some()
            || self.text.is_some()
            || self.content_desc.is_some()
            || self.class_role.is_some()
            || self.bounds.is_some()
    }

    pub fn matches(&self, e: &UiElement) -> bool {
        fn eq(want: &Option<String>, have: &Option<String>) -> bool {
            want.as_ref().map_or(true, |w| have.as_deref() == Some(w.as_str()))
        }
        eq(&self.resource_id, &e.resource_id)
            && eq(&self.text, &e.text)
            && eq(&self.content_desc, &e.content_desc)
            && self.class_role.as_ref().map_or(true, |c| *c == e.class_role)
            && self.bounds.map_or(true, |b| b == e.bounds)
    }

    /// All matches in pre-order as `(preorder_index, element)`, narrowed by `index` when set.
    pub fn resolve<'a>(&self, screen: &'a UiScreen) -> Vec<(usize, &'a UiElement)> {
        let all: Vec<_> =
            screen.elements().into_iter().enumerate().filter(|(_, e)| self.matches(e)).collect();
        match self.index {
            Some(i) => all.into_iter().nth(i).into_iter().collect(),
            None => all,
        }
    }

    /// First match, if any.
    pub fn resolve_one<'a>(&self, screen: &'a UiScreen) -> Option<(usize, &'a UiElement)> {
        self.resolve(screen).into_iter().next()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EventError {
    #[error("{0} events require a target")]
    MissingTarget(Action),
    #[error("back events take no target")]
    UnexpectedTarget,
    #[error("value is only valid on input events")]
    UnexpectedValue,
    #[error("direction is only valid on swipe events")]
    UnexpectedDirection,
    #[error("target has no matcher")]
    EmptyTarget,
}

/// An action taken on the app.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UiEvent {
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<ElementRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
}

impl UiEvent {
    pub fn back() -> Self {
        UiEvent { action: Action::Back, target: None, value: None, direction: None }
    }

    pub fn click(target: ElementRef) -> Self {
        UiEvent { action: Action::Click, target: Some(target), value: None, direction: None }
    }

    pub fn long_click(target: ElementRef) -> Self {
        UiEvent { action: Action::LongClick, target: Some(target), value: None, direction: None }
    }

    pub fn input(target: ElementRef, value: Option<String>) -> Self {
        UiEvent { action: Action::Input, target: Some(target), value, direction: None }
    }

    pub fn swipe(target: Option<ElementRef>, direction: Option<Direction>) -> Self {
        UiEvent { action: Action::Swipe, target, value: None, direction }
    }

    /// Checks action/field coherence.
    pub fn validate(&self) -> Result<(), EventError> {
        match self.action {
            Action::Click | Action::LongClick | Action::Input if self.target.is_none() => {
                return Err(EventError::MissingTarget(self.action))
            }
            Action::Back if self.target.is_some() => return Err(EventError::UnexpectedTarget),
            _ => {}
        }
        if let Some(t) = &self.target {
            if !t.has_matcher() {
                return Err(EventError::EmptyTarget);
            }
        }
        if self.value.is_some() && self.action != Action::Input {
            return Err(EventError::UnexpectedValue);
        }
        if self.direction.is_some() && self.action != Action::Swipe {
            return Err(EventError::UnexpectedDirection);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> Bounds {
        s.parse().unwrap()
    }

    #[test]
    fn center_truth_table() {
        let truth = b("[0,0][100,100]");
        assert!(center_in_bounds(&b("[10,10][30,30]"), &truth));
        assert!(center_in_bounds(&b("[90,40][110,60]"), &truth));
        assert!(!center_in_bounds(&b("[200,200][220,220]"), &truth));
    }

    #[test]
    fn center_rounds_toward_zero() {
        assert_eq!(b("[0,0][3,5]").center(), (1, 2));
        assert_eq!(b("[1,1][2,2]").center(), (1, 1));
    }

    #[test]
    fn bounds_parse_errors() {
        assert!(matches!("[30,10][10,10]".parse::<Bounds>(), Err(BoundsError::Inverted(_))));
        assert!(matches!("[-1,0][10,10]".parse::<Bounds>(), Err(BoundsError::Negative(_))));
        assert!(matches!("[0,0,10,10]".parse::<Bounds>(), Err(BoundsError::Syntax(_))));
        assert!(matches!("[0,0][10,x]".parse::<Bounds>(), Err(BoundsError::Syntax(_))));
        assert_eq!(b("[1,2][3,4]").to_string(), "[1,2][3,4]");
    }

    #[test]
    fn event_coherence() {
        assert!(UiEvent::back().validate().is_ok());
        let click_no_target =
            UiEvent { action: Action::Click, target: None, value: None, direction: None };
        assert_eq!(click_no_target.validate(), Err(EventError::MissingTarget(Action::Click)));
        let mut e = UiEvent::click(ElementRef::by_text("x"));
        e.value = Some("v".into());
        assert_eq!(e.validate(), Err(EventError::UnexpectedValue));
        assert!(UiEvent::swipe(None, Some(Direction::Up)).validate().is_ok());
        assert_eq!(
            UiEvent::click(ElementRef::default()).validate(),
            Err(EventError::EmptyTarget)
        );
    }

    proptest::proptest! {
        #[test]
        fn center_reflexive_and_translation_invariant(
            x1 in 0u32..5000, y1 in 0u32..5000, w in 0u32..2000, h in 0u32..2000,
            tx1 in 0u32..5000, ty1 in 0u32..5000, tw in 0u32..2000, th in 0u32..2000,
            dx in 0u32..1000, dy in 0u32..1000,
        ) {
            let c = Bounds::new(x1, y1, x1 + w, y1 + h).unwrap();
            let t = Bounds::new(tx1, ty1, tx1 + tw, ty1 + th).unwrap();
            proptest::prop_assert!(center_in_bounds(&c, &c));
            let shift = |r: Bounds| Bounds::new(r.x1 + dx, r.y1 + dy, r.x2 + dx, r.y2 + dy).unwrap();
            // Odd extents shift the floor midpoint identically since both corners move by the same delta.
            proptest::prop_assert_eq!(center_in_bounds(&c, &t), center_in_bounds(&shift(c), &shift(t)));
        }
    }
}

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use crate::ui::{element_hash, UiElement, UiScreen};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VisionError {
    #[error("element already has a text or content description")]
    HasDescription,
    #[error("description provider unavailable: {0}")]
    ProviderUnavailable(String),
}

/// Produces a description for an element that has none.
pub trait DescriptionProvider: Send + Sync {
    fn describe(&self, e: &UiElement) -> Result<String, VisionError>;
}

/// Lookup table keyed by [`element_hash`]; counts calls.
#[derive(Debug, Default)]
pub struct FixtureProvider {
    table: HashMap<String, String>,
    calls: AtomicUsize,
}

impl FixtureProvider {
    pub fn new(table: HashMap<String, String>) -> Self {
        FixtureProvider { table, calls: AtomicUsize::new(0) }
    }

    /// `{ "<element hash>": "<description>", ... }`
    pub fn from_json(doc: &str) -> Result<Self, crate::testcase::SchemaError> {
        Ok(Self::new(crate::testcase::from_json(doc)?))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl DescriptionProvider for FixtureProvider {
    fn describe(&self, e: &UiElement) -> Result<String, VisionError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let h = element_hash(e);
        self.table.get(&h).cloned().ok_or_else(|| VisionError::ProviderUnavailable(format!("no description for {h}")))
    }
}

type Slot = Arc<Mutex<Option<String>>>;

/// Descriptions by element hash. Concurrent callers for the same hash wait
/// on one slot, so the provider runs at most once per hash as long as it
/// succeeds; a failure leaves the slot empty.
#[derive(Debug, Default)]
pub struct DescriptionCache {
    slots: Mutex<HashMap<String, Slot>>,
}

impl DescriptionCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.slots.lock().unwrap().values().filter(|s| s.lock().unwrap().is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, hash: &str) -> Option<String> {
        let slot = self.slots.lock().unwrap().get(hash).cloned()?;
        let v = slot.lock().unwrap().clone();
        v
    }

    pub fn get_or_try_insert(
        &self,
        hash: &str,
        make: impl FnOnce() -> Result<String, VisionError>,
    ) -> Result<String, VisionError> {
        let slot = self.slots.lock().unwrap().entry(hash.to_string()).or_default().clone();
        let mut guard = slot.lock().unwrap();
        if let Some(v) = guard.as_ref() {
            return Ok(v.clone());
        }
        let v = make()?;
        *guard = Some(v.clone());
        Ok(v)
    }
}

/// Description of a text-less element, served from the cache when known.
pub fn describe_element_visual(
    e: &UiElement,
    provider: &dyn DescriptionProvider,
    cache: &DescriptionCache,
) -> Result<String, VisionError> {
    if e.text.is_some() || e.content_desc.is_some() {
        return Err(VisionError::HasDescription);
    }
    cache.get_or_try_insert(&element_hash(e), || provider.describe(e))
}

/// Fills `vision_desc` on interactable elements lacking text and content description.
pub fn enrich_screen(
    screen: &mut UiScreen,
    provider: &dyn DescriptionProvider,
    cache: &DescriptionCache,
) -> Result<(), VisionError> {
    let mut err = None;
    screen.map_elements(|e| {
        if err.is_some() || !e.is_interactable() || e.text.is_some() || e.content_desc.is_some() {
            return;
        }
        match describe_element_visual(e, provider, cache) {
            Ok(d) => e.vision_desc = Some(d),
            Err(x) => err = Some(x),
        }
    });
    err.map_or(Ok(()), Err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn icon() -> UiElement {
        let mut e = UiElement::new("android.widget.ImageButton", "[0,0][48,48]".parse().unwrap());
        e.clickable = true;
        e.resource_id = Some("app:id/share".into());
        e
    }

    fn provider_for(e: &UiElement, desc: &str) -> FixtureProvider {
        FixtureProvider::new(HashMap::from([(element_hash(e), desc.to_string())]))
    }

    #[test]
    fn provider_called_once() {
        let e = icon();
        let p = provider_for(&e, "share icon");
        let cache = DescriptionCache::new();
        assert_eq!(describe_element_visual(&e, &p, &cache).unwrap(), "share icon");
        assert_eq!(describe_element_visual(&e, &p, &cache).unwrap(), "share icon");
        assert_eq!(p.calls(), 1);
    }

    #[test]
    fn text_present_is_rejected() {
        let mut e = icon();
        e.text = Some("Share".into());
        let p = FixtureProvider::default();
        assert_eq!(describe_element_visual(&e, &p, &DescriptionCache::new()), Err(VisionError::HasDescription));
        assert_eq!(p.calls(), 0);
    }

    #[test]
    fn failure_leaves_cache_untouched() {
        let e = icon();
        let p = FixtureProvider::default();
        let cache = DescriptionCache::new();
        assert!(matches!(describe_element_visual(&e, &p, &cache), Err(VisionError::ProviderUnavailable(_))));
        assert!(cache.is_empty());
        let good = provider_for(&e, "share icon");
        assert_eq!(describe_element_visual(&e, &good, &cache).unwrap(), "share icon");
        assert_eq!(cache.get(&element_hash(&e)).as_deref(), Some("share icon"));
    }

    #[test]
    fn enrich_sets_vision_desc() {
        let mut root = UiElement::new("FrameLayout", "[0,0][100,100]".parse().unwrap());
        root.children.push(icon());
        let mut screen = UiScreen::new("main", root);
        let before = screen.raw_digest.clone();
        let p = provider_for(&icon(), "share icon");
        enrich_screen(&mut screen, &p, &DescriptionCache::new()).unwrap();
        assert_eq!(screen.root.children[0].vision_desc.as_deref(), Some("share icon"));
        assert_ne!(screen.raw_digest, before);
        let events = crate::ui::extract_events(&screen);
        assert_eq!(crate::ui::describe_event(&events[0], &screen).unwrap(), "click 'share icon'");
    }
}

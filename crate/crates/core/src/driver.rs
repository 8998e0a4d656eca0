//! The interface between a planner and the app under test.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::reasoner::{enrich_screen, DescriptionCache, DescriptionProvider};
use crate::ui::{UiEvent, UiScreen};

/// What happened when an event was performed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransitionOutcome {
    Transitioned { to: String },
    NoOp,
    Rejected { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("driver error: {0}")]
pub struct DriverError(pub String);

/// A device session. The simulator implements this; a device adapter would too.
pub trait Driver {
    fn dump_hierarchy(&mut self) -> Result<UiScreen, DriverError>;
    fn perform(&mut self, event: &UiEvent) -> Result<TransitionOutcome, DriverError>;
    /// Events performed so far, whatever their outcome.
    fn interaction_count(&self) -> usize;
}

impl<D: Driver + ?Sized> Driver for &mut D {
    fn dump_hierarchy(&mut self) -> Result<UiScreen, DriverError> {
        (**self).dump_hierarchy()
    }

    fn perform(&mut self, event: &UiEvent) -> Result<TransitionOutcome, DriverError> {
        (**self).perform(event)
    }

    fn interaction_count(&self) -> usize {
        (**self).interaction_count()
    }
}

/// Adds visual descriptions to every dump of the wrapped driver.
pub struct EnrichingDriver<D> {
    inner: D,
    provider: Arc<dyn DescriptionProvider>,
    cache: Arc<DescriptionCache>,
}

impl<D: Driver> EnrichingDriver<D> {
    pub fn new(inner: D, provider: Arc<dyn DescriptionProvider>, cache: Arc<DescriptionCache>) -> Self {
        EnrichingDriver { inner, provider, cache }
    }

    pub fn inner(&self) -> &D {
        &self.inner
    }

    pub fn into_inner(self) -> D {
        self.inner
    }
}

impl<D: Driver> Driver for EnrichingDriver<D> {
    fn dump_hierarchy(&mut self) -> Result<UiScreen, DriverError> {
        let mut screen = self.inner.dump_hierarchy()?;
        enrich_screen(&mut screen, self.provider.as_ref(), &self.cache).map_err(|e| DriverError(e.to_string()))?;
        Ok(screen)
    }

    fn perform(&mut self, event: &UiEvent) -> Result<TransitionOutcome, DriverError> {
        self.inner.perform(event)
    }

    fn interaction_count(&self) -> usize {
        self.inner.interaction_count()
    }
}

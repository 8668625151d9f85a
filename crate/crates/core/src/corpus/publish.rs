//! Publishing a corpus as a tree: FullText under the author's chain, each
//! Surah under the FullText, each Ayah under its Surah.

use std::future::Future;

use serde::{Deserialize, Serialize};

use super::{CorpusUnit, UnitKind};
use crate::resource::Resource;
use crate::store::client::PublisherClient;
use crate::store::{ParentSpec, PublishOutcome, PublishRequest, Store};
use crate::uri::TrustyUri;

/// Anything units can be published to.
pub trait Publisher: Send + Sync {
    fn publish_unit(
        &self,
        resource: Resource,
        author: &str,
        parent: ParentSpec,
    ) -> impl Future<Output = Result<PublishOutcome, String>> + Send;
}

impl Publisher for Store {
    async fn publish_unit(
        &self,
        resource: Resource,
        author: &str,
        parent: ParentSpec,
    ) -> Result<PublishOutcome, String> {
        self.publish(PublishRequest::new(resource, author, parent))
            .map_err(|e| e.to_string())
    }
}

impl Publisher for PublisherClient {
    async fn publish_unit(
        &self,
        resource: Resource,
        author: &str,
        parent: ParentSpec,
    ) -> Result<PublishOutcome, String> {
        self.publish(&resource, author, &parent, None)
            .await
            .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishedUnit {
    pub label: String,
    pub kind: UnitKind,
    pub uri: TrustyUri,
    pub created: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishSummary {
    /// Records created by this run.
    pub created: usize,
    /// Units that were already published.
    pub existing: usize,
    /// `(label, error)` for units that could not be published. Units under
    /// a failed parent are skipped and listed too.
    pub failed: Vec<(String, String)>,
    pub units: Vec<PublishedUnit>,
}

impl PublishSummary {
    pub fn uri_of(&self, label: &str) -> Option<&TrustyUri> {
        self.units.iter().find(|u| u.label == label).map(|u| &u.uri)
    }
}

/// Publishes every unit as UTF-8 plain text. Re-running creates nothing.
pub async fn publish_corpus<P: Publisher>(
    units: &[CorpusUnit],
    publisher: &P,
    author: &str,
) -> PublishSummary {
    let mut summary = PublishSummary::default();
    let mut full: Option<TrustyUri> = None;
    let mut surahs: Vec<(u16, TrustyUri)> = Vec::new();

    let order = [UnitKind::FullText, UnitKind::Surah, UnitKind::Ayah];
    for kind in order {
        for unit in units.iter().filter(|u| u.kind == kind) {
            let label = unit.label();
            let parent = match kind {
                UnitKind::FullText => Some(ParentSpec::Auto),
                UnitKind::Surah => full.clone().map(ParentSpec::Local),
                UnitKind::Ayah => surahs
                    .iter()
                    .find(|(no, _)| Some(*no) == unit.surah_no)
                    .map(|(_, uri)| ParentSpec::Local(uri.clone())),
            };
            let Some(parent) = parent else {
                summary.failed.push((label, "parent unit was not published".into()));
                continue;
            };
            let resource = Resource::plain_text(unit.published_text());
            match publisher.publish_unit(resource, author, parent).await {
                Ok(outcome) => {
                    let uri = outcome.record.uri;
                    match kind {
                        UnitKind::FullText => full = Some(uri.clone()),
                        UnitKind::Surah => surahs.push((unit.surah_no.unwrap_or_default(), uri.clone())),
                        UnitKind::Ayah => {}
                    }
                    if outcome.created {
                        summary.created += 1;
                    } else {
                        summary.existing += 1;
                    }
                    summary.units.push(PublishedUnit {
                        label,
                        kind,
                        uri,
                        created: outcome.created,
                    });
                }
                Err(e) => {
                    tracing::warn!(unit = %label, error = %e, "publish failed");
                    summary.failed.push((label, e));
                }
            }
        }
    }
    summary
}

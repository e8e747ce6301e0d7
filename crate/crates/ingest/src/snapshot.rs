//! Loaded corpus snapshots and their cache serialization.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Value};

use tinystix_core::{stix, StixObject};

use crate::IngestError;

/// A fully preprocessed corpus: only valid objects remain, custom fields
/// stripped, ready for measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSnapshot {
    /// one of `circl`, `enterprise`, `ics`, `mobile`
    pub name: String,
    pub objects: Vec<StixObject>,
    /// pinned upstream release or commit the data came from
    pub source_version: String,
    /// non-fatal problems encountered while loading
    pub warnings: Vec<String>,
}

impl CorpusSnapshot {
    /// Objects per STIX type, sorted by type name.
    pub fn type_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for object in &self.objects {
            *counts.entry(object.object_type().to_string()).or_insert(0) += 1;
        }
        counts
    }

    /// Serialize to the cache format: one JSON document carrying provenance
    /// and the preprocessed objects verbatim.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IngestError> {
        let objects: Vec<Value> = self
            .objects
            .iter()
            .map(|o| {
                serde_json::from_slice(&stix::canonical_json(o))
                    .expect("canonical JSON always reparses")
            })
            .collect();
        let doc = json!({
            "name": self.name,
            "source_version": self.source_version,
            "warnings": self.warnings,
            "objects": objects,
        });
        std::fs::write(path.as_ref(), serde_json::to_vec(&doc).unwrap()).map_err(|source| {
            IngestError::FileUnreadable {
                path: path.as_ref().display().to_string(),
                source,
            }
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|source| {
            IngestError::FileUnreadable {
                path: path.as_ref().display().to_string(),
                source,
            }
        })?;
        let doc: Value = serde_json::from_str(&text)
            .map_err(|e| IngestError::Malformed(format!("snapshot cache: {e}")))?;
        let name = doc["name"]
            .as_str()
            .ok_or_else(|| IngestError::Malformed("snapshot cache lacks a name".into()))?
            .to_string();
        let source_version = doc["source_version"]
            .as_str()
            .unwrap_or("unknown")
            .to_string();
        let warnings = doc["warnings"]
            .as_array()
            .map(|a| {
                a.iter()
                    .filter_map(|w| w.as_str().map(str::to_string))
                    .collect()
            })
            .unwrap_or_default();
        let raw = doc["objects"]
            .as_array()
            .ok_or_else(|| IngestError::Malformed("snapshot cache lacks objects".into()))?;
        let objects = raw
            .iter()
            .map(|v| stix::from_value(v.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CorpusSnapshot {
            name,
            objects,
            source_version,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn object(object_type: &str, n: u128) -> StixObject {
        stix::from_value(json!({
            "type": object_type,
            "spec_version": "2.1",
            "id": format!("{object_type}--{}", uuid::Uuid::from_u128(n)),
            "created": "2021-01-01T00:00:00.000Z",
            "modified": "2021-01-01T00:00:00.000Z",
        }))
        .unwrap()
    }

    #[test]
    fn counts_group_by_type() {
        let snapshot = CorpusSnapshot {
            name: "enterprise".into(),
            objects: vec![
                object("indicator", 1),
                object("indicator", 2),
                object("malware", 3),
            ],
            source_version: "test".into(),
            warnings: vec![],
        };
        let counts = snapshot.type_counts();
        assert_eq!(counts["indicator"], 2);
        assert_eq!(counts["malware"], 1);
        assert_eq!(counts.len(), 2);
    }

    #[test]
    fn cache_roundtrip_preserves_counts_and_objects() {
        let snapshot = CorpusSnapshot {
            name: "ics".into(),
            objects: vec![object("tool", 4), object("campaign", 5)],
            source_version: "v1.0".into(),
            warnings: vec!["one event skipped".into()],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.json");
        snapshot.save(&path).unwrap();
        let back = CorpusSnapshot::load(&path).unwrap();
        assert_eq!(back, snapshot);
        assert_eq!(back.type_counts(), snapshot.type_counts());
    }
}

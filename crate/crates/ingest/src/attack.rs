//! ATT&CK bundle loading: drop custom-typed objects, strip custom fields.

use std::path::Path;

use tinystix_core::stix;

use crate::{CorpusSnapshot, IngestError};

/// Load a STIX 2.1 ATT&CK bundle. Objects whose type is outside the native
/// STIX 2.1 set (`x-mitre-*` and friends) are dropped; the rest pass
/// through `strip_non_native`.
pub fn load_attack_corpus(
    path: impl AsRef<Path>,
    domain: &str,
) -> Result<CorpusSnapshot, IngestError> {
    let text =
        std::fs::read_to_string(path.as_ref()).map_err(|source| IngestError::FileUnreadable {
            path: path.as_ref().display().to_string(),
            source,
        })?;
    let bundle = stix::parse_bundle(&text)?;
    let mut warnings = Vec::new();
    let mut dropped = 0usize;
    let objects: Vec<_> = bundle
        .objects
        .into_iter()
        .filter(|o| {
            let native = o.is_native_type();
            if !native {
                dropped += 1;
            }
            native
        })
        .map(|o| stix::strip_non_native(&o))
        .collect();
    if dropped > 0 {
        warnings.push(format!("dropped {dropped} custom-typed objects"));
    }
    Ok(CorpusSnapshot {
        name: domain.to_string(),
        objects,
        source_version: source_version_of(path.as_ref()),
        warnings,
    })
}

/// Provenance string: a `VERSION` file next to the bundle if the fetch
/// script wrote one, otherwise the file name.
fn source_version_of(path: &Path) -> String {
    let version_file = path.parent().map(|d| d.join("VERSION"));
    if let Some(vf) = version_file {
        if let Ok(text) = std::fs::read_to_string(vf) {
            return text.trim().to_string();
        }
    }
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unknown".into())
}

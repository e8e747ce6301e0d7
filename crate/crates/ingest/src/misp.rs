//! MISP feed events converted to STIX 2.1 objects.
//!
//! The mapping is deterministic: identifiers are UUIDv5 over the event and
//! attribute identity, so converting the same feed twice yields the same
//! bundle byte for byte.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Map, Value};
use uuid::Uuid;

use tinystix_core::{stix, Bundle, Identifier, StixObject};

use crate::{CorpusSnapshot, IngestError};

/// Namespace for all deterministic identifiers minted by the converter.
const ID_NAMESPACE: Uuid = Uuid::from_u128(0x8fa8_44bc_5b74_4d3e_9c1a_2f0b_76e1_13a7);

/// The four standard TLP marking definitions with their fixed identifiers.
const TLP_MARKINGS: &[(&str, &str)] = &[
    (
        "white",
        "marking-definition--613f2e26-407d-48c7-9eca-b8e91df99dc9",
    ),
    (
        "green",
        "marking-definition--34098fce-860f-48ae-8e50-ebd3cc5e41da",
    ),
    (
        "amber",
        "marking-definition--f88d31f6-486f-44da-b317-01333bde0b82",
    ),
    (
        "red",
        "marking-definition--5e57c739-391a-4eb3-b6be-7d15ca92d5ed",
    ),
];

#[derive(Debug, Clone, Deserialize)]
pub struct MispTag {
    pub name: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct MispOrg {
    pub name: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct MispAttribute {
    #[serde(rename = "type")]
    pub attr_type: String,
    #[serde(default)]
    pub category: Option<String>,
    pub value: String,
    #[serde(default)]
    pub to_ids: bool,
    #[serde(default)]
    pub uuid: Option<String>,
    #[serde(default)]
    pub comment: Option<String>,
}

/// A MISP object composition: a named template grouping attributes.
#[derive(Debug, Clone, Deserialize)]
pub struct MispObject {
    pub name: String,
    #[serde(default)]
    pub uuid: Option<String>,
    #[serde(default, rename = "Attribute")]
    pub attributes: Vec<MispAttribute>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct MispEvent {
    pub uuid: String,
    pub info: String,
    #[serde(default)]
    pub date: Option<String>,
    #[serde(default, rename = "Tag")]
    pub tags: Vec<MispTag>,
    #[serde(default, rename = "Orgc")]
    pub orgc: Option<MispOrg>,
    #[serde(default, rename = "Attribute")]
    pub attributes: Vec<MispAttribute>,
    #[serde(default, rename = "Object")]
    pub objects: Vec<MispObject>,
}

impl MispEvent {
    /// Parse a feed event file, accepting both the bare event and the
    /// `{"Event": {...}}` wrapper the feed format uses.
    pub fn from_json(value: Value) -> Result<Self, IngestError> {
        let inner = match value {
            Value::Object(ref m) if m.contains_key("Event") => m["Event"].clone(),
            other => other,
        };
        serde_json::from_value(inner)
            .map_err(|e| IngestError::Malformed(format!("MISP event: {e}")))
    }

    fn timestamp(&self) -> String {
        match &self.date {
            Some(d) if d.len() == 10 => format!("{d}T00:00:00.000Z"),
            _ => "1970-01-01T00:00:00.000Z".to_string(),
        }
    }

    fn tlp(&self) -> &'static str {
        for tag in &self.tags {
            if let Some(level) = tag.name.strip_prefix("tlp:") {
                for (name, _) in TLP_MARKINGS {
                    if *name == level {
                        return name;
                    }
                }
            }
        }
        "white"
    }
}

/// Escape a value for inclusion in a single-quoted STIX pattern literal.
fn pattern_escape(value: &str) -> String {
    value.replace('\\', "\\\\").replace('\'', "\\'")
}

fn det_id(object_type: &str, discriminator: &str) -> String {
    let uuid = Uuid::new_v5(&ID_NAMESPACE, discriminator.as_bytes());
    format!("{object_type}--{uuid}")
}

fn hash_name(attr_type: &str) -> Option<&'static str> {
    match attr_type {
        "md5" => Some("MD5"),
        "sha1" => Some("SHA-1"),
        "sha256" => Some("SHA-256"),
        "sha512" => Some("SHA-512"),
        _ => None,
    }
}

/// What one attribute converts into: observables, and the pattern an
/// indicator would carry. The first observable is the one the indicator is
/// based on.
struct AttributeConversion {
    observables: Vec<Value>,
    pattern: String,
}

fn convert_attribute(
    attr: &MispAttribute,
    event_uuid: &str,
) -> Result<AttributeConversion, String> {
    let value = attr.value.as_str();
    let scope = format!("{event_uuid}/{}/{value}", attr.attr_type);
    let escaped = pattern_escape(value);
    let conversion = match attr.attr_type.as_str() {
        "domain" | "hostname" => AttributeConversion {
            observables: vec![json!({
                "type": "domain-name",
                "id": det_id("domain-name", &scope),
                "value": value,
            })],
            pattern: format!("[domain-name:value = '{escaped}']"),
        },
        "ip-dst" | "ip-src" => {
            let addr_type = if value.contains(':') {
                "ipv6-addr"
            } else {
                "ipv4-addr"
            };
            let addr_id = det_id(addr_type, &scope);
            let ref_key = if attr.attr_type == "ip-dst" {
                "dst_ref"
            } else {
                "src_ref"
            };
            AttributeConversion {
                observables: vec![
                    json!({
                        "type": addr_type,
                        "id": addr_id,
                        "value": value,
                    }),
                    json!({
                        "type": "network-traffic",
                        "id": det_id("network-traffic", &scope),
                        ref_key: addr_id,
                        "protocols": [if addr_type == "ipv4-addr" { "ipv4" } else { "ipv6" }],
                    }),
                ],
                pattern: format!("[{addr_type}:value = '{escaped}']"),
            }
        }
        "url" | "uri" | "link" => AttributeConversion {
            observables: vec![json!({
                "type": "url",
                "id": det_id("url", &scope),
                "value": value,
            })],
            pattern: format!("[url:value = '{escaped}']"),
        },
        "md5" | "sha1" | "sha256" | "sha512" => {
            let name = hash_name(&attr.attr_type).unwrap();
            AttributeConversion {
                observables: vec![json!({
                    "type": "file",
                    "id": det_id("file", &scope),
                    "hashes": { name: value },
                })],
                pattern: format!("[file:hashes.'{name}' = '{escaped}']"),
            }
        }
        "filename" => AttributeConversion {
            observables: vec![json!({
                "type": "file",
                "id": det_id("file", &scope),
                "name": value,
            })],
            pattern: format!("[file:name = '{escaped}']"),
        },
        "filename|md5" | "filename|sha1" | "filename|sha256" | "filename|sha512" => {
            let (filename, hash) = value
                .split_once('|')
                .ok_or_else(|| format!("composite value without `|`: {value}"))?;
            let hash_type = attr.attr_type.split_once('|').unwrap().1;
            let name = hash_name(hash_type).unwrap();
            AttributeConversion {
                observables: vec![json!({
                    "type": "file",
                    "id": det_id("file", &scope),
                    "name": filename,
                    "hashes": { name: hash },
                })],
                pattern: format!(
                    "[file:name = '{}' AND file:hashes.'{name}' = '{}']",
                    pattern_escape(filename),
                    pattern_escape(hash)
                ),
            }
        }
        "email-src" | "email-dst" => AttributeConversion {
            observables: vec![json!({
                "type": "email-addr",
                "id": det_id("email-addr", &scope),
                "value": value,
            })],
            pattern: format!("[email-addr:value = '{escaped}']"),
        },
        "email-subject" => AttributeConversion {
            observables: vec![json!({
                "type": "email-message",
                "id": det_id("email-message", &scope),
                "is_multipart": false,
                "subject": value,
            })],
            pattern: format!("[email-message:subject = '{escaped}']"),
        },
        "mutex" => AttributeConversion {
            observables: vec![json!({
                "type": "mutex",
                "id": det_id("mutex", &scope),
                "name": value,
            })],
            pattern: format!("[mutex:name = '{escaped}']"),
        },
        "regkey" => AttributeConversion {
            observables: vec![json!({
                "type": "windows-registry-key",
                "id": det_id("windows-registry-key", &scope),
                "key": value,
            })],
            pattern: format!("[windows-registry-key:key = '{escaped}']"),
        },
        other => return Err(format!("unsupported attribute type `{other}`")),
    };
    Ok(conversion)
}

/// Convert one MISP object composition into a single combined observable.
fn convert_object(obj: &MispObject, event_uuid: &str) -> Result<Vec<Value>, String> {
    let scope = format!(
        "{event_uuid}/object/{}/{}",
        obj.name,
        obj.uuid.as_deref().unwrap_or("anonymous")
    );
    match obj.name.as_str() {
        "file" => {
            let mut file = Map::new();
            file.insert("type".into(), json!("file"));
            file.insert("id".into(), json!(det_id("file", &scope)));
            let mut hashes = Map::new();
            for attr in &obj.attributes {
                match attr.attr_type.as_str() {
                    "filename" => {
                        file.insert("name".into(), json!(attr.value));
                    }
                    "size-in-bytes" => {
                        if let Ok(n) = attr.value.parse::<u64>() {
                            file.insert("size".into(), json!(n));
                        }
                    }
                    t => {
                        if let Some(name) = hash_name(t) {
                            hashes.insert(name.into(), json!(attr.value));
                        }
                    }
                }
            }
            if !hashes.is_empty() {
                file.insert("hashes".into(), Value::Object(hashes));
            }
            Ok(vec![Value::Object(file)])
        }
        "domain-ip" => {
            let mut out = Vec::new();
            for attr in &obj.attributes {
                match attr.attr_type.as_str() {
                    "domain" | "hostname" | "ip-dst" | "ip-src" | "url" => {
                        out.extend(convert_attribute(attr, event_uuid)?.observables);
                    }
                    _ => {}
                }
            }
            Ok(out)
        }
        "url" => {
            for attr in &obj.attributes {
                if attr.attr_type == "url" || attr.attr_type == "link" {
                    return Ok(convert_attribute(attr, event_uuid)?.observables);
                }
            }
            Err("url object without url attribute".into())
        }
        other => Err(format!("unsupported object template `{other}`")),
    }
}

fn tlp_marking_object(level: &str) -> Value {
    let id = TLP_MARKINGS
        .iter()
        .find(|(name, _)| *name == level)
        .map(|(_, id)| *id)
        .expect("known TLP level");
    json!({
        "type": "marking-definition",
        "spec_version": "2.1",
        "id": id,
        "created": "2017-01-20T00:00:00.000Z",
        "definition_type": "tlp",
        "definition": { "tlp": level },
    })
}

/// Convert one event to a STIX bundle. Unsupported attributes are skipped
/// and reported in the warning list, never fatal.
pub fn misp_to_stix(event: &MispEvent) -> Result<(Bundle, Vec<String>), IngestError> {
    let ts = event.timestamp();
    let mut warnings = Vec::new();
    let mut values: Vec<Value> = Vec::new();

    let org = event
        .orgc
        .as_ref()
        .map(|o| o.name.clone())
        .unwrap_or_else(|| "CIRCL".to_string());
    let identity_id = det_id("identity", &format!("identity/{org}"));
    values.push(json!({
        "type": "identity",
        "spec_version": "2.1",
        "id": identity_id,
        "created": ts,
        "modified": ts,
        "name": org,
        "identity_class": "organization",
    }));
    values.push(tlp_marking_object(event.tlp()));

    for attr in &event.attributes {
        match convert_attribute(attr, &event.uuid) {
            Ok(conversion) => {
                let primary_id = conversion.observables[0]["id"]
                    .as_str()
                    .unwrap()
                    .to_string();
                values.extend(conversion.observables);
                if attr.to_ids {
                    let indicator_scope =
                        format!("{}/indicator/{}", event.uuid, conversion.pattern);
                    let indicator_id = det_id("indicator", &indicator_scope);
                    values.push(json!({
                        "type": "indicator",
                        "spec_version": "2.1",
                        "id": indicator_id,
                        "created": ts,
                        "modified": ts,
                        "created_by_ref": identity_id,
                        "name": attr
                            .comment
                            .clone()
                            .filter(|c| !c.is_empty())
                            .unwrap_or_else(|| format!("MISP attribute {}", attr.attr_type)),
                        "pattern": conversion.pattern,
                        "pattern_type": "stix",
                        "valid_from": ts,
                    }));
                    values.push(json!({
                        "type": "relationship",
                        "spec_version": "2.1",
                        "id": det_id("relationship", &format!("{indicator_scope}/based-on")),
                        "created": ts,
                        "modified": ts,
                        "relationship_type": "based-on",
                        "source_ref": indicator_id,
                        "target_ref": primary_id,
                    }));
                }
            }
            Err(reason) => warnings.push(format!("event {}: {reason}", event.uuid)),
        }
    }

    for obj in &event.objects {
        match convert_object(obj, &event.uuid) {
            Ok(observables) => values.extend(observables),
            Err(reason) => warnings.push(format!("event {}: {reason}", event.uuid)),
        }
    }

    // duplicate values (same attribute appearing twice) collapse to one
    // object because their identifiers are deterministic
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut objects: Vec<StixObject> = Vec::new();
    for value in values {
        let object = stix::from_value(value)?;
        if seen.insert(object.id().to_string()) {
            objects.push(object);
        }
    }

    let object_refs: Vec<String> = objects.iter().map(|o| o.id().to_string()).collect();
    let report = stix::from_value(json!({
        "type": "report",
        "spec_version": "2.1",
        "id": det_id("report", &format!("report/{}", event.uuid)),
        "created": ts,
        "modified": ts,
        "created_by_ref": identity_id,
        "name": event.info,
        "published": ts,
        "report_types": ["threat-report"],
        "object_refs": object_refs,
    }))?;
    objects.push(report);

    let bundle_id: Identifier = det_id("bundle", &format!("bundle/{}", event.uuid))
        .parse()
        .expect("deterministic bundle id is well-formed");
    Ok((
        Bundle {
            id: bundle_id,
            objects,
        },
        warnings,
    ))
}

/// Load a MISP feed directory: `manifest.json` plus one JSON file per
/// event. Event files that fail to parse are skipped with a warning.
pub fn load_misp_feed(directory: impl AsRef<Path>) -> Result<CorpusSnapshot, IngestError> {
    let dir = directory.as_ref();
    if !dir.join("manifest.json").is_file() {
        return Err(IngestError::ManifestMissing(dir.display().to_string()));
    }
    let mut event_files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|source| IngestError::FileUnreadable {
            path: dir.display().to_string(),
            source,
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().map(|e| e == "json").unwrap_or(false)
                && p.file_name().map(|n| n != "manifest.json").unwrap_or(false)
        })
        .collect();
    event_files.sort();

    let mut objects: Vec<StixObject> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut warnings = Vec::new();
    for path in &event_files {
        let parsed = std::fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|text| serde_json::from_str::<Value>(&text).map_err(|e| e.to_string()))
            .and_then(|value| MispEvent::from_json(value).map_err(|e| e.to_string()))
            .and_then(|event| misp_to_stix(&event).map_err(|e| e.to_string()));
        match parsed {
            Ok((bundle, event_warnings)) => {
                warnings.extend(event_warnings);
                for object in bundle.objects {
                    let stripped = stix::strip_non_native(&object);
                    if seen.insert(stripped.id().to_string()) {
                        objects.push(stripped);
                    }
                }
            }
            Err(reason) => warnings.push(format!("{}: {reason}", path.display())),
        }
    }

    let source_version = std::fs::read_to_string(dir.join("VERSION"))
        .map(|v| v.trim().to_string())
        .unwrap_or_else(|_| "unpinned feed snapshot".to_string());
    Ok(CorpusSnapshot {
        name: "circl".into(),
        objects,
        source_version,
        warnings,
    })
}

//! STIX 2.1 object model: parsing, validation, canonical serialization, and
//! native-field stripping. This is the uncompressed baseline representation.

use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Value};
use uuid::Uuid;

use crate::error::StixError;
use crate::stix21;

/// Ordered property map, preserving source order.
pub type PropertyMap = Map<String, Value>;

/// The four STIX object classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectClass {
    Sdo,
    Sco,
    Sro,
    Marking,
}

/// A STIX identifier of the form `<type>--<uuid>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Identifier {
    object_type: String,
    uuid: Uuid,
}

impl Identifier {
    pub fn new(object_type: impl Into<String>, uuid: Uuid) -> Self {
        Identifier {
            object_type: object_type.into(),
            uuid,
        }
    }

    pub fn object_type(&self) -> &str {
        &self.object_type
    }

    pub fn uuid(&self) -> Uuid {
        self.uuid
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}--{}", self.object_type, self.uuid.hyphenated())
    }
}

impl FromStr for Identifier {
    type Err = StixError;

    fn from_str(s: &str) -> Result<Self, StixError> {
        let (object_type, uuid_part) = s
            .split_once("--")
            .ok_or_else(|| StixError::BadIdentifier(s.to_string()))?;
        if object_type.is_empty() || !is_valid_type_name(object_type) {
            return Err(StixError::BadIdentifier(s.to_string()));
        }
        let uuid =
            Uuid::parse_str(uuid_part).map_err(|_| StixError::BadIdentifier(s.to_string()))?;
        Ok(Identifier::new(object_type, uuid))
    }
}

/// A schema-validated STIX 2.1 object held as an ordered property tree.
#[derive(Debug, Clone, PartialEq)]
pub struct StixObject {
    object_type: String,
    id: Identifier,
    properties: PropertyMap,
}

impl StixObject {
    pub fn object_type(&self) -> &str {
        &self.object_type
    }

    pub fn id(&self) -> &Identifier {
        &self.id
    }

    /// The full ordered property map, including `type` and `id`.
    pub fn properties(&self) -> &PropertyMap {
        &self.properties
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.properties.get(name)
    }

    /// Object class, when the type is a known STIX 2.1 type.
    pub fn class(&self) -> Option<ObjectClass> {
        classify(&self.object_type).ok()
    }

    /// Whether the object's type is part of the native STIX 2.1 type set.
    pub fn is_native_type(&self) -> bool {
        self.class().is_some()
    }
}

/// A STIX bundle: an id plus contained objects.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub id: Identifier,
    pub objects: Vec<StixObject>,
}

fn is_valid_type_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
}

fn is_valid_property_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
}

/// Classify a type name into its object class. Total over the STIX 2.1
/// native type set; anything else is `UnknownType`.
pub fn classify(object_type: &str) -> Result<ObjectClass, StixError> {
    if stix21::SDO_TYPES.contains(&object_type) {
        Ok(ObjectClass::Sdo)
    } else if stix21::SCO_TYPES.contains(&object_type) {
        Ok(ObjectClass::Sco)
    } else if stix21::SRO_TYPES.contains(&object_type) {
        Ok(ObjectClass::Sro)
    } else if stix21::MARKING_TYPES.contains(&object_type) {
        Ok(ObjectClass::Marking)
    } else {
        Err(StixError::UnknownType(object_type.to_string()))
    }
}

/// Parse a single STIX object from JSON text.
pub fn parse_object(text: &str) -> Result<StixObject, StixError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| StixError::MalformedJson(e.to_string()))?;
    from_value(value)
}

/// Validate an already-parsed JSON value as a STIX object.
pub fn from_value(value: Value) -> Result<StixObject, StixError> {
    let mut map = match value {
        Value::Object(m) => m,
        _ => return Err(StixError::MalformedJson("expected a JSON object".into())),
    };

    // `relation_type` is accepted as a spelling variant and normalized.
    if map.contains_key("relation_type") && !map.contains_key("relationship_type") {
        let mut normalized = Map::new();
        for (k, v) in std::mem::take(&mut map) {
            if k == "relation_type" {
                normalized.insert("relationship_type".to_string(), v);
            } else {
                normalized.insert(k, v);
            }
        }
        map = normalized;
    }

    let object_type = match map.get("type") {
        Some(Value::String(t)) => t.clone(),
        _ => return Err(StixError::MissingRequiredProperty("type".into())),
    };
    if !is_valid_type_name(&object_type) {
        return Err(StixError::UnknownType(object_type));
    }

    let id = match map.get("id") {
        Some(Value::String(s)) => s.parse::<Identifier>()?,
        _ => return Err(StixError::MissingRequiredProperty("id".into())),
    };
    if id.object_type() != object_type {
        return Err(StixError::BadIdentifier(format!(
            "id prefix `{}` does not match object type `{}`",
            id.object_type(),
            object_type
        )));
    }

    for name in map.keys() {
        if !is_valid_property_name(name) {
            return Err(StixError::BadPropertyName(name.clone()));
        }
    }

    // Required common properties apply to classified SDOs; custom types are
    // carried through and validated only for identifier shape.
    if matches!(classify(&object_type), Ok(ObjectClass::Sdo)) {
        for required in ["spec_version", "created", "modified"] {
            if !map.contains_key(required) {
                return Err(StixError::MissingRequiredProperty(required.to_string()));
            }
        }
    }

    Ok(StixObject {
        object_type,
        id,
        properties: map,
    })
}

/// Parse a STIX bundle from JSON text.
pub fn parse_bundle(text: &str) -> Result<Bundle, StixError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| StixError::MalformedJson(e.to_string()))?;
    bundle_from_value(value)
}

pub fn bundle_from_value(value: Value) -> Result<Bundle, StixError> {
    let map = match value {
        Value::Object(m) => m,
        _ => return Err(StixError::NotABundle),
    };
    match map.get("type") {
        Some(Value::String(t)) if t == "bundle" => {}
        _ => return Err(StixError::NotABundle),
    }
    let id = match map.get("id") {
        Some(Value::String(s)) => s.parse::<Identifier>()?,
        _ => return Err(StixError::MissingRequiredProperty("id".into())),
    };
    let raw_objects = match map.get("objects") {
        Some(Value::Array(a)) => a.clone(),
        None => Vec::new(),
        Some(_) => return Err(StixError::NotABundle),
    };

    let mut objects = Vec::with_capacity(raw_objects.len());
    let mut seen = std::collections::HashSet::new();
    for raw in raw_objects {
        let obj = from_value(raw)?;
        if !seen.insert(obj.id().to_string()) {
            return Err(StixError::DuplicateObjectId(obj.id().to_string()));
        }
        objects.push(obj);
    }
    Ok(Bundle { id, objects })
}

/// Minified, order-preserving JSON serialization. Its byte length is the
/// baseline size s0.
pub fn canonical_json(object: &StixObject) -> Vec<u8> {
    serde_json::to_vec(&Value::Object(object.properties.clone()))
        .expect("property trees always serialize")
}

/// Allowed top-level property names for a native object type: class-common
/// properties plus the type-specific set.
fn allowed_properties(object_type: &str) -> Option<Vec<&'static str>> {
    let class = classify(object_type).ok()?;
    let mut allowed: Vec<&'static str> = match class {
        ObjectClass::Sdo => stix21::SDO_COMMON.to_vec(),
        ObjectClass::Sco => stix21::SCO_COMMON.to_vec(),
        // SROs and markings share the SDO common property set.
        ObjectClass::Sro | ObjectClass::Marking => stix21::SDO_COMMON.to_vec(),
    };
    if let Some(specific) = stix21::type_specific_properties(object_type) {
        allowed.extend_from_slice(specific);
    }
    Some(allowed)
}

/// Remove every `x_`-prefixed property and every property not defined for
/// the object's type in STIX 2.1. Objects of non-native type are returned
/// unchanged; the caller decides whether to drop them entirely.
pub fn strip_non_native(object: &StixObject) -> StixObject {
    let Some(allowed) = allowed_properties(&object.object_type) else {
        return object.clone();
    };
    let properties: PropertyMap = object
        .properties
        .iter()
        .filter(|(name, _)| !name.starts_with("x_") && allowed.contains(&name.as_str()))
        .map(|(name, value)| (name.clone(), value.clone()))
        .collect();
    StixObject {
        object_type: object.object_type.clone(),
        id: object.id.clone(),
        properties,
    }
}

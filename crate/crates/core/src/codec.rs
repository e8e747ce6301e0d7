//! Two-stage tinySTIX codec: (1) integer mapping of dictionary-known keys
//! and vocabulary terms, (2) compact CBOR encoding of the mapped tree.

use ciborium::value::{Integer, Value as Cbor};
use serde_json::{Map, Number, Value as Json};

use crate::dict::Dictionary;
use crate::error::CodecError;
use crate::stix::{self, StixObject};

/// Property tree with dictionary-known keys and vocabulary terms replaced by
/// integer codes. Structurally isomorphic to the source object and
/// reversible under the same dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerMappedObject(Cbor);

impl IntegerMappedObject {
    pub fn as_cbor(&self) -> &Cbor {
        &self.0
    }
}

/// The CBOR-encoded compressed object. On the wire this is the two-element
/// array `[dict_version, body]`; `body_bytes` is the stage-2 size s2.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyStixPayload {
    dict_version: u64,
    body: Cbor,
}

impl TinyStixPayload {
    pub fn dict_version(&self) -> u64 {
        self.dict_version
    }

    /// CBOR bytes of the body map alone.
    pub fn body_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        ciborium::into_writer(&self.body, &mut out).expect("in-memory CBOR write");
        out
    }

    /// Full wire form: `[dict_version, body]`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let doc = Cbor::Array(vec![
            Cbor::Integer(Integer::from(self.dict_version)),
            self.body.clone(),
        ]);
        let mut out = Vec::new();
        ciborium::into_writer(&doc, &mut out).expect("in-memory CBOR write");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let doc: Cbor =
            ciborium::from_reader(bytes).map_err(|e| CodecError::MalformedCbor(e.to_string()))?;
        let mut items = match doc {
            Cbor::Array(items) if items.len() == 2 => items.into_iter(),
            _ => {
                return Err(CodecError::MalformedCbor(
                    "payload is not a two-element array".into(),
                ))
            }
        };
        let version = match items.next().unwrap() {
            Cbor::Integer(i) => {
                let n: i128 = i.into();
                u64::try_from(n)
                    .map_err(|_| CodecError::MalformedCbor("negative dictionary version".into()))?
            }
            _ => {
                return Err(CodecError::MalformedCbor(
                    "version is not an integer".into(),
                ))
            }
        };
        let body = items.next().unwrap();
        if !matches!(body, Cbor::Map(_)) {
            return Err(CodecError::MalformedCbor("body is not a map".into()));
        }
        Ok(TinyStixPayload {
            dict_version: version,
            body,
        })
    }
}

fn map_json_value(value: &Json, key_context: Option<&str>, dict: &Dictionary) -> Cbor {
    match value {
        Json::Null => Cbor::Null,
        Json::Bool(b) => Cbor::Bool(*b),
        Json::Number(n) => {
            if let Some(i) = n.as_i64() {
                Cbor::Integer(Integer::from(i))
            } else if let Some(u) = n.as_u64() {
                Cbor::Integer(Integer::from(u))
            } else {
                Cbor::Float(n.as_f64().expect("JSON number is int or float"))
            }
        }
        Json::String(s) => {
            if let Some(key) = key_context {
                if key == "type" {
                    if let Some(code) = dict.encode_type(s) {
                        return Cbor::Integer(Integer::from(code));
                    }
                } else if let Some(vocab) = dict.vocab_for_property(key) {
                    if let Some(code) = dict.encode_vocab_term(vocab, s) {
                        return Cbor::Integer(Integer::from(code));
                    }
                }
            }
            Cbor::Text(s.clone())
        }
        // list elements inherit the property context so vocab lists code
        // element-wise
        Json::Array(items) => Cbor::Array(
            items
                .iter()
                .map(|item| map_json_value(item, key_context, dict))
                .collect(),
        ),
        Json::Object(map) => map_json_object(map, dict),
    }
}

fn map_json_object(map: &Map<String, Json>, dict: &Dictionary) -> Cbor {
    Cbor::Map(
        map.iter()
            .map(|(key, value)| {
                let mapped_key = match dict.encode_key(key) {
                    Some(code) => Cbor::Integer(Integer::from(code)),
                    None => Cbor::Text(key.clone()),
                };
                (mapped_key, map_json_value(value, Some(key), dict))
            })
            .collect(),
    )
}

/// Stage 1: replace dictionary-known keys and vocabulary terms by codes.
pub fn apply_integer_mapping(object: &StixObject, dict: &Dictionary) -> IntegerMappedObject {
    IntegerMappedObject(map_json_object(object.properties(), dict))
}

fn unmap_cbor_value(
    value: &Cbor,
    key_context: Option<&str>,
    dict: &Dictionary,
) -> Result<Json, CodecError> {
    match value {
        Cbor::Null => Ok(Json::Null),
        Cbor::Bool(b) => Ok(Json::Bool(*b)),
        Cbor::Integer(i) => {
            let n: i128 = (*i).into();
            if let Some(key) = key_context {
                if key == "type" {
                    let code = u64::try_from(n).map_err(|_| CodecError::UnknownCode {
                        code: 0,
                        context: "type".into(),
                    })?;
                    let name = dict.decode_type(code).ok_or(CodecError::UnknownCode {
                        code,
                        context: "type".into(),
                    })?;
                    return Ok(Json::String(name.to_string()));
                }
                if let Some(vocab) = dict.vocab_for_property(key) {
                    let code = u64::try_from(n).map_err(|_| CodecError::UnknownCode {
                        code: 0,
                        context: vocab.to_string(),
                    })?;
                    let term = dict.decode_vocab_term(vocab, code).ok_or_else(|| {
                        CodecError::UnknownCode {
                            code,
                            context: vocab.to_string(),
                        }
                    })?;
                    return Ok(Json::String(term.to_string()));
                }
            }
            if let Ok(v) = i64::try_from(n) {
                Ok(Json::Number(v.into()))
            } else if let Ok(v) = u64::try_from(n) {
                Ok(Json::Number(v.into()))
            } else {
                Err(CodecError::MalformedCbor(
                    "integer out of JSON range".into(),
                ))
            }
        }
        Cbor::Float(f) => {
            let n = Number::from_f64(*f)
                .ok_or_else(|| CodecError::MalformedCbor("non-finite float".into()))?;
            Ok(Json::Number(n))
        }
        Cbor::Text(s) => Ok(Json::String(s.clone())),
        Cbor::Array(items) => items
            .iter()
            .map(|item| unmap_cbor_value(item, key_context, dict))
            .collect::<Result<Vec<_>, _>>()
            .map(Json::Array),
        Cbor::Map(entries) => unmap_cbor_map(entries, dict).map(Json::Object),
        other => Err(CodecError::MalformedCbor(format!(
            "unsupported CBOR item {other:?}"
        ))),
    }
}

fn unmap_cbor_map(
    entries: &[(Cbor, Cbor)],
    dict: &Dictionary,
) -> Result<Map<String, Json>, CodecError> {
    let mut out = Map::new();
    for (key, value) in entries {
        let name = match key {
            Cbor::Integer(i) => {
                let n: i128 = (*i).into();
                let code = u64::try_from(n).map_err(|_| CodecError::UnknownCode {
                    code: 0,
                    context: "key".into(),
                })?;
                dict.decode_key(code)
                    .ok_or(CodecError::UnknownCode {
                        code,
                        context: "key".into(),
                    })?
                    .to_string()
            }
            Cbor::Text(s) => s.clone(),
            other => {
                return Err(CodecError::MalformedCbor(format!(
                    "unsupported map key {other:?}"
                )))
            }
        };
        let json = unmap_cbor_value(value, Some(&name), dict)?;
        out.insert(name, json);
    }
    Ok(out)
}

/// Inverse of [`apply_integer_mapping`] under the same dictionary.
pub fn remove_integer_mapping(
    mapped: &IntegerMappedObject,
    dict: &Dictionary,
) -> Result<StixObject, CodecError> {
    let entries = match mapped.as_cbor() {
        Cbor::Map(entries) => entries,
        _ => {
            return Err(CodecError::MalformedCbor(
                "mapped object is not a map".into(),
            ))
        }
    };
    let tree = unmap_cbor_map(entries, dict)?;
    Ok(stix::from_value(Json::Object(tree))?)
}

/// Stage 2: compact CBOR encoding of the mapped tree.
pub fn encode_cbor(mapped: &IntegerMappedObject, dict_version: u64) -> TinyStixPayload {
    TinyStixPayload {
        dict_version,
        body: mapped.0.clone(),
    }
}

/// Inverse of [`encode_cbor`]; rejects payloads built against a different
/// dictionary version.
pub fn decode_cbor(
    payload: &TinyStixPayload,
    dict: &Dictionary,
) -> Result<IntegerMappedObject, CodecError> {
    if payload.dict_version != dict.version_id() {
        return Err(CodecError::DictVersionMismatch {
            found: payload.dict_version,
            expected: dict.version_id(),
        });
    }
    Ok(IntegerMappedObject(payload.body.clone()))
}

/// Full pipeline: STIX object to tinySTIX payload.
pub fn to_tinystix(object: &StixObject, dict: &Dictionary) -> TinyStixPayload {
    encode_cbor(&apply_integer_mapping(object, dict), dict.version_id())
}

/// Full pipeline inverse.
pub fn from_tinystix(
    payload: &TinyStixPayload,
    dict: &Dictionary,
) -> Result<StixObject, CodecError> {
    remove_integer_mapping(&decode_cbor(payload, dict)?, dict)
}

/// Minified JSON rendering of a mapped tree with integer keys rendered as
/// quoted digit strings. Its byte length is the stage-1 size s1.
pub fn render_mapped_json(mapped: &IntegerMappedObject) -> Vec<u8> {
    let mut out = Vec::new();
    write_json(mapped.as_cbor(), &mut out);
    out
}

fn write_json(value: &Cbor, out: &mut Vec<u8>) {
    match value {
        Cbor::Null => out.extend_from_slice(b"null"),
        Cbor::Bool(true) => out.extend_from_slice(b"true"),
        Cbor::Bool(false) => out.extend_from_slice(b"false"),
        Cbor::Integer(i) => {
            let n: i128 = (*i).into();
            out.extend_from_slice(n.to_string().as_bytes());
        }
        Cbor::Float(f) => {
            // same shortest-roundtrip formatting as the baseline serializer
            let n = Number::from_f64(*f).expect("finite float");
            out.extend_from_slice(n.to_string().as_bytes());
        }
        Cbor::Text(s) => {
            out.extend_from_slice(serde_json::to_string(s).expect("string escape").as_bytes());
        }
        Cbor::Array(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_json(item, out);
            }
            out.push(b']');
        }
        Cbor::Map(entries) => {
            out.push(b'{');
            for (i, (key, value)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                match key {
                    Cbor::Integer(code) => {
                        let n: i128 = (*code).into();
                        out.push(b'"');
                        out.extend_from_slice(n.to_string().as_bytes());
                        out.push(b'"');
                    }
                    Cbor::Text(s) => out.extend_from_slice(
                        serde_json::to_string(s).expect("string escape").as_bytes(),
                    ),
                    other => panic!("unsupported JSON map key {other:?}"),
                }
                out.push(b':');
                write_json(value, out);
            }
            out.push(b'}');
        }
        other => panic!("unsupported JSON item {other:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stix::parse_object;

    fn dict() -> Dictionary {
        Dictionary::stix21_v1()
    }

    const INDICATOR: &str = r#"{
        "type": "indicator",
        "spec_version": "2.1",
        "id": "indicator--8e2e2d2b-17d4-4cbf-938f-98ee46b3cd3f",
        "created": "2021-01-01T00:00:00.000Z",
        "modified": "2021-01-01T00:00:00.000Z",
        "indicator_types": ["malicious-activity", "my-custom-kind"],
        "pattern": "[ipv4-addr:value = '198.51.100.1']",
        "pattern_type": "stix",
        "valid_from": "2021-01-01T00:00:00Z"
    }"#;

    #[test]
    fn maps_keys_and_vocab_terms() {
        let d = dict();
        let obj = parse_object(INDICATOR).unwrap();
        let mapped = apply_integer_mapping(&obj, &d);
        let entries = match mapped.as_cbor() {
            Cbor::Map(e) => e,
            _ => unreachable!(),
        };
        // first key is `type`, coded, with the type code as value
        let type_code = d.encode_key("type").unwrap();
        let indicator_code = d.encode_type("indicator").unwrap();
        assert_eq!(
            entries[0],
            (
                Cbor::Integer(Integer::from(type_code)),
                Cbor::Integer(Integer::from(indicator_code))
            )
        );
        // vocab list codes known terms and passes custom ones through
        let it_key = Cbor::Integer(Integer::from(d.encode_key("indicator_types").unwrap()));
        let (_, it_value) = entries.iter().find(|(k, _)| *k == it_key).unwrap();
        match it_value {
            Cbor::Array(items) => {
                assert!(matches!(items[0], Cbor::Integer(_)));
                assert_eq!(items[1], Cbor::Text("my-custom-kind".into()));
            }
            other => panic!("expected array, got {other:?}"),
        }
    }

    #[test]
    fn custom_keys_stay_text() {
        let d = dict();
        let text = r#"{"type":"x-custom-thing","id":"x-custom-thing--8e2e2d2b-17d4-4cbf-938f-98ee46b3cd3f","x_weird":1}"#;
        let obj = parse_object(text).unwrap();
        let mapped = apply_integer_mapping(&obj, &d);
        let entries = match mapped.as_cbor() {
            Cbor::Map(e) => e,
            _ => unreachable!(),
        };
        // `type` key is coded, but the custom type value stays text
        assert!(matches!(entries[0].1, Cbor::Text(_)));
        assert!(entries
            .iter()
            .any(|(k, _)| *k == Cbor::Text("x_weird".into())));
    }

    #[test]
    fn mapping_roundtrip() {
        let d = dict();
        let obj = parse_object(INDICATOR).unwrap();
        let mapped = apply_integer_mapping(&obj, &d);
        let back = remove_integer_mapping(&mapped, &d).unwrap();
        assert_eq!(back, obj);
    }

    #[test]
    fn unknown_code_detected() {
        let d = dict();
        let bogus = IntegerMappedObject(Cbor::Map(vec![(
            Cbor::Integer(Integer::from(9_999_999u64)),
            Cbor::Text("v".into()),
        )]));
        assert!(matches!(
            remove_integer_mapping(&bogus, &d),
            Err(CodecError::UnknownCode { .. })
        ));
    }

    #[test]
    fn empty_map_encodes_to_a0() {
        let payload = encode_cbor(&IntegerMappedObject(Cbor::Map(vec![])), 1);
        assert_eq!(payload.body_bytes(), vec![0xA0]);
    }

    #[test]
    fn small_key_codes_are_one_byte() {
        let payload = encode_cbor(
            &IntegerMappedObject(Cbor::Map(vec![(
                Cbor::Integer(Integer::from(1u64)),
                Cbor::Integer(Integer::from(0u64)),
            )])),
            1,
        );
        assert_eq!(payload.body_bytes(), vec![0xA1, 0x01, 0x00]);
    }

    #[test]
    fn truncated_payload_is_malformed() {
        let d = dict();
        let obj = parse_object(INDICATOR).unwrap();
        let bytes = to_tinystix(&obj, &d).to_bytes();
        assert!(matches!(
            TinyStixPayload::from_bytes(&bytes[..bytes.len() - 3]),
            Err(CodecError::MalformedCbor(_))
        ));
    }

    #[test]
    fn dict_version_mismatch_detected() {
        let d = dict();
        let obj = parse_object(INDICATOR).unwrap();
        let payload = encode_cbor(&apply_integer_mapping(&obj, &d), 99);
        assert!(matches!(
            decode_cbor(&payload, &d),
            Err(CodecError::DictVersionMismatch {
                found: 99,
                expected: 1
            })
        ));
    }

    #[test]
    fn full_pipeline_roundtrip_and_determinism() {
        let d = dict();
        let obj = parse_object(INDICATOR).unwrap();
        let p1 = to_tinystix(&obj, &d);
        let p2 = to_tinystix(&obj, &d);
        assert_eq!(p1.to_bytes(), p2.to_bytes());
        let back =
            from_tinystix(&TinyStixPayload::from_bytes(&p1.to_bytes()).unwrap(), &d).unwrap();
        assert_eq!(back, obj);
    }

    #[test]
    fn size_ordering_on_dictionary_covered_object() {
        let d = dict();
        let obj = parse_object(INDICATOR).unwrap();
        let s0 = crate::stix::canonical_json(&obj).len();
        let mapped = apply_integer_mapping(&obj, &d);
        let s1 = render_mapped_json(&mapped).len();
        let s2 = encode_cbor(&mapped, 1).body_bytes().len();
        assert!(s2 <= s1, "s2={s2} s1={s1}");
        assert!(s1 <= s0, "s1={s1} s0={s0}");
    }
}

//! CoAP message conventions: resource paths, query filters, the CBOR
//! envelope and add-status bodies, content formats, and block option
//! arithmetic.

use std::io::Cursor;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use ciborium::value::Value as Cbor;
use coap_lite::{CoapOption, Packet};

use tinystix_core::Identifier;

use crate::error::ExchangeError;
use crate::store::{AddStatus, Envelope, FilterSpec};

/// Experimental-range content format for bare tinySTIX payloads.
pub const CONTENT_FORMAT_TINYSTIX: u16 = 65001;
/// Experimental-range content format for COSE-wrapped payloads.
pub const CONTENT_FORMAT_COSE: u16 = 65002;
/// Preferred block size for constrained links.
pub const BLOCK_SIZE: usize = 1024;
/// SZX value encoding a 1024-byte block (2^(6+4)).
pub const BLOCK_SZX: u8 = 6;

/// Parsed resource target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resource {
    Collections,
    CollectionObjects(uuid::Uuid),
    Channel(String),
}

pub fn path_segments(packet: &Packet) -> Vec<String> {
    packet
        .get_option(CoapOption::UriPath)
        .map(|list| {
            list.iter()
                .map(|seg| String::from_utf8_lossy(seg).into_owned())
                .collect()
        })
        .unwrap_or_default()
}

pub fn parse_resource(packet: &Packet) -> Result<Resource, ExchangeError> {
    let segments = path_segments(packet);
    let parts: Vec<&str> = segments.iter().map(String::as_str).collect();
    match parts.as_slice() {
        ["collections"] => Ok(Resource::Collections),
        ["collections", id, "objects"] => uuid::Uuid::from_str(id)
            .map(Resource::CollectionObjects)
            .map_err(|_| ExchangeError::Malformed(format!("bad collection id {id}"))),
        ["channels", topic] => Ok(Resource::Channel((*topic).to_string())),
        _ => Err(ExchangeError::Malformed(format!(
            "unknown resource /{}",
            parts.join("/")
        ))),
    }
}

pub fn set_resource_path(packet: &mut Packet, resource: &Resource) {
    let segments: Vec<String> = match resource {
        Resource::Collections => vec!["collections".into()],
        Resource::CollectionObjects(id) => {
            vec!["collections".into(), id.to_string(), "objects".into()]
        }
        Resource::Channel(topic) => vec!["channels".into(), topic.clone()],
    };
    for seg in segments {
        packet.add_option(CoapOption::UriPath, seg.into_bytes());
    }
}

/// Encode a filter as Uri-Query options on a request.
pub fn set_filter_query(packet: &mut Packet, filter: &FilterSpec) {
    let mut push = |kv: String| packet.add_option(CoapOption::UriQuery, kv.into_bytes());
    if let Some(t) = &filter.match_type {
        push(format!("type={t}"));
    }
    if let Some(id) = &filter.match_id {
        push(format!("id={id}"));
    }
    if let Some(after) = filter.added_after {
        push(format!(
            "added_after={}",
            after.to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
        ));
    }
    if let Some(limit) = filter.page_limit {
        push(format!("limit={limit}"));
    }
    if let Some(token) = filter.page_token {
        push(format!("token={token}"));
    }
}

/// Decode Uri-Query options back into a filter. Unknown keys are rejected
/// so a typo does not silently return the whole collection.
pub fn parse_filter_query(packet: &Packet) -> Result<FilterSpec, ExchangeError> {
    let mut filter = FilterSpec::default();
    let Some(queries) = packet.get_option(CoapOption::UriQuery) else {
        return Ok(filter);
    };
    for raw in queries {
        let text = String::from_utf8_lossy(raw);
        let (key, value) = text
            .split_once('=')
            .ok_or_else(|| ExchangeError::BadFilter(format!("query without value: {text}")))?;
        match key {
            "type" => filter.match_type = Some(value.to_string()),
            "id" => {
                filter.match_id = Some(
                    Identifier::from_str(value)
                        .map_err(|e| ExchangeError::BadFilter(e.to_string()))?,
                )
            }
            "added_after" => {
                filter.added_after = Some(
                    DateTime::parse_from_rfc3339(value)
                        .map_err(|e| ExchangeError::BadFilter(e.to_string()))?
                        .with_timezone(&Utc),
                )
            }
            "limit" => {
                filter.page_limit = Some(
                    value
                        .parse()
                        .map_err(|_| ExchangeError::BadFilter(format!("bad limit {value}")))?,
                )
            }
            "token" => {
                filter.page_token = Some(
                    value
                        .parse()
                        .map_err(|_| ExchangeError::BadFilter(format!("bad token {value}")))?,
                )
            }
            _ => return Err(ExchangeError::BadFilter(format!("unknown query key {key}"))),
        }
    }
    Ok(filter)
}

fn cbor_to_vec(value: &Cbor) -> Vec<u8> {
    let mut out = Vec::new();
    ciborium::into_writer(value, &mut out).expect("CBOR serialization is infallible in memory");
    out
}

fn cbor_from_slice(bytes: &[u8]) -> Result<Cbor, ExchangeError> {
    ciborium::from_reader(Cursor::new(bytes))
        .map_err(|e| ExchangeError::Malformed(format!("bad CBOR body: {e}")))
}

/// Envelope body: map {0: [bstr objects], 1: more, 2: next page token}.
pub fn encode_envelope(envelope: &Envelope) -> Vec<u8> {
    let objects = Cbor::Array(
        envelope
            .objects
            .iter()
            .map(|o| Cbor::Bytes(o.clone()))
            .collect(),
    );
    let mut map = vec![
        (Cbor::Integer(0.into()), objects),
        (Cbor::Integer(1.into()), Cbor::Bool(envelope.more)),
    ];
    if let Some(token) = &envelope.next_token {
        map.push((Cbor::Integer(2.into()), Cbor::Text(token.clone())));
    }
    cbor_to_vec(&Cbor::Map(map))
}

pub fn decode_envelope(bytes: &[u8]) -> Result<Envelope, ExchangeError> {
    let Cbor::Map(entries) = cbor_from_slice(bytes)? else {
        return Err(ExchangeError::Malformed("envelope is not a map".into()));
    };
    let mut envelope = Envelope {
        objects: Vec::new(),
        more: false,
        next_token: None,
    };
    for (key, value) in entries {
        let Cbor::Integer(code) = key else {
            return Err(ExchangeError::Malformed("non-integer envelope key".into()));
        };
        match (u64::try_from(code), value) {
            (Ok(0), Cbor::Array(items)) => {
                for item in items {
                    let Cbor::Bytes(b) = item else {
                        return Err(ExchangeError::Malformed("object is not bytes".into()));
                    };
                    envelope.objects.push(b);
                }
            }
            (Ok(1), Cbor::Bool(more)) => envelope.more = more,
            (Ok(2), Cbor::Text(token)) => envelope.next_token = Some(token),
            _ => return Err(ExchangeError::Malformed("unexpected envelope entry".into())),
        }
    }
    if envelope.more != envelope.next_token.is_some() {
        return Err(ExchangeError::Malformed(
            "envelope continuation flags disagree".into(),
        ));
    }
    Ok(envelope)
}

/// Add-status body: array of maps {0: 1 for ok / 0 for rejected,
/// 1: object id or rejection reason}.
pub fn encode_add_statuses(statuses: &[AddStatus]) -> Vec<u8> {
    let items = statuses
        .iter()
        .map(|status| {
            // successes carry no detail: the sender already knows the ids it
            // submitted, and echoing them makes the status body grow with the
            // batch instead of staying small
            let (ok, detail) = match status {
                AddStatus::Ok { .. } => (1, String::new()),
                AddStatus::Rejected { reason } => (0, reason.clone()),
            };
            Cbor::Map(vec![
                (Cbor::Integer(0.into()), Cbor::Integer(ok.into())),
                (Cbor::Integer(1.into()), Cbor::Text(detail)),
            ])
        })
        .collect();
    cbor_to_vec(&Cbor::Array(items))
}

pub fn decode_add_statuses(bytes: &[u8]) -> Result<Vec<AddStatus>, ExchangeError> {
    let Cbor::Array(items) = cbor_from_slice(bytes)? else {
        return Err(ExchangeError::Malformed(
            "status body is not an array".into(),
        ));
    };
    let mut statuses = Vec::with_capacity(items.len());
    for item in items {
        let Cbor::Map(entries) = item else {
            return Err(ExchangeError::Malformed("status entry is not a map".into()));
        };
        let mut ok = None;
        let mut detail = String::new();
        for (key, value) in entries {
            match (key, value) {
                (Cbor::Integer(k), Cbor::Integer(v)) if u64::try_from(k) == Ok(0) => {
                    ok = Some(u64::try_from(v) == Ok(1));
                }
                (Cbor::Integer(k), Cbor::Text(v)) if u64::try_from(k) == Ok(1) => detail = v,
                _ => return Err(ExchangeError::Malformed("unexpected status entry".into())),
            }
        }
        statuses.push(match ok {
            Some(true) => AddStatus::Ok {
                object_id: (!detail.is_empty()).then_some(detail),
            },
            Some(false) => AddStatus::Rejected { reason: detail },
            None => return Err(ExchangeError::Malformed("status without outcome".into())),
        });
    }
    Ok(statuses)
}

/// RFC 7959 block option value: `num << 4 | m << 3 | szx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockOpt {
    pub num: u32,
    pub more: bool,
    pub szx: u8,
}

impl BlockOpt {
    pub fn block_size(&self) -> usize {
        1usize << (self.szx + 4)
    }

    pub fn to_option_bytes(self) -> Vec<u8> {
        let value = (self.num << 4) | (u32::from(self.more) << 3) | u32::from(self.szx & 0x7);
        if value == 0 {
            return Vec::new();
        }
        let bytes = value.to_be_bytes();
        let skip = bytes.iter().take_while(|b| **b == 0).count();
        bytes[skip..].to_vec()
    }

    pub fn from_option_bytes(bytes: &[u8]) -> Result<Self, ExchangeError> {
        if bytes.len() > 3 {
            return Err(ExchangeError::Malformed("block option too long".into()));
        }
        let mut value: u32 = 0;
        for b in bytes {
            value = (value << 8) | u32::from(*b);
        }
        let szx = (value & 0x7) as u8;
        if szx == 7 {
            return Err(ExchangeError::Malformed("reserved block szx".into()));
        }
        Ok(BlockOpt {
            num: value >> 4,
            more: value & 0x8 != 0,
            szx,
        })
    }
}

pub fn get_block_option(
    packet: &Packet,
    option: CoapOption,
) -> Result<Option<BlockOpt>, ExchangeError> {
    match packet.get_first_option(option) {
        Some(bytes) => BlockOpt::from_option_bytes(bytes).map(Some),
        None => Ok(None),
    }
}

pub fn set_block_option(packet: &mut Packet, option: CoapOption, block: BlockOpt) {
    packet.clear_option(option);
    packet.add_option(option, block.to_option_bytes());
}

pub fn set_content_format(packet: &mut Packet, format: u16) {
    packet.clear_option(CoapOption::ContentFormat);
    packet.add_option(CoapOption::ContentFormat, format.to_be_bytes().to_vec());
}

pub fn get_content_format(packet: &Packet) -> Option<u16> {
    packet
        .get_first_option(CoapOption::ContentFormat)
        .map(|bytes| bytes.iter().fold(0u16, |acc, b| (acc << 8) | u16::from(*b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_option_encodes_per_rfc7959() {
        // num=0, m=0, szx=6 encodes as the single byte 0x06
        let b = BlockOpt {
            num: 0,
            more: false,
            szx: 6,
        };
        assert_eq!(b.to_option_bytes(), vec![0x06]);
        // num=1, m=1, szx=6: 1<<4 | 1<<3 | 6 = 0x1E
        let b = BlockOpt {
            num: 1,
            more: true,
            szx: 6,
        };
        assert_eq!(b.to_option_bytes(), vec![0x1E]);
        // num=0, m=0, szx=0 is the empty option value
        let b = BlockOpt {
            num: 0,
            more: false,
            szx: 0,
        };
        assert!(b.to_option_bytes().is_empty());
        assert_eq!(
            BlockOpt::from_option_bytes(&[]).unwrap(),
            BlockOpt {
                num: 0,
                more: false,
                szx: 0
            }
        );
    }

    #[test]
    fn block_option_roundtrips() {
        for num in [0u32, 1, 15, 16, 255, 4096, 1 << 19] {
            for more in [false, true] {
                for szx in 0u8..=6 {
                    let b = BlockOpt { num, more, szx };
                    let back = BlockOpt::from_option_bytes(&b.to_option_bytes()).unwrap();
                    assert_eq!(back, b);
                }
            }
        }
    }

    #[test]
    fn envelope_roundtrips() {
        let envelope = Envelope {
            objects: vec![vec![0x82, 0x01, 0xA0], vec![0xA0]],
            more: true,
            next_token: Some("42".into()),
        };
        let bytes = encode_envelope(&envelope);
        assert_eq!(decode_envelope(&bytes).unwrap(), envelope);

        let last = Envelope {
            objects: vec![],
            more: false,
            next_token: None,
        };
        assert_eq!(decode_envelope(&encode_envelope(&last)).unwrap(), last);
    }

    #[test]
    fn envelope_rejects_inconsistent_continuation() {
        let map = Cbor::Map(vec![
            (Cbor::Integer(0.into()), Cbor::Array(vec![])),
            (Cbor::Integer(1.into()), Cbor::Bool(true)),
        ]);
        assert!(decode_envelope(&cbor_to_vec(&map)).is_err());
    }

    #[test]
    fn add_statuses_roundtrip() {
        let statuses = vec![
            AddStatus::Ok {
                object_id: Some("indicator--8e2e2d2b-17d4-4cbf-938f-98ee46b3cd3f".into()),
            },
            AddStatus::Rejected {
                reason: "payload does not decode".into(),
            },
            AddStatus::Ok { object_id: None },
        ];
        // object ids are intentionally not carried on the wire, so successes
        // come back without them; outcomes and rejection reasons survive
        let expected = vec![
            AddStatus::Ok { object_id: None },
            AddStatus::Rejected {
                reason: "payload does not decode".into(),
            },
            AddStatus::Ok { object_id: None },
        ];
        let bytes = encode_add_statuses(&statuses);
        assert_eq!(decode_add_statuses(&bytes).unwrap(), expected);
    }

    #[test]
    fn filter_query_roundtrips_through_packet() {
        use std::str::FromStr as _;
        let filter = FilterSpec {
            match_type: Some("indicator".into()),
            match_id: Some(
                Identifier::from_str("indicator--8e2e2d2b-17d4-4cbf-938f-98ee46b3cd3f").unwrap(),
            ),
            added_after: Some("2021-06-01T12:00:00.000Z".parse().unwrap()),
            page_limit: Some(10),
            page_token: Some(77),
        };
        let mut packet = Packet::new();
        set_filter_query(&mut packet, &filter);
        let back = parse_filter_query(&packet).unwrap();
        assert_eq!(back.match_type, filter.match_type);
        assert_eq!(back.match_id, filter.match_id);
        assert_eq!(back.added_after, filter.added_after);
        assert_eq!(back.page_limit, filter.page_limit);
        assert_eq!(back.page_token, filter.page_token);
    }

    #[test]
    fn unknown_query_key_is_rejected() {
        let mut packet = Packet::new();
        packet.add_option(CoapOption::UriQuery, b"tpye=indicator".to_vec());
        assert!(parse_filter_query(&packet).is_err());
    }

    #[test]
    fn resource_paths_roundtrip() {
        let id = uuid::Uuid::from_u128(7);
        for resource in [
            Resource::Collections,
            Resource::CollectionObjects(id),
            Resource::Channel("malware-alerts".into()),
        ] {
            let mut packet = Packet::new();
            set_resource_path(&mut packet, &resource);
            assert_eq!(parse_resource(&packet).unwrap(), resource);
        }
    }

    #[test]
    fn content_format_roundtrips() {
        let mut packet = Packet::new();
        set_content_format(&mut packet, CONTENT_FORMAT_TINYSTIX);
        assert_eq!(get_content_format(&packet), Some(CONTENT_FORMAT_TINYSTIX));
    }
}

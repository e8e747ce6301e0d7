//! Versioned integer dictionary replacing property names and controlled
//! vocabulary terms with small codes.
//!
//! Codes are assigned in lexicographic order starting at 0, so the dictionary
//! is a pure function of its entry set and anyone can rebuild it from the
//! public STIX 2.1 listing.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use ciborium::value::Value as Cbor;
use indexmap::IndexMap;

use crate::error::DictError;
use crate::stix21;

/// Highest dictionary format version this build understands.
pub const SUPPORTED_VERSION: u64 = 1;

/// Source listing from which a [`Dictionary`] is deterministically built.
#[derive(Debug, Clone, Default)]
pub struct DictionaryEntrySet {
    pub keys: Vec<String>,
    pub types: Vec<String>,
    pub vocabs: IndexMap<String, Vec<String>>,
}

impl DictionaryEntrySet {
    /// The canonical entry set derived from the STIX 2.1 listing.
    pub fn stix21() -> Self {
        let keys = stix21::all_property_names()
            .into_iter()
            .map(str::to_string)
            .collect();
        let mut types: Vec<String> = stix21::all_types()
            .into_iter()
            .map(str::to_string)
            .collect();
        types.sort_unstable();
        let mut vocabs = IndexMap::new();
        let mut named: Vec<_> = stix21::vocabularies();
        named.sort_by_key(|(name, _)| *name);
        for (name, terms) in named {
            vocabs.insert(
                name.to_string(),
                terms.into_iter().map(str::to_string).collect(),
            );
        }
        DictionaryEntrySet {
            keys,
            types,
            vocabs,
        }
    }
}

/// Bidirectional mapping between names/terms and small integer codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    version_id: u64,
    key_map: IndexMap<String, u64>,
    key_rev: Vec<String>,
    type_map: IndexMap<String, u64>,
    type_rev: Vec<String>,
    vocab_maps: IndexMap<String, IndexMap<String, u64>>,
    vocab_revs: HashMap<String, Vec<String>>,
    property_vocab: HashMap<String, String>,
}

fn build_map(
    entries: &[String],
    what: &str,
) -> Result<(IndexMap<String, u64>, Vec<String>), DictError> {
    let mut sorted = entries.to_vec();
    sorted.sort_unstable();
    let mut map = IndexMap::with_capacity(sorted.len());
    for (code, name) in sorted.iter().enumerate() {
        if map.insert(name.clone(), code as u64).is_some() {
            return Err(DictError::DuplicateEntry(format!("{what}:{name}")));
        }
    }
    Ok((map, sorted))
}

impl Dictionary {
    /// Build a dictionary from an entry set. Entries within each map are
    /// sorted lexicographically before code assignment, so the result is a
    /// pure function of the inputs.
    pub fn build(entries: &DictionaryEntrySet, version_id: u64) -> Result<Self, DictError> {
        let (key_map, key_rev) = build_map(&entries.keys, "key")?;
        let (type_map, type_rev) = build_map(&entries.types, "type")?;
        let mut vocab_maps = IndexMap::new();
        let mut vocab_revs = HashMap::new();
        for (vocab, terms) in &entries.vocabs {
            let (map, rev) = build_map(terms, vocab)?;
            vocab_maps.insert(vocab.clone(), map);
            vocab_revs.insert(vocab.clone(), rev);
        }
        Ok(Dictionary {
            version_id,
            key_map,
            key_rev,
            type_map,
            type_rev,
            vocab_maps,
            vocab_revs,
            property_vocab: stix21::PROPERTY_VOCAB
                .iter()
                .map(|(p, v)| (p.to_string(), v.to_string()))
                .collect(),
        })
    }

    /// The shipped canonical dictionary (version 1).
    pub fn stix21_v1() -> Self {
        Self::build(&DictionaryEntrySet::stix21(), 1)
            .expect("canonical entry set has no duplicates")
    }

    pub fn version_id(&self) -> u64 {
        self.version_id
    }

    /// Code for a property name, or `None` when the name is not in the
    /// dictionary (custom `x_` names never are).
    pub fn encode_key(&self, name: &str) -> Option<u64> {
        self.key_map.get(name).copied()
    }

    pub fn decode_key(&self, code: u64) -> Option<&str> {
        self.key_rev.get(code as usize).map(String::as_str)
    }

    pub fn encode_type(&self, name: &str) -> Option<u64> {
        self.type_map.get(name).copied()
    }

    pub fn decode_type(&self, code: u64) -> Option<&str> {
        self.type_rev.get(code as usize).map(String::as_str)
    }

    /// Code for a term of the named vocabulary; unknown terms pass through
    /// uncoded.
    pub fn encode_vocab_term(&self, vocab: &str, term: &str) -> Option<u64> {
        self.vocab_maps.get(vocab)?.get(term).copied()
    }

    pub fn decode_vocab_term(&self, vocab: &str, code: u64) -> Option<&str> {
        self.vocab_revs
            .get(vocab)?
            .get(code as usize)
            .map(String::as_str)
    }

    /// The vocabulary bound to a property name, if any.
    pub fn vocab_for_property(&self, property: &str) -> Option<&str> {
        self.property_vocab.get(property).map(String::as_str)
    }

    pub fn key_count(&self) -> usize {
        self.key_map.len()
    }

    /// Dictionary file format: CBOR map
    /// `{0: version_id, 1: key_map, 2: vocab_maps, 3: type_map}`.
    pub fn to_cbor_bytes(&self) -> Vec<u8> {
        let keys = Cbor::Array(self.key_rev.iter().map(|k| Cbor::Text(k.clone())).collect());
        let types = Cbor::Array(
            self.type_rev
                .iter()
                .map(|t| Cbor::Text(t.clone()))
                .collect(),
        );
        let vocabs = Cbor::Map(
            self.vocab_maps
                .keys()
                .map(|vocab| {
                    let rev = &self.vocab_revs[vocab];
                    (
                        Cbor::Text(vocab.clone()),
                        Cbor::Array(rev.iter().map(|t| Cbor::Text(t.clone())).collect()),
                    )
                })
                .collect(),
        );
        let doc = Cbor::Map(vec![
            (
                Cbor::Integer(0.into()),
                Cbor::Integer((self.version_id as i64).into()),
            ),
            (Cbor::Integer(1.into()), keys),
            (Cbor::Integer(2.into()), vocabs),
            (Cbor::Integer(3.into()), types),
        ]);
        let mut out = Vec::new();
        ciborium::into_writer(&doc, &mut out).expect("in-memory CBOR write");
        out
    }

    pub fn from_cbor_bytes(bytes: &[u8]) -> Result<Self, DictError> {
        let doc: Cbor =
            ciborium::from_reader(bytes).map_err(|e| DictError::CorruptFile(e.to_string()))?;
        let entries = match doc {
            Cbor::Map(entries) => entries,
            _ => return Err(DictError::CorruptFile("top-level item is not a map".into())),
        };
        let mut version_id = None;
        let mut keys = None;
        let mut vocabs = None;
        let mut types = None;
        for (k, v) in entries {
            let idx: i128 = match k {
                Cbor::Integer(i) => i.into(),
                _ => return Err(DictError::CorruptFile("non-integer field label".into())),
            };
            match idx {
                0 => {
                    let n: i128 = match v {
                        Cbor::Integer(i) => i.into(),
                        _ => {
                            return Err(DictError::CorruptFile("version is not an integer".into()))
                        }
                    };
                    version_id = Some(n as u64);
                }
                1 => keys = Some(text_array(v)?),
                2 => {
                    let m = match v {
                        Cbor::Map(m) => m,
                        _ => return Err(DictError::CorruptFile("vocab field is not a map".into())),
                    };
                    let mut out = IndexMap::new();
                    for (name, terms) in m {
                        let name = match name {
                            Cbor::Text(t) => t,
                            _ => {
                                return Err(DictError::CorruptFile("vocab name is not text".into()))
                            }
                        };
                        out.insert(name, text_array(terms)?);
                    }
                    vocabs = Some(out);
                }
                3 => types = Some(text_array(v)?),
                _ => {} // unknown fields ignored
            }
        }
        let version_id =
            version_id.ok_or_else(|| DictError::CorruptFile("missing version field".into()))?;
        if version_id > SUPPORTED_VERSION {
            return Err(DictError::UnsupportedVersion(version_id));
        }
        let entry_set = DictionaryEntrySet {
            keys: keys.ok_or_else(|| DictError::CorruptFile("missing key list".into()))?,
            types: types.ok_or_else(|| DictError::CorruptFile("missing type list".into()))?,
            vocabs: vocabs.ok_or_else(|| DictError::CorruptFile("missing vocab maps".into()))?,
        };
        Dictionary::build(&entry_set, version_id)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DictError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_cbor_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DictError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_cbor_bytes(&bytes)
    }
}

fn text_array(v: Cbor) -> Result<Vec<String>, DictError> {
    let arr = match v {
        Cbor::Array(a) => a,
        _ => return Err(DictError::CorruptFile("expected an array".into())),
    };
    arr.into_iter()
        .map(|item| match item {
            Cbor::Text(t) => Ok(t),
            _ => Err(DictError::CorruptFile("expected a text item".into())),
        })
        .collect()
}

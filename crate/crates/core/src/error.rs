//! Error types shared across the core crate.

use thiserror::Error;

/// Errors raised while parsing or validating STIX 2.1 JSON.
#[derive(Debug, Error)]
pub enum StixError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("missing required property `{0}`")]
    MissingRequiredProperty(String),
    #[error("bad identifier: {0}")]
    BadIdentifier(String),
    #[error("property name `{0}` violates the STIX 2.1 name grammar")]
    BadPropertyName(String),
    #[error("unknown STIX object type `{0}`")]
    UnknownType(String),
    #[error("document is not a STIX bundle")]
    NotABundle,
    #[error("duplicate object id `{0}` within bundle")]
    DuplicateObjectId(String),
}

/// Errors raised by dictionary construction and persistence.
#[derive(Debug, Error)]
pub enum DictError {
    #[error("duplicate dictionary entry `{0}`")]
    DuplicateEntry(String),
    #[error("unsupported dictionary version {0}")]
    UnsupportedVersion(u64),
    #[error("corrupt dictionary file: {0}")]
    CorruptFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors raised by the tinySTIX codec.
#[derive(Debug, Error)]
pub enum CodecError {
    #[error("unknown code {code} in {context} (dictionary version mismatch?)")]
    UnknownCode { code: u64, context: String },
    #[error("malformed CBOR: {0}")]
    MalformedCbor(String),
    #[error("dictionary version mismatch: payload has {found}, expected {expected}")]
    DictVersionMismatch { found: u64, expected: u64 },
    #[error(transparent)]
    Stix(#[from] StixError),
}

/// Errors raised by benchmark aggregation.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error("empty corpus: nothing to aggregate")]
    EmptyCorpus,
    #[error("malformed report CSV: {0}")]
    MalformedCsv(String),
}

//! tinySTIX core: a compressed, CBOR-based representation of STIX 2.1
//! objects.
//!
//! The crate is organized around the two compression stages applied to a
//! STIX 2.1 JSON object:
//!
//! 1. [`dict`] / [`codec::apply_integer_mapping`] — property names and
//!    controlled-vocabulary terms are replaced by small integer codes drawn
//!    from a versioned dictionary;
//! 2. [`codec::encode_cbor`] — the mapped tree is serialized as compact
//!    CBOR, with coded keys as integer map keys.
//!
//! [`stix`] holds the uncompressed baseline model (parsing, validation,
//! canonical minified JSON) and [`bench`] measures the per-stage size
//! reductions.

pub mod bench;
pub mod codec;
pub mod dict;
pub mod error;
pub mod stix;
pub mod stix21;

pub use codec::{IntegerMappedObject, TinyStixPayload};
pub use dict::{Dictionary, DictionaryEntrySet};
pub use error::{BenchError, CodecError, DictError, StixError};
pub use stix::{Bundle, Identifier, ObjectClass, StixObject};

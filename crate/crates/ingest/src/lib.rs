//! Corpus loaders for the evaluation datasets: ATT&CK STIX 2.1 bundles and
//! MISP feed events converted to STIX 2.1.

pub mod attack;
pub mod misp;
pub mod snapshot;

pub use attack::load_attack_corpus;
pub use misp::{load_misp_feed, misp_to_stix, MispAttribute, MispEvent, MispObject};
pub use snapshot::CorpusSnapshot;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a STIX bundle: {0}")]
    NotABundle(#[from] tinystix_core::StixError),
    #[error("feed manifest missing in {0}")]
    ManifestMissing(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

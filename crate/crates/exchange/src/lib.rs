//! CoAP-based exchange of compressed threat intelligence payloads.
//!
//! Two sharing models are provided over one store:
//! collections, read with filtered and paginated request/response
//! exchanges, and channels, pushed to Observe subscribers with a retained
//! last payload per topic. Payloads move as opaque tinySTIX or COSE bytes;
//! the server only decodes far enough to index and, when policy demands,
//! verify them.

pub mod client;
pub mod error;
pub mod proto;
pub mod server;
pub mod store;
pub mod transport;

pub use client::{CoapClient, Subscription};
pub use error::ExchangeError;
pub use server::CoapServer;
pub use store::{AddStatus, Envelope, ExchangeState, FilterSpec, ObjectEntry, ServerPolicy};
pub use transport::{LoopbackNetwork, LossyTransport, Transport, UdpTransport};

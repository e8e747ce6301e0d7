//! Error type shared by the exchange store, server, and client.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExchangeError {
    #[error("collection not found")]
    CollectionNotFound,
    #[error("topic not found")]
    TopicNotFound,
    #[error("bad filter: {0}")]
    BadFilter(String),
    #[error("payload rejected: {0}")]
    PayloadRejected(String),
    #[error("subscription refused")]
    SubscriptionRefused,
    #[error("timed out waiting for a response")]
    Timeout,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("server error: {0}")]
    Server(String),
}

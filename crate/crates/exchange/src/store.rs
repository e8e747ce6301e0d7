//! Transport-independent semantics of the two sharing models: collections
//! (append-only repositories with filtered, paginated reads) and channels
//! (broker topics with retained payloads and observer fan-out).

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use uuid::Uuid;

use tinystix_core::{Dictionary, Identifier, TinyStixPayload};
use tinystix_cose::{KeyStore, ProtectedPayload};

use crate::error::ExchangeError;

/// Where a payload can be delivered when a channel publish fans out.
pub trait NotificationSink: Send + Sync {
    fn deliver(&self, payload: &[u8]);
}

impl<F: Fn(&[u8]) + Send + Sync> NotificationSink for F {
    fn deliver(&self, payload: &[u8]) {
        self(payload)
    }
}

/// One stored collection entry. `payload` is the raw tinySTIX or COSE bytes
/// as received; the id/type metadata is extracted without verifying any
/// signature.
#[derive(Debug, Clone)]
pub struct ObjectEntry {
    pub seq: u64,
    pub object_id: Option<Identifier>,
    pub object_type: Option<String>,
    pub added_at: DateTime<Utc>,
    pub payload: Vec<u8>,
}

#[derive(Debug, Default)]
pub struct Collection {
    pub title: String,
    entries: Vec<ObjectEntry>,
}

/// Query filter for collection reads. All present fields must match.
#[derive(Debug, Clone, Default)]
pub struct FilterSpec {
    pub match_type: Option<String>,
    pub match_id: Option<Identifier>,
    pub added_after: Option<DateTime<Utc>>,
    pub page_limit: Option<usize>,
    pub page_token: Option<u64>,
}

/// A page of results. `more` holds iff `next_token` is present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub objects: Vec<Vec<u8>>,
    pub more: bool,
    pub next_token: Option<String>,
}

/// Per-object outcome of a batch add.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AddStatus {
    Ok { object_id: Option<String> },
    Rejected { reason: String },
}

struct Channel {
    retained: Option<Vec<u8>>,
    subscribers: HashMap<u64, Arc<dyn NotificationSink>>,
}

/// Server policy knobs.
#[derive(Debug, Clone)]
pub struct ServerPolicy {
    /// Reject unsigned payloads on collection add.
    pub require_signed: bool,
    /// Create channels on first publish/subscribe.
    pub auto_create_channels: bool,
    pub max_page_limit: usize,
    pub max_subscribers_per_channel: usize,
    /// Send channel notifications as confirmable messages.
    pub confirmable_notifications: bool,
}

impl Default for ServerPolicy {
    fn default() -> Self {
        ServerPolicy {
            require_signed: false,
            auto_create_channels: true,
            max_page_limit: 100,
            max_subscribers_per_channel: 1024,
            confirmable_notifications: false,
        }
    }
}

struct Inner {
    collections: HashMap<Uuid, Collection>,
    channels: HashMap<String, Channel>,
}

/// In-memory store realizing both sharing models. All mutation goes through
/// one mutex; publish fan-out happens on a snapshot of the subscriber set so
/// a publish sees a consistent registration state.
pub struct ExchangeState {
    inner: Mutex<Inner>,
    next_seq: AtomicU64,
    next_reg: AtomicU64,
    pub dict: Arc<Dictionary>,
    pub keys: Arc<KeyStore>,
    pub policy: ServerPolicy,
}

impl ExchangeState {
    pub fn new(dict: Arc<Dictionary>, keys: Arc<KeyStore>, policy: ServerPolicy) -> Self {
        ExchangeState {
            inner: Mutex::new(Inner {
                collections: HashMap::new(),
                channels: HashMap::new(),
            }),
            next_seq: AtomicU64::new(1),
            next_reg: AtomicU64::new(1),
            dict,
            keys,
            policy,
        }
    }

    pub fn create_collection(&self, id: Uuid, title: &str) {
        let mut inner = self.inner.lock().unwrap();
        inner.collections.entry(id).or_insert_with(|| Collection {
            title: title.to_string(),
            entries: Vec::new(),
        });
    }

    pub fn collection_ids(&self) -> Vec<Uuid> {
        self.inner
            .lock()
            .unwrap()
            .collections
            .keys()
            .copied()
            .collect()
    }

    /// Filtered, paginated read ordered by append sequence. The page cursor
    /// is the last sequence number served, so entries appended during
    /// pagination appear in later pages and are never duplicated.
    pub fn collection_get(&self, id: Uuid, filter: &FilterSpec) -> Result<Envelope, ExchangeError> {
        let limit = filter
            .page_limit
            .unwrap_or(self.policy.max_page_limit)
            .min(self.policy.max_page_limit);
        if limit == 0 {
            return Err(ExchangeError::BadFilter("limit must be positive".into()));
        }
        let inner = self.inner.lock().unwrap();
        let collection = inner
            .collections
            .get(&id)
            .ok_or(ExchangeError::CollectionNotFound)?;
        let after_seq = filter.page_token.unwrap_or(0);
        let matches = |e: &ObjectEntry| -> bool {
            if let Some(t) = &filter.match_type {
                if e.object_type.as_deref() != Some(t.as_str()) {
                    return false;
                }
            }
            if let Some(id) = &filter.match_id {
                if e.object_id.as_ref() != Some(id) {
                    return false;
                }
            }
            if let Some(after) = filter.added_after {
                if e.added_at <= after {
                    return false;
                }
            }
            true
        };
        let mut objects = Vec::new();
        let mut last_seq = after_seq;
        let mut more = false;
        for entry in collection.entries.iter().filter(|e| e.seq > after_seq) {
            if !matches(entry) {
                continue;
            }
            if objects.len() == limit {
                more = true;
                break;
            }
            objects.push(entry.payload.clone());
            last_seq = entry.seq;
        }
        Ok(Envelope {
            objects,
            more,
            next_token: more.then(|| last_seq.to_string()),
        })
    }

    /// Batch add with per-object isolation: one bad payload never rejects
    /// the batch. Duplicate object ids create a new timestamped entry.
    pub fn collection_add(
        &self,
        id: Uuid,
        payloads: &[Vec<u8>],
    ) -> Result<Vec<AddStatus>, ExchangeError> {
        self.collection_add_at(id, payloads, Utc::now())
    }

    /// Same as [`Self::collection_add`] with an explicit timestamp, for
    /// deterministic tests.
    pub fn collection_add_at(
        &self,
        id: Uuid,
        payloads: &[Vec<u8>],
        added_at: DateTime<Utc>,
    ) -> Result<Vec<AddStatus>, ExchangeError> {
        // Validate outside the lock, then append in one critical section so
        // the batch lands contiguously.
        type Prepared = (Option<Identifier>, Option<String>, Vec<u8>);
        let mut prepared: Vec<(AddStatus, Option<Prepared>)> = Vec::with_capacity(payloads.len());
        for bytes in payloads {
            prepared.push(match self.inspect_payload(bytes) {
                Ok((object_id, object_type)) => {
                    let status = AddStatus::Ok {
                        object_id: object_id.as_ref().map(Identifier::to_string),
                    };
                    (status, Some((object_id, object_type, bytes.clone())))
                }
                Err(reason) => (AddStatus::Rejected { reason }, None),
            });
        }
        let mut inner = self.inner.lock().unwrap();
        if !inner.collections.contains_key(&id) {
            return Err(ExchangeError::CollectionNotFound);
        }
        let collection = inner.collections.get_mut(&id).unwrap();
        let mut statuses = Vec::with_capacity(prepared.len());
        for (status, entry) in prepared {
            if let Some((object_id, object_type, payload)) = entry {
                collection.entries.push(ObjectEntry {
                    seq: self.next_seq.fetch_add(1, Ordering::SeqCst),
                    object_id,
                    object_type,
                    added_at,
                    payload,
                });
            }
            statuses.push(status);
        }
        Ok(statuses)
    }

    /// Decode enough of a payload to extract id/type metadata and apply the
    /// signature policy. Signed payloads expose their body without
    /// verification; encrypted ones store no metadata.
    fn inspect_payload(
        &self,
        bytes: &[u8],
    ) -> Result<(Option<Identifier>, Option<String>), String> {
        let tiny = if let Ok(p) = TinyStixPayload::from_bytes(bytes) {
            if self.policy.require_signed {
                return Err("policy requires signed payloads".into());
            }
            Some(p)
        } else {
            match ProtectedPayload::from_bytes(bytes) {
                Ok(ProtectedPayload::Signed(sign1)) => {
                    if self.policy.require_signed {
                        let p = ProtectedPayload::Signed(sign1);
                        Some(
                            tinystix_cose::verify(&p, &self.keys)
                                .map_err(|e| format!("signature rejected: {e}"))?,
                        )
                    } else {
                        sign1
                            .payload
                            .as_ref()
                            .and_then(|b| TinyStixPayload::from_bytes(b).ok())
                    }
                }
                Ok(ProtectedPayload::Encrypted(_)) => {
                    if self.policy.require_signed {
                        return Err("unsigned (encrypted-only) payload rejected".into());
                    }
                    None
                }
                Err(_) => return Err("payload is neither tinySTIX nor COSE".into()),
            }
        };
        match tiny {
            Some(p) => {
                let obj = tinystix_core::codec::from_tinystix(&p, &self.dict)
                    .map_err(|e| format!("payload does not decode: {e}"))?;
                Ok((Some(obj.id().clone()), Some(obj.object_type().to_string())))
            }
            None => Ok((None, None)),
        }
    }

    fn channel_entry<'a>(
        inner: &'a mut Inner,
        topic: &str,
        auto_create: bool,
    ) -> Result<&'a mut Channel, ExchangeError> {
        if !inner.channels.contains_key(topic) {
            if !auto_create {
                return Err(ExchangeError::TopicNotFound);
            }
            inner.channels.insert(
                topic.to_string(),
                Channel {
                    retained: None,
                    subscribers: HashMap::new(),
                },
            );
        }
        Ok(inner.channels.get_mut(topic).unwrap())
    }

    pub fn create_channel(&self, topic: &str) {
        let mut inner = self.inner.lock().unwrap();
        let _ = Self::channel_entry(&mut inner, topic, true);
    }

    /// Deliver to every registration active now, retain the payload, and
    /// return the delivery count.
    pub fn channel_publish(&self, topic: &str, payload: &[u8]) -> Result<usize, ExchangeError> {
        let sinks: Vec<Arc<dyn NotificationSink>> = {
            let mut inner = self.inner.lock().unwrap();
            let channel = Self::channel_entry(&mut inner, topic, self.policy.auto_create_channels)?;
            channel.retained = Some(payload.to_vec());
            channel.subscribers.values().cloned().collect()
        };
        for sink in &sinks {
            sink.deliver(payload);
        }
        Ok(sinks.len())
    }

    /// Register a sink on a topic; the retained payload, if any, is
    /// delivered immediately. Returns the registration id.
    pub fn channel_subscribe(
        &self,
        topic: &str,
        sink: Arc<dyn NotificationSink>,
    ) -> Result<u64, ExchangeError> {
        let (reg, retained) = {
            let mut inner = self.inner.lock().unwrap();
            let channel = Self::channel_entry(&mut inner, topic, self.policy.auto_create_channels)?;
            if channel.subscribers.len() >= self.policy.max_subscribers_per_channel {
                return Err(ExchangeError::SubscriptionRefused);
            }
            let reg = self.next_reg.fetch_add(1, Ordering::SeqCst);
            channel.subscribers.insert(reg, sink.clone());
            (reg, channel.retained.clone())
        };
        if let Some(payload) = retained {
            sink.deliver(&payload);
        }
        Ok(reg)
    }

    /// Cancel a registration; nothing is delivered to it afterwards.
    pub fn channel_unsubscribe(&self, topic: &str, registration: u64) {
        let mut inner = self.inner.lock().unwrap();
        if let Some(channel) = inner.channels.get_mut(topic) {
            channel.subscribers.remove(&registration);
        }
    }

    pub fn retained(&self, topic: &str) -> Result<Option<Vec<u8>>, ExchangeError> {
        let inner = self.inner.lock().unwrap();
        inner
            .channels
            .get(topic)
            .map(|c| c.retained.clone())
            .ok_or(ExchangeError::TopicNotFound)
    }
}

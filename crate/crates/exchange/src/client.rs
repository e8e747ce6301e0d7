//! CoAP client for both sharing models: confirmable requests with
//! retransmission, block-wise transfer in both directions, and Observe
//! subscriptions.

use std::collections::{HashMap, VecDeque};
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use coap_lite::{CoapOption, MessageClass, MessageType, Packet, RequestType, ResponseType};
use uuid::Uuid;

use crate::error::ExchangeError;
use crate::proto::{self, BlockOpt, Resource, BLOCK_SIZE, BLOCK_SZX};
use crate::server::encode_payload_batch;
use crate::store::{AddStatus, Envelope, FilterSpec};
use crate::transport::Transport;

/// Handle for an active Observe subscription.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subscription {
    token: Vec<u8>,
}

pub struct CoapClient {
    transport: Arc<dyn Transport>,
    server: String,
    next_msg_id: u16,
    next_token: u64,
    /// initial retransmission timeout, doubled on every retry
    pub ack_timeout: Duration,
    pub max_retransmits: u32,
    /// token -> pending notifications for that subscription
    notifications: HashMap<Vec<u8>, VecDeque<Vec<u8>>>,
    /// token -> topic, to fetch oversized notifications in full
    topics: HashMap<Vec<u8>, String>,
}

impl CoapClient {
    pub fn new(transport: Arc<dyn Transport>, server: impl Into<String>) -> Self {
        CoapClient {
            transport,
            server: server.into(),
            next_msg_id: 0x100,
            next_token: 1,
            ack_timeout: Duration::from_millis(200),
            max_retransmits: 6,
            notifications: HashMap::new(),
            topics: HashMap::new(),
        }
    }

    fn fresh_token(&mut self) -> Vec<u8> {
        let token = self.next_token.to_be_bytes().to_vec();
        self.next_token += 1;
        token
    }

    fn fresh_msg_id(&mut self) -> u16 {
        let id = self.next_msg_id;
        self.next_msg_id = self.next_msg_id.wrapping_add(1);
        id
    }

    fn base_request(&mut self, method: RequestType, resource: &Resource) -> Packet {
        let mut packet = Packet::new();
        packet.header.set_type(MessageType::Confirmable);
        packet.header.code = MessageClass::Request(method);
        packet.header.message_id = self.fresh_msg_id();
        packet.set_token(self.fresh_token());
        proto::set_resource_path(&mut packet, resource);
        packet
    }

    /// Send one confirmable message and wait for the matching response,
    /// retransmitting on timeout. Unrelated datagrams received while
    /// waiting (notifications, stale responses) are dispatched, not lost.
    fn exchange(&mut self, packet: &Packet) -> Result<Packet, ExchangeError> {
        let wire = packet
            .to_bytes()
            .map_err(|e| ExchangeError::Malformed(e.to_string()))?;
        let token = packet.get_token().to_vec();
        let mut timeout = self.ack_timeout;
        for _attempt in 0..=self.max_retransmits {
            self.transport.send(&self.server, &wire)?;
            let deadline = Instant::now() + timeout;
            loop {
                let remaining = deadline.saturating_duration_since(Instant::now());
                if remaining.is_zero() {
                    break;
                }
                let Some((from, datagram)) = self.transport.recv(remaining)? else {
                    break;
                };
                if let Some(response) = self.accept(&from, &datagram, Some(&token))? {
                    return Ok(response);
                }
            }
            timeout *= 2;
        }
        Err(ExchangeError::Timeout)
    }

    /// Classify one incoming datagram. Returns the packet iff it is the
    /// response for `waiting_for`; notifications are queued as a side
    /// effect.
    fn accept(
        &mut self,
        from: &str,
        datagram: &[u8],
        waiting_for: Option<&[u8]>,
    ) -> Result<Option<Packet>, ExchangeError> {
        let Ok(packet) = Packet::from_bytes(datagram) else {
            return Ok(None);
        };
        if !matches!(packet.header.code, MessageClass::Response(_)) {
            return Ok(None);
        }
        let token = packet.get_token().to_vec();
        // piggybacked responses arrive as ACKs; notifications arrive as
        // CON or NON messages on a subscription token
        let is_notification = packet.header.get_type() != MessageType::Acknowledgement
            && self.notifications.contains_key(&token);
        if packet.header.get_type() == MessageType::Confirmable {
            // confirmable notification: acknowledge before processing
            let mut ack = Packet::new();
            ack.header.set_type(MessageType::Acknowledgement);
            ack.header.message_id = packet.header.message_id;
            let _ = self
                .transport
                .send(from, &ack.to_bytes().unwrap_or_default());
        }
        if is_notification {
            self.enqueue_notification(&token, &packet)?;
            return Ok(None);
        }
        if waiting_for == Some(token.as_slice()) {
            return Ok(Some(packet));
        }
        Ok(None)
    }

    fn enqueue_notification(&mut self, token: &[u8], packet: &Packet) -> Result<(), ExchangeError> {
        let block2 = proto::get_block_option(packet, CoapOption::Block2)?;
        let payload = if block2.map(|b| b.more).unwrap_or(false) {
            // oversized notification: only the first block travels with the
            // notify, the retained copy has the rest
            let topic = self
                .topics
                .get(token)
                .cloned()
                .ok_or_else(|| ExchangeError::Malformed("notification without topic".into()))?;
            self.fetch_retained(&topic)?
        } else {
            packet.payload.clone()
        };
        self.notifications
            .get_mut(token)
            .expect("checked by caller")
            .push_back(payload);
        Ok(())
    }

    /// Full request/response with block-wise transfer in both directions.
    fn request(&mut self, mut packet: Packet) -> Result<Packet, ExchangeError> {
        // Block1: push a large body up in fragments
        let body = std::mem::take(&mut packet.payload);
        if body.len() > BLOCK_SIZE {
            let chunks: Vec<&[u8]> = body.chunks(BLOCK_SIZE).collect();
            let mut last = None;
            for (num, chunk) in chunks.iter().enumerate() {
                let mut fragment = packet.clone();
                fragment.header.message_id = self.fresh_msg_id();
                fragment.payload = chunk.to_vec();
                let more = num + 1 < chunks.len();
                proto::set_block_option(
                    &mut fragment,
                    CoapOption::Block1,
                    BlockOpt {
                        num: num as u32,
                        more,
                        szx: BLOCK_SZX,
                    },
                );
                let response = self.exchange(&fragment)?;
                match response.header.code {
                    MessageClass::Response(ResponseType::Continue) if more => {}
                    MessageClass::Response(_) if !more => last = Some(response),
                    _ => {
                        return Err(ExchangeError::Server(format!(
                            "unexpected code {:?} during block transfer",
                            response.header.code
                        )))
                    }
                }
            }
            // responses to uploads are not block-wise; the final fragment's
            // response carries the whole status body
            return Ok(last.expect("final fragment produced a response"));
        }
        packet.payload = body;
        let response = self.exchange(&packet)?;
        self.drain_block2(response, &packet)
    }

    /// Follow Block2 continuations until the whole response body is
    /// assembled.
    fn drain_block2(
        &mut self,
        mut response: Packet,
        original: &Packet,
    ) -> Result<Packet, ExchangeError> {
        let Some(mut block) = proto::get_block_option(&response, CoapOption::Block2)? else {
            return Ok(response);
        };
        let mut body = response.payload.clone();
        while block.more {
            let mut next = original.clone();
            next.header.message_id = self.fresh_msg_id();
            next.set_token(self.fresh_token());
            proto::set_block_option(
                &mut next,
                CoapOption::Block2,
                BlockOpt {
                    num: block.num + 1,
                    more: false,
                    szx: block.szx,
                },
            );
            let part = self.exchange(&next)?;
            if let MessageClass::Response(code) = part.header.code {
                if code.is_error() {
                    return Err(ExchangeError::Server(format!(
                        "block fetch failed: {code:?}"
                    )));
                }
            }
            block = proto::get_block_option(&part, CoapOption::Block2)?
                .ok_or_else(|| ExchangeError::Malformed("continuation lost block option".into()))?;
            body.extend_from_slice(&part.payload);
        }
        response.payload = body;
        response.clear_option(CoapOption::Block2);
        Ok(response)
    }

    fn expect_success(response: Packet) -> Result<Packet, ExchangeError> {
        match response.header.code {
            MessageClass::Response(code) if !code.is_error() => Ok(response),
            MessageClass::Response(code) => Err(ExchangeError::Server(format!(
                "{code:?}: {}",
                String::from_utf8_lossy(&response.payload)
            ))),
            other => Err(ExchangeError::Malformed(format!(
                "not a response: {other:?}"
            ))),
        }
    }

    pub fn list_collections(&mut self) -> Result<Vec<Uuid>, ExchangeError> {
        let packet = self.base_request(RequestType::Get, &Resource::Collections);
        let response = Self::expect_success(self.request(packet)?)?;
        let value: ciborium::value::Value =
            ciborium::from_reader(std::io::Cursor::new(&response.payload))
                .map_err(|e| ExchangeError::Malformed(e.to_string()))?;
        let ciborium::value::Value::Array(items) = value else {
            return Err(ExchangeError::Malformed(
                "collection list is not an array".into(),
            ));
        };
        items
            .into_iter()
            .map(|item| match item {
                ciborium::value::Value::Text(t) => Uuid::from_str(&t)
                    .map_err(|_| ExchangeError::Malformed(format!("bad collection id {t}"))),
                _ => Err(ExchangeError::Malformed("collection id is not text".into())),
            })
            .collect()
    }

    /// One page of a filtered collection read.
    pub fn get_objects(
        &mut self,
        collection: Uuid,
        filter: &FilterSpec,
    ) -> Result<Envelope, ExchangeError> {
        let mut packet =
            self.base_request(RequestType::Get, &Resource::CollectionObjects(collection));
        proto::set_filter_query(&mut packet, filter);
        let response = Self::expect_success(self.request(packet)?)?;
        proto::decode_envelope(&response.payload)
    }

    /// Follow pagination to exhaustion and return every matching payload.
    pub fn get_all_objects(
        &mut self,
        collection: Uuid,
        filter: &FilterSpec,
    ) -> Result<Vec<Vec<u8>>, ExchangeError> {
        let mut filter = filter.clone();
        let mut all = Vec::new();
        loop {
            let envelope = self.get_objects(collection, &filter)?;
            all.extend(envelope.objects);
            match envelope.next_token {
                Some(token) => {
                    filter.page_token = Some(
                        token
                            .parse()
                            .map_err(|_| ExchangeError::Malformed("bad page token".into()))?,
                    )
                }
                None => return Ok(all),
            }
        }
    }

    pub fn add_objects(
        &mut self,
        collection: Uuid,
        payloads: &[Vec<u8>],
    ) -> Result<Vec<AddStatus>, ExchangeError> {
        let mut packet =
            self.base_request(RequestType::Post, &Resource::CollectionObjects(collection));
        proto::set_content_format(&mut packet, proto::CONTENT_FORMAT_TINYSTIX);
        packet.payload = encode_payload_batch(payloads);
        let response = Self::expect_success(self.request(packet)?)?;
        proto::decode_add_statuses(&response.payload)
    }

    pub fn publish(&mut self, topic: &str, payload: &[u8]) -> Result<(), ExchangeError> {
        let mut packet = self.base_request(RequestType::Put, &Resource::Channel(topic.to_string()));
        proto::set_content_format(&mut packet, proto::CONTENT_FORMAT_TINYSTIX);
        packet.payload = payload.to_vec();
        Self::expect_success(self.request(packet)?)?;
        Ok(())
    }

    /// Last payload published on the topic, fetched reliably.
    pub fn fetch_retained(&mut self, topic: &str) -> Result<Vec<u8>, ExchangeError> {
        let packet = self.base_request(RequestType::Get, &Resource::Channel(topic.to_string()));
        let response = Self::expect_success(self.request(packet)?)?;
        Ok(response.payload)
    }

    /// Register an Observe subscription. Notifications accumulate whenever
    /// the client touches the transport; drain them with
    /// [`Self::next_notification`].
    pub fn subscribe(&mut self, topic: &str) -> Result<Subscription, ExchangeError> {
        let mut packet = self.base_request(RequestType::Get, &Resource::Channel(topic.to_string()));
        packet.set_observe_value(0);
        let token = packet.get_token().to_vec();
        self.notifications.insert(token.clone(), VecDeque::new());
        self.topics.insert(token.clone(), topic.to_string());
        match Self::expect_success(self.exchange(&packet)?) {
            Ok(_) => Ok(Subscription { token }),
            Err(e) => {
                self.notifications.remove(&token);
                self.topics.remove(&token);
                Err(e)
            }
        }
    }

    pub fn unsubscribe(&mut self, subscription: &Subscription) -> Result<(), ExchangeError> {
        let topic = self
            .topics
            .get(&subscription.token)
            .cloned()
            .ok_or_else(|| ExchangeError::Malformed("unknown subscription".into()))?;
        let mut packet = self.base_request(RequestType::Get, &Resource::Channel(topic));
        packet.set_observe_value(1);
        packet.set_token(subscription.token.clone());
        let result = Self::expect_success(self.exchange(&packet)?);
        self.notifications.remove(&subscription.token);
        self.topics.remove(&subscription.token);
        result.map(|_| ())
    }

    /// Wait up to `timeout` for the next notification on a subscription.
    pub fn next_notification(
        &mut self,
        subscription: &Subscription,
        timeout: Duration,
    ) -> Result<Option<Vec<u8>>, ExchangeError> {
        let deadline = Instant::now() + timeout;
        loop {
            if let Some(queue) = self.notifications.get_mut(&subscription.token) {
                if let Some(payload) = queue.pop_front() {
                    return Ok(Some(payload));
                }
            } else {
                return Err(ExchangeError::Malformed("unknown subscription".into()));
            }
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Ok(None);
            }
            match self.transport.recv(remaining)? {
                Some((from, datagram)) => {
                    self.accept(&from, &datagram, None)?;
                }
                None => return Ok(None),
            }
        }
    }
}

//! CoAP front end over the exchange store: request/response access to
//! collections and Observe-based publish/subscribe on channels.

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicBool, AtomicU16, AtomicU32, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use coap_lite::{CoapOption, MessageClass, MessageType, Packet, RequestType, ResponseType};

use crate::error::ExchangeError;
use crate::proto::{self, BlockOpt, Resource, BLOCK_SIZE, BLOCK_SZX};
use crate::store::{ExchangeState, NotificationSink};
use crate::transport::Transport;

/// How many (source, message id) pairs to remember for retransmission
/// deduplication.
const DEDUP_WINDOW: usize = 128;

struct ObserverSink {
    transport: Arc<dyn Transport>,
    addr: String,
    token: Vec<u8>,
    confirmable: bool,
    observe_seq: Arc<AtomicU32>,
    msg_id: Arc<AtomicU16>,
}

impl NotificationSink for ObserverSink {
    fn deliver(&self, payload: &[u8]) {
        let mut packet = Packet::new();
        packet.header.set_type(if self.confirmable {
            MessageType::Confirmable
        } else {
            MessageType::NonConfirmable
        });
        packet.header.code = MessageClass::Response(ResponseType::Content);
        packet.header.message_id = self.msg_id.fetch_add(1, Ordering::SeqCst);
        packet.set_token(self.token.clone());
        let seq = self.observe_seq.fetch_add(1, Ordering::SeqCst);
        packet.set_observe_value(seq & 0x00FF_FFFF);
        proto::set_content_format(&mut packet, proto::CONTENT_FORMAT_TINYSTIX);
        if payload.len() > BLOCK_SIZE {
            // first block only; the observer fetches the rest (or the whole
            // retained payload) with a plain GET
            packet.payload = payload[..BLOCK_SIZE].to_vec();
            proto::set_block_option(
                &mut packet,
                CoapOption::Block2,
                BlockOpt {
                    num: 0,
                    more: true,
                    szx: BLOCK_SZX,
                },
            );
        } else {
            packet.payload = payload.to_vec();
        }
        if let Ok(bytes) = packet.to_bytes() {
            if let Err(e) = self.transport.send(&self.addr, &bytes) {
                log::warn!("notification to {} failed: {e}", self.addr);
            }
        }
    }
}

/// Key identifying a peer-side exchange: (peer address, token).
type PeerToken = (String, Vec<u8>);
type DedupEntry = ((String, u16), Vec<u8>);

pub struct CoapServer {
    state: Arc<ExchangeState>,
    transport: Arc<dyn Transport>,
    /// observer -> (topic, store registration id)
    observers: Mutex<HashMap<PeerToken, (String, u64)>>,
    /// recently answered confirmable requests, for idempotent retransmits:
    /// (peer address, message id) -> serialized response
    dedup: Mutex<VecDeque<DedupEntry>>,
    /// partially received block-wise request bodies
    reassembly: Mutex<HashMap<PeerToken, Vec<u8>>>,
    observe_seq: Arc<AtomicU32>,
    msg_id: Arc<AtomicU16>,
    stop: AtomicBool,
}

impl CoapServer {
    pub fn new(state: Arc<ExchangeState>, transport: Arc<dyn Transport>) -> Self {
        CoapServer {
            state,
            transport,
            observers: Mutex::new(HashMap::new()),
            dedup: Mutex::new(VecDeque::new()),
            reassembly: Mutex::new(HashMap::new()),
            observe_seq: Arc::new(AtomicU32::new(2)),
            msg_id: Arc::new(AtomicU16::new(0x4000)),
            stop: AtomicBool::new(false),
        }
    }

    pub fn state(&self) -> &Arc<ExchangeState> {
        &self.state
    }

    pub fn stop(&self) {
        self.stop.store(true, Ordering::SeqCst);
    }

    /// Serve until [`Self::stop`] is called from another thread.
    pub fn run(&self) -> Result<(), ExchangeError> {
        while !self.stop.load(Ordering::SeqCst) {
            match self.transport.recv(Duration::from_millis(50))? {
                Some((from, datagram)) => self.handle_datagram(&from, &datagram),
                None => continue,
            }
        }
        Ok(())
    }

    /// Process a single datagram. Public so tests can drive the server
    /// without a thread.
    pub fn handle_datagram(&self, from: &str, datagram: &[u8]) {
        let Ok(packet) = Packet::from_bytes(datagram) else {
            log::warn!("undecodable datagram from {from}");
            return;
        };
        match packet.header.code {
            MessageClass::Request(_) => {}
            // ACKs for confirmable notifications and client resets need no
            // state changes here
            _ => return,
        }
        let confirmable = packet.header.get_type() == MessageType::Confirmable;
        if confirmable {
            let key = (from.to_string(), packet.header.message_id);
            let cached = {
                let dedup = self.dedup.lock().unwrap();
                dedup
                    .iter()
                    .find(|(k, _)| *k == key)
                    .map(|(_, r)| r.clone())
            };
            if let Some(response) = cached {
                let _ = self.transport.send(from, &response);
                return;
            }
        }
        let response = self.dispatch(from, &packet);
        // never go silent on an oversized or unserializable response: the
        // client would retransmit against already-consumed state
        let bytes = match response.to_bytes() {
            Ok(bytes) => bytes,
            Err(e) => {
                log::error!("response serialization failed: {e:?}");
                match Self::error_response(
                    &packet,
                    ResponseType::InternalServerError,
                    "response too large",
                )
                .to_bytes()
                {
                    Ok(bytes) => bytes,
                    Err(_) => return,
                }
            }
        };
        if confirmable {
            let mut dedup = self.dedup.lock().unwrap();
            dedup.push_back(((from.to_string(), packet.header.message_id), bytes.clone()));
            while dedup.len() > DEDUP_WINDOW {
                dedup.pop_front();
            }
        }
        let _ = self.transport.send(from, &bytes);
    }

    fn response_for(request: &Packet, code: ResponseType) -> Packet {
        let mut response = Packet::new();
        response.header.set_type(match request.header.get_type() {
            MessageType::Confirmable => MessageType::Acknowledgement,
            _ => MessageType::NonConfirmable,
        });
        response.header.message_id = request.header.message_id;
        response.header.code = MessageClass::Response(code);
        response.set_token(request.get_token().to_vec());
        response
    }

    fn error_response(request: &Packet, code: ResponseType, detail: &str) -> Packet {
        let mut response = Self::response_for(request, code);
        response.payload = detail.as_bytes().to_vec();
        response
    }

    fn dispatch(&self, from: &str, request: &Packet) -> Packet {
        let method = match request.header.code {
            MessageClass::Request(m) => m,
            _ => unreachable!("filtered in handle_datagram"),
        };
        let resource = match proto::parse_resource(request) {
            Ok(r) => r,
            Err(e) => return Self::error_response(request, ResponseType::NotFound, &e.to_string()),
        };
        let result = match (method, &resource) {
            (RequestType::Get, Resource::Collections) => self.get_collections(request),
            (RequestType::Get, Resource::CollectionObjects(id)) => self.get_objects(request, *id),
            (RequestType::Post, Resource::CollectionObjects(id)) => {
                self.post_objects(from, request, *id)
            }
            (RequestType::Get, Resource::Channel(topic)) => self.get_channel(from, request, topic),
            (RequestType::Put | RequestType::Post, Resource::Channel(topic)) => {
                self.publish_channel(from, request, topic)
            }
            _ => Ok(Self::error_response(
                request,
                ResponseType::MethodNotAllowed,
                "method not allowed here",
            )),
        };
        result.unwrap_or_else(|e| {
            let code = match &e {
                ExchangeError::CollectionNotFound | ExchangeError::TopicNotFound => {
                    ResponseType::NotFound
                }
                ExchangeError::BadFilter(_) | ExchangeError::Malformed(_) => {
                    ResponseType::BadRequest
                }
                ExchangeError::PayloadRejected(_) => ResponseType::UnprocessableEntity,
                ExchangeError::SubscriptionRefused => ResponseType::ServiceUnavailable,
                _ => ResponseType::InternalServerError,
            };
            Self::error_response(request, code, &e.to_string())
        })
    }

    /// Apply Block2 slicing to a fully materialized response body.
    fn finish_content(&self, request: &Packet, body: Vec<u8>, format: u16) -> Packet {
        let mut response = Self::response_for(request, ResponseType::Content);
        proto::set_content_format(&mut response, format);
        let requested = proto::get_block_option(request, CoapOption::Block2)
            .ok()
            .flatten();
        let szx = requested.map(|b| b.szx.min(BLOCK_SZX)).unwrap_or(BLOCK_SZX);
        let size = 1usize << (szx + 4);
        let num = requested.map(|b| b.num).unwrap_or(0);
        let start = num as usize * size;
        if body.len() <= size && num == 0 {
            response.payload = body;
            return response;
        }
        if start >= body.len() {
            return Self::error_response(request, ResponseType::BadOption, "block out of range");
        }
        let end = (start + size).min(body.len());
        response.payload = body[start..end].to_vec();
        proto::set_block_option(
            &mut response,
            CoapOption::Block2,
            BlockOpt {
                num,
                more: end < body.len(),
                szx,
            },
        );
        response
    }

    fn get_collections(&self, request: &Packet) -> Result<Packet, ExchangeError> {
        let mut ids: Vec<String> = self
            .state
            .collection_ids()
            .iter()
            .map(|u| u.to_string())
            .collect();
        ids.sort();
        let body = {
            let value = ciborium::value::Value::Array(
                ids.into_iter().map(ciborium::value::Value::Text).collect(),
            );
            let mut out = Vec::new();
            ciborium::into_writer(&value, &mut out).expect("in-memory CBOR write");
            out
        };
        Ok(self.finish_content(request, body, proto::CONTENT_FORMAT_TINYSTIX))
    }

    fn get_objects(&self, request: &Packet, id: uuid::Uuid) -> Result<Packet, ExchangeError> {
        let filter = proto::parse_filter_query(request)?;
        let envelope = self.state.collection_get(id, &filter)?;
        let body = proto::encode_envelope(&envelope);
        Ok(self.finish_content(request, body, proto::CONTENT_FORMAT_TINYSTIX))
    }

    /// POST body: CBOR array of byte strings, possibly arriving in Block1
    /// fragments.
    fn post_objects(
        &self,
        from: &str,
        request: &Packet,
        id: uuid::Uuid,
    ) -> Result<Packet, ExchangeError> {
        let body = match self.reassemble(from, request)? {
            Some(body) => body,
            None => {
                // middle fragment acknowledged, final fragment still pending
                let mut response = Self::response_for(request, ResponseType::Continue);
                if let Some(block1) = proto::get_block_option(request, CoapOption::Block1)? {
                    proto::set_block_option(&mut response, CoapOption::Block1, block1);
                }
                return Ok(response);
            }
        };
        let payloads = decode_payload_batch(&body)?;
        let statuses = self.state.collection_add(id, &payloads)?;
        let mut response = Self::response_for(request, ResponseType::Changed);
        if let Some(block1) = proto::get_block_option(request, CoapOption::Block1)? {
            proto::set_block_option(&mut response, CoapOption::Block1, block1);
        }
        proto::set_content_format(&mut response, proto::CONTENT_FORMAT_TINYSTIX);
        response.payload = proto::encode_add_statuses(&statuses);
        Ok(response)
    }

    /// Returns the full body once all Block1 fragments arrived, `None` while
    /// fragments are still outstanding.
    fn reassemble(&self, from: &str, request: &Packet) -> Result<Option<Vec<u8>>, ExchangeError> {
        let Some(block1) = proto::get_block_option(request, CoapOption::Block1)? else {
            return Ok(Some(request.payload.clone()));
        };
        let key = (from.to_string(), request.get_token().to_vec());
        let mut buffers = self.reassembly.lock().unwrap();
        let buffer = buffers.entry(key.clone()).or_default();
        let expected = block1.num as usize * block1.block_size();
        if buffer.len() != expected {
            // retransmitted fragment: already incorporated, or a gap we
            // cannot repair
            if buffer.len() < expected {
                buffers.remove(&key);
                return Err(ExchangeError::Malformed("block gap in request body".into()));
            }
        } else {
            buffer.extend_from_slice(&request.payload);
        }
        if block1.more {
            return Ok(None);
        }
        Ok(buffers.remove(&key))
    }

    fn get_channel(
        &self,
        from: &str,
        request: &Packet,
        topic: &str,
    ) -> Result<Packet, ExchangeError> {
        match request.get_observe_value() {
            Some(Ok(0)) => self.register_observer(from, request, topic),
            Some(Ok(1)) => {
                self.deregister_observer(from, request.get_token());
                Ok(Self::response_for(request, ResponseType::Content))
            }
            Some(_) => Ok(Self::error_response(
                request,
                ResponseType::BadOption,
                "bad observe value",
            )),
            None => {
                let retained = self.state.retained(topic)?;
                match retained {
                    Some(payload) => {
                        Ok(self.finish_content(request, payload, proto::CONTENT_FORMAT_TINYSTIX))
                    }
                    None => Ok(Self::error_response(
                        request,
                        ResponseType::NotFound,
                        "nothing published yet",
                    )),
                }
            }
        }
    }

    fn register_observer(
        &self,
        from: &str,
        request: &Packet,
        topic: &str,
    ) -> Result<Packet, ExchangeError> {
        let key = (from.to_string(), request.get_token().to_vec());
        {
            // re-registration replaces the previous subscription
            let observers = self.observers.lock().unwrap();
            if let Some((old_topic, reg)) = observers.get(&key) {
                self.state.channel_unsubscribe(old_topic, *reg);
            }
        }
        let sink = Arc::new(ObserverSink {
            transport: self.transport.clone(),
            addr: from.to_string(),
            token: request.get_token().to_vec(),
            confirmable: self.state.policy.confirmable_notifications,
            observe_seq: self.observe_seq.clone(),
            msg_id: self.msg_id.clone(),
        });
        // the retained payload is delivered through the sink as the first
        // notification, so the registration reply itself stays empty
        let reg = self.state.channel_subscribe(topic, sink)?;
        self.observers
            .lock()
            .unwrap()
            .insert(key, (topic.to_string(), reg));
        let mut response = Self::response_for(request, ResponseType::Content);
        response.set_observe_value(1);
        Ok(response)
    }

    fn deregister_observer(&self, from: &str, token: &[u8]) {
        let key = (from.to_string(), token.to_vec());
        if let Some((topic, reg)) = self.observers.lock().unwrap().remove(&key) {
            self.state.channel_unsubscribe(&topic, reg);
        }
    }

    fn publish_channel(
        &self,
        from: &str,
        request: &Packet,
        topic: &str,
    ) -> Result<Packet, ExchangeError> {
        let body = match self.reassemble(from, request)? {
            Some(body) => body,
            None => {
                let mut response = Self::response_for(request, ResponseType::Continue);
                if let Some(block1) = proto::get_block_option(request, CoapOption::Block1)? {
                    proto::set_block_option(&mut response, CoapOption::Block1, block1);
                }
                return Ok(response);
            }
        };
        if body.is_empty() {
            return Err(ExchangeError::Malformed("empty publish".into()));
        }
        let delivered = self.state.channel_publish(topic, &body)?;
        log::debug!(
            "published {} bytes on {topic} to {delivered} observers",
            body.len()
        );
        let mut response = Self::response_for(request, ResponseType::Changed);
        if let Some(block1) = proto::get_block_option(request, CoapOption::Block1)? {
            proto::set_block_option(&mut response, CoapOption::Block1, block1);
        }
        Ok(response)
    }
}

/// Batch body codec shared with the client: CBOR array of byte strings.
pub fn encode_payload_batch(payloads: &[Vec<u8>]) -> Vec<u8> {
    let value = ciborium::value::Value::Array(
        payloads
            .iter()
            .map(|p| ciborium::value::Value::Bytes(p.clone()))
            .collect(),
    );
    let mut out = Vec::new();
    ciborium::into_writer(&value, &mut out).expect("in-memory CBOR write");
    out
}

pub fn decode_payload_batch(bytes: &[u8]) -> Result<Vec<Vec<u8>>, ExchangeError> {
    let value: ciborium::value::Value = ciborium::from_reader(std::io::Cursor::new(bytes))
        .map_err(|e| ExchangeError::Malformed(format!("bad batch body: {e}")))?;
    let ciborium::value::Value::Array(items) = value else {
        return Err(ExchangeError::Malformed(
            "batch body is not an array".into(),
        ));
    };
    items
        .into_iter()
        .map(|item| match item {
            ciborium::value::Value::Bytes(b) => Ok(b),
            _ => Err(ExchangeError::Malformed("batch item is not bytes".into())),
        })
        .collect()
}

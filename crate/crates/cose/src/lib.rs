//! Object-level protection of tinySTIX payloads using standard COSE
//! structures: single-signer `COSE_Sign1` (Ed25519) and single-recipient
//! `COSE_Encrypt0` (AES-128-GCM).
//!
//! Both structures carry the algorithm and key id in the protected header,
//! so the suites are swappable without changing the wire format, and the
//! emitted bytes are plain RFC 8152 objects that third-party COSE tools can
//! consume.

use aes_gcm::aead::{Aead, Payload as AeadPayload};
use aes_gcm::{Aes128Gcm, KeyInit, Nonce};
use coset::iana::{self, EnumI64};
use coset::{
    CborSerializable, CoseEncrypt0, CoseEncrypt0Builder, CoseSign1, CoseSign1Builder,
    HeaderBuilder, RegisteredLabelWithPrivate,
};
use ed25519_dalek::{Signer, Verifier};
use rand::RngCore;
use std::collections::HashMap;
use std::path::Path;
use thiserror::Error;
use tinystix_core::TinyStixPayload;

#[derive(Debug, Error)]
pub enum CoseError {
    #[error("no key with id `{0}` in the key store")]
    UnknownKeyId(String),
    #[error("signature verification failed")]
    SignatureInvalid,
    #[error("algorithm in header does not match the resolved key")]
    AlgorithmMismatch,
    #[error("decryption failed (authentication tag mismatch)")]
    DecryptionFailed,
    #[error("malformed COSE structure: {0}")]
    Malformed(String),
    #[error("key store io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad key material: {0}")]
    BadKey(String),
}

fn kid_str(kid: &[u8]) -> String {
    String::from_utf8_lossy(kid).into_owned()
}

/// Ed25519 signing key with its COSE key id.
#[derive(Clone)]
pub struct SigningKey {
    key_id: Vec<u8>,
    inner: ed25519_dalek::SigningKey,
}

impl SigningKey {
    pub fn generate(key_id: impl Into<Vec<u8>>) -> Self {
        let mut rng = rand::rngs::OsRng;
        SigningKey {
            key_id: key_id.into(),
            inner: ed25519_dalek::SigningKey::generate(&mut rng),
        }
    }

    pub fn from_bytes(key_id: impl Into<Vec<u8>>, secret: &[u8; 32]) -> Self {
        SigningKey {
            key_id: key_id.into(),
            inner: ed25519_dalek::SigningKey::from_bytes(secret),
        }
    }

    pub fn key_id(&self) -> &[u8] {
        &self.key_id
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.inner.to_bytes()
    }

    pub fn verifying_key(&self) -> VerifyingKey {
        VerifyingKey {
            key_id: self.key_id.clone(),
            inner: self.inner.verifying_key(),
        }
    }
}

/// Ed25519 verification key with its COSE key id.
#[derive(Clone)]
pub struct VerifyingKey {
    key_id: Vec<u8>,
    inner: ed25519_dalek::VerifyingKey,
}

impl VerifyingKey {
    pub fn from_bytes(key_id: impl Into<Vec<u8>>, public: &[u8; 32]) -> Result<Self, CoseError> {
        Ok(VerifyingKey {
            key_id: key_id.into(),
            inner: ed25519_dalek::VerifyingKey::from_bytes(public)
                .map_err(|e| CoseError::BadKey(e.to_string()))?,
        })
    }

    pub fn key_id(&self) -> &[u8] {
        &self.key_id
    }

    pub fn public_bytes(&self) -> [u8; 32] {
        self.inner.to_bytes()
    }
}

/// AES-128-GCM content-encryption key with its COSE key id.
#[derive(Clone)]
pub struct EncryptionKey {
    key_id: Vec<u8>,
    key: [u8; 16],
}

impl EncryptionKey {
    pub fn generate(key_id: impl Into<Vec<u8>>) -> Self {
        let mut key = [0u8; 16];
        rand::rngs::OsRng.fill_bytes(&mut key);
        EncryptionKey {
            key_id: key_id.into(),
            key,
        }
    }

    pub fn from_bytes(key_id: impl Into<Vec<u8>>, key: [u8; 16]) -> Self {
        EncryptionKey {
            key_id: key_id.into(),
            key,
        }
    }

    pub fn key_id(&self) -> &[u8] {
        &self.key_id
    }

    pub fn key_bytes(&self) -> [u8; 16] {
        self.key
    }
}

/// A COSE-protected tinySTIX payload: either a signature or an encryption
/// envelope.
#[derive(Debug, Clone)]
pub enum ProtectedPayload {
    Signed(CoseSign1),
    Encrypted(CoseEncrypt0),
}

impl ProtectedPayload {
    pub fn to_bytes(&self) -> Result<Vec<u8>, CoseError> {
        match self {
            ProtectedPayload::Signed(s) => s.clone().to_vec(),
            ProtectedPayload::Encrypted(e) => e.clone().to_vec(),
        }
        .map_err(|e| CoseError::Malformed(e.to_string()))
    }

    /// Parse from bytes; tries `COSE_Sign1` first, then `COSE_Encrypt0`,
    /// using the protected algorithm to disambiguate.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CoseError> {
        if let Ok(s) = CoseSign1::from_slice(bytes) {
            if alg_i64(&s.protected.header.alg) == Some(iana::Algorithm::EdDSA.to_i64()) {
                return Ok(ProtectedPayload::Signed(s));
            }
        }
        if let Ok(e) = CoseEncrypt0::from_slice(bytes) {
            if alg_i64(&e.protected.header.alg) == Some(iana::Algorithm::A128GCM.to_i64()) {
                return Ok(ProtectedPayload::Encrypted(e));
            }
        }
        Err(CoseError::Malformed(
            "not a recognized COSE_Sign1 or COSE_Encrypt0 structure".into(),
        ))
    }

    /// Key id from the protected header, readable without any verification.
    pub fn key_id(&self) -> &[u8] {
        match self {
            ProtectedPayload::Signed(s) => &s.protected.header.key_id,
            ProtectedPayload::Encrypted(e) => &e.protected.header.key_id,
        }
    }
}

fn alg_i64(alg: &Option<RegisteredLabelWithPrivate<iana::Algorithm>>) -> Option<i64> {
    match alg {
        Some(RegisteredLabelWithPrivate::Assigned(a)) => Some(a.to_i64()),
        Some(RegisteredLabelWithPrivate::PrivateUse(v)) => Some(*v),
        _ => None,
    }
}

/// Trust anchors resolved by key id.
#[derive(Clone, Default)]
pub struct KeyStore {
    verifying: HashMap<Vec<u8>, VerifyingKey>,
    symmetric: HashMap<Vec<u8>, EncryptionKey>,
}

impl KeyStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_verifying(&mut self, key: VerifyingKey) {
        self.verifying.insert(key.key_id.clone(), key);
    }

    pub fn add_symmetric(&mut self, key: EncryptionKey) {
        self.symmetric.insert(key.key_id.clone(), key);
    }

    pub fn verifying(&self, key_id: &[u8]) -> Option<&VerifyingKey> {
        self.verifying.get(key_id)
    }

    pub fn symmetric(&self, key_id: &[u8]) -> Option<&EncryptionKey> {
        self.symmetric.get(key_id)
    }

    pub fn symmetric_keys(&self) -> impl Iterator<Item = &EncryptionKey> {
        self.symmetric.values()
    }

    /// Load from the JSON key file format (see [`KeyFileEntry`]).
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Vec<SigningKey>), CoseError> {
        let text = std::fs::read_to_string(path)?;
        let entries: Vec<KeyFileEntry> =
            serde_json::from_str(&text).map_err(|e| CoseError::BadKey(e.to_string()))?;
        let mut store = KeyStore::new();
        let mut signers = Vec::new();
        for entry in entries {
            let kid = entry.kid.clone().into_bytes();
            let material = hex::decode(&entry.hex).map_err(|e| CoseError::BadKey(e.to_string()))?;
            match entry.kind.as_str() {
                "ed25519-secret" => {
                    let secret: [u8; 32] = material
                        .try_into()
                        .map_err(|_| CoseError::BadKey("ed25519 secret must be 32 bytes".into()))?;
                    let sk = SigningKey::from_bytes(kid.clone(), &secret);
                    store.add_verifying(sk.verifying_key());
                    signers.push(sk);
                }
                "ed25519-public" => {
                    let public: [u8; 32] = material
                        .try_into()
                        .map_err(|_| CoseError::BadKey("ed25519 public must be 32 bytes".into()))?;
                    store.add_verifying(VerifyingKey::from_bytes(kid, &public)?);
                }
                "aes128" => {
                    let key: [u8; 16] = material
                        .try_into()
                        .map_err(|_| CoseError::BadKey("aes128 key must be 16 bytes".into()))?;
                    store.add_symmetric(EncryptionKey::from_bytes(kid, key));
                }
                other => return Err(CoseError::BadKey(format!("unknown key kind `{other}`"))),
            }
        }
        Ok((store, signers))
    }
}

/// One entry of the JSON key file.
#[derive(serde::Serialize, serde::Deserialize)]
pub struct KeyFileEntry {
    pub kid: String,
    pub kind: String,
    pub hex: String,
}

/// Write keys to the JSON key file format.
pub fn save_keys(
    path: impl AsRef<Path>,
    signers: &[SigningKey],
    symmetric: &[EncryptionKey],
) -> Result<(), CoseError> {
    let mut entries = Vec::new();
    for s in signers {
        entries.push(KeyFileEntry {
            kid: kid_str(&s.key_id),
            kind: "ed25519-secret".into(),
            hex: hex::encode(s.secret_bytes()),
        });
    }
    for k in symmetric {
        entries.push(KeyFileEntry {
            kid: kid_str(&k.key_id),
            kind: "aes128".into(),
            hex: hex::encode(k.key_bytes()),
        });
    }
    std::fs::write(path, serde_json::to_string_pretty(&entries).unwrap())?;
    Ok(())
}

/// Sign a payload as a `COSE_Sign1` structure. Ed25519 is deterministic, so
/// equal inputs yield byte-identical structures.
pub fn sign(payload: &TinyStixPayload, key: &SigningKey) -> ProtectedPayload {
    sign_bytes(&payload.to_bytes(), key)
}

pub fn sign_bytes(payload: &[u8], key: &SigningKey) -> ProtectedPayload {
    let protected = HeaderBuilder::new()
        .algorithm(iana::Algorithm::EdDSA)
        .key_id(key.key_id.clone())
        .build();
    let sign1 = CoseSign1Builder::new()
        .protected(protected)
        .payload(payload.to_vec())
        .create_signature(b"", |pt| key.inner.sign(pt).to_bytes().to_vec())
        .build();
    ProtectedPayload::Signed(sign1)
}

/// Verify a signed payload against the key resolved by key id.
pub fn verify(protected: &ProtectedPayload, keys: &KeyStore) -> Result<TinyStixPayload, CoseError> {
    let bytes = verify_bytes(protected, keys)?;
    TinyStixPayload::from_bytes(&bytes).map_err(|e| CoseError::Malformed(e.to_string()))
}

pub fn verify_bytes(protected: &ProtectedPayload, keys: &KeyStore) -> Result<Vec<u8>, CoseError> {
    let sign1 = match protected {
        ProtectedPayload::Signed(s) => s,
        ProtectedPayload::Encrypted(_) => return Err(CoseError::AlgorithmMismatch),
    };
    if alg_i64(&sign1.protected.header.alg) != Some(iana::Algorithm::EdDSA.to_i64()) {
        return Err(CoseError::AlgorithmMismatch);
    }
    let kid = &sign1.protected.header.key_id;
    let key = keys
        .verifying(kid)
        .ok_or_else(|| CoseError::UnknownKeyId(kid_str(kid)))?;
    sign1
        .verify_signature(b"", |sig, data| {
            let sig: &[u8; 64] = sig.try_into().map_err(|_| CoseError::SignatureInvalid)?;
            key.inner
                .verify(data, &ed25519_dalek::Signature::from_bytes(sig))
                .map_err(|_| CoseError::SignatureInvalid)
        })
        .map_err(|_| CoseError::SignatureInvalid)?;
    sign1
        .payload
        .clone()
        .ok_or_else(|| CoseError::Malformed("signed structure carries no payload".into()))
}

/// Encrypt a payload as a `COSE_Encrypt0` structure with a fresh random
/// 96-bit nonce.
pub fn encrypt(payload: &TinyStixPayload, key: &EncryptionKey) -> ProtectedPayload {
    encrypt_bytes(&payload.to_bytes(), key)
}

pub fn encrypt_bytes(payload: &[u8], key: &EncryptionKey) -> ProtectedPayload {
    let mut nonce = [0u8; 12];
    rand::rngs::OsRng.fill_bytes(&mut nonce);
    let cipher = Aes128Gcm::new((&key.key).into());
    let protected = HeaderBuilder::new()
        .algorithm(iana::Algorithm::A128GCM)
        .key_id(key.key_id.clone())
        .build();
    let unprotected = HeaderBuilder::new().iv(nonce.to_vec()).build();
    let encrypt0 = CoseEncrypt0Builder::new()
        .protected(protected)
        .unprotected(unprotected)
        .create_ciphertext(payload, b"", |pt, aad| {
            cipher
                .encrypt(Nonce::from_slice(&nonce), AeadPayload { msg: pt, aad })
                .expect("AES-GCM encryption cannot fail on valid inputs")
        })
        .build();
    ProtectedPayload::Encrypted(encrypt0)
}

/// Decrypt an encrypted payload with the key resolved by key id.
pub fn decrypt(
    protected: &ProtectedPayload,
    keys: &KeyStore,
) -> Result<TinyStixPayload, CoseError> {
    let bytes = decrypt_bytes(protected, keys)?;
    TinyStixPayload::from_bytes(&bytes).map_err(|e| CoseError::Malformed(e.to_string()))
}

pub fn decrypt_bytes(protected: &ProtectedPayload, keys: &KeyStore) -> Result<Vec<u8>, CoseError> {
    let encrypt0 = match protected {
        ProtectedPayload::Encrypted(e) => e,
        ProtectedPayload::Signed(_) => return Err(CoseError::AlgorithmMismatch),
    };
    if alg_i64(&encrypt0.protected.header.alg) != Some(iana::Algorithm::A128GCM.to_i64()) {
        return Err(CoseError::AlgorithmMismatch);
    }
    let kid = &encrypt0.protected.header.key_id;
    let key = keys
        .symmetric(kid)
        .ok_or_else(|| CoseError::UnknownKeyId(kid_str(kid)))?;
    let nonce = &encrypt0.unprotected.iv;
    if nonce.len() != 12 {
        return Err(CoseError::Malformed("bad nonce length".into()));
    }
    let cipher = Aes128Gcm::new((&key.key).into());
    encrypt0.decrypt(b"", |ct, aad| {
        cipher
            .decrypt(Nonce::from_slice(nonce), AeadPayload { msg: ct, aad })
            .map_err(|_| CoseError::DecryptionFailed)
    })
}

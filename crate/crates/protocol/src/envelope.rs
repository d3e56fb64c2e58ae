use crate::wire::{MsgType, WireFrame};
use crate::BackendKind;
use pdte_core::pdte::{PdteParams, Protocol};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_bytes::ByteBuf;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

pub type Digest = [u8; 32];

/// Hash of every parameter that changes the meaning of a ciphertext:
/// `(N, p, depth budget, protocol, n, h, code length)`.
pub fn params_digest(params: &PdteParams) -> Digest {
    let (h, len) = match params.protocol {
        Protocol::Rcc => (params.hamming_weight as u64, params.encoder().map(|e| e.len() as u64).unwrap_or(0)),
        _ => (0, 0),
    };
    let tag = match params.protocol {
        Protocol::Xxcmp => 1u8,
        Protocol::Rcc => 2,
        Protocol::Folklore => 3,
    };
    let mut hasher = Sha256::new();
    hasher.update(b"pdte-params/1");
    hasher.update((params.degree as u64).to_le_bytes());
    hasher.update(params.plain_modulus.to_le_bytes());
    hasher.update((params.depth() as u64).to_le_bytes());
    hasher.update([tag]);
    hasher.update(u64::from(params.precision).to_le_bytes());
    hasher.update(h.to_le_bytes());
    hasher.update(len.to_le_bytes());
    hasher.finalize().into()
}

/// Identifies an uploaded public key set.
pub fn key_id(public: &[u8]) -> Digest {
    Sha256::digest(public).into()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeysEnvelope {
    pub backend: BackendKind,
    pub digest: Digest,
    pub public: ByteBuf,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryEnvelope {
    pub protocol: Protocol,
    pub digest: Digest,
    pub key_id: Digest,
    pub precision: u32,
    pub num_attributes: usize,
    /// RCC only: codeword weight and length.
    pub hamming_weight: Option<usize>,
    pub code_length: Option<usize>,
    /// Ciphertexts per attribute (XXCMP) or per slot group (batched), in declared order.
    pub groups: Vec<Vec<ByteBuf>>,
}

impl QueryEnvelope {
    pub fn blob_count(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn blob_bytes(&self) -> usize {
        self.groups.iter().flatten().map(|b| b.len()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseEnvelope {
    pub digest: Digest,
    pub leaves: usize,
    pub x: Vec<ByteBuf>,
    pub y: Vec<ByteBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u16", try_from = "u16")]
pub enum ErrorCode {
    Malformed = 1,
    DigestMismatch = 2,
    UnknownKeys = 3,
    InvalidQuery = 4,
    Evaluation = 5,
}

impl From<ErrorCode> for u16 {
    fn from(c: ErrorCode) -> u16 {
        c as u16
    }
}

impl TryFrom<u16> for ErrorCode {
    type Error = String;

    fn try_from(v: u16) -> Result<Self, String> {
        Ok(match v {
            1 => ErrorCode::Malformed,
            2 => ErrorCode::DigestMismatch,
            3 => ErrorCode::UnknownKeys,
            4 => ErrorCode::InvalidQuery,
            5 => ErrorCode::Evaluation,
            other => return Err(format!("unknown error code {other}")),
        })
    }
}

/// Error frames carry a fixed message per failure, never anything derived from a query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum EnvelopeError {
    #[error("expected a {expected:?} frame, got {found:?}")]
    Unexpected { expected: MsgType, found: MsgType },
    #[error("malformed body: {0}")]
    Body(#[from] bincode::Error),
}

pub trait Envelope: Serialize + DeserializeOwned {
    const TYPE: MsgType;

    fn to_frame(&self) -> WireFrame {
        WireFrame::new(Self::TYPE, bincode::serialize(self).expect("envelopes always serialize"))
    }

    fn from_frame(frame: &WireFrame) -> Result<Self, EnvelopeError> {
        if frame.msg_type != Self::TYPE {
            return Err(EnvelopeError::Unexpected { expected: Self::TYPE, found: frame.msg_type });
        }
        Ok(bincode::deserialize(&frame.body)?)
    }
}

impl Envelope for KeysEnvelope {
    const TYPE: MsgType = MsgType::Keys;
}

impl Envelope for QueryEnvelope {
    const TYPE: MsgType = MsgType::Query;
}

impl Envelope for ResponseEnvelope {
    const TYPE: MsgType = MsgType::Response;
}

impl Envelope for ErrorEnvelope {
    const TYPE: MsgType = MsgType::Error;
}

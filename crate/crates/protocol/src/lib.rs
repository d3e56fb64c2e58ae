//! Non-interactive client/server protocol for private decision tree evaluation.
//!
//! The client sends its public key set once (`KEYS`), then one `QUERY` per classification;
//! the server answers each query with a single `RESPONSE` or `ERROR` frame. The same frames
//! can be exchanged through files for fully offline operation.

pub mod client;
pub mod envelope;
pub mod keys;
pub mod server;
pub mod wire;

pub use client::Client;
pub use envelope::{
    key_id, params_digest, Digest, Envelope, EnvelopeError, ErrorCode, ErrorEnvelope, KeysEnvelope, QueryEnvelope,
    ResponseEnvelope,
};
pub use keys::{keygen, load_or_generate, KeyConfig, KeyDir, WireBackend};
pub use server::Server;
pub use wire::{FrameError, MsgType, WireFrame};

use pdte_core::pdte::PdteError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// File names used by the offline mode.
pub const KEYS_BLOB: &str = "keys.bin";
pub const QUERY_BLOB: &str = "query.bin";
pub const RESPONSE_BLOB: &str = "response.bin";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Sim,
    Rlwe,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Sim => "sim",
            BackendKind::Rlwe => "rlwe",
        })
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sim" | "simulator" => Ok(BackendKind::Sim),
            "rlwe" => Ok(BackendKind::Rlwe),
            other => Err(Error::Usage(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// Connecting to or talking with the server failed.
    #[error("network error: {0}")]
    Network(#[source] std::io::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    /// The server answered with an ERROR frame.
    #[error("server error {code:?}: {message}")]
    Remote { code: ErrorCode, message: String },
    #[error(transparent)]
    Pdte(#[from] PdteError),
    #[error("keys: {0}")]
    Keys(String),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

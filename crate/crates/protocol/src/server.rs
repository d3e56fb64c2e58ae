use crate::envelope::{key_id, params_digest, Digest, Envelope, ErrorCode, ErrorEnvelope, KeysEnvelope, QueryEnvelope, ResponseEnvelope};
use crate::keys::WireBackend;
use crate::wire::{FrameError, MsgType, WireFrame};
use crate::{Result, KEYS_BLOB, QUERY_BLOB, RESPONSE_BLOB};
use pdte_core::pdte::{evaluate_with_stats, DecisionTreeModel, EvalStats, PdteParams, PdteError, Protocol, Query};
use serde_bytes::ByteBuf;
use std::collections::HashMap;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::{Arc, RwLock};

/// Holds the model and the public key sets clients have uploaded; nothing else survives a
/// query.
pub struct Server<B: WireBackend> {
    params: PdteParams,
    model: DecisionTreeModel,
    digest: Digest,
    keys: RwLock<HashMap<Digest, Arc<B>>>,
}

fn reject(code: ErrorCode, message: &str) -> ErrorEnvelope {
    ErrorEnvelope { code, message: message.to_string() }
}

impl<B: WireBackend> Server<B> {
    pub fn new(params: PdteParams, model: DecisionTreeModel) -> Result<Self> {
        params.validate()?;
        params.check_model(&model)?;
        let digest = params_digest(&params);
        Ok(Self { params, model, digest, keys: RwLock::new(HashMap::new()) })
    }

    pub fn params(&self) -> &PdteParams {
        &self.params
    }

    /// Registers a public key set and returns its id.
    pub fn add_keys(&self, public: &[u8]) -> Result<Digest> {
        let b = B::from_blobs(&self.params, public, None)?;
        let id = key_id(public);
        self.keys.write().unwrap().insert(id, Arc::new(b));
        Ok(id)
    }

    fn accept_keys(&self, env: &KeysEnvelope) -> std::result::Result<(), ErrorEnvelope> {
        if env.backend != B::KIND {
            return Err(reject(ErrorCode::InvalidQuery, "key set is for another backend"));
        }
        if env.digest != self.digest {
            return Err(reject(ErrorCode::DigestMismatch, "parameter digest mismatch"));
        }
        self.add_keys(&env.public).map(|_| ()).map_err(|_| reject(ErrorCode::Malformed, "unusable key set"))
    }

    /// Evaluates one query envelope.
    pub fn respond(&self, q: &QueryEnvelope) -> std::result::Result<ResponseEnvelope, ErrorEnvelope> {
        self.respond_with_stats(q).map(|(r, _)| r)
    }

    /// As [`Server::respond`], also reporting where evaluation time went (excluding
    /// deserialization).
    pub fn respond_with_stats(&self, q: &QueryEnvelope) -> std::result::Result<(ResponseEnvelope, EvalStats), ErrorEnvelope> {
        if q.digest != self.digest {
            return Err(reject(ErrorCode::DigestMismatch, "parameter digest mismatch"));
        }
        let p = &self.params;
        let rcc = p.protocol == Protocol::Rcc;
        let code_length = if rcc { p.encoder().ok().map(|e| e.len()) } else { None };
        if q.protocol != p.protocol
            || q.precision != p.precision
            || q.num_attributes != p.num_attributes
            || q.hamming_weight != rcc.then_some(p.hamming_weight)
            || q.code_length != code_length
        {
            return Err(reject(ErrorCode::InvalidQuery, "query header does not match the server parameters"));
        }
        if p.query_ciphertexts().ok() != Some(q.blob_count()) {
            return Err(reject(ErrorCode::InvalidQuery, "wrong number of query ciphertexts"));
        }
        let b = self
            .keys
            .read()
            .unwrap()
            .get(&q.key_id)
            .cloned()
            .ok_or_else(|| reject(ErrorCode::UnknownKeys, "no key set with this id"))?;
        let groups = q
            .groups
            .iter()
            .map(|g| g.iter().map(|blob| b.deserialize_ct(blob)).collect::<std::result::Result<Vec<_>, _>>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| reject(ErrorCode::Malformed, "malformed ciphertext"))?;
        let query = Query { groups };
        let (resp, stats) = evaluate_with_stats(&*b, p, &self.model, &query).map_err(|e| match e {
            PdteError::Mismatch(_) => reject(ErrorCode::InvalidQuery, "query does not fit the parameters"),
            _ => reject(ErrorCode::Evaluation, "evaluation failed"),
        })?;
        let blobs = |cts: &[B::Ct]| cts.iter().map(|c| ByteBuf::from(b.serialize_ct(c))).collect();
        Ok((ResponseEnvelope { digest: self.digest, leaves: resp.leaves, x: blobs(&resp.x), y: blobs(&resp.y) }, stats))
    }

    /// Answers one frame; `KEYS` frames are only answered when they fail.
    pub fn handle(&self, frame: &WireFrame) -> Option<WireFrame> {
        let out = match frame.msg_type {
            MsgType::Keys => match KeysEnvelope::from_frame(frame) {
                Ok(env) => self.accept_keys(&env).err(),
                Err(_) => Some(reject(ErrorCode::Malformed, "malformed key envelope")),
            },
            MsgType::Query => match QueryEnvelope::from_frame(frame) {
                Ok(q) => match self.respond(&q) {
                    Ok(r) => return Some(r.to_frame()),
                    Err(e) => Some(e),
                },
                Err(_) => Some(reject(ErrorCode::Malformed, "malformed query envelope")),
            },
            MsgType::Response | MsgType::Error => Some(reject(ErrorCode::Malformed, "unexpected message type")),
        };
        out.map(|e| e.to_frame())
    }

    /// Serves one connection until the peer closes it. A truncated frame closes the
    /// connection without a reply; an unparseable header gets one ERROR frame first.
    pub fn serve_connection(&self, stream: TcpStream) -> std::io::Result<()> {
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut writer = BufWriter::new(stream);
        loop {
            match WireFrame::read_from(&mut reader) {
                Ok(None) => return Ok(()),
                Ok(Some(frame)) => {
                    if let Some(reply) = self.handle(&frame) {
                        reply.write_to(&mut writer)?;
                    }
                }
                Err(FrameError::Truncated) => return Ok(()),
                Err(FrameError::Io(e)) => return Err(e),
                Err(_) => {
                    reject(ErrorCode::Malformed, "unreadable frame header").to_frame().write_to(&mut writer)?;
                    return Ok(());
                }
            }
        }
    }

    /// Accepts connections forever, one thread each.
    pub fn serve(self: Arc<Self>, listener: TcpListener) -> std::io::Result<()> {
        for stream in listener.incoming() {
            let stream = stream?;
            let me = Arc::clone(&self);
            std::thread::spawn(move || {
                let _ = me.serve_connection(stream);
            });
        }
        Ok(())
    }

    /// Offline mode: reads `keys.bin` (if present) and `query.bin` from `dir`, writes
    /// `response.bin`.
    pub fn process_dir(&self, dir: &Path) -> Result<MsgType> {
        let keys = dir.join(KEYS_BLOB);
        let mut reply = None;
        if keys.exists() {
            reply = self.handle(&WireFrame::decode(&fs::read(keys)?)?);
        }
        if reply.is_none() {
            let frame = WireFrame::decode(&fs::read(dir.join(QUERY_BLOB))?)?;
            reply = self.handle(&frame);
        }
        let reply = reply.unwrap_or_else(|| reject(ErrorCode::Malformed, "no query").to_frame());
        fs::write(dir.join(RESPONSE_BLOB), reply.encode())?;
        Ok(reply.msg_type)
    }
}

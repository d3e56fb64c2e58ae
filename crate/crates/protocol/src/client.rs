use crate::envelope::{key_id, params_digest, Digest, Envelope, ErrorCode, ErrorEnvelope, KeysEnvelope, QueryEnvelope, ResponseEnvelope};
use crate::keys::WireBackend;
use crate::wire::{MsgType, WireFrame};
use crate::{Error, Result, KEYS_BLOB, QUERY_BLOB, RESPONSE_BLOB};
use pdte_core::pdte::{decode_result, encrypt_query, PdteParams, Protocol, Response};
use serde_bytes::ByteBuf;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::net::{TcpStream, ToSocketAddrs};
use std::path::Path;

/// Client role: owns the secret key and turns attribute vectors into queries.
pub struct Client<B: WireBackend> {
    params: PdteParams,
    backend: B,
    digest: Digest,
    public: Vec<u8>,
    key_id: Digest,
}

impl<B: WireBackend> Client<B> {
    pub fn new(params: PdteParams, backend: B) -> Result<Self> {
        params.validate()?;
        let public = backend.public_blob();
        Ok(Self { digest: params_digest(&params), key_id: key_id(&public), params, backend, public })
    }

    pub fn params(&self) -> &PdteParams {
        &self.params
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn public_keys(&self) -> &[u8] {
        &self.public
    }

    pub fn keys_envelope(&self) -> KeysEnvelope {
        KeysEnvelope { backend: B::KIND, digest: self.digest, public: ByteBuf::from(self.public.clone()) }
    }

    /// Validates and encrypts `attrs`. Nothing touches the network before this succeeds.
    pub fn query_envelope(&self, attrs: &[u64]) -> Result<QueryEnvelope> {
        let q = encrypt_query(&self.backend, &self.params, attrs)?;
        let rcc = self.params.protocol == Protocol::Rcc;
        Ok(QueryEnvelope {
            protocol: self.params.protocol,
            digest: self.digest,
            key_id: self.key_id,
            precision: self.params.precision,
            num_attributes: self.params.num_attributes,
            hamming_weight: rcc.then_some(self.params.hamming_weight),
            code_length: if rcc { Some(self.params.encoder()?.len()) } else { None },
            groups: q
                .groups
                .iter()
                .map(|g| g.iter().map(|c| ByteBuf::from(self.backend.serialize_ct(c))).collect())
                .collect(),
        })
    }

    pub fn decode_response(&self, r: &ResponseEnvelope) -> Result<u64> {
        if r.digest != self.digest {
            return Err(Error::Malformed("response digest does not match".into()));
        }
        let cts = |blobs: &[ByteBuf]| {
            blobs.iter().map(|b| self.backend.deserialize_ct(b)).collect::<std::result::Result<Vec<_>, _>>()
        };
        let resp = Response { leaves: r.leaves, x: cts(&r.x)?, y: cts(&r.y)? };
        Ok(decode_result(&self.backend, &resp)?)
    }

    /// Decodes a RESPONSE frame; ERROR frames become `Error::Remote`.
    pub fn decode_frame(&self, frame: &WireFrame) -> Result<u64> {
        match frame.msg_type {
            MsgType::Error => {
                let e = ErrorEnvelope::from_frame(frame)?;
                Err(Error::Remote { code: e.code, message: e.message })
            }
            _ => self.decode_response(&ResponseEnvelope::from_frame(frame)?),
        }
    }

    /// One classification over TCP. Keys are uploaded only if the server asks for them.
    pub fn query<A: ToSocketAddrs>(&self, addr: A, attrs: &[u64]) -> Result<u64> {
        let query = self.query_envelope(attrs)?.to_frame();
        let stream = TcpStream::connect(addr).map_err(Error::Network)?;
        let mut reader = BufReader::new(stream.try_clone().map_err(Error::Network)?);
        let mut writer = BufWriter::new(stream);
        let mut exchange = |frames: &[&WireFrame]| -> Result<WireFrame> {
            for f in frames {
                f.write_to(&mut writer).map_err(Error::Network)?;
            }
            WireFrame::read_from(&mut reader)?.ok_or_else(|| Error::Network(std::io::ErrorKind::UnexpectedEof.into()))
        };
        let mut reply = exchange(&[&query])?;
        if reply.msg_type == MsgType::Error {
            if let Ok(ErrorEnvelope { code: ErrorCode::UnknownKeys, .. }) = ErrorEnvelope::from_frame(&reply) {
                reply = exchange(&[&self.keys_envelope().to_frame(), &query])?;
            }
        }
        self.decode_frame(&reply)
    }

    /// Offline mode, first half: writes `keys.bin` and `query.bin` into `dir`.
    pub fn write_offline(&self, dir: &Path, attrs: &[u64]) -> Result<()> {
        let query = self.query_envelope(attrs)?;
        fs::create_dir_all(dir)?;
        fs::write(dir.join(KEYS_BLOB), self.keys_envelope().to_frame().encode())?;
        fs::write(dir.join(QUERY_BLOB), query.to_frame().encode())?;
        Ok(())
    }

    /// Offline mode, second half: decodes `response.bin` from `dir`.
    pub fn read_offline(&self, dir: &Path) -> Result<u64> {
        self.decode_frame(&WireFrame::decode(&fs::read(dir.join(RESPONSE_BLOB))?)?)
    }
}

//! Length-prefixed frames.
//!
//! ```text
//! magic "PDTE" | version u16 LE | msg_type u8 | body_len u64 LE | body
//! ```

use std::io::{self, Read, Write};
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"PDTE";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 15;
/// Bodies above this size are refused before any allocation.
pub const MAX_BODY: u64 = 1 << 33;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    Keys = 1,
    Query = 2,
    Response = 3,
    Error = 4,
}

impl TryFrom<u8> for MsgType {
    type Error = FrameError;

    fn try_from(v: u8) -> Result<Self, FrameError> {
        Ok(match v {
            1 => MsgType::Keys,
            2 => MsgType::Query,
            3 => MsgType::Response,
            4 => MsgType::Error,
            other => return Err(FrameError::MsgType(other)),
        })
    }
}

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("bad magic")]
    Magic,
    #[error("unsupported frame version {0}")]
    Version(u16),
    #[error("unknown message type {0}")]
    MsgType(u8),
    #[error("frame body of {0} bytes is too large")]
    TooLarge(u64),
    #[error("truncated frame")]
    Truncated,
    #[error("{0} trailing bytes after frame")]
    Trailing(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireFrame {
    pub version: u16,
    pub msg_type: MsgType,
    pub body: Vec<u8>,
}

struct Header {
    version: u16,
    msg_type: MsgType,
    len: u64,
}

fn parse_header(h: &[u8; HEADER_LEN]) -> Result<Header, FrameError> {
    if h[..4] != MAGIC {
        return Err(FrameError::Magic);
    }
    let version = u16::from_le_bytes([h[4], h[5]]);
    if version != VERSION {
        return Err(FrameError::Version(version));
    }
    let msg_type = MsgType::try_from(h[6])?;
    let len = u64::from_le_bytes(h[7..15].try_into().unwrap());
    if len > MAX_BODY {
        return Err(FrameError::TooLarge(len));
    }
    Ok(Header { version, msg_type, len })
}

impl WireFrame {
    pub fn new(msg_type: MsgType, body: Vec<u8>) -> Self {
        Self { version: VERSION, msg_type, body }
    }

    fn header(&self) -> [u8; HEADER_LEN] {
        let mut h = [0u8; HEADER_LEN];
        h[..4].copy_from_slice(&MAGIC);
        h[4..6].copy_from_slice(&self.version.to_le_bytes());
        h[6] = self.msg_type as u8;
        h[7..].copy_from_slice(&(self.body.len() as u64).to_le_bytes());
        h
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.body.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&self.header());
        out.extend_from_slice(&self.body);
        out
    }

    /// Parses exactly one frame occupying all of `bytes`.
    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        let head: &[u8; HEADER_LEN] = bytes.get(..HEADER_LEN).ok_or(FrameError::Truncated)?.try_into().unwrap();
        let h = parse_header(head)?;
        let rest = &bytes[HEADER_LEN..];
        let len = h.len as usize;
        match rest.len().cmp(&len) {
            std::cmp::Ordering::Less => Err(FrameError::Truncated),
            std::cmp::Ordering::Greater => Err(FrameError::Trailing(rest.len() - len)),
            std::cmp::Ordering::Equal => Ok(Self { version: h.version, msg_type: h.msg_type, body: rest.to_vec() }),
        }
    }

    /// Reads the next frame. `Ok(None)` means the stream ended cleanly between frames.
    pub fn read_from<R: Read>(r: &mut R) -> Result<Option<Self>, FrameError> {
        let mut head = [0u8; HEADER_LEN];
        let mut got = 0;
        while got < HEADER_LEN {
            match r.read(&mut head[got..]) {
                Ok(0) if got == 0 => return Ok(None),
                Ok(0) => return Err(FrameError::Truncated),
                Ok(k) => got += k,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        let h = parse_header(&head)?;
        let mut body = Vec::new();
        r.take(h.len).read_to_end(&mut body)?;
        if body.len() as u64 != h.len {
            return Err(FrameError::Truncated);
        }
        Ok(Some(Self { version: h.version, msg_type: h.msg_type, body }))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(&self.header())?;
        w.write_all(&self.body)?;
        w.flush()
    }
}

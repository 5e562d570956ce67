//! Length-prefixed frames.
//!
//! Wire layout: 4-byte big-endian length, one kind byte, payload. The
//! length counts the kind byte plus the payload.

use std::io::{self, Read, Write};

use crate::error::{NetError, Result};

pub const DEFAULT_MAX_FRAME: usize = 64 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FrameKind {
    Job = 0,
    Tagged = 1,
    DhtOp = 2,
    Control = 3,
}

impl FrameKind {
    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0 => FrameKind::Job,
            1 => FrameKind::Tagged,
            2 => FrameKind::DhtOp,
            3 => FrameKind::Control,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameKind,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(kind: FrameKind, payload: Vec<u8>) -> Self {
        Frame { kind, payload }
    }

    /// Bytes on the wire, header included.
    pub fn wire_len(&self) -> usize {
        5 + self.payload.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode_frame(self.kind, &[&self.payload])
    }
}

/// Serializes one frame whose payload is the concatenation of `parts`.
pub fn encode_frame(kind: FrameKind, parts: &[&[u8]]) -> Vec<u8> {
    let len: usize = parts.iter().map(|p| p.len()).sum();
    let mut out = Vec::with_capacity(5 + len);
    out.extend_from_slice(&((len + 1) as u32).to_be_bytes());
    out.push(kind as u8);
    for p in parts {
        out.extend_from_slice(p);
    }
    out
}

/// Writes a frame with a single `write_all`, so a frame is never split by
/// a concurrent writer holding the same lock.
pub fn write_frame<W: Write>(w: &mut W, frame: &Frame, max: usize) -> Result<()> {
    if frame.payload.len() + 1 > max {
        return Err(NetError::FrameTooLarge(frame.payload.len() + 1));
    }
    w.write_all(&frame.to_bytes())?;
    w.flush()?;
    Ok(())
}

/// Reads the next frame. `Ok(None)` on a clean end of stream at a frame
/// boundary; a stream ending inside a frame is an error.
pub fn read_frame<R: Read>(r: &mut R, max: usize) -> Result<Option<Frame>> {
    let mut header = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(NetError::Io(io::ErrorKind::UnexpectedEof.into())),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(header) as usize;
    if len == 0 {
        return Err(NetError::protocol("frame without kind byte"));
    }
    if len > max {
        return Err(NetError::FrameTooLarge(len));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    let kind = FrameKind::from_byte(body[0]).ok_or_else(|| NetError::protocol(format!("unknown frame kind {}", body[0])))?;
    body.remove(0);
    Ok(Some(Frame { kind, payload: body }))
}

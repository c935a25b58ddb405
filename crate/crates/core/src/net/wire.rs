//! Chunk and request framing.
//!
//! Data chunk, all integers big-endian:
//!
//! ```text
//! magic u32 = 0x53504C54 ("SPLT") | version u8 = 1 | channel_id u8 (0 = A, 1 = B)
//! | trial_id u32 | fraction f64 | offset u64 | length u32 | payload[length]
//! ```
//!
//! A channel's stream for one trial ends with a zero-length chunk whose
//! `offset` field carries the CRC-32 (IEEE) of the full payload.
//!
//! The receiver asks for a trial by writing a request frame back up each
//! connection:
//!
//! ```text
//! magic u32 = 0x53504C51 ("SPLQ") | version u8 = 1 | channel_id u8 | trial_id u32
//! | fraction f64 | payload_size u64 | payload_seed u64
//! ```

use crate::error::{Error, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{self, Read, Write};

pub const CHUNK_MAGIC: u32 = 0x5350_4C54;
pub const REQUEST_MAGIC: u32 = 0x5350_4C51;
pub const VERSION: u8 = 1;
pub const CHUNK_HEADER_LEN: usize = 30;
pub const REQUEST_LEN: usize = 34;
pub const DEFAULT_CHUNK_SIZE: usize = 64 * 1024;
/// Largest payload a single chunk may declare.
pub const MAX_CHUNK_LEN: u32 = 16 * 1024 * 1024;
/// Largest payload the desk harness moves in one trial.
pub const MAX_PAYLOAD: u64 = 64 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelId {
    A = 0,
    B = 1,
}

impl ChannelId {
    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(ChannelId::A),
            1 => Ok(ChannelId::B),
            other => Err(Error::Protocol(format!("unknown channel id {other}"))),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkHeader {
    pub channel: ChannelId,
    pub trial_id: u32,
    pub fraction: f64,
    pub offset: u64,
    pub length: u32,
}

impl ChunkHeader {
    pub fn is_terminal(&self) -> bool {
        self.length == 0
    }

    pub fn encode(&self) -> [u8; CHUNK_HEADER_LEN] {
        let mut buf = [0u8; CHUNK_HEADER_LEN];
        buf[0..4].copy_from_slice(&CHUNK_MAGIC.to_be_bytes());
        buf[4] = VERSION;
        buf[5] = self.channel as u8;
        buf[6..10].copy_from_slice(&self.trial_id.to_be_bytes());
        buf[10..18].copy_from_slice(&self.fraction.to_be_bytes());
        buf[18..26].copy_from_slice(&self.offset.to_be_bytes());
        buf[26..30].copy_from_slice(&self.length.to_be_bytes());
        buf
    }

    pub fn decode(buf: &[u8; CHUNK_HEADER_LEN]) -> Result<Self> {
        let magic = u32::from_be_bytes(buf[0..4].try_into().unwrap());
        if magic != CHUNK_MAGIC {
            return Err(Error::Protocol(format!("bad chunk magic {magic:#010x}")));
        }
        if buf[4] != VERSION {
            return Err(Error::Protocol(format!("unsupported chunk version {}", buf[4])));
        }
        let length = u32::from_be_bytes(buf[26..30].try_into().unwrap());
        if length > MAX_CHUNK_LEN {
            return Err(Error::Protocol(format!("chunk length {length} exceeds {MAX_CHUNK_LEN}")));
        }
        Ok(ChunkHeader {
            channel: ChannelId::from_u8(buf[5])?,
            trial_id: u32::from_be_bytes(buf[6..10].try_into().unwrap()),
            fraction: f64::from_be_bytes(buf[10..18].try_into().unwrap()),
            offset: u64::from_be_bytes(buf[18..26].try_into().unwrap()),
            length,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRequest {
    pub channel: ChannelId,
    pub trial_id: u32,
    pub fraction: f64,
    pub payload_size: u64,
    pub payload_seed: u64,
}

impl TrialRequest {
    pub fn encode(&self) -> [u8; REQUEST_LEN] {
        let mut buf = [0u8; REQUEST_LEN];
        buf[0..4].copy_from_slice(&REQUEST_MAGIC.to_be_bytes());
        buf[4] = VERSION;
        buf[5] = self.channel as u8;
        buf[6..10].copy_from_slice(&self.trial_id.to_be_bytes());
        buf[10..18].copy_from_slice(&self.fraction.to_be_bytes());
        buf[18..26].copy_from_slice(&self.payload_size.to_be_bytes());
        buf[26..34].copy_from_slice(&self.payload_seed.to_be_bytes());
        buf
    }

    pub fn decode(buf: &[u8; REQUEST_LEN]) -> Result<Self> {
        let magic = u32::from_be_bytes(buf[0..4].try_into().unwrap());
        if magic != REQUEST_MAGIC {
            return Err(Error::Protocol(format!("bad request magic {magic:#010x}")));
        }
        if buf[4] != VERSION {
            return Err(Error::Protocol(format!("unsupported request version {}", buf[4])));
        }
        let req = TrialRequest {
            channel: ChannelId::from_u8(buf[5])?,
            trial_id: u32::from_be_bytes(buf[6..10].try_into().unwrap()),
            fraction: f64::from_be_bytes(buf[10..18].try_into().unwrap()),
            payload_size: u64::from_be_bytes(buf[18..26].try_into().unwrap()),
            payload_seed: u64::from_be_bytes(buf[26..34].try_into().unwrap()),
        };
        if !(0.0..=1.0).contains(&req.fraction) {
            return Err(Error::Protocol(format!("request fraction {} outside [0, 1]", req.fraction)));
        }
        if req.payload_size > MAX_PAYLOAD {
            return Err(Error::Protocol(format!("payload size {} exceeds {MAX_PAYLOAD}", req.payload_size)));
        }
        Ok(req)
    }
}

/// Fills `buf` completely, or returns `Ok(false)` on EOF before the first byte.
fn read_frame<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(false),
            Ok(0) => return Err(Error::Protocol("connection closed mid-frame".into())),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(true)
}

pub fn write_chunk<W: Write>(w: &mut W, header: &ChunkHeader, payload: &[u8]) -> Result<()> {
    debug_assert_eq!(header.length as usize, payload.len());
    // one write per frame keeps header and payload in the same segment
    let mut frame = Vec::with_capacity(CHUNK_HEADER_LEN + payload.len());
    frame.extend_from_slice(&header.encode());
    frame.extend_from_slice(payload);
    w.write_all(&frame)?;
    Ok(())
}

/// Next chunk, or `None` at a clean end of stream.
pub fn read_chunk<R: Read>(r: &mut R) -> Result<Option<(ChunkHeader, Vec<u8>)>> {
    let mut head = [0u8; CHUNK_HEADER_LEN];
    if !read_frame(r, &mut head)? {
        return Ok(None);
    }
    let header = ChunkHeader::decode(&head)?;
    let mut payload = vec![0u8; header.length as usize];
    if !payload.is_empty() && !read_frame(r, &mut payload)? {
        return Err(Error::Protocol("connection closed before chunk payload".into()));
    }
    Ok(Some((header, payload)))
}

pub fn write_request<W: Write>(w: &mut W, req: &TrialRequest) -> Result<()> {
    w.write_all(&req.encode())?;
    w.flush()?;
    Ok(())
}

/// Next request, or `None` when the receiver hung up.
pub fn read_request<R: Read>(r: &mut R) -> Result<Option<TrialRequest>> {
    let mut buf = [0u8; REQUEST_LEN];
    if !read_frame(r, &mut buf)? {
        return Ok(None);
    }
    TrialRequest::decode(&buf).map(Some)
}

/// Bytes for channel A and channel B: `round_half_up(f · size)` and the rest.
pub fn split_payload(payload_size: u64, fraction: f64) -> Result<(u64, u64)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Domain(format!("fraction must lie in [0, 1], got {fraction}")));
    }
    let a = ((fraction * payload_size as f64) + 0.5).floor() as u64;
    let a = a.min(payload_size);
    Ok((a, payload_size - a))
}

/// Deterministic payload of a trial: ChaCha8 keyed by `seed`, stream `trial_id`.
pub fn payload_for_trial(seed: u64, trial_id: u32, size: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_id as u64);
    let mut buf = vec![0u8; size as usize];
    rng.fill_bytes(&mut buf);
    buf
}

pub fn crc32(data: &[u8]) -> u32 {
    crc32fast::hash(data)
}

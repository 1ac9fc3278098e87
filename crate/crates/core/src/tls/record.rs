//! TLS record framing, direction stream reassembly and the encryption gate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::flow::{Direction, Session};

pub const CONTENT_CHANGE_CIPHER_SPEC: u8 = 20;
pub const CONTENT_ALERT: u8 = 21;
pub const CONTENT_HANDSHAKE: u8 = 22;
pub const CONTENT_APPLICATION_DATA: u8 = 23;

/// Largest record length accepted: 2^14 plaintext plus 2048 bytes of expansion.
pub const MAX_RECORD_LENGTH: usize = (1 << 14) + 2048;

/// Reassembled streams stop growing past this many bytes; the handshake is
/// always near the front.
const MAX_STREAM_BYTES: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordHeader {
    pub content_type: u8,
    pub version: u16,
    pub length: usize,
}

/// Parses a record header if `bytes` starts with a syntactically valid one.
pub fn record_header(bytes: &[u8]) -> Option<RecordHeader> {
    if bytes.len() < 5 {
        return None;
    }
    let content_type = bytes[0];
    if !(CONTENT_CHANGE_CIPHER_SPEC..=CONTENT_APPLICATION_DATA).contains(&content_type) {
        return None;
    }
    if bytes[1] != 0x03 || bytes[2] > 0x04 {
        return None;
    }
    let length = u16::from_be_bytes([bytes[3], bytes[4]]) as usize;
    if length > MAX_RECORD_LENGTH {
        return None;
    }
    Some(RecordHeader {
        content_type,
        version: u16::from_be_bytes([bytes[1], bytes[2]]),
        length,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TlsDetection {
    pub is_tls: bool,
    /// Byte offset into the reassembled client stream where the first record begins.
    pub first_record_offset: Option<usize>,
}

/// Payload bytes of one direction in sequence order, with the stream offset at
/// which every contributing segment started.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DirectionStream {
    pub bytes: Vec<u8>,
    pub segment_starts: Vec<usize>,
}

/// Concatenates the in-order TCP payload of one direction. Retransmitted
/// bytes are skipped by sequence number; reassembly stops at the first hole.
pub fn reassemble(session: &Session, dir: Direction) -> DirectionStream {
    let mut base: Option<u32> = None;
    let mut pending: BTreeMap<u32, &[u8]> = BTreeMap::new();
    for p in session.in_direction(dir) {
        let Some(tcp) = &p.tcp else { continue };
        if p.payload.is_empty() {
            continue;
        }
        let base = *base.get_or_insert(tcp.seq);
        let rel = tcp.seq.wrapping_sub(base);
        // Segments that start before the first data segment are stale.
        if rel > u32::MAX / 2 {
            continue;
        }
        let entry = pending.entry(rel).or_insert(&p.payload[..]);
        if entry.len() < p.payload.len() {
            *entry = &p.payload[..];
        }
    }

    let mut stream = DirectionStream::default();
    for (rel, data) in pending {
        let rel = rel as usize;
        let next = stream.bytes.len();
        if rel > next || stream.bytes.len() >= MAX_STREAM_BYTES {
            break;
        }
        let skip = next - rel;
        if skip >= data.len() {
            continue;
        }
        stream.segment_starts.push(rel);
        stream.bytes.extend_from_slice(&data[skip..]);
    }
    stream
}

/// A session is TLS when some client payload begins a valid TLS record.
pub fn detect_tls(session: &Session) -> TlsDetection {
    let starts_record = session
        .forward()
        .any(|p| p.tcp.is_some() && record_header(&p.payload).is_some());
    if !starts_record {
        return TlsDetection {
            is_tls: false,
            first_record_offset: None,
        };
    }
    let stream = reassemble(session, Direction::Forward);
    TlsDetection {
        is_tls: true,
        first_record_offset: first_record_start(&stream),
    }
}

/// Offset of the first segment in the stream that begins a valid record.
pub fn first_record_start(stream: &DirectionStream) -> Option<usize> {
    stream
        .segment_starts
        .iter()
        .copied()
        .find(|&off| record_header(&stream.bytes[off..]).is_some())
}

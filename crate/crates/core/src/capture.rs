//! PCAP and PCAPNG readers.
//!
//! Both formats are read as a stream of [`RawFrame`]s in file order with
//! timestamps normalised to microseconds since the epoch. A file that ends in
//! the middle of a record still yields every complete frame before the cut,
//! followed by a [`CaptureError::Truncated`] item.

use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const PCAP_MAGIC_US: u32 = 0xA1B2_C3D4;
const PCAP_MAGIC_NS: u32 = 0xA1B2_3C4D;
const PCAPNG_SHB: u32 = 0x0A0D_0D0A;
const PCAPNG_BYTE_ORDER: u32 = 0x1A2B_3C4D;

const BLOCK_IDB: u32 = 0x0000_0001;
const BLOCK_PB: u32 = 0x0000_0002;
const BLOCK_SPB: u32 = 0x0000_0003;
const BLOCK_EPB: u32 = 0x0000_0006;

/// Largest block or record body we are willing to allocate for.
const MAX_RECORD_LEN: usize = 256 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("not a capture file (magic {0:#010x})")]
    UnknownMagic(u32),
    #[error("capture truncated at byte offset {offset} after {frames_read} complete frames")]
    Truncated { offset: u64, frames_read: usize },
    #[error("malformed capture at byte offset {offset}: {reason}")]
    Malformed { offset: u64, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Data link type of a captured frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkType {
    Ethernet,
    RawIp,
    Other(u32),
}

impl LinkType {
    pub fn from_linktype(value: u32) -> LinkType {
        match value & 0xFFFF {
            1 => LinkType::Ethernet,
            101 | 228 | 229 => LinkType::RawIp,
            other => LinkType::Other(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaptureFormat {
    Pcap,
    PcapNg,
}

/// One captured frame exactly as stored in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFrame {
    pub timestamp_us: i64,
    pub link_type: LinkType,
    pub data: Vec<u8>,
    /// Length of the frame on the wire, which exceeds `data.len()` when the
    /// capture used a snap length.
    pub original_length: u32,
}

/// Notice attached to a capture whose last record was cut short.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationNotice {
    pub offset: u64,
    pub frames_read: usize,
}

/// A fully read capture.
#[derive(Debug, Clone)]
pub struct Capture {
    pub format: CaptureFormat,
    pub frames: Vec<RawFrame>,
    pub truncated: Option<TruncationNotice>,
}

/// Reads a whole capture file. Truncation is reported through
/// [`Capture::truncated`], not as an error.
pub fn open_capture(path: impl AsRef<Path>) -> Result<Capture, CaptureError> {
    let file = File::open(path)?;
    read_capture(BufReader::new(file))
}

pub fn read_capture<R: Read>(reader: R) -> Result<Capture, CaptureError> {
    let mut stream = CaptureReader::new(reader)?;
    let format = stream.format();
    let mut frames = Vec::new();
    let mut truncated = None;
    for item in &mut stream {
        match item {
            Ok(frame) => frames.push(frame),
            Err(CaptureError::Truncated { offset, frames_read }) => {
                truncated = Some(TruncationNotice { offset, frames_read });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Capture {
        format,
        frames,
        truncated,
    })
}

#[derive(Debug, Clone, Copy)]
enum Endian {
    Little,
    Big,
}

impl Endian {
    fn u16(self, b: &[u8]) -> u16 {
        let a = [b[0], b[1]];
        match self {
            Endian::Little => u16::from_le_bytes(a),
            Endian::Big => u16::from_be_bytes(a),
        }
    }

    fn u32(self, b: &[u8]) -> u32 {
        let a = [b[0], b[1], b[2], b[3]];
        match self {
            Endian::Little => u32::from_le_bytes(a),
            Endian::Big => u32::from_be_bytes(a),
        }
    }

    fn i64(self, b: &[u8]) -> i64 {
        let mut a = [0u8; 8];
        a.copy_from_slice(&b[..8]);
        match self {
            Endian::Little => i64::from_le_bytes(a),
            Endian::Big => i64::from_be_bytes(a),
        }
    }
}

/// Timestamp resolution of a capture or interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Resolution {
    /// Units of 10^-n seconds.
    Decimal(u8),
    /// Units of 2^-n seconds.
    Binary(u8),
}

impl Resolution {
    fn to_micros(self, units: u64) -> i64 {
        let units = units as i128;
        let us = match self {
            Resolution::Decimal(n) if n <= 6 => units * 10i128.pow(6 - n as u32),
            Resolution::Decimal(n) => units / 10i128.pow((n as u32 - 6).min(38)),
            Resolution::Binary(n) => (units * 1_000_000) >> n.min(127),
        };
        us.clamp(i64::MIN as i128, i64::MAX as i128) as i64
    }
}

struct Interface {
    link_type: LinkType,
    resolution: Resolution,
    offset_s: i64,
}

enum Format {
    Pcap {
        endian: Endian,
        nanos: bool,
        link_type: LinkType,
    },
    PcapNg {
        endian: Endian,
        interfaces: Vec<Interface>,
        last_timestamp_us: i64,
    },
}

/// Streaming capture reader yielding frames in file order.
pub struct CaptureReader<R> {
    reader: R,
    format: Format,
    offset: u64,
    frames_read: usize,
    done: bool,
}

enum Fill {
    Full,
    Eof,
    Partial,
}

fn fill<R: Read>(reader: &mut R, buf: &mut [u8]) -> io::Result<Fill> {
    let mut read = 0;
    while read < buf.len() {
        match reader.read(&mut buf[read..]) {
            Ok(0) => break,
            Ok(n) => read += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(if read == buf.len() {
        Fill::Full
    } else if read == 0 {
        Fill::Eof
    } else {
        Fill::Partial
    })
}

impl<R: Read> CaptureReader<R> {
    pub fn new(mut reader: R) -> Result<Self, CaptureError> {
        let mut magic = [0u8; 4];
        match fill(&mut reader, &mut magic)? {
            Fill::Full => {}
            _ => return Err(CaptureError::UnknownMagic(0)),
        }
        let le = u32::from_le_bytes(magic);
        let be = u32::from_be_bytes(magic);

        let pcap = [(PCAP_MAGIC_US, false), (PCAP_MAGIC_NS, true)]
            .into_iter()
            .find_map(|(m, nanos)| {
                if le == m {
                    Some((Endian::Little, nanos))
                } else if be == m {
                    Some((Endian::Big, nanos))
                } else {
                    None
                }
            });

        if let Some((endian, nanos)) = pcap {
            let mut rest = [0u8; 20];
            match fill(&mut reader, &mut rest)? {
                Fill::Full => {}
                _ => {
                    return Err(CaptureError::Truncated {
                        offset: 4,
                        frames_read: 0,
                    })
                }
            }
            let link_type = LinkType::from_linktype(endian.u32(&rest[16..20]));
            return Ok(CaptureReader {
                reader,
                format: Format::Pcap {
                    endian,
                    nanos,
                    link_type,
                },
                offset: 24,
                frames_read: 0,
                done: false,
            });
        }

        if le == PCAPNG_SHB {
            let mut this = CaptureReader {
                reader,
                format: Format::PcapNg {
                    endian: Endian::Little,
                    interfaces: Vec::new(),
                    last_timestamp_us: 0,
                },
                offset: 0,
                frames_read: 0,
                done: false,
            };
            this.read_section_header()?;
            return Ok(this);
        }

        Err(CaptureError::UnknownMagic(be))
    }

    pub fn format(&self) -> CaptureFormat {
        match self.format {
            Format::Pcap { .. } => CaptureFormat::Pcap,
            Format::PcapNg { .. } => CaptureFormat::PcapNg,
        }
    }

    fn truncated(&mut self) -> CaptureError {
        self.done = true;
        CaptureError::Truncated {
            offset: self.offset,
            frames_read: self.frames_read,
        }
    }

    fn malformed(&mut self, reason: impl Into<String>) -> CaptureError {
        self.done = true;
        CaptureError::Malformed {
            offset: self.offset,
            reason: reason.into(),
        }
    }

    /// Reads the remainder of a section header block whose type word has
    /// already been consumed.
    fn read_section_header(&mut self) -> Result<(), CaptureError> {
        let mut head = [0u8; 8];
        match fill(&mut self.reader, &mut head)? {
            Fill::Full => {}
            _ => return Err(self.truncated()),
        }
        let endian = if u32::from_le_bytes([head[4], head[5], head[6], head[7]]) == PCAPNG_BYTE_ORDER {
            Endian::Little
        } else if u32::from_be_bytes([head[4], head[5], head[6], head[7]]) == PCAPNG_BYTE_ORDER {
            Endian::Big
        } else {
            return Err(self.malformed("bad section byte-order magic"));
        };
        let total = endian.u32(&head[0..4]) as usize;
        if total < 28 || total % 4 != 0 || total > MAX_RECORD_LEN {
            return Err(self.malformed(format!("bad section header length {total}")));
        }
        let mut rest = vec![0u8; total - 12];
        match fill(&mut self.reader, &mut rest)? {
            Fill::Full => {}
            _ => return Err(self.truncated()),
        }
        self.offset += total as u64;
        self.format = Format::PcapNg {
            endian,
            interfaces: Vec::new(),
            last_timestamp_us: 0,
        };
        Ok(())
    }

    fn next_pcap(
        &mut self,
        endian: Endian,
        nanos: bool,
        link_type: LinkType,
    ) -> Option<Result<RawFrame, CaptureError>> {
        let mut header = [0u8; 16];
        match fill(&mut self.reader, &mut header) {
            Ok(Fill::Full) => {}
            Ok(Fill::Eof) => {
                self.done = true;
                return None;
            }
            Ok(Fill::Partial) => return Some(Err(self.truncated())),
            Err(e) => {
                self.done = true;
                return Some(Err(e.into()));
            }
        }
        let sec = endian.u32(&header[0..4]) as i64;
        let frac = endian.u32(&header[4..8]) as i64;
        let incl = endian.u32(&header[8..12]) as usize;
        let orig = endian.u32(&header[12..16]);
        if incl > MAX_RECORD_LEN {
            return Some(Err(self.malformed(format!("record length {incl} too large"))));
        }
        let mut data = vec![0u8; incl];
        match fill(&mut self.reader, &mut data) {
            Ok(Fill::Full) => {}
            Ok(Fill::Eof) if incl == 0 => {}
            Ok(_) => return Some(Err(self.truncated())),
            Err(e) => {
                self.done = true;
                return Some(Err(e.into()));
            }
        }
        self.offset += 16 + incl as u64;
        self.frames_read += 1;
        let timestamp_us = if nanos {
            sec * 1_000_000 + frac / 1_000
        } else {
            sec * 1_000_000 + frac
        };
        Some(Ok(RawFrame {
            timestamp_us,
            link_type,
            data,
            original_length: orig,
        }))
    }

    fn next_pcapng(&mut self) -> Option<Result<RawFrame, CaptureError>> {
        loop {
            let endian = match &self.format {
                Format::PcapNg { endian, .. } => *endian,
                Format::Pcap { .. } => unreachable!(),
            };
            let mut head = [0u8; 8];
            match fill(&mut self.reader, &mut head) {
                Ok(Fill::Full) => {}
                Ok(Fill::Eof) => {
                    self.done = true;
                    return None;
                }
                Ok(Fill::Partial) => return Some(Err(self.truncated())),
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
            let block_type = endian.u32(&head[0..4]);
            if block_type == PCAPNG_SHB {
                // The length field's byte order is only known after the
                // byte-order magic, so re-read the header from scratch.
                let mut bom = [0u8; 4];
                match fill(&mut self.reader, &mut bom) {
                    Ok(Fill::Full) => {}
                    Ok(_) => return Some(Err(self.truncated())),
                    Err(e) => return Some(Err(e.into())),
                }
                let section_endian = if u32::from_le_bytes(bom) == PCAPNG_BYTE_ORDER {
                    Endian::Little
                } else if u32::from_be_bytes(bom) == PCAPNG_BYTE_ORDER {
                    Endian::Big
                } else {
                    return Some(Err(self.malformed("bad section byte-order magic")));
                };
                let total = section_endian.u32(&head[4..8]) as usize;
                if total < 28 || total % 4 != 0 || total > MAX_RECORD_LEN {
                    return Some(Err(self.malformed(format!("bad section header length {total}"))));
                }
                let mut rest = vec![0u8; total - 12];
                match fill(&mut self.reader, &mut rest) {
                    Ok(Fill::Full) => {}
                    Ok(_) => return Some(Err(self.truncated())),
                    Err(e) => return Some(Err(e.into())),
                }
                self.offset += total as u64;
                self.format = Format::PcapNg {
                    endian: section_endian,
                    interfaces: Vec::new(),
                    last_timestamp_us: 0,
                };
                continue;
            }

            let total = endian.u32(&head[4..8]) as usize;
            if total < 12 || total % 4 != 0 || total > MAX_RECORD_LEN {
                return Some(Err(self.malformed(format!("bad block length {total}"))));
            }
            let mut body = vec![0u8; total - 8];
            match fill(&mut self.reader, &mut body) {
                Ok(Fill::Full) => {}
                Ok(_) => return Some(Err(self.truncated())),
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
            body.truncate(total - 12);
            let block_offset = self.offset;
            self.offset += total as u64;

            match block_type {
                BLOCK_IDB => {
                    if body.len() < 8 {
                        self.offset = block_offset;
                        return Some(Err(self.malformed("short interface description block")));
                    }
                    let link = LinkType::from_linktype(endian.u16(&body[0..2]) as u32);
                    let (resolution, offset_s) = interface_options(endian, &body[8..]);
                    if let Format::PcapNg { interfaces, .. } = &mut self.format {
                        interfaces.push(Interface {
                            link_type: link,
                            resolution,
                            offset_s,
                        });
                    }
                }
                BLOCK_EPB | BLOCK_PB => {
                    if body.len() < 20 {
                        self.offset = block_offset;
                        return Some(Err(self.malformed("short packet block")));
                    }
                    let iface = if block_type == BLOCK_EPB {
                        endian.u32(&body[0..4]) as usize
                    } else {
                        endian.u16(&body[0..2]) as usize
                    };
                    let units = ((endian.u32(&body[4..8]) as u64) << 32) | endian.u32(&body[8..12]) as u64;
                    let cap = endian.u32(&body[12..16]) as usize;
                    let orig = endian.u32(&body[16..20]);
                    if 20 + cap > body.len() {
                        self.offset = block_offset;
                        return Some(Err(self.malformed("packet data exceeds block")));
                    }
                    let Format::PcapNg {
                        interfaces,
                        last_timestamp_us,
                        ..
                    } = &mut self.format
                    else {
                        unreachable!()
                    };
                    let Some(info) = interfaces.get(iface) else {
                        self.offset = block_offset;
                        return Some(Err(self.malformed(format!("unknown interface {iface}"))));
                    };
                    let timestamp_us = info.resolution.to_micros(units) + info.offset_s * 1_000_000;
                    *last_timestamp_us = timestamp_us;
                    let link_type = info.link_type;
                    self.frames_read += 1;
                    return Some(Ok(RawFrame {
                        timestamp_us,
                        link_type,
                        data: body[20..20 + cap].to_vec(),
                        original_length: orig,
                    }));
                }
                BLOCK_SPB => {
                    if body.len() < 4 {
                        self.offset = block_offset;
                        return Some(Err(self.malformed("short simple packet block")));
                    }
                    let orig = endian.u32(&body[0..4]);
                    let cap = (orig as usize).min(body.len() - 4);
                    let Format::PcapNg {
                        interfaces,
                        last_timestamp_us,
                        ..
                    } = &self.format
                    else {
                        unreachable!()
                    };
                    let Some(info) = interfaces.first() else {
                        self.offset = block_offset;
                        return Some(Err(self.malformed("simple packet block before any interface")));
                    };
                    // Simple packet blocks carry no timestamp; reuse the last one seen.
                    let frame = RawFrame {
                        timestamp_us: *last_timestamp_us,
                        link_type: info.link_type,
                        data: body[4..4 + cap].to_vec(),
                        original_length: orig,
                    };
                    self.frames_read += 1;
                    return Some(Ok(frame));
                }
                _ => {}
            }
        }
    }
}

fn interface_options(endian: Endian, mut opts: &[u8]) -> (Resolution, i64) {
    let mut resolution = Resolution::Decimal(6);
    let mut offset_s = 0;
    while opts.len() >= 4 {
        let code = endian.u16(&opts[0..2]);
        let len = endian.u16(&opts[2..4]) as usize;
        let padded = (len + 3) & !3;
        if opts.len() < 4 + len {
            break;
        }
        let value = &opts[4..4 + len];
        match code {
            0 => break,
            9 if len >= 1 => {
                let v = value[0];
                resolution = if v & 0x80 == 0 {
                    Resolution::Decimal(v)
                } else {
                    Resolution::Binary(v & 0x7F)
                };
            }
            14 if len >= 8 => offset_s = endian.i64(value),
            _ => {}
        }
        opts = &opts[(4 + padded).min(opts.len())..];
    }
    (resolution, offset_s)
}

impl<R: Read> Iterator for CaptureReader<R> {
    type Item = Result<RawFrame, CaptureError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.format {
            Format::Pcap {
                endian,
                nanos,
                link_type,
            } => self.next_pcap(endian, nanos, link_type),
            Format::PcapNg { .. } => self.next_pcapng(),
        }
    }
}

/// Serialises frames as a little-endian microsecond PCAP file.
pub fn write_pcap(frames: &[RawFrame], link_type: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + frames.iter().map(|f| 16 + f.data.len()).sum::<usize>());
    out.extend_from_slice(&PCAP_MAGIC_US.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&0i32.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&65535u32.to_le_bytes());
    out.extend_from_slice(&link_type.to_le_bytes());
    for f in frames {
        let sec = f.timestamp_us.div_euclid(1_000_000) as u32;
        let usec = f.timestamp_us.rem_euclid(1_000_000) as u32;
        out.extend_from_slice(&sec.to_le_bytes());
        out.extend_from_slice(&usec.to_le_bytes());
        out.extend_from_slice(&(f.data.len() as u32).to_le_bytes());
        out.extend_from_slice(&f.original_length.to_le_bytes());
        out.extend_from_slice(&f.data);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(ts: i64, data: &[u8]) -> RawFrame {
        RawFrame {
            timestamp_us: ts,
            link_type: LinkType::Ethernet,
            data: data.to_vec(),
            original_length: data.len() as u32,
        }
    }

    #[test]
    fn empty_pcap_yields_no_frames() {
        let bytes = write_pcap(&[], 1);
        let cap = read_capture(&bytes[..]).unwrap();
        assert_eq!(cap.format, CaptureFormat::Pcap);
        assert!(cap.frames.is_empty());
        assert!(cap.truncated.is_none());
    }

    #[test]
    fn random_bytes_are_unknown_magic() {
        let bytes = [0x13u8, 0x37, 0xBE, 0xEF, 1, 2, 3, 4, 5, 6, 7, 8];
        assert!(matches!(read_capture(&bytes[..]), Err(CaptureError::UnknownMagic(_))));
        assert!(matches!(read_capture(&[][..]), Err(CaptureError::UnknownMagic(0))));
    }

    #[test]
    fn pcap_round_trip_preserves_order_and_time() {
        let frames = vec![
            frame(1_000_000, &[1, 2, 3]),
            frame(1_000_500, &[4]),
            frame(2_000_000, &[]),
        ];
        let cap = read_capture(&write_pcap(&frames, 1)[..]).unwrap();
        assert_eq!(cap.frames, frames);
    }

    #[test]
    fn truncated_record_keeps_earlier_frames() {
        let frames = vec![frame(10, &[0; 30]), frame(20, &[0; 30])];
        let mut bytes = write_pcap(&frames, 1);
        bytes.truncate(bytes.len() - 5);
        let cap = read_capture(&bytes[..]).unwrap();
        assert_eq!(cap.frames.len(), 1);
        let notice = cap.truncated.unwrap();
        assert_eq!(notice.frames_read, 1);
        assert_eq!(notice.offset, 24 + 16 + 30);
    }

    #[test]
    fn big_endian_nanosecond_header() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&PCAP_MAGIC_NS.to_be_bytes());
        bytes.extend_from_slice(&2u16.to_be_bytes());
        bytes.extend_from_slice(&4u16.to_be_bytes());
        bytes.extend_from_slice(&[0; 8]);
        bytes.extend_from_slice(&65535u32.to_be_bytes());
        bytes.extend_from_slice(&101u32.to_be_bytes());
        bytes.extend_from_slice(&7u32.to_be_bytes());
        bytes.extend_from_slice(&123_456_789u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&[0xAA, 0xBB]);
        let cap = read_capture(&bytes[..]).unwrap();
        assert_eq!(cap.frames.len(), 1);
        assert_eq!(cap.frames[0].timestamp_us, 7_123_456);
        assert_eq!(cap.frames[0].link_type, LinkType::RawIp);
    }

    fn le_block(block_type: u32, body: &[u8]) -> Vec<u8> {
        let padded = (body.len() + 3) & !3;
        let total = (12 + padded) as u32;
        let mut out = Vec::new();
        out.extend_from_slice(&block_type.to_le_bytes());
        out.extend_from_slice(&total.to_le_bytes());
        out.extend_from_slice(body);
        out.resize(8 + padded, 0);
        out.extend_from_slice(&total.to_le_bytes());
        out
    }

    #[test]
    fn pcapng_with_custom_resolution_and_simple_block() {
        let mut shb = Vec::new();
        shb.extend_from_slice(&PCAPNG_BYTE_ORDER.to_le_bytes());
        shb.extend_from_slice(&1u16.to_le_bytes());
        shb.extend_from_slice(&0u16.to_le_bytes());
        shb.extend_from_slice(&(-1i64).to_le_bytes());
        let mut idb = Vec::new();
        idb.extend_from_slice(&1u16.to_le_bytes());
        idb.extend_from_slice(&0u16.to_le_bytes());
        idb.extend_from_slice(&0u32.to_le_bytes());
        // if_tsresol = 9 (nanoseconds)
        idb.extend_from_slice(&9u16.to_le_bytes());
        idb.extend_from_slice(&1u16.to_le_bytes());
        idb.extend_from_slice(&[9, 0, 0, 0]);
        idb.extend_from_slice(&[0, 0, 0, 0]);
        let ts_ns: u64 = 1_500_000_000_123_456_789;
        let mut epb = Vec::new();
        epb.extend_from_slice(&0u32.to_le_bytes());
        epb.extend_from_slice(&((ts_ns >> 32) as u32).to_le_bytes());
        epb.extend_from_slice(&(ts_ns as u32).to_le_bytes());
        epb.extend_from_slice(&3u32.to_le_bytes());
        epb.extend_from_slice(&3u32.to_le_bytes());
        epb.extend_from_slice(&[1, 2, 3]);
        let mut spb = Vec::new();
        spb.extend_from_slice(&2u32.to_le_bytes());
        spb.extend_from_slice(&[9, 9]);

        let mut bytes = le_block(PCAPNG_SHB, &shb);
        bytes.extend(le_block(BLOCK_IDB, &idb));
        bytes.extend(le_block(0x0000_0BAD, &[1, 2, 3, 4]));
        bytes.extend(le_block(BLOCK_EPB, &epb));
        bytes.extend(le_block(BLOCK_SPB, &spb));

        let cap = read_capture(&bytes[..]).unwrap();
        assert_eq!(cap.format, CaptureFormat::PcapNg);
        assert_eq!(cap.frames.len(), 2);
        assert_eq!(cap.frames[0].timestamp_us, 1_500_000_000_123_456);
        assert_eq!(cap.frames[0].data, vec![1, 2, 3]);
        assert_eq!(cap.frames[1].data, vec![9, 9]);
        assert_eq!(cap.frames[1].timestamp_us, cap.frames[0].timestamp_us);
    }

    #[test]
    fn binary_resolution_conversion() {
        assert_eq!(Resolution::Binary(10).to_micros(1024), 1_000_000);
        assert_eq!(Resolution::Decimal(3).to_micros(5), 5_000);
        assert_eq!(Resolution::Decimal(9).to_micros(5_999), 5);
    }
}

//! Cleartext handshake parsing: ClientHello, ServerHello and Certificate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::record::{
    first_record_start, reassemble, record_header, DirectionStream, CONTENT_ALERT, CONTENT_APPLICATION_DATA,
    CONTENT_CHANGE_CIPHER_SPEC, CONTENT_HANDSHAKE,
};
use super::Fuid;
use crate::flow::{Direction, Session};

const HS_CLIENT_HELLO: u8 = 1;
const HS_SERVER_HELLO: u8 = 2;
const HS_CERTIFICATE: u8 = 11;

const EXT_SERVER_NAME: u16 = 0;
const EXT_SESSION_TICKET: u16 = 35;
const EXT_PRE_SHARED_KEY: u16 = 41;
const EXT_SUPPORTED_VERSIONS: u16 = 43;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TlsVersion {
    Ssl3,
    Tls1_0,
    Tls1_1,
    Tls1_2,
    Tls1_3,
    Unknown,
}

impl TlsVersion {
    pub fn from_wire(v: u16) -> TlsVersion {
        match v {
            0x0300 => TlsVersion::Ssl3,
            0x0301 => TlsVersion::Tls1_0,
            0x0302 => TlsVersion::Tls1_1,
            0x0303 => TlsVersion::Tls1_2,
            0x0304 => TlsVersion::Tls1_3,
            _ => TlsVersion::Unknown,
        }
    }

    /// Ordinal encoding: ssl3 = 0 through tls1_3 = 4, unknown = -1.
    pub fn ordinal(self) -> f64 {
        match self {
            TlsVersion::Ssl3 => 0.0,
            TlsVersion::Tls1_0 => 1.0,
            TlsVersion::Tls1_1 => 2.0,
            TlsVersion::Tls1_2 => 3.0,
            TlsVersion::Tls1_3 => 4.0,
            TlsVersion::Unknown => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TlsVersion::Ssl3 => "ssl3",
            TlsVersion::Tls1_0 => "tls1_0",
            TlsVersion::Tls1_1 => "tls1_1",
            TlsVersion::Tls1_2 => "tls1_2",
            TlsVersion::Tls1_3 => "tls1_3",
            TlsVersion::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HandshakeError {
    #[error("no parseable handshake in TLS records")]
    NoHandshake,
    #[error("malformed {direction:?} handshake at stream offset {offset}")]
    MalformedHandshake { direction: Direction, offset: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClientHello {
    pub legacy_version: u16,
    pub session_id: Vec<u8>,
    pub cipher_suites: Vec<u16>,
    pub sni: Option<String>,
    pub supported_versions: Vec<u16>,
    pub session_ticket_len: Option<usize>,
    pub offers_psk: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ServerHello {
    pub legacy_version: u16,
    pub session_id: Vec<u8>,
    pub cipher_suite: u16,
    pub selected_version: Option<u16>,
    pub accepts_psk: bool,
}

/// Everything the cleartext part of a handshake revealed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Handshake {
    pub client_hello: Option<ClientHello>,
    pub server_hello: Option<ServerHello>,
    /// DER certificates in wire order.
    pub certificates: Vec<Vec<u8>>,
}

impl Handshake {
    /// Negotiated version from the ServerHello, preferring supported_versions.
    pub fn version(&self) -> TlsVersion {
        match &self.server_hello {
            Some(sh) => TlsVersion::from_wire(sh.selected_version.unwrap_or(sh.legacy_version)),
            None => TlsVersion::Unknown,
        }
    }

    pub fn cert_chain_fuid(&self) -> Vec<Fuid> {
        self.certificates.iter().map(|der| Fuid::of_der(der)).collect()
    }

    /// Abbreviated handshake: the server presented no certificate and either
    /// echoed the client's session id, accepted a session ticket, or (TLS 1.3)
    /// accepted a pre-shared key.
    pub fn resumed(&self) -> bool {
        let (Some(ch), Some(sh)) = (&self.client_hello, &self.server_hello) else {
            return false;
        };
        if self.version() == TlsVersion::Tls1_3 {
            return ch.offers_psk && sh.accepts_psk;
        }
        if !self.certificates.is_empty() {
            return false;
        }
        let echoed = !ch.session_id.is_empty() && ch.session_id == sh.session_id;
        let ticket = ch.session_ticket_len.is_some_and(|n| n > 0);
        echoed || ticket
    }
}

/// Parses the client and server handshakes of a session. Records after a
/// ChangeCipherSpec or any application data record are never inspected.
pub fn parse_handshake(session: &Session) -> Result<Handshake, HandshakeError> {
    let client = reassemble(session, Direction::Forward);
    let server = reassemble(session, Direction::Backward);
    let mut hs = Handshake::default();
    for (dir, stream) in [(Direction::Forward, &client), (Direction::Backward, &server)] {
        for (offset, msg_type, body) in handshake_messages(stream) {
            let malformed = HandshakeError::MalformedHandshake { direction: dir, offset };
            match (dir, msg_type) {
                (Direction::Forward, HS_CLIENT_HELLO) if hs.client_hello.is_none() => {
                    hs.client_hello = Some(parse_client_hello(&body).ok_or(malformed)?);
                }
                (Direction::Backward, HS_SERVER_HELLO) if hs.server_hello.is_none() => {
                    hs.server_hello = Some(parse_server_hello(&body).ok_or(malformed)?);
                }
                (Direction::Backward, HS_CERTIFICATE) if hs.certificates.is_empty() => {
                    hs.certificates = parse_certificate_list(&body).ok_or(malformed)?;
                }
                _ => {}
            }
        }
    }
    if hs.client_hello.is_none() && hs.server_hello.is_none() {
        return Err(HandshakeError::NoHandshake);
    }
    Ok(hs)
}

/// Extracts complete handshake messages from the cleartext prefix of a stream
/// as `(stream offset, type, body)`.
fn handshake_messages(stream: &DirectionStream) -> Vec<(usize, u8, Vec<u8>)> {
    let Some(mut pos) = first_record_start(stream) else {
        return Vec::new();
    };
    let bytes = &stream.bytes[..];
    // Handshake payload concatenated across records, with the stream offset
    // of every fragment so messages can be located on the wire.
    let mut fragments: Vec<(usize, &[u8])> = Vec::new();
    while let Some(h) = record_header(&bytes[pos..]) {
        let start = pos + 5;
        let end = start + h.length;
        if end > bytes.len() {
            break;
        }
        match h.content_type {
            CONTENT_HANDSHAKE => fragments.push((start, &bytes[start..end])),
            CONTENT_ALERT => {}
            CONTENT_CHANGE_CIPHER_SPEC | CONTENT_APPLICATION_DATA => break,
            _ => break,
        }
        pos = end;
    }

    let joined: Vec<u8> = fragments.iter().flat_map(|(_, f)| f.iter().copied()).collect();
    let offset_of = |i: usize| -> usize {
        let mut seen = 0;
        for (start, frag) in &fragments {
            if i < seen + frag.len() {
                return start + (i - seen);
            }
            seen += frag.len();
        }
        fragments.last().map_or(0, |(s, f)| s + f.len())
    };

    let mut out = Vec::new();
    let mut i = 0;
    while i + 4 <= joined.len() {
        let msg_type = joined[i];
        let len = u32::from_be_bytes([0, joined[i + 1], joined[i + 2], joined[i + 3]]) as usize;
        if i + 4 + len > joined.len() {
            break;
        }
        out.push((offset_of(i), msg_type, joined[i + 4..i + 4 + len].to_vec()));
        i += 4 + len;
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf }
    }

    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.buf.len() < n {
            return None;
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Some(head)
    }

    fn u8(&mut self) -> Option<u8> {
        self.take(1).map(|b| b[0])
    }

    fn u16(&mut self) -> Option<u16> {
        self.take(2).map(|b| u16::from_be_bytes([b[0], b[1]]))
    }

    fn u24(&mut self) -> Option<usize> {
        self.take(3).map(|b| u32::from_be_bytes([0, b[0], b[1], b[2]]) as usize)
    }

    fn vec8(&mut self) -> Option<&'a [u8]> {
        let n = self.u8()? as usize;
        self.take(n)
    }

    fn vec16(&mut self) -> Option<&'a [u8]> {
        let n = self.u16()? as usize;
        self.take(n)
    }

    fn vec24(&mut self) -> Option<&'a [u8]> {
        let n = self.u24()?;
        self.take(n)
    }

    fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }
}

fn extensions(r: &mut Reader<'_>) -> Option<Vec<(u16, Vec<u8>)>> {
    if r.is_empty() {
        return Some(Vec::new());
    }
    let mut exts = Reader::new(r.vec16()?);
    let mut out = Vec::new();
    while !exts.is_empty() {
        let t = exts.u16()?;
        let body = exts.vec16()?;
        out.push((t, body.to_vec()));
    }
    Some(out)
}

pub fn parse_client_hello(body: &[u8]) -> Option<ClientHello> {
    let mut r = Reader::new(body);
    let legacy_version = r.u16()?;
    r.take(32)?;
    let session_id = r.vec8()?.to_vec();
    let suites = r.vec16()?;
    if suites.len() % 2 != 0 {
        return None;
    }
    let cipher_suites = suites
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    r.vec8()?;
    let mut ch = ClientHello {
        legacy_version,
        session_id,
        cipher_suites,
        ..ClientHello::default()
    };
    for (t, ext) in extensions(&mut r)? {
        match t {
            EXT_SERVER_NAME => {
                let mut list = Reader::new(&ext);
                let mut names = Reader::new(list.vec16()?);
                while !names.is_empty() {
                    let kind = names.u8()?;
                    let name = names.vec16()?;
                    if kind == 0 && ch.sni.is_none() {
                        ch.sni = Some(String::from_utf8_lossy(name).into_owned());
                    }
                }
            }
            EXT_SUPPORTED_VERSIONS => {
                let mut er = Reader::new(&ext);
                let list = er.vec8()?;
                ch.supported_versions = list.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
            }
            EXT_SESSION_TICKET => ch.session_ticket_len = Some(ext.len()),
            EXT_PRE_SHARED_KEY => ch.offers_psk = true,
            _ => {}
        }
    }
    Some(ch)
}

pub fn parse_server_hello(body: &[u8]) -> Option<ServerHello> {
    let mut r = Reader::new(body);
    let legacy_version = r.u16()?;
    r.take(32)?;
    let session_id = r.vec8()?.to_vec();
    let cipher_suite = r.u16()?;
    r.u8()?;
    let mut sh = ServerHello {
        legacy_version,
        session_id,
        cipher_suite,
        ..ServerHello::default()
    };
    for (t, ext) in extensions(&mut r)? {
        match t {
            EXT_SUPPORTED_VERSIONS if ext.len() == 2 => {
                sh.selected_version = Some(u16::from_be_bytes([ext[0], ext[1]]));
            }
            EXT_PRE_SHARED_KEY => sh.accepts_psk = true,
            _ => {}
        }
    }
    Some(sh)
}

pub fn parse_certificate_list(body: &[u8]) -> Option<Vec<Vec<u8>>> {
    let mut r = Reader::new(body);
    let mut list = Reader::new(r.vec24()?);
    let mut certs = Vec::new();
    while !list.is_empty() {
        certs.push(list.vec24()?.to_vec());
    }
    Some(certs)
}

//! TLS session inspection producing linked conn/ssl/x509 records.
//!
//! A session's connection summary, its handshake metadata and the
//! certificates it carried are kept as three record kinds joined by a
//! connection uid and per-certificate fuids, mirroring the usual
//! conn/ssl/x509 log layout of passive network monitors.

mod handshake;
mod logs;
mod record;
mod x509;

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use handshake::{
    parse_certificate_list, parse_client_hello, parse_handshake, parse_server_hello, ClientHello, Handshake,
    HandshakeError, ServerHello, TlsVersion,
};
pub use logs::{
    link_records, write_conn_log, write_ssl_log, write_x509_log, ConnRecord, ConnectionBundle, LinkError, SslRecord,
};
pub use record::{
    detect_tls, first_record_start, reassemble, record_header, DirectionStream, RecordHeader, TlsDetection,
    MAX_RECORD_LENGTH,
};
pub use x509::{parse_certificate, BadCertificate, X509Record};

use crate::flow::Session;

/// Connection identifier shared by a conn record and its ssl record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Uid(pub String);

impl Uid {
    /// Deterministic uid for a session; `context` distinguishes captures and
    /// session positions within a run.
    pub fn derive(context: &str, session: &Session) -> Uid {
        let mut h = Sha256::new();
        h.update(context.as_bytes());
        h.update(session.key.to_string().as_bytes());
        h.update(session.start_time_us.to_le_bytes());
        h.update(session.initiator.to_string().as_bytes());
        Uid(format!("C{}", &hex::encode(h.finalize())[..17]))
    }
}

impl fmt::Display for Uid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Certificate identifier: a digest of the DER bytes, so the same
/// certificate seen in many sessions shares one id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fuid(pub String);

impl Fuid {
    pub fn of_der(der: &[u8]) -> Fuid {
        let digest = Sha256::digest(der);
        Fuid(format!("F{}", &hex::encode(digest)[..20]))
    }
}

impl fmt::Display for Fuid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Shared certificate table. Each DER is parsed once; concurrent inserts of
/// the same certificate keep the first result.
#[derive(Debug, Default)]
pub struct CertStore {
    entries: Mutex<HashMap<Fuid, Result<X509Record, BadCertificate>>>,
}

impl CertStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&self, der: &[u8]) -> Fuid {
        let fuid = Fuid::of_der(der);
        let known = self.entries.lock().expect("cert store poisoned").contains_key(&fuid);
        if !known {
            let parsed = parse_certificate(der);
            self.entries
                .lock()
                .expect("cert store poisoned")
                .entry(fuid.clone())
                .or_insert(parsed);
        }
        fuid
    }

    pub fn get(&self, fuid: &Fuid) -> Option<Result<X509Record, BadCertificate>> {
        self.entries.lock().expect("cert store poisoned").get(fuid).cloned()
    }

    /// Successfully parsed certificates ordered by fuid.
    pub fn records(&self) -> Vec<X509Record> {
        let entries = self.entries.lock().expect("cert store poisoned");
        let mut out: Vec<X509Record> = entries.values().filter_map(|r| r.as_ref().ok().cloned()).collect();
        out.sort_by(|a, b| a.fuid.cmp(&b.fuid));
        out
    }

    /// Certificates that failed to parse, ordered by fuid.
    pub fn failures(&self) -> Vec<(Fuid, BadCertificate)> {
        let entries = self.entries.lock().expect("cert store poisoned");
        let mut out: Vec<(Fuid, BadCertificate)> = entries
            .iter()
            .filter_map(|(k, r)| r.as_ref().err().map(|e| (k.clone(), e.clone())))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

/// Result of inspecting one session.
#[derive(Debug, Clone)]
pub struct SessionInspection {
    pub detection: TlsDetection,
    pub conn: ConnRecord,
    /// Present only for TLS sessions.
    pub handshake: Option<Result<Handshake, HandshakeError>>,
    pub ssl: Option<SslRecord>,
}

/// Runs the encryption gate and, for TLS sessions, the handshake parser.
/// Certificates are interned in `store`.
pub fn inspect_session(session: &Session, uid: Uid, store: &CertStore) -> SessionInspection {
    let detection = detect_tls(session);
    let conn = ConnRecord::from_session(uid.clone(), session);
    if !detection.is_tls {
        return SessionInspection {
            detection,
            conn,
            handshake: None,
            ssl: None,
        };
    }
    let handshake = parse_handshake(session);
    let ssl = handshake.as_ref().ok().map(|hs| {
        let chain: Vec<Fuid> = hs.certificates.iter().map(|der| store.intern(der)).collect();
        SslRecord::from_handshake(uid, hs, chain)
    });
    SessionInspection {
        detection,
        conn,
        handshake: Some(handshake),
        ssl,
    }
}

/// Builds the linked bundle for one inspected session.
pub fn bundle_for(inspection: &SessionInspection, store: &CertStore) -> ConnectionBundle {
    let mut certs = Vec::new();
    let mut missing_certs = Vec::new();
    if let Some(ssl) = &inspection.ssl {
        for fuid in &ssl.cert_chain_fuid {
            match store.get(fuid) {
                Some(Ok(rec)) => certs.push(rec),
                _ => missing_certs.push(fuid.clone()),
            }
        }
    }
    ConnectionBundle {
        conn: inspection.conn.clone(),
        ssl: inspection.ssl.clone(),
        certs,
        missing_certs,
    }
}

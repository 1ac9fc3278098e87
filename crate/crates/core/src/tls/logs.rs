//! conn/ssl/x509 records, their uid/fuid join and tab-separated export.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::handshake::{Handshake, TlsVersion};
use super::{Fuid, Uid, X509Record};
use crate::flow::{Endpoint, Session};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnRecord {
    pub uid: Uid,
    pub client: Endpoint,
    pub server: Endpoint,
    pub start_time_us: i64,
    pub duration_s: f64,
    /// TCP payload bytes sent by the initiator.
    pub client_bytes: u64,
    pub server_bytes: u64,
    pub client_packets: u64,
    pub server_packets: u64,
    pub client_ip_bytes: u64,
    pub server_ip_bytes: u64,
}

impl ConnRecord {
    pub fn from_session(uid: Uid, s: &Session) -> ConnRecord {
        let sum = |it: &mut dyn Iterator<Item = &crate::packet::DecodedPacket>| {
            it.fold((0u64, 0u64, 0u64), |(b, n, ip), p| {
                (b + p.tcp_payload_length() as u64, n + 1, ip + p.ip.total_length as u64)
            })
        };
        let (client_bytes, client_packets, client_ip_bytes) = sum(&mut s.forward());
        let (server_bytes, server_packets, server_ip_bytes) = sum(&mut s.backward());
        ConnRecord {
            uid,
            client: s.initiator,
            server: s.responder(),
            start_time_us: s.start_time_us,
            duration_s: s.duration_s(),
            client_bytes,
            server_bytes,
            client_packets,
            server_packets,
            client_ip_bytes,
            server_ip_bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SslRecord {
    pub uid: Uid,
    pub tls_version: TlsVersion,
    pub sni: Option<String>,
    /// Offered suites in wire order, GREASE values included.
    pub cipher_suites_offered: Vec<u16>,
    pub selected_cipher: Option<u16>,
    pub cert_chain_fuid: Vec<Fuid>,
    pub resumed: bool,
}

impl SslRecord {
    pub fn from_handshake(uid: Uid, hs: &Handshake, cert_chain_fuid: Vec<Fuid>) -> SslRecord {
        SslRecord {
            uid,
            tls_version: hs.version(),
            sni: hs.client_hello.as_ref().and_then(|ch| ch.sni.clone()),
            cipher_suites_offered: hs
                .client_hello
                .as_ref()
                .map(|ch| ch.cipher_suites.clone())
                .unwrap_or_default(),
            selected_cipher: hs.server_hello.as_ref().map(|sh| sh.cipher_suite),
            cert_chain_fuid,
            resumed: hs.resumed(),
        }
    }
}

/// One connection with its TLS metadata and resolved certificate chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionBundle {
    pub conn: ConnRecord,
    pub ssl: Option<SslRecord>,
    /// Certificates resolved from `ssl.cert_chain_fuid`, in chain order.
    pub certs: Vec<X509Record>,
    /// Chain entries with no usable x509 record.
    pub missing_certs: Vec<Fuid>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("duplicate uid {0} in {1} records")]
    DuplicateUid(Uid, &'static str),
}

/// Joins conn, ssl and x509 records on uid and then on fuid. Output is
/// ordered by uid, so it does not depend on the order of the inputs. ssl
/// records without a matching conn record are ignored.
pub fn link_records(
    conns: &[ConnRecord],
    ssls: &[SslRecord],
    certs: &[X509Record],
) -> Result<Vec<ConnectionBundle>, LinkError> {
    let mut conn_by_uid: BTreeMap<&Uid, &ConnRecord> = BTreeMap::new();
    for c in conns {
        if conn_by_uid.insert(&c.uid, c).is_some() {
            return Err(LinkError::DuplicateUid(c.uid.clone(), "conn"));
        }
    }
    let mut ssl_by_uid: HashMap<&Uid, &SslRecord> = HashMap::new();
    for s in ssls {
        if ssl_by_uid.insert(&s.uid, s).is_some() {
            return Err(LinkError::DuplicateUid(s.uid.clone(), "ssl"));
        }
    }
    let cert_by_fuid: HashMap<&Fuid, &X509Record> = certs.iter().map(|c| (&c.fuid, c)).collect();

    Ok(conn_by_uid
        .into_iter()
        .map(|(uid, conn)| {
            let ssl = ssl_by_uid.get(uid).map(|s| (*s).clone());
            let mut resolved = Vec::new();
            let mut missing = Vec::new();
            if let Some(ssl) = &ssl {
                for fuid in &ssl.cert_chain_fuid {
                    match cert_by_fuid.get(fuid) {
                        Some(c) => resolved.push((*c).clone()),
                        None => missing.push(fuid.clone()),
                    }
                }
            }
            ConnectionBundle {
                conn: conn.clone(),
                ssl,
                certs: resolved,
                missing_certs: missing,
            }
        })
        .collect())
}

const UNSET: &str = "-";
const EMPTY: &str = "(empty)";

fn escape(s: &str) -> String {
    if s.is_empty() {
        return EMPTY.to_string();
    }
    s.replace('\\', "\\x5c").replace('\t', "\\x09").replace('\n', "\\x0a")
}

fn list<T: ToString>(items: &[T]) -> String {
    if items.is_empty() {
        EMPTY.to_string()
    } else {
        items
            .iter()
            .map(|i| escape(&i.to_string()).replace(',', "\\x2c"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn header(out: &mut impl Write, path: &str, fields: &[&str]) -> io::Result<()> {
    writeln!(out, "#separator \\x09")?;
    writeln!(out, "#set_separator\t,")?;
    writeln!(out, "#empty_field\t{EMPTY}")?;
    writeln!(out, "#unset_field\t{UNSET}")?;
    writeln!(out, "#path\t{path}")?;
    writeln!(out, "#fields\t{}", fields.join("\t"))
}

fn bool_field(b: bool) -> &'static str {
    if b {
        "T"
    } else {
        "F"
    }
}

pub fn write_conn_log(out: &mut impl Write, conns: &[ConnRecord]) -> io::Result<()> {
    header(
        out,
        "conn",
        &[
            "ts",
            "uid",
            "id.orig_h",
            "id.orig_p",
            "id.resp_h",
            "id.resp_p",
            "duration",
            "orig_bytes",
            "resp_bytes",
            "orig_pkts",
            "resp_pkts",
            "orig_ip_bytes",
            "resp_ip_bytes",
        ],
    )?;
    for c in conns {
        writeln!(
            out,
            "{}.{:06}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{}\t{}\t{}\t{}\t{}\t{}",
            c.start_time_us.div_euclid(1_000_000),
            c.start_time_us.rem_euclid(1_000_000),
            c.uid,
            c.client.addr,
            c.client.port,
            c.server.addr,
            c.server.port,
            c.duration_s,
            c.client_bytes,
            c.server_bytes,
            c.client_packets,
            c.server_packets,
            c.client_ip_bytes,
            c.server_ip_bytes
        )?;
    }
    Ok(())
}

pub fn write_ssl_log(out: &mut impl Write, ssls: &[SslRecord]) -> io::Result<()> {
    header(
        out,
        "ssl",
        &[
            "uid",
            "version",
            "server_name",
            "cipher_suites_offered",
            "cipher",
            "resumed",
            "cert_chain_fuids",
        ],
    )?;
    for s in ssls {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.uid,
            s.tls_version.as_str(),
            s.sni.as_deref().map(escape).unwrap_or_else(|| UNSET.into()),
            list(&s.cipher_suites_offered),
            s.selected_cipher.map(|c| c.to_string()).unwrap_or_else(|| UNSET.into()),
            bool_field(s.resumed),
            list(&s.cert_chain_fuid),
        )?;
    }
    Ok(())
}

pub fn write_x509_log(out: &mut impl Write, certs: &[X509Record]) -> io::Result<()> {
    header(
        out,
        "x509",
        &[
            "fuid",
            "certificate.not_valid_before",
            "certificate.not_valid_after",
            "validity_s",
            "certificate.subject",
            "certificate.issuer",
            "subject_cn",
            "certificate.key_length",
            "san.dns",
            "self_signed",
        ],
    )?;
    for c in certs {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            c.fuid,
            c.not_before,
            c.not_after,
            c.validity_s,
            escape(&c.subject),
            escape(&c.issuer),
            c.subject_cn.as_deref().map(escape).unwrap_or_else(|| UNSET.into()),
            c.public_key_bits,
            list(&c.san_dns),
            bool_field(c.self_signed),
        )?;
    }
    Ok(())
}

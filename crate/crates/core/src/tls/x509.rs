//! Certificate field extraction.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use x509_parser::prelude::*;
use x509_parser::public_key::PublicKey;

use super::Fuid;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad certificate: {reason}")]
pub struct BadCertificate {
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct X509Record {
    pub fuid: Fuid,
    /// Seconds since the epoch.
    pub not_before: i64,
    pub not_after: i64,
    pub validity_s: i64,
    pub san_dns: Vec<String>,
    pub subject_cn: Option<String>,
    pub issuer: String,
    pub subject: String,
    pub public_key_bits: u32,
    pub self_signed: bool,
}

pub fn parse_certificate(der: &[u8]) -> Result<X509Record, BadCertificate> {
    let (_, cert) = X509Certificate::from_der(der).map_err(|e| BadCertificate { reason: e.to_string() })?;
    let not_before = cert.validity().not_before.timestamp();
    let not_after = cert.validity().not_after.timestamp();
    let san_dns = match cert.subject_alternative_name() {
        Ok(Some(ext)) => ext
            .value
            .general_names
            .iter()
            .filter_map(|name| match name {
                GeneralName::DNSName(dns) => Some(dns.to_string()),
                _ => None,
            })
            .collect(),
        Ok(None) => Vec::new(),
        Err(e) => {
            return Err(BadCertificate {
                reason: format!("subject alternative name: {e}"),
            })
        }
    };
    let subject_cn = cert
        .subject()
        .iter_common_name()
        .next()
        .and_then(|cn| cn.as_str().ok())
        .map(str::to_owned);
    let public_key_bits = match cert.public_key().parsed() {
        Ok(PublicKey::RSA(rsa)) => significant_bits(rsa.modulus),
        Ok(PublicKey::EC(point)) => point.key_size() as u32,
        Ok(other) => other.key_size() as u32,
        Err(_) => 0,
    };
    let public_key_bits = if public_key_bits == 0 {
        // Unrecognised algorithms (e.g. Ed25519): raw key length.
        cert.public_key().subject_public_key.data.len() as u32 * 8
    } else {
        public_key_bits
    };
    let subject = cert.subject().to_string();
    let issuer = cert.issuer().to_string();
    Ok(X509Record {
        fuid: Fuid::of_der(der),
        not_before,
        not_after,
        validity_s: not_after - not_before,
        san_dns,
        subject_cn,
        self_signed: cert.subject() == cert.issuer(),
        issuer,
        subject,
        public_key_bits,
    })
}

/// Bit length of a big-endian unsigned integer.
fn significant_bits(bytes: &[u8]) -> u32 {
    let trimmed: &[u8] = match bytes.iter().position(|&b| b != 0) {
        Some(i) => &bytes[i..],
        None => return 0,
    };
    (trimmed.len() as u32 - 1) * 8 + (8 - trimmed[0].leading_zeros())
}

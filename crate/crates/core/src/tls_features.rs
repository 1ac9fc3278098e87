//! TLS feature set computed from linked conn/ssl/x509 records.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Label, LabeledRow};
use crate::features::CATALOG_VERSION;
use crate::tls::{ConnectionBundle, Uid, X509Record};

/// Column order of the TLS feature set. Frozen.
pub const FOTS_FEATURES: &[&str] = &[
    "client_payload_bytes",
    "responder_client_bytes_ratio",
    "cert_count",
    "tls_version",
    "sni_in_san_dns",
    "sni_differs_leaf_cn",
    "multiple_subjects",
    "mean_cert_validity",
    "cn_in_san_dns",
    "san_domain_count",
    "mean_san_domains",
    "mean_key_bits",
    "std_key_bits",
    "self_signed_ratio",
    "chain_depth",
    "std_cert_validity",
    "resumed",
    "offered_cipher_count",
    "expired_at_capture",
    "min_key_bits",
    "max_key_bits",
    "sni_present",
];

/// Meaning of each TLS feature, in column order.
pub const FOTS_DEFINITIONS: &[(&str, &str)] = &[
    ("client_payload_bytes", "TCP payload bytes sent by the client"),
    (
        "responder_client_bytes_ratio",
        "server payload bytes divided by client payload bytes; 0 when the client sent none",
    ),
    ("cert_count", "certificates resolved from the chain"),
    (
        "tls_version",
        "negotiated version as ssl3=0, tls1_0=1, tls1_1=2, tls1_2=3, tls1_3=4, unknown=-1",
    ),
    (
        "sni_in_san_dns",
        "1 when the SNI matches a SAN DNS entry of any certificate",
    ),
    (
        "sni_differs_leaf_cn",
        "1 when SNI and the leaf subject CN are both present and do not match",
    ),
    (
        "multiple_subjects",
        "1 when the chain carries more than one distinct subject",
    ),
    ("mean_cert_validity", "mean certificate validity period (days)"),
    (
        "cn_in_san_dns",
        "1 when the leaf subject CN matches one of its own SAN DNS entries",
    ),
    ("san_domain_count", "SAN DNS entries of the leaf certificate"),
    ("mean_san_domains", "mean SAN DNS entry count over certificates"),
    ("mean_key_bits", "mean public key size (bits)"),
    (
        "std_key_bits",
        "population standard deviation of public key size (bits)",
    ),
    (
        "self_signed_ratio",
        "fraction of certificates whose subject equals their issuer",
    ),
    (
        "chain_depth",
        "certificates on the longest issuer-to-subject path, ignoring self links",
    ),
    (
        "std_cert_validity",
        "population standard deviation of validity period (days)",
    ),
    ("resumed", "1 when the handshake resumed an earlier session"),
    (
        "offered_cipher_count",
        "cipher suites offered by the client, GREASE included",
    ),
    (
        "expired_at_capture",
        "1 when any certificate expired before the connection started",
    ),
    ("min_key_bits", "smallest public key size (bits)"),
    ("max_key_bits", "largest public key size (bits)"),
    ("sni_present", "1 when the client sent an SNI"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FotsVector {
    pub bundle_id: Uid,
    pub values: IndexMap<String, f64>,
}

impl FotsVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

fn normalize_host(h: &str) -> String {
    h.trim_end_matches('.').to_ascii_lowercase()
}

/// Hostname match against a certificate name. A leading `*.` matches
/// exactly one left-most label.
pub fn host_matches(host: &str, pattern: &str) -> bool {
    let host = normalize_host(host);
    let pattern = normalize_host(pattern);
    if host.is_empty() || pattern.is_empty() {
        return false;
    }
    match pattern.strip_prefix("*.") {
        Some(suffix) => match host.split_once('.') {
            Some((label, rest)) => !label.is_empty() && rest == suffix,
            None => false,
        },
        None => host == pattern,
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Number of certificates on the longest path where each certificate's
/// issuer is the next one's subject. A self-signed certificate ends a path.
fn chain_depth(certs: &[X509Record]) -> usize {
    fn longest(i: usize, certs: &[X509Record], on_path: &mut [bool]) -> usize {
        let c = &certs[i];
        if c.subject == c.issuer {
            return 1;
        }
        on_path[i] = true;
        let mut best = 0;
        for j in 0..certs.len() {
            if !on_path[j] && certs[j].subject == c.issuer {
                best = best.max(longest(j, certs, on_path));
            }
        }
        on_path[i] = false;
        best + 1
    }
    // Real chains are short; the cap bounds the search on hostile input.
    // Sorting first keeps the result independent of certificate order.
    let mut certs = certs.to_vec();
    certs.sort_by(|a, b| a.fuid.cmp(&b.fuid));
    certs.truncate(MAX_CHAIN_SEARCH);
    let certs = &certs[..];
    let mut on_path = vec![false; certs.len()];
    (0..certs.len())
        .map(|i| longest(i, certs, &mut on_path))
        .max()
        .unwrap_or(0)
}

const MAX_CHAIN_SEARCH: usize = 12;

pub fn compute_fots(b: &ConnectionBundle) -> FotsVector {
    let mut v: IndexMap<String, f64> = FOTS_FEATURES.iter().map(|n| (n.to_string(), 0.0)).collect();
    let mut set = |k: &str, x: f64| *v.get_mut(k).expect("known feature") = x;

    set("client_payload_bytes", b.conn.client_bytes as f64);
    if b.conn.client_bytes > 0 {
        set(
            "responder_client_bytes_ratio",
            b.conn.server_bytes as f64 / b.conn.client_bytes as f64,
        );
    }

    if let Some(ssl) = &b.ssl {
        let certs = &b.certs;
        let leaf = ssl
            .cert_chain_fuid
            .first()
            .and_then(|f| certs.iter().find(|c| &c.fuid == f));
        let sni = ssl.sni.as_deref().filter(|s| !s.is_empty());

        set("tls_version", ssl.tls_version.ordinal());
        set("sni_present", flag(sni.is_some()));
        set("resumed", flag(ssl.resumed));
        set("offered_cipher_count", ssl.cipher_suites_offered.len() as f64);
        set("cert_count", certs.len() as f64);

        if let Some(sni) = sni {
            let in_san = certs.iter().any(|c| c.san_dns.iter().any(|d| host_matches(sni, d)));
            set("sni_in_san_dns", flag(in_san));
            if let Some(cn) = leaf.and_then(|l| l.subject_cn.as_deref()) {
                set("sni_differs_leaf_cn", flag(!host_matches(sni, cn)));
            }
        }
        if let Some(leaf) = leaf {
            set("san_domain_count", leaf.san_dns.len() as f64);
            if let Some(cn) = leaf.subject_cn.as_deref() {
                set("cn_in_san_dns", flag(leaf.san_dns.iter().any(|d| host_matches(cn, d))));
            }
        }
        if !certs.is_empty() {
            let subjects: HashSet<&str> = certs.iter().map(|c| c.subject.as_str()).collect();
            set("multiple_subjects", flag(subjects.len() > 1));

            let days: Vec<f64> = certs.iter().map(|c| c.validity_s as f64 / 86_400.0).collect();
            let (mean_days, std_days) = mean_std(&days);
            set("mean_cert_validity", mean_days);
            set("std_cert_validity", std_days);

            let sans: Vec<f64> = certs.iter().map(|c| c.san_dns.len() as f64).collect();
            set("mean_san_domains", mean_std(&sans).0);

            let bits: Vec<f64> = certs.iter().map(|c| c.public_key_bits as f64).collect();
            let (mean_bits, std_bits) = mean_std(&bits);
            set("mean_key_bits", mean_bits);
            set("std_key_bits", std_bits);
            set("min_key_bits", bits.iter().copied().fold(f64::INFINITY, f64::min));
            set("max_key_bits", bits.iter().copied().fold(f64::NEG_INFINITY, f64::max));

            let self_signed = certs.iter().filter(|c| c.self_signed).count();
            set("self_signed_ratio", self_signed as f64 / certs.len() as f64);
            set("chain_depth", chain_depth(certs) as f64);

            let start_s = b.conn.start_time_us.div_euclid(1_000_000);
            set("expired_at_capture", flag(certs.iter().any(|c| c.not_after < start_s)));
        }
    }

    FotsVector {
        bundle_id: b.conn.uid.clone(),
        values: v,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bundle {0} has no label")]
pub struct UnlabeledBundle(pub Uid);

#[derive(Debug, Clone, PartialEq)]
pub struct FotsDataset {
    pub dataset: Dataset,
    /// Bundles without TLS metadata that were left out.
    pub excluded_count: usize,
}

/// One labeled row per TLS bundle, in input order.
pub fn fots_dataset(
    bundles: &[ConnectionBundle],
    labels: &HashMap<Uid, Label>,
    source_dataset: &str,
) -> Result<FotsDataset, UnlabeledBundle> {
    let mut dataset = Dataset::new(FOTS_FEATURES.iter().map(|s| s.to_string()).collect(), CATALOG_VERSION);
    let mut excluded_count = 0;
    for b in bundles {
        let label = *labels
            .get(&b.conn.uid)
            .ok_or_else(|| UnlabeledBundle(b.conn.uid.clone()))?;
        if b.ssl.is_none() {
            excluded_count += 1;
            continue;
        }
        let v = compute_fots(b);
        dataset.rows.push(LabeledRow {
            session_id: b.conn.uid.0.clone(),
            values: v.values.into_values().collect(),
            label,
            source_dataset: source_dataset.to_string(),
        });
    }
    Ok(FotsDataset {
        dataset,
        excluded_count,
    })
}

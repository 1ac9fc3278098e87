//! Capture file to labeled feature rows.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capture::{CaptureError, CaptureReader, TruncationNotice};
use crate::dataset::{Dataset, Label, LabeledRow};
use crate::features::{compute_features, FeatureCatalog, CATALOG_VERSION};
use crate::filter::{filter_packet, FilterPolicy, FilterStats, Verdict};
use crate::flow::{AssemblyConfig, FlowAssembler, FlowError, SessionSummary, DEFAULT_WINDOW_SIZE};
use crate::packet::decode_packet;
use crate::tls::{bundle_for, inspect_session, CertStore, ConnRecord, ConnectionBundle, SslRecord, Uid};
use crate::tls_features::{compute_fots, FOTS_FEATURES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub window_size: usize,
    pub filter: FilterPolicy,
    pub assembly: AssemblyConfig,
    /// Emit rows only for sessions that pass the TLS gate.
    pub encrypted_only: bool,
    pub label: Label,
    pub source: String,
    /// Per-session labels that replace `label`, keyed by session id.
    #[serde(default)]
    pub label_overrides: HashMap<String, Label>,
}

impl ExtractConfig {
    pub fn new(label: Label, source: impl Into<String>) -> Self {
        ExtractConfig {
            window_size: DEFAULT_WINDOW_SIZE,
            filter: FilterPolicy::default(),
            assembly: AssemblyConfig::default(),
            encrypted_only: true,
            label,
            source: source.into(),
            label_overrides: HashMap::new(),
        }
    }

    fn label_for(&self, uid: &Uid) -> Label {
        self.label_overrides.get(&uid.0).copied().unwrap_or(self.label)
    }
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("{path}: {source}")]
    Capture {
        path: PathBuf,
        #[source]
        source: CaptureError,
    },
    #[error("{path}: {source}")]
    Flow {
        path: PathBuf,
        #[source]
        source: FlowError,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractStats {
    pub frames: usize,
    pub filter: FilterStats,
    pub sessions: usize,
    pub tls_sessions: usize,
    /// TLS sessions whose handshake could not be parsed.
    pub handshake_failures: usize,
    pub truncated: Option<TruncationNotice>,
}

/// Everything extracted from one capture.
#[derive(Debug, Clone)]
pub struct CaptureExtraction {
    /// Full-catalog rows.
    pub features: Dataset,
    /// TLS feature rows for sessions with TLS metadata; same session ids.
    pub fots: Dataset,
    pub bundles: Vec<ConnectionBundle>,
    pub conns: Vec<ConnRecord>,
    pub ssls: Vec<SslRecord>,
    pub sessions: Vec<SessionSummary>,
    pub stats: ExtractStats,
}

pub fn full_columns(window_size: usize) -> Vec<String> {
    FeatureCatalog::full().columns(window_size)
}

/// Reads, decodes, filters and assembles one capture, then inspects and
/// featurizes every session. `context` feeds session ids and must differ
/// between captures of one run.
pub fn extract_capture(
    path: &Path,
    context: &str,
    config: &ExtractConfig,
    certs: &CertStore,
) -> Result<CaptureExtraction, ExtractError> {
    let cap_err = |source| ExtractError::Capture {
        path: path.to_path_buf(),
        source,
    };
    let flow_err = |source| ExtractError::Flow {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(|e| cap_err(CaptureError::Io(e)))?;
    let reader = CaptureReader::new(BufReader::new(file)).map_err(cap_err)?;

    let mut stats = ExtractStats::default();
    let mut packets = Vec::new();
    for item in reader {
        let frame = match item {
            Ok(f) => f,
            Err(CaptureError::Truncated { offset, frames_read }) => {
                log::warn!(
                    "{}: truncated at byte {offset} after {frames_read} frames",
                    path.display()
                );
                stats.truncated = Some(TruncationNotice { offset, frames_read });
                break;
            }
            Err(e) => return Err(cap_err(e)),
        };
        stats.frames += 1;
        let decoded = decode_packet(&frame);
        let verdict = filter_packet(&decoded, &config.filter);
        stats.filter.record(&decoded, verdict);
        if let (Verdict::Keep, Ok(p)) = (verdict, decoded) {
            packets.push(p);
        }
    }

    packets.sort_by_key(|p| p.timestamp_us);
    let mut assembler = FlowAssembler::new(config.assembly);
    for p in packets {
        assembler.push(p).map_err(flow_err)?;
    }
    let sessions = assembler.finish();
    stats.sessions = sessions.len();

    let columns = full_columns(config.window_size);
    let mut features = Dataset::new(columns, CATALOG_VERSION);
    let mut fots = Dataset::new(FOTS_FEATURES.iter().map(|s| s.to_string()).collect(), CATALOG_VERSION);
    let mut out = CaptureExtraction {
        features: Dataset::new(Vec::new(), CATALOG_VERSION),
        fots: Dataset::new(Vec::new(), CATALOG_VERSION),
        bundles: Vec::new(),
        conns: Vec::new(),
        ssls: Vec::new(),
        sessions: Vec::with_capacity(sessions.len()),
        stats: ExtractStats::default(),
    };

    for (ordinal, s) in sessions.iter().enumerate() {
        let uid = Uid::derive(&format!("{context}#{ordinal}"), s);
        let inspection = inspect_session(s, uid.clone(), certs);
        out.sessions.push(s.summary());
        out.conns.push(inspection.conn.clone());
        let is_tls = inspection.detection.is_tls;
        if is_tls {
            stats.tls_sessions += 1;
            if matches!(inspection.handshake, Some(Err(_))) {
                stats.handshake_failures += 1;
            }
        }
        if let Some(ssl) = &inspection.ssl {
            out.ssls.push(ssl.clone());
        }
        if config.encrypted_only && !is_tls {
            continue;
        }
        let label = config.label_for(&uid);
        let v = compute_features(s, config.window_size).map_err(flow_err)?;
        features.rows.push(LabeledRow {
            session_id: uid.0.clone(),
            values: v.values.into_values().collect(),
            label,
            source_dataset: config.source.clone(),
        });
        if is_tls {
            let bundle = bundle_for(&inspection, certs);
            if bundle.ssl.is_some() {
                fots.rows.push(LabeledRow {
                    session_id: uid.0.clone(),
                    values: compute_fots(&bundle).values.into_values().collect(),
                    label,
                    source_dataset: config.source.clone(),
                });
            }
            out.bundles.push(bundle);
        }
    }
    out.features = features;
    out.fots = fots;
    out.stats = stats;
    Ok(out)
}

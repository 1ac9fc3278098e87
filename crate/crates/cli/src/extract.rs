use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use encdetect_core::dataset::{Dataset, Label};
use encdetect_core::features::CATALOG_VERSION;
use encdetect_core::flow::{AssemblyConfig, DEFAULT_IDLE_TIMEOUT_S, DEFAULT_WINDOW_SIZE};
use encdetect_core::pipeline::{extract_capture, full_columns, CaptureExtraction, ExtractConfig};
use encdetect_core::tls::{write_conn_log, write_ssl_log, write_x509_log, CertStore};
use encdetect_core::tls_features::FOTS_FEATURES;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::resolve;
use crate::output::{digest, manifest_beside, write_dataset, write_manifest, ManifestParts};
use crate::CliError;

#[derive(Args, Debug, Serialize)]
pub struct ExtractArgs {
    /// Capture files (pcap or pcapng).
    #[arg(value_name = "PCAP")]
    inputs: Vec<PathBuf>,
    /// Label for every session of these captures.
    #[arg(long, value_parser = ["0", "1"])]
    label: Option<String>,
    /// Name recorded in the source_dataset column.
    #[arg(long)]
    source: Option<String>,
    /// Packets per session in the packet-feature window.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write TLS handshake and certificate features here.
    #[arg(long)]
    fots_out: Option<PathBuf>,
    /// Write conn.log, ssl.log and x509.log into this directory.
    #[arg(long)]
    logs_dir: Option<PathBuf>,
    /// CSV of session_id,label overriding --label per session.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Emit rows for sessions that fail the TLS gate as well.
    #[arg(long)]
    include_plaintext: bool,
    #[arg(long)]
    idle_timeout: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

fn default_window() -> usize {
    DEFAULT_WINDOW_SIZE
}

fn default_idle() -> f64 {
    DEFAULT_IDLE_TIMEOUT_S
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtractRun {
    inputs: Vec<PathBuf>,
    #[serde(deserialize_with = "label_from_any")]
    label: Label,
    source: String,
    #[serde(default = "default_window")]
    window: usize,
    out: PathBuf,
    #[serde(default)]
    fots_out: Option<PathBuf>,
    #[serde(default)]
    logs_dir: Option<PathBuf>,
    #[serde(default)]
    labels: Option<PathBuf>,
    #[serde(default)]
    include_plaintext: bool,
    #[serde(default = "default_idle")]
    idle_timeout: f64,
}

/// Accepts 0/1 as a number or a string.
fn label_from_any<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Label, D::Error> {
    let v = serde_json::Value::deserialize(d)?;
    let text = match &v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    text.parse().map_err(serde::de::Error::custom)
}

fn read_label_sidecar(path: &Path) -> anyhow::Result<HashMap<String, Label>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rdr = csv::Reader::from_reader(f);
    let headers = rdr
        .headers()
        .with_context(|| format!("reading {}", path.display()))?
        .clone();
    let id = headers.iter().position(|h| h == "session_id");
    let label = headers.iter().position(|h| h == "label");
    let (Some(id), Some(label)) = (id, label) else {
        anyhow::bail!("{}: needs session_id and label columns", path.display());
    };
    let mut out = HashMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("reading {}", path.display()))?;
        let l: Label = rec[label]
            .parse()
            .with_context(|| format!("{}: row {}", path.display(), line + 2))?;
        out.insert(rec[id].to_string(), l);
    }
    Ok(out)
}

fn write_log(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w).with_context(|| format!("writing {}", path.display()))
}

pub fn run(args: ExtractArgs) -> Result<(), CliError> {
    let cfg: ExtractRun = resolve(args.config.as_deref(), &args)?;
    if cfg.window == 0 {
        return Err(CliError::Usage("--window must be at least 1".into()));
    }
    if !(cfg.idle_timeout > 0.0) {
        return Err(CliError::Usage("--idle-timeout must be positive".into()));
    }
    let mut extract = ExtractConfig::new(cfg.label, cfg.source.clone());
    extract.window_size = cfg.window;
    extract.encrypted_only = !cfg.include_plaintext;
    extract.assembly = AssemblyConfig {
        idle_timeout_s: cfg.idle_timeout,
    };
    if let Some(path) = &cfg.labels {
        extract.label_overrides = read_label_sidecar(path)?;
    }

    let digests = cfg
        .inputs
        .iter()
        .map(|p| digest(p))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let certs = CertStore::new();
    let results: Vec<anyhow::Result<CaptureExtraction>> = cfg
        .inputs
        .par_iter()
        .zip(&digests)
        .enumerate()
        .map(|(i, (path, d))| {
            let context = format!("{i}:{}", &d.sha256[..12]);
            extract_capture(path, &context, &extract, &certs).map_err(anyhow::Error::from)
        })
        .collect();

    let mut features = Dataset::new(full_columns(cfg.window), CATALOG_VERSION);
    let mut fots = Dataset::new(FOTS_FEATURES.iter().map(|s| s.to_string()).collect(), CATALOG_VERSION);
    let mut conns = Vec::new();
    let mut ssls = Vec::new();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in results {
        let x = r?;
        if let Some(t) = &x.stats.truncated {
            log::warn!("capture truncated at byte {} after {} frames", t.offset, t.frames_read);
        }
        *counts.entry("frames".into()).or_default() += x.stats.frames;
        *counts.entry("sessions".into()).or_default() += x.stats.sessions;
        *counts.entry("tls_sessions".into()).or_default() += x.stats.tls_sessions;
        *counts.entry("handshake_failures".into()).or_default() += x.stats.handshake_failures;
        *counts.entry("truncated_captures".into()).or_default() += usize::from(x.stats.truncated.is_some());
        features.rows.extend(x.features.rows);
        fots.rows.extend(x.fots.rows);
        conns.extend(x.conns);
        ssls.extend(x.ssls);
    }
    counts.insert("rows".into(), features.len());
    log::info!("{} rows from {} sessions", features.len(), counts["sessions"]);

    write_dataset(&cfg.out, &features)?;
    let mut outputs = vec![cfg.out.display().to_string()];
    if let Some(path) = &cfg.fots_out {
        write_dataset(path, &fots)?;
        counts.insert("fots_rows".into(), fots.len());
        outputs.push(path.display().to_string());
    }
    if let Some(dir) = &cfg.logs_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_log(&dir.join("conn.log"), |w| write_conn_log(w, &conns))?;
        write_log(&dir.join("ssl.log"), |w| write_ssl_log(w, &ssls))?;
        write_log(&dir.join("x509.log"), |w| write_x509_log(w, &certs.records()))?;
        for name in ["conn.log", "ssl.log", "x509.log"] {
            outputs.push(dir.join(name).display().to_string());
        }
    }
    let failures = certs.failures();
    if !failures.is_empty() {
        log::warn!("{} certificates could not be parsed", failures.len());
    }
    counts.insert("unparsed_certificates".into(), failures.len());
    write_manifest(
        &manifest_beside(&cfg.out),
        ManifestParts {
            command: "extract",
            config: &cfg,
            seed: None,
            inputs: digests,
            row_counts: counts,
            outputs,
        },
    )?;
    Ok(())
}

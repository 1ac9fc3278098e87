//! Writing outputs and manifests.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use encdetect_core::dataset::{Dataset, InputDigest, Manifest};
use encdetect_core::features::CATALOG_VERSION;
use serde::Serialize;

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_dataset(path: &Path, ds: &Dataset) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    ds.write_csv(&mut w)
        .with_context(|| format!("writing {}", path.display()))?;
    w.flush().with_context(|| format!("writing {}", path.display()))
}

pub fn read_dataset(path: &Path) -> anyhow::Result<Dataset> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Dataset::read_csv(std::io::BufReader::new(f), CATALOG_VERSION)
        .with_context(|| format!("reading {}", path.display()))
}

pub fn digest(path: &Path) -> anyhow::Result<InputDigest> {
    InputDigest::of(path).with_context(|| format!("reading {}", path.display()))
}

/// `<file>.manifest.json` beside a single-file output.
pub fn manifest_beside(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub struct ManifestParts<'a, C: Serialize> {
    pub command: &'a str,
    pub config: &'a C,
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    pub row_counts: BTreeMap<String, usize>,
    pub outputs: Vec<String>,
}

pub fn write_manifest<C: Serialize>(path: &Path, parts: ManifestParts<'_, C>) -> anyhow::Result<()> {
    let m = Manifest {
        tool: "encdetect".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: parts.command.into(),
        config: serde_json::to_value(parts.config).context("serializing config")?,
        seed: parts.seed,
        catalog_version: CATALOG_VERSION.into(),
        inputs: parts.inputs,
        row_counts: parts.row_counts,
        outputs: parts.outputs,
    };
    let mut text = serde_json::to_string_pretty(&m).context("serializing manifest")?;
    text.push('\n');
    write_text(path, &text)
}

//! Protocol-agnostic numeric features and the named feature sets.
//!
//! Session features use every packet of the session. Packet features use the
//! first `window_size` packets, zero-padded, and appear as one column per
//! window position (`ip_length_p01` .. `ip_length_p15`).

mod catalog;
mod session;
mod stats;
mod window;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::{
    packet_column, parse_packet_column, CatalogEntry, FeatureCatalog, FeatureSetName, Granularity, UnknownSet,
    CATALOG_VERSION,
};
pub use stats::{aggregate, aggregate_or_zero, Aggregate, AggregateKind, EmptyInput};
pub use window::{compute_packet_features, PacketRow};

use crate::flow::{truncate_pad, FlowError, Session};

/// Named feature values against a catalog version, in column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: IndexMap<String, f64>,
    pub catalog_version: String,
}

impl FeatureVector {
    pub fn new(catalog_version: impl Into<String>) -> Self {
        FeatureVector {
            values: IndexMap::new(),
            catalog_version: catalog_version.into(),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.values().all(|v| v.is_finite())
    }

    /// Distinct catalog features behind the columns; packet columns of one
    /// feature count once.
    pub fn feature_names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for col in self.values.keys() {
            let name = match parse_packet_column(col) {
                Some((name, _)) if is_packet_feature(name) => name,
                _ => col.as_str(),
            };
            if !out.contains(&name) {
                out.push(name);
            }
        }
        out
    }
}

fn is_packet_feature(name: &str) -> bool {
    FeatureCatalog::full()
        .entries
        .iter()
        .any(|e| e.granularity == Granularity::Packet && e.name == name)
}

/// Session-granularity features in catalog order.
pub fn compute_session_features(s: &Session) -> FeatureVector {
    let mut values = session::session_values(s);
    let mut v = FeatureVector::new(CATALOG_VERSION);
    for e in FeatureCatalog::full().session_entries() {
        let x = values.remove(&e.name).expect("every session entry is computed");
        v.values.insert(e.name.clone(), x);
    }
    v
}

/// Every catalog feature: session features plus the packet window columns.
pub fn compute_features(s: &Session, window_size: usize) -> Result<FeatureVector, FlowError> {
    let session = compute_session_features(s);
    let rows = compute_packet_features(&truncate_pad(s, window_size)?);
    let mut v = FeatureVector::new(CATALOG_VERSION);
    let mut packet_index = 0;
    for e in &FeatureCatalog::full().entries {
        match e.granularity {
            Granularity::Session => {
                v.values.insert(e.name.clone(), session.values[&e.name]);
            }
            Granularity::Packet => {
                for (i, r) in rows.iter().enumerate() {
                    v.values.insert(packet_column(&e.name, i + 1), r.values()[packet_index]);
                }
                packet_index += 1;
            }
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectError {
    #[error(transparent)]
    UnknownSet(#[from] UnknownSet),
    #[error("feature {0:?} missing from the vector")]
    MissingFeature(String),
}

/// Restricts a full vector to a named set. Packet features bring all their
/// window columns.
pub fn select_set(v: &FeatureVector, set: FeatureSetName) -> Result<FeatureVector, SelectError> {
    let Some(members) = set.members() else {
        return Ok(v.clone());
    };
    let mut out = FeatureVector::new(v.catalog_version.clone());
    for &name in members {
        if let Some(x) = v.values.get(name) {
            out.values.insert(name.to_string(), *x);
            continue;
        }
        let mut found = false;
        for (col, x) in &v.values {
            if parse_packet_column(col).is_some_and(|(n, _)| n == name) {
                out.values.insert(col.clone(), *x);
                found = true;
            }
        }
        if !found {
            return Err(SelectError::MissingFeature(name.to_string()));
        }
    }
    Ok(out)
}

/// Column names a set occupies for a given window size.
pub fn set_columns(set: FeatureSetName, window_size: usize) -> Vec<String> {
    let catalog = FeatureCatalog::full();
    match set.members() {
        None => catalog.columns(window_size),
        Some(members) => members
            .iter()
            .flat_map(|&m| match catalog.entry(m).map(|e| e.granularity) {
                Some(Granularity::Packet) => (1..=window_size).map(|i| packet_column(m, i)).collect(),
                _ => vec![m.to_string()],
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::tests::pkt;
    use crate::flow::{assemble, AssemblyConfig};
    use crate::packet::{DecodedPacket, TcpFlags};
    use proptest::prelude::*;

    const C: (u8, u16) = (1, 51000);
    const S: (u8, u16) = (2, 443);

    fn session(packets: Vec<DecodedPacket>) -> Session {
        let mut s = assemble(packets, AssemblyConfig::default()).unwrap();
        assert_eq!(s.len(), 1);
        s.remove(0)
    }

    fn sized(ts: i64, src: (u8, u16), dst: (u8, u16), ip_len: u32) -> DecodedPacket {
        let mut p = pkt(ts, src, dst, TcpFlags::ACK, ip_len - 40);
        p.ip.total_length = ip_len;
        p
    }

    #[test]
    fn ipratio_and_goodput() {
        let s = session(vec![
            sized(0, C, S, 40),
            sized(1_000_000, S, C, 60),
            sized(2_000_000, C, S, 100),
        ]);
        let v = compute_session_features(&s);
        assert_eq!(v.get("ipratio"), Some(2.5));
        assert_eq!(v.get("goodput"), Some(100.0));
        assert_eq!(v.get("flow_duration"), Some(2.0));
        assert_eq!(v.get("source_port"), Some(51000.0));
        assert_eq!(v.get("destination_port"), Some(443.0));
        assert_eq!(v.get("max_fwd_iat"), Some(2.0));
        assert_eq!(v.get("bwd_duration"), Some(0.0));
    }

    #[test]
    fn single_packet_degenerate() {
        let s = session(vec![sized(5, C, S, 52)]);
        let v = compute_session_features(&s);
        assert_eq!(v.get("flow_duration"), Some(0.0));
        assert_eq!(v.get("goodput"), Some(0.0));
        assert_eq!(v.get("ipratio"), Some(1.0));
        for k in [
            "min_fwd_iat",
            "max_fwd_iat",
            "mean_fwd_iat",
            "std_fwd_iat",
            "std_bwd_iat",
            "max_packet_time_delta",
        ] {
            assert_eq!(v.get(k), Some(0.0), "{k}");
        }
        assert!(v.is_finite());
    }

    #[test]
    fn full_vector_matches_catalog_columns() {
        let s = session(vec![sized(0, C, S, 40), sized(10, S, C, 90)]);
        let v = compute_features(&s, 15).unwrap();
        let cols: Vec<&String> = v.values.keys().collect();
        let want = FeatureCatalog::full().columns(15);
        assert_eq!(cols, want.iter().collect::<Vec<_>>());
        assert_eq!(v.get("ratio_to_previous_p02"), Some(90.0 / 40.0));
        assert_eq!(v.get("ip_length_p03"), Some(0.0));
    }

    #[test]
    fn set_cardinalities() {
        let s = session(vec![sized(0, C, S, 40), sized(10, S, C, 90)]);
        let v = compute_features(&s, 15).unwrap();
        for (set, n) in [
            (FeatureSetName::Fos, 14),
            (FeatureSetName::Top10, 10),
            (FeatureSetName::SideChannel, 5),
            (FeatureSetName::TamperResistant, 8),
            (FeatureSetName::TimeBased, 13),
        ] {
            let sel = select_set(&v, set).unwrap();
            assert_eq!(sel.feature_names().len(), n, "{set}");
            let cols: Vec<String> = sel.values.keys().cloned().collect();
            assert_eq!(cols, set_columns(set, 15));
        }
        assert_eq!(select_set(&v, FeatureSetName::SideChannel).unwrap().len(), 75);
        assert_eq!(select_set(&v, FeatureSetName::Full).unwrap(), v);
        assert!(matches!(
            select_set(&v, FeatureSetName::Fots),
            Err(SelectError::MissingFeature(_))
        ));
    }

    #[test]
    fn tamper_resistant_has_no_ports_or_flags() {
        for m in FeatureSetName::TamperResistant.members().unwrap() {
            assert!(!m.contains("port") && !m.contains("flag"), "{m}");
        }
    }

    fn arb_session() -> impl Strategy<Value = Vec<DecodedPacket>> {
        proptest::collection::vec((0i64..5_000_000, any::<bool>(), 20u32..1500, 0u16..3, 0u8..64), 1..40).prop_map(
            |spec| {
                let mut t = 0;
                spec.into_iter()
                    .map(|(dt, fwd, len, win, flags)| {
                        t += dt;
                        let (a, b) = if fwd { (C, S) } else { (S, C) };
                        let mut p = sized(t, a, b, len.max(40));
                        let tcp = p.tcp.as_mut().unwrap();
                        tcp.window = win;
                        // No FIN/RST so the packets stay in one session.
                        tcp.flags = TcpFlags(flags & !(TcpFlags::FIN | TcpFlags::RST));
                        p
                    })
                    .collect()
            },
        )
    }

    fn shifted(ps: &[DecodedPacket], offset: i64) -> Vec<DecodedPacket> {
        ps.iter()
            .cloned()
            .map(|mut p| {
                p.timestamp_us += offset;
                p
            })
            .collect()
    }

    proptest! {
        #[test]
        fn always_finite(ps in arb_session()) {
            let s = session(ps);
            prop_assert!(compute_features(&s, 15).unwrap().is_finite());
        }

        #[test]
        fn time_shift_invariance(ps in arb_session(), offset in -1_000_000_000i64..1_000_000_000) {
            let a = compute_features(&session(ps.clone()), 15).unwrap();
            let b = compute_features(&session(shifted(&ps, offset)), 15).unwrap();
            for (k, x) in &a.values {
                let y = b.values[k];
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{} {} {}", k, x, y);
            }
        }

        #[test]
        fn length_scaling(ps in arb_session(), c in 2u32..5) {
            let scaled: Vec<DecodedPacket> = ps.iter().cloned().map(|mut p| {
                p.ip.total_length *= c;
                p
            }).collect();
            let a = compute_features(&session(ps), 15).unwrap();
            let b = compute_features(&session(scaled), 15).unwrap();
            let c = c as f64;
            for k in ["mean_ip_length", "std_ip_length", "max_ip_length", "median_fwd_packet_length", "std_bwd_packet_length", "ip_length_p01"] {
                prop_assert!((a.values[k] * c - b.values[k]).abs() <= 1e-9 * b.values[k].abs().max(1.0), "{}", k);
            }
            for k in ["ipratio", "ratio_to_previous_p02", "ratio_to_previous_p07"] {
                prop_assert!((a.values[k] - b.values[k]).abs() <= 1e-9 * a.values[k].abs().max(1.0), "{}", k);
            }
        }
    }
}

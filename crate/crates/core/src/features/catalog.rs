//! The versioned list of feature names, their granularity and meaning, and
//! the named feature sets.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::stats::AggregateKind;

pub const CATALOG_VERSION: &str = "encdetect-features/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    /// One value per packet of the fixed window, expanded to one column per position.
    Packet,
    Session,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub granularity: Granularity,
    pub definition: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureCatalog {
    pub version: String,
    pub entries: Vec<CatalogEntry>,
}

/// Per-packet series that session features aggregate.
pub(crate) const SERIES: &[(&str, &str)] = &[
    ("ip_length", "IP total length of every packet (bytes)"),
    ("fwd_packet_length", "IP total length of forward packets (bytes)"),
    ("bwd_packet_length", "IP total length of backward packets (bytes)"),
    ("tcp_payload", "TCP payload length of every packet (bytes)"),
    ("fwd_tcp_payload", "TCP payload length of forward packets (bytes)"),
    ("bwd_tcp_payload", "TCP payload length of backward packets (bytes)"),
    ("ip_header_length", "IP header length of every packet (bytes)"),
    ("fwd_ip_header_length", "IP header length of forward packets (bytes)"),
    ("bwd_ip_header_length", "IP header length of backward packets (bytes)"),
    ("tcp_window", "advertised TCP window of every TCP packet, unscaled"),
    (
        "fwd_tcp_window",
        "advertised TCP window of forward TCP packets, unscaled",
    ),
    (
        "bwd_tcp_window",
        "advertised TCP window of backward TCP packets, unscaled",
    ),
    ("ttl", "IP time to live (hop limit for IPv6) of every packet"),
    (
        "packet_time_delta",
        "gap between consecutive packets in either direction (s)",
    ),
    ("fwd_iat", "gap between consecutive forward packets (s)"),
    ("bwd_iat", "gap between consecutive backward packets (s)"),
];

/// Session features that are not aggregates of a series.
const SCALARS: &[(&str, &str)] = &[
    ("source_port", "transport port of the initiator"),
    ("destination_port", "transport port of the responder"),
    ("flow_duration", "last packet time minus first packet time (s)"),
    (
        "fwd_duration",
        "last minus first forward packet time (s); 0 with fewer than 2 forward packets",
    ),
    (
        "bwd_duration",
        "last minus first backward packet time (s); 0 with fewer than 2 backward packets",
    ),
    ("total_payload", "sum of TCP payload lengths in both directions (bytes)"),
    ("total_fwd_payload", "sum of forward TCP payload lengths (bytes)"),
    ("ipratio", "maximum IP length divided by minimum IP length"),
    (
        "goodput",
        "sum of IP lengths divided by flow_duration (bytes/s); 0 when flow_duration is 0",
    ),
    ("total_bwd_payload", "sum of backward TCP payload lengths (bytes)"),
    ("total_ip_bytes", "sum of IP lengths in both directions (bytes)"),
    ("total_fwd_ip_bytes", "sum of forward IP lengths (bytes)"),
    ("total_bwd_ip_bytes", "sum of backward IP lengths (bytes)"),
    ("packet_count", "number of packets"),
    ("fwd_packet_count", "number of forward packets"),
    ("bwd_packet_count", "number of backward packets"),
    ("down_up_ratio", "backward packet count divided by forward packet count"),
    (
        "packets_per_second",
        "packet_count divided by flow_duration; 0 when flow_duration is 0",
    ),
    (
        "fwd_packets_per_second",
        "fwd_packet_count divided by flow_duration; 0 when flow_duration is 0",
    ),
    (
        "bwd_packets_per_second",
        "bwd_packet_count divided by flow_duration; 0 when flow_duration is 0",
    ),
    ("syn_count", "packets with SYN set"),
    ("fin_count", "packets with FIN set"),
    ("rst_count", "packets with RST set"),
    ("psh_count", "packets with PSH set"),
    ("ack_count", "packets with ACK set"),
    ("urg_count", "packets with URG set"),
    (
        "window_change_count",
        "consecutive same-direction TCP packets whose advertised window differs",
    ),
    ("zero_window_count", "TCP packets advertising a zero window"),
    ("payload_packet_count", "packets carrying TCP payload"),
    ("fwd_payload_packet_count", "forward packets carrying TCP payload"),
    ("bwd_payload_packet_count", "backward packets carrying TCP payload"),
    ("payload_byte_ratio", "total_payload divided by total_ip_bytes"),
];

/// Per-packet features over the fixed window.
pub(crate) const PACKET_FEATURES: &[(&str, &str)] = &[
    ("ip_length", "IP total length (bytes)"),
    ("tcp_payload_length", "TCP payload length (bytes)"),
    ("payload_ratio", "tcp_payload_length divided by ip_length"),
    (
        "ratio_to_previous",
        "ip_length divided by the previous packet's ip_length; 1 for the first packet",
    ),
    (
        "time_delta",
        "time since the previous packet (s); 0 for the first packet",
    ),
];

/// Session-granularity names of the protocol-agnostic sets, in their
/// published order.
const PUBLISHED_SESSION: &[&str] = &[
    "mean_tcp_window",
    "source_port",
    "mean_ip_header_length",
    "max_fwd_iat",
    "mean_bwd_ip_header_length",
    "max_bwd_iat",
    "std_bwd_packet_length",
    "flow_duration",
    "bwd_duration",
    "total_payload",
    "destination_port",
    "std_packet_time_delta",
    "min_packet_time_delta",
    "std_bwd_iat",
    "std_fwd_iat",
    "min_bwd_iat",
    "mean_fwd_iat",
    "mean_bwd_iat",
    "min_fwd_iat",
    "total_fwd_payload",
    "min_tcp_payload",
    "mean_tcp_payload",
    "median_tcp_payload",
    "std_ip_length",
    "ipratio",
    "goodput",
    "max_packet_time_delta",
    "std_fwd_packet_length",
    "max_tcp_payload",
    "mean_ttl",
    "std_ttl",
    "fwd_duration",
];

fn definition_of(name: &str) -> String {
    if let Some((_, d)) = SCALARS.iter().find(|(n, _)| *n == name) {
        return (*d).to_string();
    }
    for kind in AggregateKind::ALL {
        if let Some(series) = name.strip_prefix(kind.prefix()).and_then(|r| r.strip_prefix('_')) {
            if let Some((_, d)) = SERIES.iter().find(|(s, _)| *s == series) {
                return format!("{} of {}", kind.describe(), d);
            }
        }
    }
    unreachable!("catalog name without a definition: {name}")
}

impl FeatureCatalog {
    /// The complete catalog: published session features, then the packet
    /// window features, then the remaining aggregates and counters.
    pub fn full() -> &'static FeatureCatalog {
        static FULL: OnceLock<FeatureCatalog> = OnceLock::new();
        FULL.get_or_init(|| {
            let mut entries: Vec<CatalogEntry> = PUBLISHED_SESSION
                .iter()
                .map(|n| CatalogEntry {
                    name: n.to_string(),
                    granularity: Granularity::Session,
                    definition: definition_of(n),
                })
                .collect();
            entries.extend(PACKET_FEATURES.iter().map(|(n, d)| CatalogEntry {
                name: n.to_string(),
                granularity: Granularity::Packet,
                definition: d.to_string(),
            }));
            let push_session = |name: String, entries: &mut Vec<CatalogEntry>| {
                if !entries
                    .iter()
                    .any(|e| e.granularity == Granularity::Session && e.name == name)
                {
                    entries.push(CatalogEntry {
                        definition: definition_of(&name),
                        name,
                        granularity: Granularity::Session,
                    });
                }
            };
            for (series, _) in SERIES {
                for kind in AggregateKind::ALL {
                    push_session(format!("{}_{}", kind.prefix(), series), &mut entries);
                }
            }
            for (name, _) in SCALARS {
                push_session(name.to_string(), &mut entries);
            }
            FeatureCatalog {
                version: CATALOG_VERSION.to_string(),
                entries,
            }
        })
    }

    pub fn entry(&self, name: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Column names for a given window size, in catalog order.
    pub fn columns(&self, window_size: usize) -> Vec<String> {
        let mut out = Vec::new();
        for e in &self.entries {
            match e.granularity {
                Granularity::Session => out.push(e.name.clone()),
                Granularity::Packet => out.extend((1..=window_size).map(|i| packet_column(&e.name, i))),
            }
        }
        out
    }

    pub fn session_entries(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.iter().filter(|e| e.granularity == Granularity::Session)
    }
}

/// Column name of a packet feature at 1-based window position `index`.
pub fn packet_column(name: &str, index: usize) -> String {
    format!("{name}_p{index:02}")
}

/// Splits a packet column back into its feature name and position.
pub fn parse_packet_column(column: &str) -> Option<(&str, usize)> {
    let (name, pos) = column.rsplit_once("_p")?;
    if pos.is_empty() || !pos.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((name, pos.parse().ok()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureSetName {
    #[serde(rename = "FOS")]
    Fos,
    #[serde(rename = "TOP10")]
    Top10,
    #[serde(rename = "SIDE_CHANNEL")]
    SideChannel,
    #[serde(rename = "TAMPER_RESISTANT")]
    TamperResistant,
    #[serde(rename = "TIME_BASED")]
    TimeBased,
    #[serde(rename = "FOTS")]
    Fots,
    #[serde(rename = "FULL")]
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown feature set {0:?}")]
pub struct UnknownSet(pub String);

impl FeatureSetName {
    /// The five protocol-agnostic sets compared against each other.
    pub const NUMERIC: [FeatureSetName; 5] = [
        FeatureSetName::Fos,
        FeatureSetName::Top10,
        FeatureSetName::SideChannel,
        FeatureSetName::TamperResistant,
        FeatureSetName::TimeBased,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSetName::Fos => "FOS",
            FeatureSetName::Top10 => "TOP10",
            FeatureSetName::SideChannel => "SIDE_CHANNEL",
            FeatureSetName::TamperResistant => "TAMPER_RESISTANT",
            FeatureSetName::TimeBased => "TIME_BASED",
            FeatureSetName::Fots => "FOTS",
            FeatureSetName::Full => "FULL",
        }
    }

    /// Feature names in the set; `None` for FULL, which is every catalog entry.
    pub fn members(self) -> Option<&'static [&'static str]> {
        Some(match self {
            FeatureSetName::Fos => &[
                "mean_tcp_window",
                "source_port",
                "max_fwd_iat",
                "max_bwd_iat",
                "flow_duration",
                "std_bwd_iat",
                "total_fwd_payload",
                "std_ip_length",
                "max_packet_time_delta",
                "std_fwd_packet_length",
                "max_tcp_payload",
                "mean_ttl",
                "std_ttl",
                "fwd_duration",
            ],
            FeatureSetName::Top10 => &[
                "mean_tcp_window",
                "source_port",
                "mean_ip_header_length",
                "max_fwd_iat",
                "mean_bwd_ip_header_length",
                "max_bwd_iat",
                "std_bwd_packet_length",
                "flow_duration",
                "bwd_duration",
                "total_payload",
            ],
            FeatureSetName::SideChannel => &[
                "ip_length",
                "tcp_payload_length",
                "payload_ratio",
                "ratio_to_previous",
                "time_delta",
            ],
            FeatureSetName::TamperResistant => &[
                "flow_duration",
                "total_fwd_payload",
                "min_tcp_payload",
                "mean_tcp_payload",
                "median_tcp_payload",
                "std_ip_length",
                "ipratio",
                "goodput",
            ],
            FeatureSetName::TimeBased => &[
                "source_port",
                "max_fwd_iat",
                "max_bwd_iat",
                "flow_duration",
                "destination_port",
                "std_packet_time_delta",
                "min_packet_time_delta",
                "std_bwd_iat",
                "std_fwd_iat",
                "min_bwd_iat",
                "mean_fwd_iat",
                "mean_bwd_iat",
                "min_fwd_iat",
            ],
            FeatureSetName::Fots => crate::tls_features::FOTS_FEATURES,
            FeatureSetName::Full => return None,
        })
    }
}

impl fmt::Display for FeatureSetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSetName {
    type Err = UnknownSet;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Ok(match norm.as_str() {
            "FOS" => FeatureSetName::Fos,
            "TOP10" | "TOP_10" => FeatureSetName::Top10,
            "SIDE_CHANNEL" => FeatureSetName::SideChannel,
            "TAMPER_RESISTANT" => FeatureSetName::TamperResistant,
            "TIME_BASED" => FeatureSetName::TimeBased,
            "FOTS" => FeatureSetName::Fots,
            "FULL" => FeatureSetName::Full,
            _ => return Err(UnknownSet(s.to_string())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn names_unique_and_large_enough() {
        let cat = FeatureCatalog::full();
        let names: HashSet<_> = cat.entries.iter().map(|e| &e.name).collect();
        assert_eq!(names.len(), cat.entries.len());
        assert!(cat.entries.len() >= 113, "{}", cat.entries.len());
    }

    #[test]
    fn published_names_present_once() {
        let cat = FeatureCatalog::full();
        for set in FeatureSetName::NUMERIC {
            for m in set.members().unwrap() {
                assert_eq!(cat.entries.iter().filter(|e| e.name == *m).count(), 1, "{m}");
            }
        }
    }

    #[test]
    fn packet_column_round_trip() {
        assert_eq!(packet_column("time_delta", 3), "time_delta_p03");
        assert_eq!(parse_packet_column("time_delta_p03"), Some(("time_delta", 3)));
        assert_eq!(parse_packet_column("source_port"), None);
    }

    #[test]
    fn set_names_parse() {
        for s in FeatureSetName::NUMERIC {
            assert_eq!(s.as_str().parse::<FeatureSetName>().unwrap(), s);
        }
        assert!("nope".parse::<FeatureSetName>().is_err());
    }
}

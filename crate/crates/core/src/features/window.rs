//! Per-packet features over the fixed-length window.

use serde::{Deserialize, Serialize};

use crate::flow::FixedSession;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PacketRow {
    pub ip_length: f64,
    pub tcp_payload_length: f64,
    pub payload_ratio: f64,
    pub ratio_to_previous: f64,
    /// Seconds since the previous packet.
    pub time_delta: f64,
}

impl PacketRow {
    /// Values in the order of the packet features in the catalog.
    pub fn values(&self) -> [f64; 5] {
        [
            self.ip_length,
            self.tcp_payload_length,
            self.payload_ratio,
            self.ratio_to_previous,
            self.time_delta,
        ]
    }
}

/// One row per window position; padding rows are all zero.
pub fn compute_packet_features(fs: &FixedSession) -> Vec<PacketRow> {
    let mut prev: Option<(f64, i64)> = None;
    fs.rows
        .iter()
        .map(|r| {
            if r.is_padding {
                return PacketRow::default();
            }
            let ip = r.ip_length as f64;
            let payload = r.tcp_payload_length as f64;
            let (ratio_to_previous, time_delta) = match prev {
                Some((prev_ip, prev_ts)) if prev_ip > 0.0 => (ip / prev_ip, (r.timestamp_us - prev_ts) as f64 / 1e6),
                Some((_, prev_ts)) => (1.0, (r.timestamp_us - prev_ts) as f64 / 1e6),
                None => (1.0, 0.0),
            };
            prev = Some((ip, r.timestamp_us));
            PacketRow {
                ip_length: ip,
                tcp_payload_length: payload,
                payload_ratio: if ip > 0.0 { payload / ip } else { 0.0 },
                ratio_to_previous,
                time_delta,
            }
        })
        .collect()
}

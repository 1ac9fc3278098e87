//! Session-granularity features computed over every packet of a session.

use std::collections::HashMap;

use super::catalog::SERIES;
use super::stats::{aggregate_or_zero, AggregateKind};
use crate::flow::{Direction, Session};
use crate::packet::TcpFlags;

fn seconds(us: i64) -> f64 {
    us as f64 / 1e6
}

fn gaps(times: &[i64]) -> Vec<f64> {
    times.windows(2).map(|w| seconds(w[1] - w[0])).collect()
}

fn span(times: &[i64]) -> f64 {
    match (times.first(), times.last()) {
        (Some(a), Some(b)) if times.len() >= 2 => seconds(b - a),
        _ => 0.0,
    }
}

fn per_second(count: f64, duration: f64) -> f64 {
    if duration > 0.0 {
        count / duration
    } else {
        0.0
    }
}

/// Computes every session-granularity catalog feature, keyed by name.
pub(crate) fn session_values(s: &Session) -> HashMap<String, f64> {
    let mut series: HashMap<&'static str, Vec<f64>> = SERIES.iter().map(|(n, _)| (*n, Vec::new())).collect();
    let mut push = |name: &'static str, v: f64| series.get_mut(name).expect("known series").push(v);

    let mut times = Vec::with_capacity(s.packets.len());
    let mut fwd_times = Vec::new();
    let mut bwd_times = Vec::new();
    let mut last_window: [Option<u16>; 2] = [None, None];
    let mut window_changes = 0u64;
    let mut zero_windows = 0u64;
    let mut flag_counts = [0u64; 6];
    let mut payload_packets = [0u64; 2];

    for sp in &s.packets {
        let p = &sp.packet;
        let fwd = sp.direction == Direction::Forward;
        let d = if fwd { 0 } else { 1 };
        let ip_len = p.ip.total_length as f64;
        let payload = p.tcp_payload_length() as f64;
        let hdr = p.ip.header_length as f64;
        times.push(p.timestamp_us);
        if fwd {
            fwd_times.push(p.timestamp_us);
        } else {
            bwd_times.push(p.timestamp_us);
        }

        push("ip_length", ip_len);
        push(if fwd { "fwd_packet_length" } else { "bwd_packet_length" }, ip_len);
        push("tcp_payload", payload);
        push(if fwd { "fwd_tcp_payload" } else { "bwd_tcp_payload" }, payload);
        push("ip_header_length", hdr);
        push(
            if fwd {
                "fwd_ip_header_length"
            } else {
                "bwd_ip_header_length"
            },
            hdr,
        );
        push("ttl", p.ip.ttl as f64);
        if payload > 0.0 {
            payload_packets[d] += 1;
        }

        if let Some(tcp) = &p.tcp {
            let w = tcp.window as f64;
            push("tcp_window", w);
            push(if fwd { "fwd_tcp_window" } else { "bwd_tcp_window" }, w);
            if tcp.window == 0 {
                zero_windows += 1;
            }
            if last_window[d].is_some_and(|prev| prev != tcp.window) {
                window_changes += 1;
            }
            last_window[d] = Some(tcp.window);
            for (i, flag) in [
                TcpFlags::SYN,
                TcpFlags::FIN,
                TcpFlags::RST,
                TcpFlags::PSH,
                TcpFlags::ACK,
                TcpFlags::URG,
            ]
            .into_iter()
            .enumerate()
            {
                if tcp.flags.contains(flag) {
                    flag_counts[i] += 1;
                }
            }
        }
    }
    series.insert("packet_time_delta", gaps(&times));
    series.insert("fwd_iat", gaps(&fwd_times));
    series.insert("bwd_iat", gaps(&bwd_times));

    let mut out: HashMap<String, f64> = HashMap::new();
    for (name, values) in &series {
        let agg = aggregate_or_zero(values);
        for kind in AggregateKind::ALL {
            out.insert(format!("{}_{}", kind.prefix(), name), agg.get(kind));
        }
    }

    let sum = |name: &str| series[name].iter().sum::<f64>();
    let flow_duration = seconds(s.end_time_us - s.start_time_us);
    let total_ip = sum("ip_length");
    let total_payload = sum("tcp_payload");
    let n = s.packets.len() as f64;
    let n_fwd = fwd_times.len() as f64;
    let n_bwd = bwd_times.len() as f64;
    let ip_agg = aggregate_or_zero(&series["ip_length"]);

    let scalars: [(&'static str, f64); 32] = [
        ("source_port", s.initiator.port as f64),
        ("destination_port", s.responder().port as f64),
        ("flow_duration", flow_duration),
        ("fwd_duration", span(&fwd_times)),
        ("bwd_duration", span(&bwd_times)),
        ("total_payload", total_payload),
        ("total_fwd_payload", sum("fwd_tcp_payload")),
        ("ipratio", if ip_agg.min > 0.0 { ip_agg.max / ip_agg.min } else { 1.0 }),
        ("goodput", per_second(total_ip, flow_duration)),
        ("total_bwd_payload", sum("bwd_tcp_payload")),
        ("total_ip_bytes", total_ip),
        ("total_fwd_ip_bytes", sum("fwd_packet_length")),
        ("total_bwd_ip_bytes", sum("bwd_packet_length")),
        ("packet_count", n),
        ("fwd_packet_count", n_fwd),
        ("bwd_packet_count", n_bwd),
        ("down_up_ratio", if n_fwd > 0.0 { n_bwd / n_fwd } else { 0.0 }),
        ("packets_per_second", per_second(n, flow_duration)),
        ("fwd_packets_per_second", per_second(n_fwd, flow_duration)),
        ("bwd_packets_per_second", per_second(n_bwd, flow_duration)),
        ("syn_count", flag_counts[0] as f64),
        ("fin_count", flag_counts[1] as f64),
        ("rst_count", flag_counts[2] as f64),
        ("psh_count", flag_counts[3] as f64),
        ("ack_count", flag_counts[4] as f64),
        ("urg_count", flag_counts[5] as f64),
        ("window_change_count", window_changes as f64),
        ("zero_window_count", zero_windows as f64),
        ("payload_packet_count", (payload_packets[0] + payload_packets[1]) as f64),
        ("fwd_payload_packet_count", payload_packets[0] as f64),
        ("bwd_payload_packet_count", payload_packets[1] as f64),
        (
            "payload_byte_ratio",
            if total_ip > 0.0 { total_payload / total_ip } else { 0.0 },
        ),
    ];
    out.extend(scalars.into_iter().map(|(k, v)| (k.to_string(), v)));
    out
}

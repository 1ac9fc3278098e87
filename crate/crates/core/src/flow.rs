//! Bidirectional session assembly and fixed-length packet windows.

use std::collections::HashMap;
use std::fmt;
use std::net::IpAddr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::packet::DecodedPacket;

pub const DEFAULT_IDLE_TIMEOUT_S: f64 = 300.0;
pub const DEFAULT_WINDOW_SIZE: usize = 15;

/// Open-flow table size that triggers a sweep of idle flows.
const SWEEP_EVERY: usize = 1 << 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FlowError {
    #[error("packet at {timestamp_us} us has no transport ports")]
    NoTransportPorts { timestamp_us: i64 },
    #[error("window size must be at least 1")]
    InvalidWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Endpoint {
    pub addr: IpAddr,
    pub port: u16,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.addr {
            IpAddr::V4(a) => write!(f, "{a}:{}", self.port),
            IpAddr::V6(a) => write!(f, "[{a}]:{}", self.port),
        }
    }
}

/// Direction-free session identity: the smaller endpoint is always `endpoint_a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowKey {
    pub endpoint_a: Endpoint,
    pub endpoint_b: Endpoint,
    pub protocol: u8,
}

impl FlowKey {
    pub fn new(src: Endpoint, dst: Endpoint, protocol: u8) -> FlowKey {
        let (endpoint_a, endpoint_b) = if src <= dst { (src, dst) } else { (dst, src) };
        FlowKey {
            endpoint_a,
            endpoint_b,
            protocol,
        }
    }
}

impl fmt::Display for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}<->{}/{}", self.endpoint_a, self.endpoint_b, self.protocol)
    }
}

fn source(p: &DecodedPacket) -> Option<Endpoint> {
    p.ports().map(|(sport, _)| Endpoint {
        addr: p.ip.src_addr,
        port: sport,
    })
}

fn destination(p: &DecodedPacket) -> Option<Endpoint> {
    p.ports().map(|(_, dport)| Endpoint {
        addr: p.ip.dst_addr,
        port: dport,
    })
}

/// Canonical key of a packet; `None` when it has no transport ports.
pub fn flow_key(p: &DecodedPacket) -> Option<FlowKey> {
    Some(FlowKey::new(source(p)?, destination(p)?, p.ip.protocol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloseReason {
    Fin,
    Rst,
    Timeout,
    EndOfCapture,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionPacket {
    pub packet: DecodedPacket,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub key: FlowKey,
    /// Source of the first packet seen on the session.
    pub initiator: Endpoint,
    pub packets: Vec<SessionPacket>,
    pub start_time_us: i64,
    pub end_time_us: i64,
    pub close_reason: CloseReason,
}

impl Session {
    pub fn responder(&self) -> Endpoint {
        if self.key.endpoint_a == self.initiator {
            self.key.endpoint_b
        } else {
            self.key.endpoint_a
        }
    }

    pub fn forward(&self) -> impl Iterator<Item = &DecodedPacket> {
        self.in_direction(Direction::Forward)
    }

    pub fn backward(&self) -> impl Iterator<Item = &DecodedPacket> {
        self.in_direction(Direction::Backward)
    }

    pub fn in_direction(&self, dir: Direction) -> impl Iterator<Item = &DecodedPacket> {
        self.packets
            .iter()
            .filter(move |sp| sp.direction == dir)
            .map(|sp| &sp.packet)
    }

    pub fn duration_s(&self) -> f64 {
        (self.end_time_us - self.start_time_us) as f64 / 1e6
    }

    pub fn summary(&self) -> SessionSummary {
        let forward_packets = self.forward().count();
        SessionSummary {
            key: self.key,
            initiator: self.initiator,
            forward_packets,
            backward_packets: self.packets.len() - forward_packets,
            start_time_us: self.start_time_us,
            end_time_us: self.end_time_us,
            close_reason: self.close_reason,
        }
    }
}

/// One line of the optional session dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub key: FlowKey,
    pub initiator: Endpoint,
    pub forward_packets: usize,
    pub backward_packets: usize,
    pub start_time_us: i64,
    pub end_time_us: i64,
    pub close_reason: CloseReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyConfig {
    pub idle_timeout_s: f64,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            idle_timeout_s: DEFAULT_IDLE_TIMEOUT_S,
        }
    }
}

struct OpenFlow {
    ordinal: u64,
    session: Session,
    fin_forward: bool,
    fin_backward: bool,
    closed: Option<CloseReason>,
}

/// Single-writer open-flow table.
///
/// A key closes on FIN from both sides or on RST. After that, bare
/// acknowledgements and resets without payload still attach to the closed
/// session; anything else opens a new one. A gap longer than the idle timeout
/// always opens a new session.
pub struct FlowAssembler {
    idle_timeout_us: i64,
    open: HashMap<FlowKey, OpenFlow>,
    finished: Vec<(u64, Session)>,
    next_ordinal: u64,
    pushes_since_sweep: usize,
}

impl FlowAssembler {
    pub fn new(config: AssemblyConfig) -> Self {
        FlowAssembler {
            idle_timeout_us: (config.idle_timeout_s * 1e6).round() as i64,
            open: HashMap::new(),
            finished: Vec::new(),
            next_ordinal: 0,
            pushes_since_sweep: 0,
        }
    }

    /// Adds a packet. Packets must arrive in non-decreasing timestamp order.
    pub fn push(&mut self, packet: DecodedPacket) -> Result<(), FlowError> {
        let key = flow_key(&packet).ok_or(FlowError::NoTransportPorts {
            timestamp_us: packet.timestamp_us,
        })?;
        let ts = packet.timestamp_us;

        let start_new = match self.open.get(&key) {
            None => true,
            Some(flow) => {
                ts - flow.session.end_time_us > self.idle_timeout_us
                    || (flow.closed.is_some() && !is_teardown_straggler(&packet))
            }
        };

        if start_new {
            if let Some(old) = self.open.remove(&key) {
                let gap = ts - old.session.end_time_us;
                let reason = old.closed.unwrap_or(if gap > self.idle_timeout_us {
                    CloseReason::Timeout
                } else {
                    CloseReason::EndOfCapture
                });
                self.retire(old, reason);
            }
            let initiator = source(&packet).expect("key implies ports");
            let ordinal = self.next_ordinal;
            self.next_ordinal += 1;
            self.open.insert(
                key,
                OpenFlow {
                    ordinal,
                    session: Session {
                        key,
                        initiator,
                        packets: Vec::new(),
                        start_time_us: ts,
                        end_time_us: ts,
                        close_reason: CloseReason::EndOfCapture,
                    },
                    fin_forward: false,
                    fin_backward: false,
                    closed: None,
                },
            );
        }

        let flow = self.open.get_mut(&key).expect("flow just ensured");
        let direction = if source(&packet) == Some(flow.session.initiator) {
            Direction::Forward
        } else {
            Direction::Backward
        };
        if let Some(tcp) = &packet.tcp {
            if tcp.flags.fin() {
                match direction {
                    Direction::Forward => flow.fin_forward = true,
                    Direction::Backward => flow.fin_backward = true,
                }
            }
            if flow.closed.is_none() {
                if tcp.flags.rst() {
                    flow.closed = Some(CloseReason::Rst);
                } else if flow.fin_forward && flow.fin_backward {
                    flow.closed = Some(CloseReason::Fin);
                }
            }
        }
        flow.session.end_time_us = flow.session.end_time_us.max(ts);
        flow.session.packets.push(SessionPacket { packet, direction });

        self.pushes_since_sweep += 1;
        if self.pushes_since_sweep >= SWEEP_EVERY {
            self.pushes_since_sweep = 0;
            self.sweep(ts);
        }
        Ok(())
    }

    fn retire(&mut self, mut flow: OpenFlow, reason: CloseReason) {
        flow.session.close_reason = reason;
        self.finished.push((flow.ordinal, flow.session));
    }

    /// Retires flows that have been idle longer than the timeout at `now`.
    fn sweep(&mut self, now: i64) {
        let timeout = self.idle_timeout_us;
        let stale: Vec<FlowKey> = self
            .open
            .iter()
            .filter(|(_, f)| now - f.session.end_time_us > timeout)
            .map(|(k, _)| *k)
            .collect();
        for key in stale {
            if let Some(flow) = self.open.remove(&key) {
                let reason = flow.closed.unwrap_or(CloseReason::Timeout);
                self.retire(flow, reason);
            }
        }
    }

    /// Closes every remaining flow and returns all sessions ordered by start
    /// time, ties broken by creation order.
    pub fn finish(mut self) -> Vec<Session> {
        let remaining: Vec<OpenFlow> = self.open.drain().map(|(_, f)| f).collect();
        for flow in remaining {
            let reason = flow.closed.unwrap_or(CloseReason::EndOfCapture);
            self.retire(flow, reason);
        }
        self.finished.sort_by_key(|(ordinal, s)| (s.start_time_us, *ordinal));
        self.finished.into_iter().map(|(_, s)| s).collect()
    }
}

fn is_teardown_straggler(p: &DecodedPacket) -> bool {
    match &p.tcp {
        Some(tcp) => !tcp.flags.syn() && tcp.payload_length == 0,
        None => false,
    }
}

/// Groups packets into sessions. Input is stably sorted by timestamp first, so
/// packets with equal timestamps keep their capture order.
pub fn assemble(
    packets: impl IntoIterator<Item = DecodedPacket>,
    config: AssemblyConfig,
) -> Result<Vec<Session>, FlowError> {
    let mut packets: Vec<DecodedPacket> = packets.into_iter().collect();
    packets.sort_by_key(|p| p.timestamp_us);
    let mut assembler = FlowAssembler::new(config);
    for p in packets {
        assembler.push(p)?;
    }
    Ok(assembler.finish())
}

/// One position of a fixed-length packet window. Padding rows are all zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRow {
    pub is_padding: bool,
    pub timestamp_us: i64,
    pub ip_length: u32,
    pub ip_header_length: u32,
    pub tcp_payload_length: u32,
}

impl WindowRow {
    pub const PADDING: WindowRow = WindowRow {
        is_padding: true,
        timestamp_us: 0,
        ip_length: 0,
        ip_header_length: 0,
        tcp_payload_length: 0,
    };
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedSession {
    pub key: FlowKey,
    pub rows: Vec<WindowRow>,
    pub pad_count: usize,
}

/// Keeps the first `window_size` packets of a session and zero-pads the rest.
pub fn truncate_pad(s: &Session, window_size: usize) -> Result<FixedSession, FlowError> {
    if window_size == 0 {
        return Err(FlowError::InvalidWindow);
    }
    let mut rows: Vec<WindowRow> = s
        .packets
        .iter()
        .take(window_size)
        .map(|sp| WindowRow {
            is_padding: false,
            timestamp_us: sp.packet.timestamp_us,
            ip_length: sp.packet.ip.total_length,
            ip_header_length: sp.packet.ip.header_length,
            tcp_payload_length: sp.packet.tcp_payload_length(),
        })
        .collect();
    let pad_count = window_size - rows.len();
    rows.resize(window_size, WindowRow::PADDING);
    Ok(FixedSession {
        key: s.key,
        rows,
        pad_count,
    })
}

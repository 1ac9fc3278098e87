//! Relevance filter applied to decoded frames before session assembly.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::packet::{Decoded, ProtocolId, IPPROTO_TCP, IPPROTO_UDP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportRequirement {
    TcpOnly,
    TcpUdp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub drop_protocols: BTreeSet<ProtocolId>,
    pub require_transport: TransportRequirement,
    pub drop_malformed: bool,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            drop_protocols: [ProtocolId::ARP, ProtocolId::ICMP, ProtocolId::ICMPV6]
                .into_iter()
                .collect(),
            require_transport: TransportRequirement::TcpOnly,
            drop_malformed: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Protocol,
    Malformed,
    Transport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Keep,
    Drop(DropReason),
}

/// Classifies one decoded frame. Undecodable frames are only kept when
/// `drop_malformed` is off, and even then they never reach session assembly.
pub fn filter_packet(packet: &Decoded, policy: &FilterPolicy) -> Verdict {
    match packet {
        Err(undecodable) => match undecodable.protocol {
            Some(proto) if policy.drop_protocols.contains(&proto) => Verdict::Drop(DropReason::Protocol),
            _ if policy.drop_malformed => Verdict::Drop(DropReason::Malformed),
            _ => Verdict::Keep,
        },
        Ok(p) => {
            if policy.drop_protocols.contains(&ProtocolId::IpProtocol(p.ip.protocol)) {
                return Verdict::Drop(DropReason::Protocol);
            }
            match (p.ip.protocol, policy.require_transport) {
                (IPPROTO_TCP, _) => Verdict::Keep,
                (IPPROTO_UDP, TransportRequirement::TcpUdp) => Verdict::Keep,
                _ => Verdict::Drop(DropReason::Transport),
            }
        }
    }
}

/// Per-reason tallies of a filtering pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub kept: usize,
    pub kept_undecodable: usize,
    pub dropped_protocol: usize,
    pub dropped_malformed: usize,
    pub dropped_transport: usize,
}

impl FilterStats {
    pub fn record(&mut self, packet: &Decoded, verdict: Verdict) {
        match verdict {
            Verdict::Keep if packet.is_err() => self.kept_undecodable += 1,
            Verdict::Keep => self.kept += 1,
            Verdict::Drop(DropReason::Protocol) => self.dropped_protocol += 1,
            Verdict::Drop(DropReason::Malformed) => self.dropped_malformed += 1,
            Verdict::Drop(DropReason::Transport) => self.dropped_transport += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.kept + self.kept_undecodable + self.dropped_protocol + self.dropped_malformed + self.dropped_transport
    }
}

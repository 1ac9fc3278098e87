//! Link, network and transport decoding of captured frames.

use std::fmt;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capture::{LinkType, RawFrame};

pub const ETHERTYPE_IPV4: u16 = 0x0800;
pub const ETHERTYPE_ARP: u16 = 0x0806;
pub const ETHERTYPE_IPV6: u16 = 0x86DD;
const ETHERTYPE_VLAN: u16 = 0x8100;
const ETHERTYPE_QINQ: u16 = 0x88A8;

pub const IPPROTO_ICMP: u8 = 1;
pub const IPPROTO_TCP: u8 = 6;
pub const IPPROTO_UDP: u8 = 17;
pub const IPPROTO_ICMPV6: u8 = 58;

/// Identifies a protocol at the link or network layer for filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolId {
    EtherType(u16),
    IpProtocol(u8),
}

impl ProtocolId {
    pub const ARP: ProtocolId = ProtocolId::EtherType(ETHERTYPE_ARP);
    pub const ICMP: ProtocolId = ProtocolId::IpProtocol(IPPROTO_ICMP);
    pub const ICMPV6: ProtocolId = ProtocolId::IpProtocol(IPPROTO_ICMPV6);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Link,
    Network,
    Transport,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::Link => "link",
            Layer::Network => "network",
            Layer::Transport => "transport",
        })
    }
}

/// A frame that could not be decoded into IP traffic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("undecodable frame at {layer} layer: {reason}")]
pub struct Undecodable {
    pub layer: Layer,
    pub reason: String,
    /// Protocol identified before decoding stopped, if any.
    pub protocol: Option<ProtocolId>,
}

impl Undecodable {
    fn new(layer: Layer, reason: impl Into<String>) -> Self {
        Undecodable {
            layer,
            reason: reason.into(),
            protocol: None,
        }
    }

    fn with_protocol(mut self, protocol: ProtocolId) -> Self {
        self.protocol = Some(protocol);
        self
    }
}

/// TCP control flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TcpFlags(pub u8);

impl TcpFlags {
    pub const FIN: u8 = 0x01;
    pub const SYN: u8 = 0x02;
    pub const RST: u8 = 0x04;
    pub const PSH: u8 = 0x08;
    pub const ACK: u8 = 0x10;
    pub const URG: u8 = 0x20;

    pub fn contains(self, flag: u8) -> bool {
        self.0 & flag == flag
    }

    pub fn fin(self) -> bool {
        self.contains(Self::FIN)
    }
    pub fn syn(self) -> bool {
        self.contains(Self::SYN)
    }
    pub fn rst(self) -> bool {
        self.contains(Self::RST)
    }
    pub fn psh(self) -> bool {
        self.contains(Self::PSH)
    }
    pub fn ack(self) -> bool {
        self.contains(Self::ACK)
    }
    pub fn urg(self) -> bool {
        self.contains(Self::URG)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpHeader {
    pub src_addr: IpAddr,
    pub dst_addr: IpAddr,
    pub protocol: u8,
    pub total_length: u32,
    pub header_length: u32,
    pub ttl: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TcpHeader {
    pub src_port: u16,
    pub dst_port: u16,
    pub seq: u32,
    pub ack: u32,
    pub flags: TcpFlags,
    pub window: u16,
    pub header_length: u32,
    pub payload_length: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UdpHeader {
    pub src_port: u16,
    pub dst_port: u16,
    pub payload_length: u32,
}

/// A frame decoded down to its transport header.
///
/// `payload` holds the transport payload for TCP and UDP and the IP payload
/// for every other protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedPacket {
    pub timestamp_us: i64,
    pub link_type: LinkType,
    pub ip: IpHeader,
    pub tcp: Option<TcpHeader>,
    pub udp: Option<UdpHeader>,
    pub payload: Vec<u8>,
}

impl DecodedPacket {
    /// Source and destination ports, when the packet has a transport header.
    pub fn ports(&self) -> Option<(u16, u16)> {
        if let Some(t) = &self.tcp {
            Some((t.src_port, t.dst_port))
        } else {
            self.udp.as_ref().map(|u| (u.src_port, u.dst_port))
        }
    }

    /// TCP payload length, zero for non-TCP packets.
    pub fn tcp_payload_length(&self) -> u32 {
        self.tcp.as_ref().map_or(0, |t| t.payload_length)
    }
}

pub type Decoded = Result<DecodedPacket, Undecodable>;

pub fn decode_packet(frame: &RawFrame) -> Decoded {
    let network = match frame.link_type {
        LinkType::Ethernet => strip_ethernet(&frame.data)?,
        LinkType::RawIp => {
            let version = frame
                .data
                .first()
                .ok_or_else(|| Undecodable::new(Layer::Network, "empty frame"))?
                >> 4;
            match version {
                4 => (ETHERTYPE_IPV4, &frame.data[..]),
                6 => (ETHERTYPE_IPV6, &frame.data[..]),
                v => return Err(Undecodable::new(Layer::Network, format!("IP version {v}"))),
            }
        }
        LinkType::Other(t) => return Err(Undecodable::new(Layer::Link, format!("unsupported link type {t}"))),
    };

    let (ip, body) = match network {
        (ETHERTYPE_IPV4, bytes) => decode_ipv4(bytes)?,
        (ETHERTYPE_IPV6, bytes) => decode_ipv6(bytes)?,
        (other, _) => {
            return Err(
                Undecodable::new(Layer::Network, format!("ethertype {other:#06x} is not IP"))
                    .with_protocol(ProtocolId::EtherType(other)),
            )
        }
    };

    let mut packet = DecodedPacket {
        timestamp_us: frame.timestamp_us,
        link_type: frame.link_type,
        ip,
        tcp: None,
        udp: None,
        payload: Vec::new(),
    };

    match packet.ip.protocol {
        IPPROTO_TCP => {
            let (tcp, payload) = decode_tcp(body).map_err(|e| e.with_protocol(ProtocolId::IpProtocol(IPPROTO_TCP)))?;
            packet.tcp = Some(tcp);
            packet.payload = payload.to_vec();
        }
        IPPROTO_UDP => {
            let (udp, payload) = decode_udp(body).map_err(|e| e.with_protocol(ProtocolId::IpProtocol(IPPROTO_UDP)))?;
            packet.udp = Some(udp);
            packet.payload = payload.to_vec();
        }
        _ => packet.payload = body.to_vec(),
    }
    Ok(packet)
}

fn strip_ethernet(data: &[u8]) -> Result<(u16, &[u8]), Undecodable> {
    if data.len() < 14 {
        return Err(Undecodable::new(Layer::Link, "short ethernet header"));
    }
    let mut ethertype = u16::from_be_bytes([data[12], data[13]]);
    let mut offset = 14;
    while ethertype == ETHERTYPE_VLAN || ethertype == ETHERTYPE_QINQ {
        if data.len() < offset + 4 {
            return Err(Undecodable::new(Layer::Link, "short VLAN tag"));
        }
        ethertype = u16::from_be_bytes([data[offset + 2], data[offset + 3]]);
        offset += 4;
    }
    Ok((ethertype, &data[offset..]))
}

fn decode_ipv4(data: &[u8]) -> Result<(IpHeader, &[u8]), Undecodable> {
    let net = |r: &str| Undecodable::new(Layer::Network, r).with_protocol(ProtocolId::EtherType(ETHERTYPE_IPV4));
    if data.len() < 20 {
        return Err(net("short IPv4 header"));
    }
    if data[0] >> 4 != 4 {
        return Err(net("IPv4 version mismatch"));
    }
    let header_length = ((data[0] & 0x0F) as usize) * 4;
    if header_length < 20 {
        return Err(net("IPv4 header length below 20"));
    }
    let total_length = u16::from_be_bytes([data[2], data[3]]) as usize;
    if total_length < header_length {
        return Err(net("IPv4 total length below header length"));
    }
    if data.len() < total_length {
        return Err(net("frame shorter than IPv4 total length"));
    }
    let flags_frag = u16::from_be_bytes([data[6], data[7]]);
    let more_fragments = flags_frag & 0x2000 != 0;
    let fragment_offset = flags_frag & 0x1FFF;
    let protocol = data[9];
    if more_fragments || fragment_offset != 0 {
        return Err(net("IPv4 fragment").with_protocol(ProtocolId::IpProtocol(protocol)));
    }
    let ip = IpHeader {
        src_addr: IpAddr::V4(Ipv4Addr::new(data[12], data[13], data[14], data[15])),
        dst_addr: IpAddr::V4(Ipv4Addr::new(data[16], data[17], data[18], data[19])),
        protocol,
        total_length: total_length as u32,
        header_length: header_length as u32,
        ttl: data[8],
    };
    // Ethernet padding beyond total_length is discarded here.
    Ok((ip, &data[header_length..total_length]))
}

fn decode_ipv6(data: &[u8]) -> Result<(IpHeader, &[u8]), Undecodable> {
    let net = |r: &str| Undecodable::new(Layer::Network, r).with_protocol(ProtocolId::EtherType(ETHERTYPE_IPV6));
    if data.len() < 40 {
        return Err(net("short IPv6 header"));
    }
    if data[0] >> 4 != 6 {
        return Err(net("IPv6 version mismatch"));
    }
    let payload_length = u16::from_be_bytes([data[4], data[5]]) as usize;
    if payload_length == 0 {
        return Err(net("IPv6 jumbogram or empty payload"));
    }
    let total_length = 40 + payload_length;
    if data.len() < total_length {
        return Err(net("frame shorter than IPv6 payload length"));
    }
    let mut next = data[6];
    let mut offset = 40;
    loop {
        match next {
            // hop-by-hop, routing, destination options
            0 | 43 | 60 => {
                if total_length < offset + 8 {
                    return Err(net("short IPv6 extension header"));
                }
                let len = (data[offset + 1] as usize + 1) * 8;
                if total_length < offset + len {
                    return Err(net("IPv6 extension header overruns packet"));
                }
                next = data[offset];
                offset += len;
            }
            44 => {
                return Err(
                    net("IPv6 fragment").with_protocol(ProtocolId::IpProtocol(data[offset.min(total_length - 1)]))
                )
            }
            _ => break,
        }
    }
    let mut src = [0u8; 16];
    let mut dst = [0u8; 16];
    src.copy_from_slice(&data[8..24]);
    dst.copy_from_slice(&data[24..40]);
    let ip = IpHeader {
        src_addr: IpAddr::V6(Ipv6Addr::from(src)),
        dst_addr: IpAddr::V6(Ipv6Addr::from(dst)),
        protocol: next,
        total_length: total_length as u32,
        header_length: offset as u32,
        ttl: data[7],
    };
    Ok((ip, &data[offset..total_length]))
}

fn decode_tcp(data: &[u8]) -> Result<(TcpHeader, &[u8]), Undecodable> {
    if data.len() < 20 {
        return Err(Undecodable::new(Layer::Transport, "short TCP header"));
    }
    let header_length = ((data[12] >> 4) as usize) * 4;
    if header_length < 20 || header_length > data.len() {
        return Err(Undecodable::new(Layer::Transport, "bad TCP data offset"));
    }
    let tcp = TcpHeader {
        src_port: u16::from_be_bytes([data[0], data[1]]),
        dst_port: u16::from_be_bytes([data[2], data[3]]),
        seq: u32::from_be_bytes([data[4], data[5], data[6], data[7]]),
        ack: u32::from_be_bytes([data[8], data[9], data[10], data[11]]),
        flags: TcpFlags(data[13] & 0x3F),
        window: u16::from_be_bytes([data[14], data[15]]),
        header_length: header_length as u32,
        payload_length: (data.len() - header_length) as u32,
    };
    Ok((tcp, &data[header_length..]))
}

fn decode_udp(data: &[u8]) -> Result<(UdpHeader, &[u8]), Undecodable> {
    if data.len() < 8 {
        return Err(Undecodable::new(Layer::Transport, "short UDP header"));
    }
    let udp = UdpHeader {
        src_port: u16::from_be_bytes([data[0], data[1]]),
        dst_port: u16::from_be_bytes([data[2], data[3]]),
        payload_length: (data.len() - 8) as u32,
    };
    Ok((udp, &data[8..]))
}

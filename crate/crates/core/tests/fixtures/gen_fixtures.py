#!/usr/bin/env python3
"""Regenerates the capture fixtures and their reference expectations.

Frames are crafted with scapy and every expected value in expected.json is
computed by reading the written capture back with scapy's own dissectors, so
the Rust test suite is checked against an independent decoder.

Usage: python3 gen_fixtures.py   (run from this directory; needs scapy)
"""

import hashlib
import json
import os
import struct
from decimal import Decimal

from scapy.all import ARP, ICMP, IP, TCP, UDP, DNS, DNSQR, Ether, Raw, rdpcap
from scapy.layers.tls.all import TLS
from scapy.utils import PcapNgWriter, PcapWriter
from cryptography import x509
from cryptography.hazmat.primitives.asymmetric import ec, rsa

HERE = os.path.dirname(os.path.abspath(__file__))
CERTS = os.path.join(HERE, "certs")
BASE_TIME = Decimal(1_800_000_000)

CLIENT_MAC = "02:00:00:00:00:01"
SERVER_MAC = "02:00:00:00:00:02"


def cert(name):
    with open(os.path.join(CERTS, name), "rb") as f:
        return f.read()


def fuid(der):
    return "F" + hashlib.sha256(der).hexdigest()[:20]


# ---------------------------------------------------------------------------
# TLS byte builders (hand-packed; independent of the Rust parser)
# ---------------------------------------------------------------------------

def u8(v):
    return struct.pack("!B", v)


def u16(v):
    return struct.pack("!H", v)


def u24(v):
    return struct.pack("!I", v)[1:]


def record(content_type, body, version=0x0303):
    return u8(content_type) + u16(version) + u16(len(body)) + body


def handshake(msg_type, body):
    return u8(msg_type) + u24(len(body)) + body


def ext(ext_type, body):
    return u16(ext_type) + u16(len(body)) + body


def client_hello(sni, ciphers, tls13=False, session_id=b""):
    exts = b""
    if sni is not None:
        name = sni.encode()
        entry = u8(0) + u16(len(name)) + name
        exts += ext(0, u16(len(entry)) + entry)
    exts += ext(10, u16(4) + u16(0x001D) + u16(0x0017))
    if tls13:
        versions = u16(0x0304) + u16(0x0303)
        exts += ext(43, u8(len(versions)) + versions)
        share = u16(0x001D) + u16(32) + bytes(range(32))
        exts += ext(51, u16(len(share)) + share)
    suites = b"".join(u16(c) for c in ciphers)
    body = (
        u16(0x0303)
        + bytes(range(32))
        + u8(len(session_id)) + session_id
        + u16(len(suites)) + suites
        + u8(1) + u8(0)
        + u16(len(exts)) + exts
    )
    return handshake(1, body)


def server_hello(cipher, tls13=False, session_id=b""):
    exts = b""
    if tls13:
        exts += ext(43, u16(0x0304))
        exts += ext(51, u16(0x001D) + u16(32) + bytes(range(32, 64)))
    body = (
        u16(0x0303)
        + bytes(range(64, 96))
        + u8(len(session_id)) + session_id
        + u16(cipher)
        + u8(0)
        + u16(len(exts)) + exts
    )
    return handshake(2, body)


def certificate_msg(ders):
    entries = b"".join(u24(len(d)) + d for d in ders)
    return handshake(11, u24(len(entries)) + entries)


def server_hello_done():
    return handshake(14, b"")


# ---------------------------------------------------------------------------
# Session builders
# ---------------------------------------------------------------------------

class Conv:
    """Accumulates the frames of one TCP conversation."""

    def __init__(self, client, cport, server, sport, t0, ttl_c=64, ttl_s=57):
        self.client, self.cport, self.server, self.sport = client, cport, server, sport
        self.t = Decimal(t0)
        self.cseq, self.sseq = 1000, 5000
        self.ttl_c, self.ttl_s = ttl_c, ttl_s
        self.frames = []

    def _emit(self, from_client, flags, payload=b"", dt="0.010", seq=None, win=None):
        self.t += Decimal(dt)
        if from_client:
            ip = IP(src=self.client, dst=self.server, ttl=self.ttl_c, id=len(self.frames) + 1)
            tcp = TCP(sport=self.cport, dport=self.sport, flags=flags,
                      seq=self.cseq if seq is None else seq, ack=self.sseq,
                      window=win if win is not None else 64240)
            eth = Ether(src=CLIENT_MAC, dst=SERVER_MAC)
        else:
            ip = IP(src=self.server, dst=self.client, ttl=self.ttl_s, id=len(self.frames) + 1)
            tcp = TCP(sport=self.sport, dport=self.cport, flags=flags,
                      seq=self.sseq if seq is None else seq, ack=self.cseq,
                      window=win if win is not None else 65160)
            eth = Ether(src=SERVER_MAC, dst=CLIENT_MAC)
        pkt = eth / ip / tcp
        if payload:
            pkt = pkt / Raw(load=payload)
        pkt.time = self.t
        self.frames.append(pkt)
        advance = len(payload) + (1 if ("S" in flags or "F" in flags) else 0)
        if seq is None:
            if from_client:
                self.cseq += advance
            else:
                self.sseq += advance
        return pkt

    def handshake(self):
        self._emit(True, "S", dt="0")
        self._emit(False, "SA", dt="0.020")
        self._emit(True, "A", dt="0.001")

    def close(self):
        self._emit(True, "FA", dt="0.050")
        self._emit(False, "FA", dt="0.015")
        self._emit(True, "A", dt="0.001")


def tls12_conv(client, cport, server, sport, t0, sni, ders, ciphers, selected,
               split_server_flight=False, retransmit=False, app_sizes=(300, 1200)):
    c = Conv(client, cport, server, sport, t0)
    c.handshake()
    c._emit(True, "PA", record(22, client_hello(sni, ciphers), version=0x0301), dt="0.002")
    if retransmit:
        # duplicate of the ClientHello segment
        dup = c.frames[-1]
        c._emit(True, "PA", bytes(dup[Raw].load), dt="0.200", seq=dup[TCP].seq)
    c._emit(False, "A", dt="0.020")
    flight = record(22, server_hello(selected) + certificate_msg(ders) + server_hello_done())
    if split_server_flight:
        cut = len(flight) // 2
        c._emit(False, "A", flight[:cut], dt="0.001")
        c._emit(False, "PA", flight[cut:], dt="0.001")
    else:
        c._emit(False, "PA", flight, dt="0.001")
    cke = record(22, handshake(16, u16(256) + bytes(256)[:256]))
    ccs = record(20, b"\x01")
    fin = record(22, bytes(range(40)))
    c._emit(True, "PA", cke + ccs + fin, dt="0.030")
    c._emit(False, "PA", record(20, b"\x01") + record(22, bytes(range(40, 80))), dt="0.025")
    c._emit(True, "PA", record(23, bytes(app_sizes[0])), dt="0.005")
    c._emit(False, "PA", record(23, bytes(app_sizes[1])), dt="0.040")
    c._emit(True, "A", dt="0.001")
    c.close()
    return c


def tls13_conv(client, cport, server, sport, t0, sni):
    c = Conv(client, cport, server, sport, t0)
    c.handshake()
    c._emit(True, "PA", record(22, client_hello(sni, [0x1301, 0x1302, 0x1303, 0xC02F], tls13=True),
                               version=0x0301), dt="0.002")
    flight = record(22, server_hello(0x1301, tls13=True)) + record(20, b"\x01") + record(23, bytes(900))
    c._emit(False, "PA", flight, dt="0.030")
    c._emit(True, "PA", record(20, b"\x01") + record(23, bytes(60)), dt="0.010")
    c._emit(True, "PA", record(23, bytes(250)), dt="0.002")
    c._emit(False, "PA", record(23, bytes(3000)), dt="0.050")
    c.close()
    return c


def plain_conv(client, cport, server, sport, t0, request, response):
    c = Conv(client, cport, server, sport, t0)
    c.handshake()
    c._emit(True, "PA", request, dt="0.002")
    c._emit(False, "A", dt="0.015")
    c._emit(False, "PA", response, dt="0.003")
    c._emit(True, "A", dt="0.001")
    c.close()
    return c


def noise(t):
    arp = Ether(src=CLIENT_MAC, dst="ff:ff:ff:ff:ff:ff") / ARP(psrc="10.0.0.1", pdst="10.0.0.254")
    arp.time = Decimal(t)
    icmp = Ether(src=CLIENT_MAC, dst=SERVER_MAC) / IP(src="10.0.0.1", dst="8.8.8.8") / ICMP()
    icmp.time = Decimal(t) + Decimal("0.5")
    dns = (Ether(src=CLIENT_MAC, dst=SERVER_MAC) / IP(src="10.0.0.1", dst="10.0.0.53")
           / UDP(sport=53000, dport=53) / DNS(rd=1, qd=DNSQR(qname="example.com")))
    dns.time = Decimal(t) + Decimal("0.7")
    return [arp, icmp, dns]


# ---------------------------------------------------------------------------
# Conversation catalogue
# ---------------------------------------------------------------------------

SS = cert("self_signed_30d.der")
LEAF = cert("leaf_example.der")
ROOT = cert("root_ca.der")
EC = cert("ec_p256.der")

HTTP_REQ = b"GET / HTTP/1.1\r\nHost: plain.example\r\n\r\n"
HTTP_RESP = b"HTTP/1.1 200 OK\r\nContent-Length: 11\r\n\r\nhello world"


def conv_tls_chain(t0):
    return tls12_conv("10.0.0.1", 51000, "93.184.216.34", 443, t0, "www.example.com",
                      [LEAF, ROOT], [0x0A0A, 0xC02F, 0xC030, 0x009C], 0xC02F,
                      split_server_flight=True)


def conv_tls_self_signed(t0):
    return tls12_conv("10.0.0.1", 51001, "10.0.0.80", 8443, t0, "test.local", [SS],
                      [0xC02B, 0xC02F, 0x0035], 0xC02B, retransmit=True)


def conv_tls_ec(t0):
    return tls12_conv("10.0.0.5", 40000, "10.0.0.81", 443, t0, "api.ec.internal", [EC],
                      [0xC02B, 0xC02C], 0xC02C, app_sizes=(700, 90))


def conv_tls13(t0):
    return tls13_conv("10.0.0.1", 51002, "104.16.0.1", 443, t0, "a.example.com")


def conv_tls_nosni(t0):
    return tls12_conv("10.0.0.7", 33333, "10.0.0.82", 443, t0, None, [LEAF, ROOT],
                      [0xC02F], 0xC02F)


def conv_http(t0, cport=52000):
    return plain_conv("10.0.0.1", cport, "10.0.0.90", 80, t0, HTTP_REQ, HTTP_RESP)


def conv_smtp(t0):
    return plain_conv("10.0.0.3", 45000, "10.0.0.25", 25, t0, b"EHLO client\r\n",
                      b"250-mail.example Hello\r\n250 OK\r\n")


def conv_binary(t0):
    return plain_conv("10.0.0.4", 46000, "10.0.0.99", 9000, t0, bytes([0x17, 0x02, 0x00, 0x10]) + bytes(12),
                      b"\x00" * 40)


def conv_ssh(t0):
    return plain_conv("10.0.0.6", 47000, "10.0.0.22", 22, t0, b"SSH-2.0-OpenSSH_9.0\r\n",
                      b"SSH-2.0-OpenSSH_8.9\r\n")


def interleave(convs, extra=()):
    frames = [f for c in convs for f in c.frames] + list(extra)
    frames.sort(key=lambda p: p.time)
    return frames


# ---------------------------------------------------------------------------
# Reference dissection (scapy) of a written capture
# ---------------------------------------------------------------------------

def canonical_key(pkt):
    ip, tcp = pkt[IP], pkt[TCP]
    a, b = (ip.src, tcp.sport), (ip.dst, tcp.dport)
    return tuple(sorted([a, b]))


def reference_sessions(frames):
    sessions = {}
    order = []
    for p in frames:
        if IP not in p or TCP not in p:
            continue
        k = canonical_key(p)
        if k not in sessions:
            sessions[k] = []
            order.append(k)
        sessions[k].append(p)
    out = []
    for k in order:
        pkts = sessions[k]
        first = pkts[0]
        init = (first[IP].src, first[TCP].sport)
        fwd = [p for p in pkts if (p[IP].src, p[TCP].sport) == init]
        bwd = [p for p in pkts if (p[IP].src, p[TCP].sport) != init]
        ip_lens = [p[IP].len for p in pkts]
        payloads = [len(p[TCP].payload) for p in pkts]
        times = [Decimal(p.time) for p in pkts]
        duration = times[-1] - times[0]
        is_tls = False
        sni = None
        ciphers = None
        for p in fwd:
            raw = bytes(p[TCP].payload)
            if len(raw) >= 5 and raw[0] in (20, 21, 22, 23) and raw[1] == 3 and raw[2] <= 4 \
                    and struct.unpack("!H", raw[3:5])[0] <= 2 ** 14 + 2048:
                is_tls = True
                break
        for p in fwd:
            raw = bytes(p[TCP].payload)
            if raw[:1] == b"\x16":
                t = TLS(raw)
                ch = t.msg[0]
                if type(ch).__name__ == "TLSClientHello":
                    ciphers = list(ch.ciphers)
                    for e in ch.ext or []:
                        if type(e).__name__ == "TLS_Ext_ServerName":
                            sni = e.servernames[0].servername.decode()
                    break
        out.append({
            "client": f"{init[0]}:{init[1]}",
            "packets": len(pkts),
            "forward": len(fwd),
            "backward": len(bwd),
            "ip_lengths": ip_lens,
            "tcp_payload_lengths": payloads,
            "is_tls": is_tls,
            "sni": sni,
            "ciphers": ciphers,
            "flow_duration": float(duration),
            "ipratio": max(ip_lens) / min(ip_lens),
            "goodput": float(sum(ip_lens) / duration) if duration > 0 else 0.0,
            "total_fwd_payload": sum(len(p[TCP].payload) for p in fwd),
            "mean_ttl": sum(p[IP].ttl for p in pkts) / len(pkts),
        })
    return out


def cert_chain_from_capture(frames):
    """Reassembles the server flight of the first session and lists cert fuids via scapy's TLS dissector."""
    first = None
    stream = b""
    for p in frames:
        if IP not in p or TCP not in p:
            continue
        if first is None:
            first = (p[IP].src, p[TCP].sport)
        if (p[IP].src, p[TCP].sport) != first and len(p[TCP].payload):
            stream += bytes(p[TCP].payload)
    chain = []
    t = TLS(stream)
    while t is not None and t.__class__.__name__ == "TLS":
        for m in t.msg or []:
            if type(m).__name__ == "TLSCertificate":
                for _, c in m.certs:
                    chain.append(fuid(c.der))
        t = t.payload if t.payload and t.payload.__class__.__name__ == "TLS" else None
    return chain


def describe_cert(der):
    c = x509.load_der_x509_certificate(der)
    key = c.public_key()
    if isinstance(key, rsa.RSAPublicKey):
        bits = key.key_size
    elif isinstance(key, ec.EllipticCurvePublicKey):
        bits = key.curve.key_size
    else:
        bits = 0
    try:
        san = c.extensions.get_extension_for_class(x509.SubjectAlternativeName).value
        dns = san.get_values_for_type(x509.DNSName)
    except x509.ExtensionNotFound:
        dns = []
    cn = c.subject.get_attributes_for_oid(x509.NameOID.COMMON_NAME)
    nb = int(c.not_valid_before_utc.timestamp())
    na = int(c.not_valid_after_utc.timestamp())
    return {
        "fuid": fuid(der),
        "not_before": nb,
        "not_after": na,
        "validity_s": na - nb,
        "san_dns": dns,
        "subject_cn": cn[0].value if cn else None,
        "public_key_bits": bits,
        "self_signed": c.subject == c.issuer,
    }


def write_pcap(name, frames, nano=False, ng=False):
    path = os.path.join(HERE, name)
    if ng:
        w = PcapNgWriter(path)
    else:
        w = PcapWriter(path, nano=nano, linktype=1, sync=True)
    for f in frames:
        w.write(f)
    w.close()
    return path


def main():
    expected = {"certs": {}, "captures": {}}
    for name in ["self_signed_30d.der", "leaf_example.der", "root_ca.der", "ec_p256.der"]:
        expected["certs"][name] = describe_cert(cert(name))

    t = BASE_TIME
    captures = {}

    captures["three_frames.pcap"] = Conv("10.0.0.1", 51000, "10.0.0.2", 443, t)
    c = captures["three_frames.pcap"]
    c.handshake()
    captures["three_frames.pcap"] = c.frames

    captures["interleaved2.pcap"] = interleave([conv_tls_chain(t), conv_tls13(t + Decimal("0.004"))])
    captures["mixed5.pcap"] = interleave(
        [conv_tls_chain(t), conv_http(t + Decimal("0.003")), conv_tls13(t + Decimal("0.5")),
         conv_smtp(t + Decimal("0.9")), conv_tls_self_signed(t + Decimal("1.2"))])
    mixed10 = interleave(
        [conv_tls_chain(t), conv_http(t + Decimal("0.003")), conv_tls13(t + Decimal("0.5")),
         conv_smtp(t + Decimal("0.9")), conv_tls_self_signed(t + Decimal("1.2")),
         conv_binary(t + Decimal("1.25")), conv_tls_ec(t + Decimal("2.0")),
         conv_ssh(t + Decimal("2.1")), conv_tls_nosni(t + Decimal("2.6")),
         conv_http(t + Decimal("3.0"), cport=52001)],
        extra=noise(t + Decimal("0.2")))
    captures["mixed10.pcap"] = mixed10
    captures["five_tls.pcap"] = interleave(
        [conv_tls_chain(t), conv_tls13(t + Decimal("0.5")), conv_tls_self_signed(t + Decimal("1.2")),
         conv_tls_ec(t + Decimal("2.0")), conv_tls_nosni(t + Decimal("2.6"))])
    captures["tls12_chain.pcap"] = conv_tls_chain(t).frames
    captures["tls13.pcap"] = conv_tls13(t).frames

    for name, frames in captures.items():
        write_pcap(name, frames)
    write_pcap("mixed10_ns.pcap", mixed10, nano=True)
    write_pcap("mixed10.pcapng", mixed10, ng=True)
    write_pcap("empty.pcap", [])

    with open(os.path.join(HERE, "mixed5.pcap"), "rb") as f:
        data = f.read()
    with open(os.path.join(HERE, "truncated.pcap"), "wb") as f:
        f.write(data[: len(data) - 37])

    for name in list(captures) + ["mixed10_ns.pcap", "mixed10.pcapng", "empty.pcap"]:
        frames = list(rdpcap(os.path.join(HERE, name)))
        ts = [int((Decimal(p.time) * 1_000_000).to_integral_value()) for p in frames]
        expected["captures"][name] = {
            "frames": len(frames),
            "timestamps_us": ts,
            "sessions": reference_sessions(frames),
        }
    expected["captures"]["tls12_chain.pcap"]["cert_chain"] = cert_chain_from_capture(
        list(rdpcap(os.path.join(HERE, "tls12_chain.pcap"))))
    expected["captures"]["truncated.pcap"] = {
        "complete_frames": expected["captures"]["mixed5.pcap"]["frames"] - 1,
    }

    with open(os.path.join(HERE, "expected.json"), "w") as f:
        json.dump(expected, f, indent=2, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()

"""Packet records, fixed-duration time windows and per-window flow classes."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

PACKET_CSV_HEADER = ("time", "src_ip", "dst_ip", "src_port", "dst_port", "size", "proto")


@dataclass(frozen=True)
class PacketRecord:
    """One observed packet.

    Addresses are opaque tokens and are only ever compared for equality,
    which keeps IPv4, IPv6 and anonymized identifiers interchangeable.
    """

    time: float
    src_ip: str
    dst_ip: str
    src_port: int
    dst_port: int
    size: int = 0
    proto: str = "TCP"


@dataclass
class FlowWindow:
    """Packets observed in [start, start + delta_t), ordered by time."""

    start: float
    delta_t: float
    packets: list[PacketRecord] = field(default_factory=list)


@dataclass
class ClassPartition:
    """The six flow class families of one window.

    ``sd`` groups packets by (source, destination) pair, ``ips`` by source
    and ``ipd`` by destination. ``sh`` keys sources never seen as a
    destination in this window, ``dh`` destinations never seen as a source,
    and ``if_flows`` addresses seen in both roles. Keys are stored sorted so
    iteration order is canonical regardless of packet arrival order.
    """

    sd: dict[tuple[str, str], list[PacketRecord]]
    ips: dict[str, list[PacketRecord]]
    ipd: dict[str, list[PacketRecord]]
    if_flows: dict[str, list[PacketRecord]]
    sh: dict[str, list[PacketRecord]]
    dh: dict[str, list[PacketRecord]]


class PacketCsvError(ValueError):
    """Malformed packet CSV input. ``line`` is the 1-based offending line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class IngestIssue:
    line: int
    message: str


def partition_stream(packets: list[PacketRecord], delta_t: float) -> list[FlowWindow]:
    """Split packets into consecutive left-closed windows of length delta_t.

    Windows are aligned to multiples of delta_t starting at the window that
    contains the earliest packet. Empty windows between populated ones are
    emitted so downstream feature series keep one sample per interval.
    Records with a non-finite timestamp are dropped with a diagnostic.
    """
    if delta_t <= 0:
        raise ValueError("delta_t must be positive")
    kept = []
    for p in packets:
        if not math.isfinite(p.time):
            logger.warning("dropping packet with non-finite time: %r", p)
            continue
        kept.append(p)
    if not kept:
        return []
    kept = sorted(kept, key=lambda p: p.time)  # stable: ties keep input order
    first = math.floor(kept[0].time / delta_t)
    last = math.floor(kept[-1].time / delta_t)
    windows = [FlowWindow(start=i * delta_t, delta_t=delta_t) for i in range(first, last + 1)]
    for p in kept:
        windows[math.floor(p.time / delta_t) - first].packets.append(p)
    return windows


def build_partition(window: FlowWindow) -> ClassPartition:
    """Group a window's packets into the six flow class families.

    Source-half / destination-half / interactive membership is decided from
    the addresses seen within this window only.
    """
    sd: dict[tuple[str, str], list[PacketRecord]] = {}
    ips: dict[str, list[PacketRecord]] = {}
    ipd: dict[str, list[PacketRecord]] = {}
    for p in window.packets:
        sd.setdefault((p.src_ip, p.dst_ip), []).append(p)
        ips.setdefault(p.src_ip, []).append(p)
        ipd.setdefault(p.dst_ip, []).append(p)
    sources = set(ips)
    dests = set(ipd)
    return ClassPartition(
        sd={k: sd[k] for k in sorted(sd)},
        ips={k: ips[k] for k in sorted(ips)},
        ipd={k: ipd[k] for k in sorted(ipd)},
        if_flows={a: ips[a] for a in sorted(sources & dests)},
        sh={a: ips[a] for a in sorted(sources - dests)},
        dh={a: ipd[a] for a in sorted(dests - sources)},
    )


def distinct_ports(packets: list[PacketRecord]) -> int:
    """Number of distinct destination ports among the given packets."""
    return len({p.dst_port for p in packets})


def _parse_row(row: list[str], line: int) -> PacketRecord:
    if len(row) != len(PACKET_CSV_HEADER):
        raise PacketCsvError(line, f"expected {len(PACKET_CSV_HEADER)} fields, got {len(row)}")
    try:
        t = float(row[0])
    except ValueError:
        raise PacketCsvError(line, f"bad time value {row[0]!r}") from None
    if not math.isfinite(t) or t < 0:
        raise PacketCsvError(line, f"time must be finite and non-negative, got {row[0]!r}")
    src_ip, dst_ip = row[1].strip(), row[2].strip()
    if not src_ip or not dst_ip:
        raise PacketCsvError(line, "src_ip and dst_ip must be non-empty")
    try:
        src_port, dst_port, size = int(row[3]), int(row[4]), int(row[5])
    except ValueError:
        raise PacketCsvError(line, "ports and size must be integers") from None
    if not 0 <= src_port <= 65535 or not 0 <= dst_port <= 65535:
        raise PacketCsvError(line, "ports must be in 0..65535")
    if size < 0:
        raise PacketCsvError(line, "size must be non-negative")
    return PacketRecord(t, src_ip, dst_ip, src_port, dst_port, size, row[6].strip())


def read_packet_csv(path, strict: bool = False) -> tuple[list[PacketRecord], list[IngestIssue]]:
    """Read packets from CSV.

    The header line is always required. In strict mode the first malformed
    data line aborts with PacketCsvError; in lenient mode malformed lines
    are skipped and reported in the returned issue list.
    """
    packets: list[PacketRecord] = []
    issues: list[IngestIssue] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PacketCsvError(1, "missing header") from None
        if tuple(h.strip() for h in header) != PACKET_CSV_HEADER:
            raise PacketCsvError(1, f"bad header, expected {','.join(PACKET_CSV_HEADER)}")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                packets.append(_parse_row(row, line))
            except PacketCsvError as err:
                if strict:
                    raise
                issues.append(IngestIssue(err.line, str(err)))
                logger.warning("skipping packet csv %s", err)
    return packets, issues


def write_packet_csv(path, packets: list[PacketRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PACKET_CSV_HEADER)
        for p in packets:
            writer.writerow([repr(float(p.time)), p.src_ip, p.dst_ip,
                             p.src_port, p.dst_port, p.size, p.proto])

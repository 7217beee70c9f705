"""The five per-window flow features and sample assembly.

Feature values are plain non-negative floats computed from a window's
ClassPartition. All rate gates compare value / delta_t strictly greater
than their threshold; a gated quantity is either 0 or the raw value.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .packets import ClassPartition, PacketRecord, build_partition, distinct_ports, partition_stream

NORMAL = 1
ATTACK = -1

FEATURE_NAMES = ("acd", "ibf", "mff", "hiad", "ffv")
FEATURE_CSV_HEADER = ("window_start",) + FEATURE_NAMES


@dataclass(frozen=True)
class FeatureThresholds:
    """Weights and rate thresholds for the five features.

    theta1/theta2 blend port counts against packet counts, theta3..theta9
    gate the individual sums (per-second rates must strictly exceed the
    threshold to contribute). ``mff_packet_rule`` selects how the packet
    weight term combines the half-interaction and pair sums: "sd" derives
    it from the pair-class sum alone, "sh" lets the half-interaction sum
    substitute whenever it is non-zero.
    """

    theta1: float = 0.5
    theta2: float = 0.5
    theta3: float = 3.0
    theta4: float = 3.0
    theta5: float = 3.0
    theta6: float = 3.0
    theta7: float = 3.0
    theta8: float = 3.0
    theta9: float = 3.0
    delta_t: float = 1.0
    mff_packet_rule: str = "sd"

    def __post_init__(self):
        if not 0.0 < self.theta1 < 1.0:
            raise ValueError("theta1 must be in (0, 1)")
        if not 0.0 <= self.theta2 <= 1.0:
            raise ValueError("theta2 must be in [0, 1]")
        for name in ("theta3", "theta4", "theta5", "theta6", "theta7", "theta8", "theta9"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.delta_t <= 0:
            raise ValueError("delta_t must be positive")
        if self.mff_packet_rule not in ("sd", "sh"):
            raise ValueError("mff_packet_rule must be 'sd' or 'sh'")


@dataclass(frozen=True)
class FeatureVector:
    """One 5-dimensional sample, components fixed as (acd, ibf, mff, hiad, ffv)."""

    window_start: float
    acd: float
    ibf: float
    mff: float
    hiad: float
    ffv: float

    def as_array(self) -> np.ndarray:
        return np.array([self.acd, self.ibf, self.mff, self.hiad, self.ffv], dtype=float)


@dataclass(frozen=True)
class LabeledSample:
    """A feature vector with its class label, +1 normal or -1 attack."""

    features: FeatureVector
    label: int

    def __post_init__(self):
        if self.label not in (NORMAL, ATTACK):
            raise ValueError("label must be +1 (normal) or -1 (attack)")


def _gate(value: float, threshold: float, delta_t: float) -> float:
    return value if value / delta_t > threshold else 0.0


def _flag(value: float) -> float:
    # 1 exactly on a zero sum, 0 otherwise (sums are never negative)
    return 1.0 if value == 0 else 0.0


def acd_survivors(partition: ClassPartition) -> dict[tuple[str, str], list[PacketRecord]]:
    """Pair classes that survive the fan-out deletion rule.

    Every source that reaches two or more distinct destinations in the
    window has all of its pair classes removed.
    """
    fanout: dict[str, set[str]] = {}
    for src, dst in partition.sd:
        fanout.setdefault(src, set()).add(dst)
    return {key: pkts for key, pkts in partition.sd.items() if len(fanout[key[0]]) < 2}


def acd(partition: ClassPartition, th: FeatureThresholds) -> float:
    """Address correlation degree: weighted size of surviving pair classes."""
    total = 0.0
    survivors = acd_survivors(partition)
    for key in sorted(survivors):
        pkts = survivors[key]
        total += th.theta1 * distinct_ports(pkts) + (1.0 - th.theta1) * len(pkts)
    return total


def _ffv_groups(partition: ClassPartition) -> dict[str, set[str]]:
    """Destinations kept by the single-source deletion rule, with their sources.

    A destination reached by exactly one source forms a unique pair class
    and is removed; the remaining packets are regrouped per destination.
    """
    sources_of: dict[str, set[str]] = {}
    for src, dst in partition.sd:
        sources_of.setdefault(dst, set()).add(src)
    return {dst: srcs for dst, srcs in sources_of.items() if len(srcs) >= 2}


def ffv(partition: ClassPartition, th: FeatureThresholds) -> float:
    """Flow feature value over destinations kept by the deletion rule."""
    groups = _ffv_groups(partition)
    total = 0.0
    for dst in sorted(groups):
        pkts = partition.ipd[dst]
        oa_sum = 0.0
        for src in sorted(groups[dst]):
            oa_sum += _gate(len(partition.sd[(src, dst)]), th.theta3, th.delta_t)
        ob = _gate(distinct_ports(pkts), th.theta4, th.delta_t)
        total += len(groups[dst]) + th.theta2 * oa_sum + (1.0 - th.theta2) * (ob - 1.0)
    return max(0.0, total - len(groups))


def ibf(partition: ClassPartition, th: FeatureThresholds) -> float:
    """Interaction behaviour feature of the half flows, damped by interactive flows."""
    s = len(partition.sh)
    d = len(partition.dh)
    m = len(partition.if_flows)
    total = float(abs(s - d))
    for key in sorted(partition.sh):
        total += _gate(distinct_ports(partition.sh[key]), th.theta5, th.delta_t)
    for key in sorted(partition.dh):
        total += _gate(distinct_ports(partition.dh[key]), th.theta5, th.delta_t)
    return total / (m + 1)


@dataclass(frozen=True)
class MffWeights:
    sh: float
    sd: float
    packet: float
    port: float


def mff_weights(partition: ClassPartition, th: FeatureThresholds) -> MffWeights:
    """The four gated sums feeding the multi-feature fusion value."""
    weight_sh = 0.0
    for key in sorted(partition.sh):
        weight_sh += _gate(len(partition.sh[key]), th.theta6, th.delta_t)
    weight_sd = 0.0
    for key in sorted(partition.sd):
        weight_sd += _gate(len(partition.sd[key]), th.theta7, th.delta_t)
    weight_port = 0.0
    for key in sorted(partition.sh):
        weight_port += _gate(distinct_ports(partition.sh[key]), th.theta8, th.delta_t)
    for key in sorted(partition.dh):
        weight_port += _gate(distinct_ports(partition.dh[key]), th.theta8, th.delta_t)
    if th.mff_packet_rule == "sd":
        weight_packet = _flag(weight_sd) * weight_sd + weight_sd
    else:
        weight_packet = _flag(weight_sh) * weight_sd + weight_sh
    return MffWeights(sh=weight_sh, sd=weight_sd, packet=weight_packet, port=weight_port)


def mff(partition: ClassPartition, th: FeatureThresholds) -> float:
    """Multi-feature fusion of class counts, packet weights and port weights."""
    w = mff_weights(partition, th)
    s = len(partition.sh)
    m = len(partition.if_flows)
    return (s + w.port + w.packet) / (m + 1)


def _hiad_groups(partition: ClassPartition) -> dict[str, list[PacketRecord]]:
    """Half-interaction packets regrouped by destination address."""
    groups: dict[str, list[PacketRecord]] = {}
    for src in partition.sh:
        for p in partition.sh[src]:
            groups.setdefault(p.dst_ip, []).append(p)
    return groups


def hiad(partition: ClassPartition, th: FeatureThresholds) -> float:
    """Half-interaction anomaly degree: source fan-in plus gated port spread."""
    groups = _hiad_groups(partition)
    total = 0.0
    for dst in sorted(groups):
        pkts = groups[dst]
        hn = len({p.src_ip for p in pkts})
        total += hn + _gate(distinct_ports(pkts), th.theta9, th.delta_t)
    return total


@dataclass(frozen=True)
class FeatureIntermediates:
    """Per-window intermediate quantities, mainly for inspection and tests."""

    acs: dict[tuple[str, str], tuple[int, int, float]]  # key -> (ports, packets, weighted value)
    sdd: dict[str, dict]                                # dest -> num / oa / ob / cip terms
    sh_count: int
    dh_count: int
    if_count: int
    weight_sh: float
    weight_sd: float
    weight_packet: float
    weight_port: float
    hsd: dict[str, tuple[int, float]]                   # dest -> (source fan-in, gated port weight)


def feature_intermediates(partition: ClassPartition, th: FeatureThresholds) -> FeatureIntermediates:
    acs = {}
    survivors = acd_survivors(partition)
    for key in sorted(survivors):
        pkts = survivors[key]
        ports, count = distinct_ports(pkts), len(pkts)
        acs[key] = (ports, count, th.theta1 * ports + (1.0 - th.theta1) * count)
    sdd = {}
    for dst, srcs in sorted(_ffv_groups(partition).items()):
        oa = {src: _gate(len(partition.sd[(src, dst)]), th.theta3, th.delta_t)
              for src in sorted(srcs)}
        ob = _gate(distinct_ports(partition.ipd[dst]), th.theta4, th.delta_t)
        cip = len(srcs) + th.theta2 * sum(oa.values()) + (1.0 - th.theta2) * (ob - 1.0)
        sdd[dst] = {"num": len(srcs), "oa": oa, "ob": ob, "cip": cip}
    weights = mff_weights(partition, th)
    hsd = {}
    for dst, pkts in sorted(_hiad_groups(partition).items()):
        hsd[dst] = (len({p.src_ip for p in pkts}),
                    _gate(distinct_ports(pkts), th.theta9, th.delta_t))
    return FeatureIntermediates(
        acs=acs, sdd=sdd,
        sh_count=len(partition.sh), dh_count=len(partition.dh), if_count=len(partition.if_flows),
        weight_sh=weights.sh, weight_sd=weights.sd,
        weight_packet=weights.packet, weight_port=weights.port,
        hsd=hsd,
    )


def window_features(window, th: FeatureThresholds) -> FeatureVector:
    part = build_partition(window)
    return FeatureVector(
        window_start=window.start,
        acd=acd(part, th),
        ibf=ibf(part, th),
        mff=mff(part, th),
        hiad=hiad(part, th),
        ffv=ffv(part, th),
    )


def extract_series(packets: list[PacketRecord], th: FeatureThresholds) -> list[FeatureVector]:
    """One feature vector per window, in time order. Empty input gives []."""
    return [window_features(w, th) for w in partition_stream(packets, th.delta_t)]


def feature_matrix(series: list[FeatureVector]) -> np.ndarray:
    if not series:
        return np.empty((0, 5), dtype=float)
    return np.stack([v.as_array() for v in series])


def window_starts(series: list[FeatureVector]) -> np.ndarray:
    return np.array([v.window_start for v in series], dtype=float)


class MinMaxNormalizer(TransformerMixin, BaseEstimator):
    """Per-dimension min-max scaling to [0, 1] with clamping.

    Bounds come from the fitted training set; values outside them clamp to
    the unit interval. A dimension with zero training range maps to 0.
    """

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=1)
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        return self

    def transform(self, X):
        check_is_fitted(self, "data_min_")
        X = check_array(X)
        span = self.data_max_ - self.data_min_
        out = np.zeros_like(X, dtype=float)
        live = span > 0
        out[:, live] = (X[:, live] - self.data_min_[live]) / span[live]
        np.clip(out, 0.0, 1.0, out=out)
        return out

    def to_dict(self) -> dict:
        return {"data_min": self.data_min_.tolist(), "data_max": self.data_max_.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "MinMaxNormalizer":
        norm = cls()
        norm.data_min_ = np.asarray(payload["data_min"], dtype=float)
        norm.data_max_ = np.asarray(payload["data_max"], dtype=float)
        return norm


def write_feature_csv(path, series: list[FeatureVector], labels=None) -> None:
    """Write a feature CSV, adding the label column when labels are given."""
    if labels is not None and len(labels) != len(series):
        raise ValueError("labels length must match series length")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = FEATURE_CSV_HEADER + (("label",) if labels is not None else ())
        writer.writerow(header)
        for i, vec in enumerate(series):
            row = [repr(float(vec.window_start))]
            row += [repr(float(getattr(vec, name))) for name in FEATURE_NAMES]
            if labels is not None:
                row.append(str(int(labels[i])))
            writer.writerow(row)


def read_feature_csv(path) -> tuple[list[FeatureVector], np.ndarray | None]:
    """Read a feature CSV. Returns (series, labels or None)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: missing header") from None
        labeled = header == list(FEATURE_CSV_HEADER) + ["label"]
        if not labeled and header != list(FEATURE_CSV_HEADER):
            raise ValueError(f"{path}: bad header, expected {','.join(FEATURE_CSV_HEADER)}[,label]")
        series: list[FeatureVector] = []
        labels: list[int] = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            expected = 7 if labeled else 6
            if len(row) != expected:
                raise ValueError(f"{path}: line {line}: expected {expected} fields")
            try:
                values = [float(v) for v in row[:6]]
                label = int(row[6]) if labeled else None
            except ValueError:
                raise ValueError(f"{path}: line {line}: malformed numeric value") from None
            series.append(FeatureVector(values[0], *values[1:]))
            if labeled:
                if label not in (NORMAL, ATTACK):
                    raise ValueError(f"{path}: line {line}: label must be +1 or -1")
                labels.append(label)
    return series, (np.array(labels, dtype=int) if labeled else None)

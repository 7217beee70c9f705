"""Pairing the two classifiers over a test stream.

Disagreements where only the scatter-trained model flags an attack are
escalated immediately; disagreements the other way round are settled by a
unanimous vote over the separation-trained model's labels inside a forward
sliding window.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import product

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .features import ATTACK, NORMAL, feature_matrix

RULE_BOTH_NORMAL = "both-normal"
RULE_BOTH_ATTACK = "both-attack"
RULE_S_OVERRIDES = "s-overrides"
RULE_WINDOW_VOTE = "window-vote"

VERDICT_CSV_HEADER = ("index", "window_start", "m_label", "s_label", "rule", "final_label")

_LABEL_NAMES = {NORMAL: "normal", ATTACK: "attack"}
_LABEL_VALUES = {"normal": NORMAL, "attack": ATTACK, "1": NORMAL, "-1": ATTACK}


@dataclass(frozen=True)
class DetectorConfig:
    """Arbitration settings; window_n is the sliding window size."""

    window_n: int = 8

    def __post_init__(self):
        if self.window_n < 1:
            raise ValueError("window_n must be at least 1")


@dataclass(frozen=True)
class Verdict:
    index: int
    label: int
    rule: str
    m_label: int
    s_label: int


def arbitrate(m_labels, s_labels, window_n: int = 8) -> list[Verdict]:
    """Combine the two label streams index by index.

    Agreement passes through. When only the s stream says attack, attack
    wins. When only the m stream says attack, the verdict is attack exactly
    when every m label in the window starting at the current index (size
    window_n, truncated at the stream end) says attack.
    """
    if window_n < 1:
        raise ValueError("window_n must be at least 1")
    m = [int(v) for v in m_labels]
    s = [int(v) for v in s_labels]
    if len(m) != len(s):
        raise ValueError("label streams must have equal length")
    if any(v not in (NORMAL, ATTACK) for v in m + s):
        raise ValueError("labels must be +1 or -1")
    verdicts = []
    for i, (mi, si) in enumerate(zip(m, s)):
        if mi == NORMAL and si == NORMAL:
            label, rule = NORMAL, RULE_BOTH_NORMAL
        elif mi == ATTACK and si == ATTACK:
            label, rule = ATTACK, RULE_BOTH_ATTACK
        elif si == ATTACK:
            label, rule = ATTACK, RULE_S_OVERRIDES
        else:
            window = m[i:i + window_n]
            label = ATTACK if all(v == ATTACK for v in window) else NORMAL
            rule = RULE_WINDOW_VOTE
        verdicts.append(Verdict(index=i, label=label, rule=rule, m_label=mi, s_label=si))
    return verdicts


def classify_stream(m_model, s_model, stream, cfg: DetectorConfig | None = None) -> list[Verdict]:
    """Score a feature stream with both models and arbitrate the labels.

    ``stream`` is a sample matrix or a list of FeatureVector. Each model
    applies its own normalizer and feature weights internally.
    """
    cfg = cfg or DetectorConfig()
    if isinstance(stream, (list, tuple)) and stream and hasattr(stream[0], "as_array"):
        X = feature_matrix(stream)
    else:
        X = np.asarray(stream, dtype=float)
    if X.size == 0:
        return []
    m_labels = m_model.predict(X)
    s_labels = s_model.predict(X)
    return arbitrate(m_labels, s_labels, cfg.window_n)


def _reference_verdicts(m_labels, s_labels, window_n):
    # independently coded rule table used to cross-check arbitrate()
    n = len(m_labels)
    out = []
    for i in range(n):
        if s_labels[i] == ATTACK:
            out.append(ATTACK)
        elif m_labels[i] == NORMAL:
            out.append(NORMAL)
        else:
            vote = ATTACK
            for k in range(i, min(n, i + window_n)):
                if m_labels[k] == NORMAL:
                    vote = NORMAL
                    break
            out.append(vote)
    return out


@dataclass
class RuleCheckReport:
    window_n: int
    length: int
    cases: int
    mismatches: list

    @property
    def ok(self) -> bool:
        return not self.mismatches


def exhaustive_rule_check(window_n: int, length: int) -> RuleCheckReport:
    """Compare arbitrate() against the reference rule table on all label pairs."""
    if length > 10:
        raise ValueError("length larger than 10 enumerates too many cases")
    cases = 0
    mismatches = []
    labels = (NORMAL, ATTACK)
    for m_seq in product(labels, repeat=length):
        for s_seq in product(labels, repeat=length):
            cases += 1
            got = [v.label for v in arbitrate(m_seq, s_seq, window_n)]
            want = _reference_verdicts(m_seq, s_seq, window_n)
            if got != want:
                mismatches.append((m_seq, s_seq, got, want))
    return RuleCheckReport(window_n=window_n, length=length, cases=cases, mismatches=mismatches)


class SlidingWindowEnsemble(ClassifierMixin, BaseEstimator):
    """Coordinates a separation-trained and a scatter-trained classifier.

    Both components may arrive fitted; calling fit trains any that expose
    a fit method and are not fitted yet.
    """

    def __init__(self, m_model=None, s_model=None, window_n=8):
        self.m_model = m_model
        self.s_model = s_model
        self.window_n = window_n

    def fit(self, X, y):
        for component in (self.m_model, self.s_model):
            if component is None:
                raise ValueError("both component models are required")
            if hasattr(component, "fit") and not hasattr(component, "model_"):
                component.fit(X, y)
        return self

    def verdicts(self, X) -> list[Verdict]:
        return classify_stream(self.m_model, self.s_model, X, DetectorConfig(self.window_n))

    def predict(self, X):
        return np.array([v.label for v in self.verdicts(X)], dtype=int)


def write_verdict_csv(path, verdicts: list[Verdict], starts=None) -> None:
    if starts is not None and len(starts) != len(verdicts):
        raise ValueError("starts length must match verdicts length")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(VERDICT_CSV_HEADER)
        for i, v in enumerate(verdicts):
            start = repr(float(starts[i])) if starts is not None else ""
            writer.writerow([v.index, start, _LABEL_NAMES[v.m_label],
                             _LABEL_NAMES[v.s_label], v.rule, _LABEL_NAMES[v.label]])


def read_verdict_csv(path) -> list[Verdict]:
    verdicts = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != VERDICT_CSV_HEADER:
            raise ValueError(f"{path}: bad header")
        for row in reader:
            if not row:
                continue
            verdicts.append(Verdict(
                index=int(row[0]),
                label=_LABEL_VALUES[row[5]],
                rule=row[4],
                m_label=_LABEL_VALUES[row[2]],
                s_label=_LABEL_VALUES[row[3]],
            ))
    return verdicts

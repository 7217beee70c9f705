"""Confusion metrics, multiplier perturbations and the comparison grid.

The confusion convention treats normal as the positive column: tp and fp
count normal test samples (correctly and incorrectly marked), tn and fn
count attack test samples. The detection rate is therefore the attack
recall tn/(tn+fn), the false alarm rate fp/(tp+fp), and the error rate the
total fraction mislabeled.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .features import ATTACK, FeatureVector, LabeledSample, NORMAL

PERTURB_MODES = ("both", "attack-only", "normal-only")

RESULTS_CSV_HEADER = ("table", "mode", "lo", "hi", "method", "dr", "fr", "er")
COUNTS_CSV_HEADER = ("table", "mode", "lo", "hi", "method", "tp", "fp", "tn", "fn")

# multiplier grids of the three perturbation scenarios
TABLE_RANGES = {
    1: [(0.6, 0.7), (0.7, 0.8), (0.8, 0.9), (0.9, 1.1), (1.0, 1.5),
        (1.5, 2.0), (2.0, 3.0), (3.0, 4.0), (4.0, 5.0)],
    2: [(0.1, 0.2), (0.2, 0.3), (0.3, 0.4), (0.4, 0.5), (0.5, 0.6),
        (0.6, 0.7), (0.7, 0.8), (0.8, 0.9), (0.9, 1.0)],
    3: [(1.0, 1.5), (1.5, 2.0), (2.0, 2.5), (2.5, 3.0), (3.0, 3.5),
        (3.5, 4.0), (4.0, 4.5), (4.5, 5.0), (5.0, 5.5)],
}
TABLE_MODES = {1: "both", 2: "attack-only", 3: "normal-only"}


@dataclass(frozen=True)
class EvalReport:
    """Confusion counts with derived percentage rates.

    A rate whose denominator class is absent is None (undefined), never 0.
    """

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def dr(self) -> float | None:
        attacks = self.tn + self.fn
        return None if attacks == 0 else 100.0 * self.tn / attacks

    @property
    def fr(self) -> float | None:
        normals = self.tp + self.fp
        return None if normals == 0 else 100.0 * self.fp / normals

    @property
    def er(self) -> float | None:
        total = self.tp + self.fp + self.tn + self.fn
        return None if total == 0 else 100.0 * (self.fn + self.fp) / total


def metrics(predicted, truth) -> EvalReport:
    """Confusion counts of predicted labels against the ground truth."""
    p = np.asarray(predicted, dtype=int).ravel()
    t = np.asarray(truth, dtype=int).ravel()
    if p.size != t.size:
        raise ValueError("predicted and truth must have equal length")
    if p.size and not (np.all(np.isin(p, (NORMAL, ATTACK))) and np.all(np.isin(t, (NORMAL, ATTACK)))):
        raise ValueError("labels must be +1 or -1")
    return EvalReport(
        tp=int(np.sum((t == NORMAL) & (p == NORMAL))),
        fp=int(np.sum((t == NORMAL) & (p == ATTACK))),
        tn=int(np.sum((t == ATTACK) & (p == ATTACK))),
        fn=int(np.sum((t == ATTACK) & (p == NORMAL))),
    )


@dataclass(frozen=True)
class PerturbSpec:
    """Multiplier perturbation: mode selects the class, [lo, hi] the range.

    One multiplier is drawn per selected sample and applied to all of its
    dimensions unless per_value is set, in which case every value gets its
    own draw. Draws come from a PCG64 generator seeded with ``seed``, so a
    given spec always produces the same output.
    """

    mode: str
    lo: float
    hi: float
    seed: int
    per_value: bool = False

    def __post_init__(self):
        if self.mode not in PERTURB_MODES:
            raise ValueError(f"mode must be one of {PERTURB_MODES}")
        if not 0 < self.lo <= self.hi:
            raise ValueError("need 0 < lo <= hi")


def perturb(X, y, spec: PerturbSpec) -> np.ndarray:
    """Scale the selected samples; unselected rows are returned bit-identical."""
    X = np.array(X, dtype=float, copy=True)
    y = np.asarray(y, dtype=int).ravel()
    if X.shape[0] != y.size:
        raise ValueError("X and y must have equal length")
    if spec.mode == "both":
        mask = np.ones(y.size, dtype=bool)
    elif spec.mode == "attack-only":
        mask = y == ATTACK
    else:
        mask = y == NORMAL
    rng = np.random.default_rng(spec.seed)
    for idx in np.nonzero(mask)[0]:
        if spec.per_value:
            X[idx] *= rng.uniform(spec.lo, spec.hi, size=X.shape[1])
        else:
            X[idx] *= rng.uniform(spec.lo, spec.hi)
    return X


def perturb_samples(samples: list[LabeledSample], spec: PerturbSpec) -> list[LabeledSample]:
    """LabeledSample counterpart of perturb(), window starts preserved."""
    X = np.stack([s.features.as_array() for s in samples]) if samples else np.empty((0, 5))
    y = np.array([s.label for s in samples], dtype=int)
    Xp = perturb(X, y, spec)
    out = []
    for sample, row in zip(samples, Xp):
        vec = FeatureVector(sample.features.window_start, *row.tolist())
        out.append(LabeledSample(features=vec, label=sample.label))
    return out


def derive_cell_seed(master_seed: int, cell_index: int) -> int:
    """Stable per-cell seed from the master seed and the cell position."""
    return int(np.random.SeedSequence([int(master_seed), int(cell_index)]).generate_state(1)[0])


@dataclass(frozen=True)
class ExperimentCell:
    table: int
    mode: str
    lo: float
    hi: float
    method: str
    report: EvalReport


def run_experiment_grid(methods: dict, X_test, y_test, ranges, mode: str,
                        master_seed: int, table: int = 0) -> list[ExperimentCell]:
    """Evaluate every method on every perturbed copy of the test stream.

    ``methods`` maps a method name to a predict callable. The test stream
    is perturbed once per multiplier range with a seed derived from
    (master_seed, cell index); all methods see the same perturbed copy.
    """
    X_test = np.asarray(X_test, dtype=float)
    y_test = np.asarray(y_test, dtype=int).ravel()
    cells = []
    for cell_index, (lo, hi) in enumerate(ranges):
        spec = PerturbSpec(mode=mode, lo=lo, hi=hi,
                           seed=derive_cell_seed(master_seed, cell_index))
        Xp = perturb(X_test, y_test, spec)
        for name, predict in methods.items():
            report = metrics(predict(Xp), y_test)
            cells.append(ExperimentCell(table=table, mode=mode, lo=lo, hi=hi,
                                        method=name, report=report))
    return cells


def _fmt_rate(value: float | None) -> str:
    return "" if value is None else f"{value:.2f}"


def write_results_csv(path, cells: list[ExperimentCell]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_CSV_HEADER)
        for c in cells:
            writer.writerow([c.table, c.mode, repr(float(c.lo)), repr(float(c.hi)), c.method,
                             _fmt_rate(c.report.dr), _fmt_rate(c.report.fr), _fmt_rate(c.report.er)])


def write_counts_csv(path, cells: list[ExperimentCell]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COUNTS_CSV_HEADER)
        for c in cells:
            writer.writerow([c.table, c.mode, repr(float(c.lo)), repr(float(c.hi)), c.method,
                             c.report.tp, c.report.fp, c.report.tn, c.report.fn])


def format_experiment_table(cells: list[ExperimentCell]) -> str:
    """Aligned text table: one method block, one row per rate, one column per range."""
    ranges = []
    for c in cells:
        key = (c.lo, c.hi)
        if key not in ranges:
            ranges.append(key)
    methods = []
    for c in cells:
        if c.method not in methods:
            methods.append(c.method)
    by_key = {(c.method, c.lo, c.hi): c.report for c in cells}
    headers = [f"{lo:g}-{hi:g}" for lo, hi in ranges]
    width = max([8] + [len(h) for h in headers]) + 2
    name_width = max([10] + [len(m) for m in methods]) + 2
    lines = [" " * (name_width + 8) + "".join(h.rjust(width) for h in headers)]
    for method in methods:
        for rate, getter in (("DR", "dr"), ("FR", "fr"), ("ER", "er")):
            label = method if rate == "DR" else ""
            row = label.ljust(name_width) + f"{rate} (%)".ljust(8)
            for lo, hi in ranges:
                report = by_key[(method, lo, hi)]
                value = getattr(report, getter)
                row += ("-" if value is None else f"{value:.2f}").rjust(width)
            lines.append(row)
    return "\n".join(lines)

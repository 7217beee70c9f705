"""Feature-weight adaptation around the multi-kernel classifier.

Two flavours are trained from the same machinery. Mode "m" grows the
squared distance between the class means of the weighted features, mode
"s" shrinks the weighted intra-class scatter. Both move every dimension's
weight along the closed-form gradients of those two quadratics and stop
when the recent history of the monitored quantity enters the configured
corridor, or when the iteration budget is spent.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .features import ATTACK, MinMaxNormalizer, NORMAL
from .mkl import MklModel, simple_mkl_train

MODES = ("m", "s")

_RATIO_GUARD = 1e-12


@dataclass(frozen=True)
class WeightAdaptConfig:
    """Learning rates, stop corridors and iteration budget.

    lr1 scales the ascent on the class-mean separation, lr2 the descent on
    the intra-class scatter. t1..t3 bound the separation deltas checked by
    mode "m", t4..t6 the scatter deltas checked by mode "s"; p1..p4 are the
    matching delta-ratio floors. sigma1/sigma2 are optional hard bounds on
    separation and scatter (disabled by default); violating them aborts
    adaptation at the last feasible iterate.
    """

    lr1: float = 2e-5
    lr2: float = 2e-3
    t1: float = 1.002
    t2: float = 1.0065
    t3: float = 1.007
    t4: float = 7.3425
    t5: float = 7.8340
    t6: float = 7.8350
    p1: float = 0.000084
    p2: float = 0.000001
    p3: float = 0.000775
    p4: float = 0.000680
    sigma1: float = math.inf
    sigma2: float = -math.inf
    max_iter: int = 500
    init_w: tuple = (1.0, 1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.lr1 < 0 or self.lr2 < 0:
            raise ValueError("learning rates must be non-negative")
        if not self.t1 <= self.t2 <= self.t3:
            raise ValueError("need t1 <= t2 <= t3")
        if not self.t4 <= self.t5 <= self.t6:
            raise ValueError("need t4 <= t5 <= t6")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if any(w <= 0 for w in self.init_w):
            raise ValueError("initial weights must be strictly positive")


def m_smkl_defaults() -> WeightAdaptConfig:
    """Separation-major configuration (mode "m")."""
    return WeightAdaptConfig(lr1=2e-5, lr2=2e-3)


def s_smkl_defaults() -> WeightAdaptConfig:
    """Scatter-major configuration (mode "s")."""
    return WeightAdaptConfig(lr1=2e-5, lr2=2e-2)


@dataclass(frozen=True)
class ClassStats:
    """Per-dimension first and second moments of each class."""

    normal_mean: np.ndarray
    attack_mean: np.ndarray
    n_normal: int
    n_attack: int
    normal_sq_sum: np.ndarray
    attack_sq_sum: np.ndarray


@dataclass
class WeightAdaptState:
    """Trajectory of one adaptation run."""

    w: np.ndarray
    separation_history: list[float] = field(default_factory=list)
    scatter_history: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    aborted_by_bounds: bool = False


def class_stats(X, y) -> ClassStats:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).ravel()
    normal = X[y == NORMAL]
    attack = X[y == ATTACK]
    if normal.shape[0] == 0 or attack.shape[0] == 0:
        raise ValueError("both classes must be present")
    return ClassStats(
        normal_mean=normal.mean(axis=0),
        attack_mean=attack.mean(axis=0),
        n_normal=normal.shape[0],
        n_attack=attack.shape[0],
        normal_sq_sum=(normal ** 2).sum(axis=0),
        attack_sq_sum=(attack ** 2).sum(axis=0),
    )


def class_separation(w, stats: ClassStats) -> float:
    """Squared distance between the weighted class means."""
    w = np.asarray(w, dtype=float)
    return float(np.sum((w * (stats.normal_mean - stats.attack_mean)) ** 2))


def class_scatter(w, X, y, stats: ClassStats) -> float:
    """Total weighted squared deviation of samples from their class mean."""
    w = np.asarray(w, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).ravel()
    normal = X[y == NORMAL]
    attack = X[y == ATTACK]
    s1 = np.sum((w * (normal - stats.normal_mean)) ** 2)
    s2 = np.sum((w * (attack - stats.attack_mean)) ** 2)
    return float(s1 + s2)


def separation_gradient(w, stats: ClassStats) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return 2.0 * w * (stats.normal_mean - stats.attack_mean) ** 2


def scatter_gradient(w, stats: ClassStats) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    spread_normal = stats.normal_sq_sum - stats.n_normal * stats.normal_mean ** 2
    spread_attack = stats.attack_sq_sum - stats.n_attack * stats.attack_mean ** 2
    return 2.0 * (w * spread_normal + w * spread_attack)


def update_weights(w, sep_grad, scat_grad, lr1: float, lr2: float,
                   floor: float = 1e-8) -> np.ndarray:
    """One ascent/descent step on every dimension's weight.

    A raw update that lands at or below zero is floored at a small positive
    value so a weight can never silently flip a feature's sign.
    """
    w = np.asarray(w, dtype=float)
    raw = w + 2.0 * lr1 * np.asarray(sep_grad, dtype=float) \
            - 2.0 * lr2 * np.asarray(scat_grad, dtype=float)
    return np.where(raw <= 0.0, floor, raw)


def _ratio(num: float, den: float) -> float:
    # a vanishing denominator counts as an infinitely large ratio
    if abs(den) < _RATIO_GUARD:
        return math.inf
    return num / den


def stop_check(mode: str, separation_history, scatter_history, cfg: WeightAdaptConfig) -> bool:
    """Corridor test on the three most recent history entries.

    Needs at least three entries (previous, current, candidate); returns
    False otherwise. Mode "m" checks the separation delta chain
    t1 < |new| < t2 < |old| < t3, mode "s" the scatter delta chain
    t4 < |old| < t5 < |new| < t6; both additionally require the backward
    and forward delta ratios to clear their configured floors.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if len(separation_history) < 3 or len(scatter_history) < 3:
        return False
    m_prev, m_cur, m_next = separation_history[-3:]
    s_prev, s_cur, s_next = scatter_history[-3:]
    backward = _ratio(m_cur - m_prev, s_cur - s_prev)
    forward = _ratio(m_cur - m_next, s_cur - s_next)
    if mode == "m":
        chain = cfg.t1 < abs(m_next - m_cur) < cfg.t2 < abs(m_cur - m_prev) < cfg.t3
        return chain and backward > cfg.p1 and forward > cfg.p2
    chain = cfg.t4 < abs(s_cur - s_prev) < cfg.t5 < abs(s_next - s_cur) < cfg.t6
    return chain and backward > cfg.p3 and forward > cfg.p4


def _write_telemetry(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "M", "S", "w1", "w2", "w3", "w4", "w5", "J"])
        for row in rows:
            writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def train_adaptive(X, y, kernels=None, C: float = 1.0, cfg: WeightAdaptConfig | None = None,
                   mode: str = "m", mkl_max_iter: int = 200, obj_tol: float = 1e-5,
                   dual_tol: float = 1e-8, normalizer=None,
                   telemetry_path=None) -> tuple[MklModel, WeightAdaptState]:
    """Adapt feature weights around repeated multi-kernel fits.

    Each iteration scales the samples by the current weights, fits the
    multi-kernel classifier, appends the separation and scatter of the
    weighted features to the histories, then either stops (corridor test,
    hard bounds, or iteration budget) or takes one gradient step on the
    weights. The returned model carries the weights it was trained with.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    cfg = cfg or (m_smkl_defaults() if mode == "m" else s_smkl_defaults())
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).ravel()
    if len(cfg.init_w) != X.shape[1]:
        raise ValueError("init_w length must match the feature dimension")
    stats = class_stats(X, y)

    w = np.asarray(cfg.init_w, dtype=float)
    state = WeightAdaptState(w=w)
    rows = []
    model: MklModel | None = None
    for it in range(cfg.max_iter):
        separation = class_separation(w, stats)
        scatter = class_scatter(w, X, y, stats)
        if separation >= cfg.sigma1 or scatter <= cfg.sigma2:
            if model is None:
                raise ValueError("initial weights already violate the hard bounds")
            state.aborted_by_bounds = True
            break
        model = simple_mkl_train(X, y, kernels=kernels, C=C, feature_weights=w,
                                 max_iter=mkl_max_iter, obj_tol=obj_tol, dual_tol=dual_tol,
                                 normalizer=normalizer, warn_on_nonconvergence=False)
        state.separation_history.append(separation)
        state.scatter_history.append(scatter)
        state.iterations = it + 1
        rows.append((it, separation, scatter, *w, model.objective))
        if stop_check(mode, state.separation_history, state.scatter_history, cfg):
            state.converged = True
            break
        if it == cfg.max_iter - 1:
            break
        w = update_weights(w, separation_gradient(w, stats), scatter_gradient(w, stats),
                           cfg.lr1, cfg.lr2)
    assert model is not None
    state.w = model.feature_weights
    if telemetry_path is not None:
        _write_telemetry(telemetry_path, rows)
    return model, state


class AdaptiveMklClassifier(ClassifierMixin, BaseEstimator):
    """Multi-kernel classifier with adapted per-dimension feature weights.

    Parameters
    ----------
    mode : {"m", "s"}
        "m" favours growing the class-mean separation, "s" favours
        shrinking the intra-class scatter.
    kernels : list of KernelSpec or None
        Base kernels; None selects the default bank.
    C : float
        Box constraint of the inner dual problem.
    adapt : WeightAdaptConfig or None
        Adaptation schedule; None selects the mode's defaults.
    normalize : bool
        Fit a MinMaxNormalizer on the raw training features first.
    telemetry_path : str or None
        When set, one CSV row per adaptation iteration is written there.
    """

    def __init__(self, mode="m", kernels=None, C=1.0, adapt=None, normalize=True,
                 mkl_max_iter=200, obj_tol=1e-5, dual_tol=1e-8, telemetry_path=None):
        self.mode = mode
        self.kernels = kernels
        self.C = C
        self.adapt = adapt
        self.normalize = normalize
        self.mkl_max_iter = mkl_max_iter
        self.obj_tol = obj_tol
        self.dual_tol = dual_tol
        self.telemetry_path = telemetry_path

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if not np.all(np.isin(y, (-1, 1))):
            raise ValueError("labels must be +1 (normal) or -1 (attack)")
        normalizer = None
        X_fit = X
        if self.normalize:
            normalizer = MinMaxNormalizer().fit(X)
            X_fit = normalizer.transform(X)
        self.model_, self.adapt_state_ = train_adaptive(
            X_fit, y, kernels=self.kernels, C=self.C, cfg=self.adapt, mode=self.mode,
            mkl_max_iter=self.mkl_max_iter, obj_tol=self.obj_tol, dual_tol=self.dual_tol,
            normalizer=normalizer, telemetry_path=self.telemetry_path,
        )
        self.feature_weights_ = self.model_.feature_weights
        self.converged_ = self.adapt_state_.converged
        self.classes_ = np.array([-1, 1])
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return self.model_.decision_function(check_array(X))

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict(check_array(X))

"""Multiple kernel learning around the dual solver.

Training alternates exact dual solves at fixed kernel weights with
projected reduced-gradient steps on the weight simplex, backtracking the
step until the dual optimum decreases. The final model keeps only its
support vectors and scores new samples against them.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .dual import solve_dual
from .features import MinMaxNormalizer
from .kernels import KernelSpec, combined_gram, default_kernel_bank, gram

MODEL_FORMAT_VERSION = 1

_WEIGHT_FLOOR = 1e-8
_MIN_STEP = 1e-8
_ARMIJO = 1e-4


def project_to_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=float).ravel()
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, v.size + 1)
    candidates = u + (1.0 - css) / k
    rho = int(np.nonzero(candidates > 0)[0][-1])
    tau = (1.0 - css[rho]) / (rho + 1)
    return np.maximum(v + tau, 0.0)


@dataclass
class MklModel:
    """A trained multi-kernel classifier, sufficient for scoring.

    Support vectors are stored in the feature space the trainer saw,
    before the per-dimension feature weights are applied; the weights are
    re-applied at scoring time. When a normalizer is attached it is applied
    to incoming samples first.
    """

    kernels: list[KernelSpec]
    kernel_weights: np.ndarray
    support_vectors: np.ndarray
    support_labels: np.ndarray
    support_alphas: np.ndarray
    bias: float
    feature_weights: np.ndarray
    C: float
    normalizer: MinMaxNormalizer | None = None
    converged: bool = True
    objective: float = float("nan")
    objective_history: list[float] = field(default_factory=list)
    weight_history: list[list[float]] = field(default_factory=list)

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.normalizer is not None:
            X = self.normalizer.transform(X)
        sv = self.support_vectors * self.feature_weights
        K = combined_gram(self.kernels, self.kernel_weights, sv, X * self.feature_weights)
        return (self.support_alphas * self.support_labels) @ K + self.bias

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return np.where(scores >= 0.0, 1, -1)

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kernels": [k.to_dict() for k in self.kernels],
            "kernel_weights": self.kernel_weights.tolist(),
            "support_vectors": self.support_vectors.tolist(),
            "support_labels": self.support_labels.tolist(),
            "support_alphas": self.support_alphas.tolist(),
            "bias": self.bias,
            "feature_weights": self.feature_weights.tolist(),
            "C": self.C,
            "normalizer": self.normalizer.to_dict() if self.normalizer is not None else None,
            "converged": self.converged,
            "objective": self.objective,
            "objective_history": list(self.objective_history),
            "weight_history": [list(w) for w in self.weight_history],
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_dict(cls, payload: dict) -> "MklModel":
        version = payload.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version!r}")
        norm = payload.get("normalizer")
        return cls(
            kernels=[KernelSpec.from_dict(k) for k in payload["kernels"]],
            kernel_weights=np.asarray(payload["kernel_weights"], dtype=float),
            support_vectors=np.asarray(payload["support_vectors"], dtype=float),
            support_labels=np.asarray(payload["support_labels"], dtype=float),
            support_alphas=np.asarray(payload["support_alphas"], dtype=float),
            bias=float(payload["bias"]),
            feature_weights=np.asarray(payload["feature_weights"], dtype=float),
            C=float(payload["C"]),
            normalizer=MinMaxNormalizer.from_dict(norm) if norm is not None else None,
            converged=bool(payload["converged"]),
            objective=float(payload["objective"]),
            objective_history=[float(v) for v in payload.get("objective_history", [])],
            weight_history=[list(map(float, w)) for w in payload.get("weight_history", [])],
        )

    @classmethod
    def load(cls, path) -> "MklModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def save_model(model: MklModel, path) -> None:
    model.save(path)


def load_model(path) -> MklModel:
    return MklModel.load(path)


def simple_mkl_train(X, y, kernels=None, C: float = 1.0, feature_weights=None,
                     max_iter: int = 200, obj_tol: float = 1e-5, dual_tol: float = 1e-8,
                     sv_threshold: float = 1e-10, normalizer=None,
                     warn_on_nonconvergence: bool = True) -> MklModel:
    """Fit a soft-margin classifier over a convex combination of kernels.

    Kernel weights start uniform and move by projected gradient steps on
    the dual optimum, halving the step from 1.0 until the optimum decreases
    (Armijo condition, minimum step 1e-8). Stops when the optimum changes
    by less than ``obj_tol`` or no descent step exists; hitting ``max_iter``
    returns the best iterate with the converged flag cleared.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    kernels = list(kernels) if kernels else default_kernel_bank()
    if feature_weights is None:
        feature_weights = np.ones(X.shape[1])
    w = np.asarray(feature_weights, dtype=float).ravel()
    if w.size != X.shape[1] or np.any(w <= 0):
        raise ValueError("feature_weights must be strictly positive, one per dimension")
    if np.all(y > 0) or np.all(y < 0):
        raise ValueError("training data must contain both classes")

    Xw = X * w
    grams = [gram(spec, Xw) for spec in kernels]
    m = len(kernels)
    d = np.full(m, 1.0 / m)

    def dual_at(weights):
        Kd = sum(dm * G for dm, G in zip(weights, grams))
        return solve_dual(Kd, y, C, tol=dual_tol)

    sol = dual_at(d)
    objective = sol.objective
    obj_history = [objective]
    d_history = [d.tolist()]
    converged = m == 1
    for _ in range(max_iter if m > 1 else 0):
        v = sol.alpha * y
        grad = np.array([-0.5 * v @ G @ v for G in grams])
        step = 1.0
        accepted = False
        while step >= _MIN_STEP:
            d_new = project_to_simplex(d - step * grad)
            if np.max(np.abs(d_new - d)) < 1e-15:
                step *= 0.5
                continue
            sol_new = dual_at(d_new)
            if sol_new.objective <= objective + _ARMIJO * grad @ (d_new - d):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True  # no descent direction left on the simplex
            break
        delta = objective - sol_new.objective
        d, sol, objective = d_new, sol_new, sol_new.objective
        obj_history.append(objective)
        d_history.append(d.tolist())
        if abs(delta) < obj_tol:
            converged = True
            break
    if not converged and warn_on_nonconvergence:
        warnings.warn("kernel weight optimization did not converge within max_iter",
                      RuntimeWarning, stacklevel=2)

    keep = sol.alpha > sv_threshold
    model = MklModel(
        kernels=kernels,
        kernel_weights=d,
        support_vectors=X[keep],
        support_labels=y[keep],
        support_alphas=sol.alpha[keep],
        bias=sol.bias,
        feature_weights=w,
        C=C,
        normalizer=normalizer,
        converged=converged,
        objective=objective,
        objective_history=obj_history,
        weight_history=d_history,
    )
    return model


class SimpleMklClassifier(ClassifierMixin, BaseEstimator):
    """Soft-margin SVM over a learned convex combination of kernels.

    Parameters
    ----------
    kernels : list of KernelSpec or None
        Base kernels; None selects the default bank of two gaussian and
        two polynomial kernels.
    C : float
        Box constraint of the dual.
    feature_weights : array-like or None
        Fixed per-dimension scaling applied inside the kernels.
    normalize : bool
        Fit a MinMaxNormalizer on the training data and apply it before
        every kernel evaluation.
    """

    def __init__(self, kernels=None, C=1.0, feature_weights=None, normalize=False,
                 max_iter=200, obj_tol=1e-5, dual_tol=1e-8):
        self.kernels = kernels
        self.C = C
        self.feature_weights = feature_weights
        self.normalize = normalize
        self.max_iter = max_iter
        self.obj_tol = obj_tol
        self.dual_tol = dual_tol

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if not np.all(np.isin(y, (-1, 1))):
            raise ValueError("labels must be +1 (normal) or -1 (attack)")
        normalizer = None
        X_fit = X
        if self.normalize:
            normalizer = MinMaxNormalizer().fit(X)
            X_fit = normalizer.transform(X)
        self.model_ = simple_mkl_train(
            X_fit, y, kernels=self.kernels, C=self.C,
            feature_weights=self.feature_weights, max_iter=self.max_iter,
            obj_tol=self.obj_tol, dual_tol=self.dual_tol, normalizer=normalizer,
        )
        self.kernel_weights_ = self.model_.kernel_weights
        self.objective_history_ = list(self.model_.objective_history)
        self.converged_ = self.model_.converged
        self.classes_ = np.array([-1, 1])
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return self.model_.decision_function(check_array(X))

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict(check_array(X))

"""Kernel bank and Gram matrix assembly."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KERNEL_KINDS = ("gaussian", "polynomial", "linear")


@dataclass(frozen=True)
class KernelSpec:
    """One base kernel. Only the fields relevant to ``kind`` are used."""

    kind: str
    bandwidth: float = 1.0
    degree: int = 2
    coef0: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian" and self.bandwidth <= 0:
            raise ValueError("gaussian bandwidth must be positive")
        if self.kind == "polynomial" and self.degree < 1:
            raise ValueError("polynomial degree must be >= 1")

    def label(self) -> str:
        if self.kind == "gaussian":
            return f"gaussian:{self.bandwidth!r}"
        if self.kind == "polynomial":
            return f"polynomial:{self.degree}:{self.coef0!r}"
        return "linear"

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        parts = text.strip().split(":")
        kind = parts[0]
        if kind == "linear":
            return cls("linear")
        if kind == "gaussian":
            if len(parts) != 2:
                raise ValueError(f"gaussian kernel needs a bandwidth: {text!r}")
            return cls("gaussian", bandwidth=float(parts[1]))
        if kind in ("polynomial", "poly"):
            if len(parts) not in (2, 3):
                raise ValueError(f"polynomial kernel needs degree[:coef0]: {text!r}")
            coef0 = float(parts[2]) if len(parts) == 3 else 1.0
            return cls("polynomial", degree=int(parts[1]), coef0=coef0)
        raise ValueError(f"unknown kernel kind {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "bandwidth": self.bandwidth}
        if self.kind == "polynomial":
            return {"kind": "polynomial", "degree": self.degree, "coef0": self.coef0}
        return {"kind": "linear"}

    @classmethod
    def from_dict(cls, payload: dict) -> "KernelSpec":
        return cls(**payload)


def default_kernel_bank() -> list[KernelSpec]:
    """Two gaussian and two polynomial kernels."""
    return [
        KernelSpec("gaussian", bandwidth=0.5),
        KernelSpec("gaussian", bandwidth=2.0),
        KernelSpec("polynomial", degree=2, coef0=1.0),
        KernelSpec("polynomial", degree=3, coef0=1.0),
    ]


def gram(spec: KernelSpec, X, Y=None) -> np.ndarray:
    """Kernel matrix k(x_i, y_j) for rows of X against rows of Y (or X)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    dots = X @ Y.T
    if spec.kind == "linear":
        return dots
    if spec.kind == "polynomial":
        return (dots + spec.coef0) ** spec.degree
    sq = (X * X).sum(axis=1)[:, None] + (Y * Y).sum(axis=1)[None, :] - 2.0 * dots
    np.clip(sq, 0.0, None, out=sq)
    return np.exp(-sq / (2.0 * spec.bandwidth ** 2))


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Single kernel evaluation between two vectors."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(gram(spec, x[None, :], y[None, :])[0, 0])


def combined_gram(kernels: list[KernelSpec], weights, X, Y=None) -> np.ndarray:
    """Weighted sum of base kernel matrices."""
    weights = np.asarray(weights, dtype=float)
    if len(kernels) != weights.size:
        raise ValueError("one weight per kernel required")
    out = None
    for spec, w in zip(kernels, weights):
        g = gram(spec, X, Y)
        out = w * g if out is None else out + w * g
    if out is None:
        raise ValueError("kernel list must be non-empty")
    return out

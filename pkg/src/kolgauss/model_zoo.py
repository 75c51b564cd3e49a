"""Nonlinear drifts ``B`` and initial data ``u0``.

All evaluators are vectorised: the state argument may carry any number of
leading batch axes, the last axis being the dimension ``d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError

NONLINEARITY_KINDS = ("zero", "constant", "sine", "sine_skew", "poly_bounded")
# how the poly_bounded normaliser ||ybar|| / (||ybar|| + ||ybar - x||^p) measures size
POLY_NORMS = ("euclidean", "max", "componentwise")
DATUM_KINDS = ("threshold", "trig")


def _vector(v) -> Optional[np.ndarray]:
    if v is None:
        return None
    arr = np.array(v, dtype=np.float64).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Nonlinearity:
    kind: str
    b: Optional[np.ndarray] = None
    ybar: Optional[np.ndarray] = None
    p: float = 2.0
    declared_sup: Optional[float] = None
    norm: str = "euclidean"

    def __post_init__(self):
        if self.kind not in NONLINEARITY_KINDS:
            raise ConfigError(f"unknown nonlinearity {self.kind!r}; "
                              f"expected one of {NONLINEARITY_KINDS}")
        object.__setattr__(self, "b", _vector(self.b))
        object.__setattr__(self, "ybar", _vector(self.ybar))
        if self.kind == "constant" and self.b is None:
            raise ConfigError("constant nonlinearity needs a vector b")
        if self.kind == "poly_bounded":
            if self.ybar is None or not np.linalg.norm(self.ybar) > 0:
                raise ConfigError("poly_bounded needs ybar with nonzero norm")
            if not self.p >= 1:
                raise ConfigError(f"poly_bounded needs p >= 1, got {self.p}")
            if self.norm not in POLY_NORMS:
                raise ConfigError(f"unknown poly_bounded norm {self.norm!r}; expected one of {POLY_NORMS}")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, b):
        return cls("constant", b=b)

    @classmethod
    def sine(cls):
        return cls("sine")

    @classmethod
    def sine_skew(cls, declared_sup: Optional[float] = None):
        return cls("sine_skew", declared_sup=declared_sup)

    @classmethod
    def poly_bounded(cls, ybar, p: float = 2.0, norm: str = "euclidean"):
        """Bounded attractor drift towards ``ybar``.

        ``norm="componentwise"`` replaces both norms in the normaliser by the
        absolute values of the matching components, ``"max"`` uses the
        max-norm; the default is the Euclidean norm.
        """
        return cls("poly_bounded", ybar=ybar, p=p, norm=norm)


@dataclass(frozen=True)
class InitialDatum:
    kind: str
    H: float = 1.0
    h: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in DATUM_KINDS:
            raise ConfigError(f"unknown initial datum {self.kind!r}; expected one of {DATUM_KINDS}")
        object.__setattr__(self, "h", _vector(self.h))
        if self.kind == "trig" and self.h is None:
            raise ConfigError("trig datum needs a vector h")

    @classmethod
    def threshold(cls, H: float = 1.0):
        return cls("threshold", H=H)

    @classmethod
    def trig(cls, h):
        return cls("trig", h=h)

    @property
    def sup_norm(self) -> float:
        return 1.0


def skew_matrix(d: int) -> np.ndarray:
    """Toeplitz matrix with +1 above the diagonal, -1 below, 0 on it."""
    return np.triu(np.ones((d, d)), 1) - np.tril(np.ones((d, d)), -1)


def _check_dim(x: np.ndarray, vec: Optional[np.ndarray], name: str) -> None:
    if vec is not None and x.shape[-1] != vec.shape[0]:
        raise ConfigError(f"state has dimension {x.shape[-1]} but {name} has length {vec.shape[0]}")


def eval_B(nl: Nonlinearity, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        raise ConfigError("state must be a vector")
    if nl.kind == "zero":
        return np.zeros_like(x)
    if nl.kind == "constant":
        _check_dim(x, nl.b, "b")
        return np.broadcast_to(nl.b, x.shape).copy()
    if nl.kind == "sine":
        return np.sin(x)
    if nl.kind == "sine_skew":
        # (B_m x)_i = sum_{j>i} x_j - sum_{j<i} x_j, computed with cumulative sums
        total = x.sum(axis=-1, keepdims=True)
        before = np.cumsum(x, axis=-1) - x
        after = total - before - x
        return np.sin(x) * (after - before)
    # poly_bounded
    _check_dim(x, nl.ybar, "ybar")
    y = nl.ybar - x
    mag = np.abs(y)
    num = y * mag ** (nl.p - 1.0)
    if nl.norm == "componentwise":
        scale = np.abs(nl.ybar)
        return scale * num / (scale + mag ** nl.p)
    if nl.norm == "max":
        scale = float(np.max(np.abs(nl.ybar)))
        size = mag.max(axis=-1, keepdims=True)
    else:
        scale = float(np.linalg.norm(nl.ybar))
        size = np.linalg.norm(y, axis=-1, keepdims=True)
    return scale * num / (scale + size ** nl.p)


def eval_u0(u0: InitialDatum, x) -> np.ndarray | float:
    """Evaluate the initial datum; batch axes are preserved, the last is reduced."""
    x = np.asarray(x, dtype=np.float64)
    if u0.kind == "threshold":
        out = (np.linalg.norm(x, axis=-1) >= u0.H).astype(np.float64)
    else:
        _check_dim(x, u0.h, "h")
        out = np.cos(x @ u0.h)
    return float(out) if np.ndim(out) == 0 else out


def sup_norm_B(nl: Nonlinearity, d: Optional[int] = None) -> Optional[float]:
    """Euclidean sup norm of ``B`` over all states, or ``None`` if unbounded.

    ``sine`` needs the dimension: the bound is ``sqrt(d)``.  For the
    Euclidean ``poly_bounded`` the supremum ``||ybar||`` is approached (never
    attained) along a coordinate axis far from ``ybar``; the componentwise
    variant has the same supremum, the max-norm variant ``sqrt(d) max|ybar_i|``.
    """
    if nl.kind == "zero":
        return 0.0
    if nl.kind == "constant":
        return float(np.linalg.norm(nl.b))
    if nl.kind == "sine":
        if d is None:
            raise ConfigError("sup_norm_B for sine requires the dimension d")
        return math.sqrt(d)
    if nl.kind == "poly_bounded":
        if nl.norm == "max":
            return math.sqrt(nl.ybar.size) * float(np.max(np.abs(nl.ybar)))
        return float(np.linalg.norm(nl.ybar))
    return nl.declared_sup

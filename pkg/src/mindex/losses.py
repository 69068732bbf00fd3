"""Scalar losses, their t-derivatives, and the preprocessing values l'(0, y).

The derivative of the loss at a zero prediction acts as a label transform:
its values weight the second-moment matrix that drives first-stage feature
learning. Centering those values (on by default) removes the mean so the
weighted second-moment matrix keeps its low-rank signal structure.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LossFunction", "PreprocValues", "loss_value", "loss_d1", "preprocess"]

_KINDS = ("square", "huber", "pseudo_huber", "l1")


@dataclass(frozen=True)
class LossFunction:
    """One of square, huber(delta), pseudo_huber(delta), l1.

    All are convex in the first argument and vanish on the diagonal t = y.
    huber/pseudo_huber/l1 have globally bounded first derivative; square has
    the relaxed linear-growth bound.
    """

    kind: str
    delta: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind in ("huber", "pseudo_huber") and self.delta <= 0:
            raise ValueError(f"loss delta must be positive, got {self.delta}")

    def value(self, t, y):
        return loss_value(self, t, y)

    def d1(self, t, y):
        return loss_d1(self, t, y)

    @property
    def d1_bound(self) -> float | None:
        """Global bound on |dl/dt|, or None for square (linear growth)."""
        if self.kind == "square":
            return None
        if self.kind == "l1":
            return 1.0
        return self.delta


def loss_value(loss: LossFunction, t, y):
    """l(t, y), elementwise on arrays."""
    r = np.asarray(t, dtype=float) - np.asarray(y, dtype=float)
    if loss.kind == "square":
        out = 0.5 * r * r
    elif loss.kind == "huber":
        d = loss.delta
        out = np.where(np.abs(r) <= d, 0.5 * r * r, d * np.abs(r) - 0.5 * d * d)
    elif loss.kind == "pseudo_huber":
        d = loss.delta
        out = d * d * (np.sqrt(1.0 + (r / d) ** 2) - 1.0)
    else:
        out = np.abs(r)
    return out if out.ndim else float(out)


def loss_d1(loss: LossFunction, t, y):
    """dl/dt at (t, y), elementwise. l1 uses subgradient 0 at the kink."""
    r = np.asarray(t, dtype=float) - np.asarray(y, dtype=float)
    if loss.kind == "square":
        out = r
    elif loss.kind == "huber":
        out = np.clip(r, -loss.delta, loss.delta)
    elif loss.kind == "pseudo_huber":
        out = r / np.sqrt(1.0 + (r / loss.delta) ** 2)
    else:
        out = np.sign(r)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PreprocValues:
    """Values l'(0, y_i), raw and mean-centered."""

    raw: np.ndarray
    centered: np.ndarray
    centering_applied: bool

    @property
    def values(self) -> np.ndarray:
        """The vector downstream consumers should use."""
        return self.centered if self.centering_applied else self.raw


def preprocess(loss: LossFunction, y: np.ndarray, center: bool = True) -> PreprocValues:
    """Compute l_i = l'(0, y_i) and optionally center them to zero mean."""
    y = np.asarray(y, dtype=float)
    if y.size < 1:
        raise ValueError("need at least one label")
    raw = np.asarray(loss_d1(loss, 0.0, y))
    centered = raw - raw.mean()
    return PreprocValues(raw=raw, centered=centered, centering_applied=center)

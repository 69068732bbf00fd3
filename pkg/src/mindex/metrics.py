"""Subspace-recovery and generalization metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Activation, NetworkParams, forward
from .targets import HiddenSubspace, MultiIndexTarget
from .losses import LossFunction, loss_value

__all__ = [
    "UndefinedMetricError",
    "RecoveryReport",
    "cos_best",
    "direction_coverage",
    "principal_angles",
    "test_error",
    "recovery_report",
]

_ROW_TOL = 0.0  # rows must be exactly nonzero to count


class UndefinedMetricError(ValueError):
    """Raised when every feature row is zero and alignment is meaningless."""


def _nonzero_unit_rows(W: np.ndarray) -> np.ndarray:
    W = np.atleast_2d(np.asarray(W, dtype=float))
    norms = np.linalg.norm(W, axis=1)
    keep = norms > _ROW_TOL
    if not keep.any():
        raise UndefinedMetricError("all feature rows are zero")
    return W[keep] / norms[keep, None]


def _abs_cosines(W: np.ndarray, U: HiddenSubspace) -> np.ndarray:
    """|cos| table, rows = kept neurons, columns = true directions."""
    Wn = _nonzero_unit_rows(W)
    return np.abs(Wn @ U.U.T)


def cos_best(W: np.ndarray, U: HiddenSubspace) -> float:
    """Maximum |cosine| between any nonzero feature row and any true direction.

    Sign-invariant by construction: the built-in targets are even in each
    hidden direction, so only |cos| is identifiable.
    """
    return float(_abs_cosines(W, U).max())


def direction_coverage(W: np.ndarray, U: HiddenSubspace) -> np.ndarray:
    """Per-true-direction best alignment; its minimum certifies full-span
    recovery."""
    return _abs_cosines(W, U).max(axis=0)


def _canonical_rows(W: np.ndarray) -> np.ndarray:
    """Sign-normalize and sort rows so any permutation / sign flip of the
    same row set maps to one representative matrix (keeps the metric
    bitwise reproducible; the row span is unchanged)."""
    W = W.copy()
    for i, row in enumerate(W):
        nz = np.nonzero(row)[0]
        if nz.size and row[nz[0]] < 0:
            W[i] = -row
    order = np.lexsort(W.T[::-1])
    return W[order]


def principal_angles(W: np.ndarray, U: HiddenSubspace) -> np.ndarray:
    """Principal angles between span(rows of W) and span(U), in [0, pi/2].

    Computed from the singular values of Q_W U^T where Q_W is an orthonormal
    basis of the row space of W. Returns min(rank(W), r) angles, ascending.
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if not (np.linalg.norm(W, axis=1) > 0).any():
        raise UndefinedMetricError("all feature rows are zero")
    # Orthonormal basis of the row space via SVD.
    _, s, Vt = np.linalg.svd(_canonical_rows(W), full_matrices=False)
    rank = int(np.sum(s > max(W.shape) * np.finfo(float).eps * s[0]))
    Q = Vt[:rank]
    G = Q @ U.U.T
    sv = np.linalg.svd(G, compute_uv=False)
    sv = np.clip(sv, 0.0, 1.0)
    return np.sort(np.arccos(sv))


def test_error(params: NetworkParams, act: Activation, target: MultiIndexTarget,
               metric: str | LossFunction = "mse", n_test: int = 10_000,
               seed: int = 0) -> float:
    """Monte-Carlo generalization error on a fresh seeded sample.

    ``metric`` is "mse" for the squared gap, or a LossFunction evaluated at
    (network output, target value).
    """
    if n_test < 1:
        raise ValueError("n_test must be >= 1")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_test, target.d))
    f = forward(params, act, X)
    ystar = target(X)
    if metric == "mse":
        return float(((f - ystar) ** 2).mean())
    if isinstance(metric, LossFunction):
        return float(np.mean(loss_value(metric, f, ystar)))
    raise ValueError(f"unknown metric {metric!r}")


@dataclass(frozen=True)
class RecoveryReport:
    """Alignment metrics of a trained feature matrix against the truth."""

    cos_best: float
    per_direction: np.ndarray
    coverage_min: float
    principal_angles: np.ndarray
    test_error: float


def recovery_report(params: NetworkParams, act: Activation,
                    target: MultiIndexTarget, n_test: int = 10_000,
                    seed: int = 0) -> RecoveryReport:
    per_dir = direction_coverage(params.W, target.subspace)
    return RecoveryReport(
        cos_best=float(per_dir.max()),
        per_direction=per_dir,
        coverage_min=float(per_dir.min()),
        principal_angles=principal_angles(params.W, target.subspace),
        test_error=test_error(params, act, target, "mse", n_test=n_test, seed=seed),
    )

"""Weighted second-moment matrices, eigen-reports, and power-iteration oracles.

The preprocessing matrix is (1/n) sum_i l_i x_i x_i^T with l_i = l'(0, y_i).
Its population version has rank at most r (supported on the hidden subspace)
once the values are centered, and the gap between the two has operator norm
of order sqrt(d/n). First-stage gradient descent tracks repeated
multiplication by the empirical matrix; the oracles here make that statement
measurable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import LossFunction, PreprocValues, loss_d1
from .targets import MultiIndexTarget

__all__ = [
    "SpectralReport",
    "DeviationReport",
    "DegenerateSpectrumError",
    "symmetrize",
    "op_norm",
    "empirical_sigma",
    "population_sigma",
    "eigen_report",
    "oracle_features",
    "deviation_report",
    "noise_norm",
    "alignment_to_subspace",
]


class DegenerateSpectrumError(ValueError):
    """Raised when a fixed-rank report hits an exactly zero eigenvalue."""


def symmetrize(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


def op_norm(A: np.ndarray) -> float:
    """Spectral norm of a symmetric matrix (largest |eigenvalue|)."""
    return float(np.max(np.abs(np.linalg.eigvalsh(symmetrize(A)))))


def _values_of(ell) -> np.ndarray:
    if isinstance(ell, PreprocValues):
        return ell.values
    return np.asarray(ell, dtype=float)


def empirical_sigma(X: np.ndarray, ell) -> np.ndarray:
    """(1/n) sum_i l_i x_i x_i^T, explicitly symmetrized.

    ``ell`` may be a PreprocValues (its active vector is used) or a plain
    n-vector of weights.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    v = _values_of(ell)
    if X.shape[0] != v.shape[0]:
        raise ValueError("weight vector length must match the number of rows")
    if X.shape[0] == 0:
        raise ValueError("need at least one sample")
    return symmetrize((X * v[:, None]).T @ X / X.shape[0])


def population_sigma(target: MultiIndexTarget, loss: LossFunction,
                     n_mc: int = 1_000_000, seed: int = 0, center: bool = True,
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo estimate of E[l'(0, y) x x^T] with per-entry standard errors.

    Centering (default, mirroring the empirical preprocessing) subtracts the
    mean of the values inside the Monte-Carlo batch, which removes the
    identity bulk E[l] I and leaves the rank-<=r signal.

    Returns
    -------
    (Sigma, SE)
        Sigma : d x d symmetric estimate.
        SE : d x d matrix of standard errors of each entry's MC mean.
    """
    if n_mc < 10_000:
        raise ValueError("population estimate needs n_mc >= 10^4")
    rng = np.random.default_rng(seed)
    d = target.d
    # Shard the draw so d=200 x 10^6 stays within memory. Centering uses the
    # batch mean of the values, so accumulate the moment matrices needed to
    # recenter after the fact instead of holding the samples.
    shard = max(1, min(n_mc, int(8e6 / max(d, 1))))
    S1 = np.zeros((d, d))   # sum l x x^T
    S0 = np.zeros((d, d))   # sum x x^T
    T2 = np.zeros((d, d))   # sum l^2 (x_a x_b)^2
    T1 = np.zeros((d, d))   # sum l (x_a x_b)^2
    T0 = np.zeros((d, d))   # sum (x_a x_b)^2
    sum_l = 0.0
    done = 0
    while done < n_mc:
        k = min(shard, n_mc - done)
        X = rng.standard_normal((k, d))
        ell = np.asarray(loss_d1(loss, 0.0, target(X)))
        sum_l += ell.sum()
        S1 += (X * ell[:, None]).T @ X
        S0 += X.T @ X
        Xsq = X * X
        T2 += (Xsq * (ell * ell)[:, None]).T @ Xsq
        T1 += (Xsq * ell[:, None]).T @ Xsq
        T0 += Xsq.T @ Xsq
        done += k
    mu = (sum_l / n_mc) if center else 0.0
    M1 = (S1 - mu * S0) / n_mc
    M2 = (T2 - 2.0 * mu * T1 + mu * mu * T0) / n_mc
    var = np.maximum(M2 - M1 * M1, 0.0)
    SE = np.sqrt(var / n_mc)
    return symmetrize(M1), symmetrize(SE)


def mc_error_scale(SE: np.ndarray) -> float:
    """Scalar operator-norm-level summary of a per-entry SE matrix."""
    return float(np.linalg.norm(SE, 2))


@dataclass(frozen=True)
class SpectralReport:
    """Full symmetric eigendecomposition ordered by eigenvalue magnitude."""

    eigenvalues: np.ndarray          # sorted by |.| descending
    eigenvectors: np.ndarray         # columns, matching order
    r_hat: int
    kappa_hat: float                 # |lambda_1| / |lambda_r_hat|; nan if degenerate
    rank_threshold: float | None
    degenerate: bool

    @property
    def top_basis(self) -> np.ndarray:
        """d x r_hat matrix of the leading eigenvectors."""
        return self.eigenvectors[:, : self.r_hat]


def eigen_report(Sigma: np.ndarray, rank_rule: int | str = "threshold",
                 tau_rel: float = 0.2) -> SpectralReport:
    """Eigendecompose and estimate the signal rank.

    ``rank_rule`` is either an integer (fixed, preferred when r is known) or
    the string "threshold": count eigenvalues with |lambda| >= tau_rel *
    |lambda_1|. Eigenvalues are reported by magnitude; no sign convention is
    imposed, since the training dynamics absorb signs through (-a_j)^T.
    """
    Sigma = symmetrize(np.asarray(Sigma, dtype=float))
    if not np.isfinite(Sigma).all():
        raise ValueError("matrix must be finite")
    vals, vecs = np.linalg.eigh(Sigma)
    order = np.argsort(-np.abs(vals), kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    if isinstance(rank_rule, (int, np.integer)):
        r_hat = int(rank_rule)
        if r_hat < 1 or r_hat > len(vals):
            raise ValueError(f"fixed rank {r_hat} out of range")
        if np.abs(vals[r_hat - 1]) == 0.0:
            raise DegenerateSpectrumError(
                f"eigenvalue {r_hat} is exactly zero under fixed-rank rule")
        tau = None
    elif rank_rule == "threshold":
        top = np.abs(vals[0])
        r_hat = 0 if top == 0.0 else int(np.sum(np.abs(vals) >= tau_rel * top))
        tau = tau_rel
    else:
        raise ValueError(f"unknown rank rule {rank_rule!r}")
    degenerate = r_hat == 0
    kappa = float("nan") if degenerate else float(np.abs(vals[0]) / np.abs(vals[r_hat - 1]))
    return SpectralReport(eigenvalues=vals, eigenvectors=vecs, r_hat=r_hat,
                          kappa_hat=kappa, rank_threshold=tau, degenerate=degenerate)


def oracle_features(W0: np.ndarray, a: np.ndarray, Sigma: np.ndarray,
                    eta: float, T1: int, eps0: float) -> np.ndarray:
    """Idealized first-stage features: row j is
    (1/eps0) (-a_j)^T1 eta^T1 Sigma^T1 w_j(0).

    The matrix power is applied by repeated multiplication (T1 is small).
    When the activation's sigma''(0) is not 1, pass eta scaled by it.
    """
    W0 = np.atleast_2d(np.asarray(W0, dtype=float))
    V = W0.T.copy()
    for _ in range(T1):
        V = Sigma @ V
    signs = np.power(-np.asarray(a, dtype=float), T1)
    return (eta ** T1 / eps0) * signs[:, None] * V.T


@dataclass(frozen=True)
class DeviationReport:
    """Per-neuron relative distances between trained and oracle features."""

    per_neuron: np.ndarray
    max: float
    median: float


def deviation_report(W_trained: np.ndarray, W_oracle: np.ndarray) -> DeviationReport:
    """Relative error per neuron: |w_trained - w_oracle| / max(|w_oracle|, tiny)."""
    Wt = np.atleast_2d(np.asarray(W_trained, dtype=float))
    Wo = np.atleast_2d(np.asarray(W_oracle, dtype=float))
    if Wt.shape != Wo.shape:
        raise ValueError("shapes must agree")
    num = np.linalg.norm(Wt - Wo, axis=1)
    den = np.maximum(np.linalg.norm(Wo, axis=1), np.finfo(float).tiny)
    rel = num / den
    return DeviationReport(per_neuron=rel, max=float(rel.max()), median=float(np.median(rel)))


def noise_norm(Sigma_hat: np.ndarray, Sigma: np.ndarray) -> float:
    """Operator norm of the finite-sample noise Sigma_hat - Sigma."""
    A = np.asarray(Sigma_hat, dtype=float)
    B = np.asarray(Sigma, dtype=float)
    if A.shape != B.shape:
        raise ValueError("shapes must agree")
    return op_norm(A - B)


def alignment_to_subspace(Sigma: np.ndarray, U: np.ndarray) -> float:
    """Operator norm of (I - P_U) Sigma: how far the column space leaks
    out of span(U). Zero when the matrix is exactly supported on the span."""
    Sigma = np.asarray(Sigma, dtype=float)
    P = U.T @ U
    resid = (np.eye(Sigma.shape[0]) - P) @ Sigma
    return float(np.linalg.norm(resid, 2))

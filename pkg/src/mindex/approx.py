"""Exact monomial reproduction through the locally quadratic activation.

For sigma(t) = t^2 on |t| < 1 and 2|t| - 1 outside, there are bounded weight
functions v_k on {+-1} x [-3, 3] with

    E_{a,b}[v_k(a, b) sigma(a z + b)] = z^k   for all |z| <= 1,

where a is Rademacher and b ~ Unif[-3, 3]. Degrees 0..2 have closed forms
supported on b in [2, 3] (resp. [-2, 3]); higher degrees combine a degree-k
kernel on b in [0, 1] with the v_1 / v_2 corrections, split by parity. The
identities are exact, so any residual measured here is pure quadrature error.

Integration convention: with mu(b) = 1/6 the Unif[-3, 3] density, every v_k
below carries a 1/mu(b) factor that cancels when the expectation is written
as (1/6) * integral db. Internally we therefore work with the
density-weighted products v_k * mu directly and never divide by the density.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .network import ACTIVATIONS

__all__ = ["WeightFunction", "build_weight_fn", "monomial_error"]

MU = 1.0 / 6.0
_SIGMA = ACTIVATIONS["locally_quadratic"].f


def _w0(a, b):
    # v_0 * mu: 12 (b - 5/2) on a = +1, b in [2, 3]; reproduces 1.
    return np.where((a == 1) & (b >= 2.0) & (b <= 3.0), 12.0 * (b - 2.5), 0.0)


def _w1(a, b):
    # v_1 * mu: -24 b + 61 on a = +1, b in [2, 3]; reproduces z.
    return np.where((a == 1) & (b >= 2.0) & (b <= 3.0), -24.0 * b + 61.0, 0.0)


def _w2(a, b):
    # v_2 * mu: indicator of a = +1, b in [-2, 2], minus (7/3) v_0 * mu.
    base = np.where((a == 1) & (b >= -2.0) & (b <= 2.0), 1.0, 0.0)
    return base - (7.0 / 3.0) * _w0(a, b)


def _kernel(k: int, b):
    # Degree-k kernel * mu: -(1/2) k(k-1)(k-2) (1-b)^(k-3) on b in [0, 1].
    # Against sigma(z + b) it integrates to
    #   z^k 1_{z>0} - k(k-1)/2 z^2 - k z - 1   for |z| <= 1.
    inside = (b >= 0.0) & (b <= 1.0)
    return np.where(inside, -0.5 * k * (k - 1) * (k - 2) * (1.0 - b) ** (k - 3), 0.0)


def _weighted_eval(k: int) -> Callable:
    if k == 0:
        return _w0
    if k == 1:
        return _w1
    if k == 2:
        return _w2
    if k % 2 == 0:
        # Even: summing the kernel over a gives z^k - k(k-1) z^2 - 2;
        # add back k(k-1) v_2 and twice v_0.
        def even(a, b, k=k):
            return 2.0 * _kernel(k, b) + k * (k - 1) * _w2(a, b) + 2.0 * _w0(a, b)
        return even

    # Odd: differencing the kernel over a gives z^k - 2k z; add back 2k v_1.
    def odd(a, b, k=k):
        return 2.0 * np.asarray(a, dtype=float) * _kernel(k, b) + 2.0 * k * _w1(a, b)
    return odd


def _breakpoints(k: int) -> tuple[float, ...]:
    if k <= 1:
        return (2.0, 3.0)
    if k == 2:
        return (-2.0, 2.0, 3.0)
    if k % 2 == 0:
        return (-2.0, 0.0, 1.0, 2.0, 3.0)
    return (0.0, 1.0, 2.0, 3.0)


@dataclass(frozen=True)
class WeightFunction:
    """Bounded weights reproducing z^k through the locally quadratic
    activation.

    ``support`` lists the b-values where the definition changes; the function
    vanishes outside [support[0], support[-1]] (always within [-2, 3]).
    Calling evaluates v_k(a, b) itself, including the 1/mu(b) factor.
    """

    k: int
    support: tuple[float, ...]
    _weighted: Callable

    def __call__(self, a, b):
        a = np.asarray(a)
        b = np.asarray(b, dtype=float)
        out = self._weighted(a, b) / MU
        return out if out.ndim else float(out)

    def weighted(self, a, b):
        """v_k(a, b) * mu(b), the quantity integrated against db."""
        return self._weighted(np.asarray(a), np.asarray(b, dtype=float))

    def sup_norm(self, grid: int = 20_001) -> float:
        """Numeric sup of |v_k| over its support (polynomial pieces, so a
        dense grid is reliable)."""
        b = np.linspace(-3.0, 3.0, grid)
        return float(max(np.abs(self(1, b)).max(), np.abs(self(-1, b)).max()))


def build_weight_fn(k: int) -> WeightFunction:
    """Construct the degree-k weight function."""
    if k < 0:
        raise ValueError("monomial degree must be nonnegative")
    return WeightFunction(k=k, support=_breakpoints(k), _weighted=_weighted_eval(k))


def _pieces(lo: float, hi: float, cuts) -> list[tuple[float, float]]:
    pts = sorted({lo, hi, *(c for c in cuts if lo < c < hi)})
    return [(a, b) for a, b in zip(pts[:-1], pts[1:]) if b - a > 1e-15]


def expectation(wf: WeightFunction, z: float, quad_order: int = 64) -> float:
    """E_{a,b}[v_k(a, b) sigma(a z + b)] by piecewise Gauss-Legendre.

    Panels are split at every support breakpoint of v_k and at the activation
    kinks a z + b = +-1, so each panel integrates a polynomial exactly.
    """
    if quad_order < 4:
        raise ValueError("quadrature order must be at least 4")
    nodes, weights = np.polynomial.legendre.leggauss(quad_order)
    total = 0.0
    for a in (1, -1):
        cuts = set(wf.support) | {1.0 - a * z, -1.0 - a * z}
        acc = 0.0
        for lo, hi in _pieces(-3.0, 3.0, cuts):
            mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
            b = mid + half * nodes
            f = wf.weighted(a, b) * _SIGMA(a * z + b)
            acc += half * float(weights @ f)
        total += 0.5 * acc
    return total


def monomial_error(k: int, z_grid: np.ndarray | None = None,
                   quad_order: int = 64) -> float:
    """max_z |E[v_k sigma(a z + b)] - z^k| over a grid in [-1, 1]."""
    if z_grid is None:
        z_grid = np.linspace(-1.0, 1.0, 101)
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid.size and (z_grid.min() < -1.0 or z_grid.max() > 1.0):
        raise ValueError("z grid must lie in [-1, 1]")
    wf = build_weight_fn(k)
    errs = [abs(expectation(wf, float(z), quad_order) - float(z) ** k) for z in z_grid]
    return max(errs)

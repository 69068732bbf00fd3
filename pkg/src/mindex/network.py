"""Two-layer network f(x) = sum_j a_j sigma(w_j.x + b_j) with analytic gradients.

Initialization pairs neuron j with neuron m-1-j (0-indexed): identical
features, opposite signs on the second layer, zero biases. The network is
then exactly the zero function at the start of training, for any activation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .losses import LossFunction, loss_d1

__all__ = [
    "Activation",
    "ACTIVATIONS",
    "NetworkParams",
    "init_symmetric",
    "init_kaiming",
    "forward",
    "grad_W",
    "grad_a",
    "grad_b",
]


@dataclass(frozen=True)
class Activation:
    """Activation with the derivative metadata the first-stage analysis uses.

    ``d2_zero`` is sigma''(0); the idealized power-iteration picture assumes
    the normalization sigma''(0) = 1, so callers comparing gradient descent
    against that picture must fold d2_zero into the effective rate.
    ``assumption2`` marks kinds with sigma'(0) = 0 and sigma''(0) = 1 that are
    C^3 with a bounded third derivative. Kinds failing the normalization
    (cosine has sigma''(0) = -1) are experiment-mode only.
    """

    kind: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    d1_zero: float
    d2_zero: float
    third_deriv_bound: float | None
    monomial_exponent: float | None
    assumption2: bool

    def __call__(self, z):
        return self.f(z)


def _locally_quadratic(z):
    z = np.asarray(z, dtype=float)
    return np.where(np.abs(z) < 1.0, z * z, 2.0 * np.abs(z) - 1.0)


def _locally_quadratic_d(z):
    z = np.asarray(z, dtype=float)
    return np.where(np.abs(z) < 1.0, 2.0 * z, 2.0 * np.sign(z))


ACTIVATIONS: dict[str, Activation] = {
    # t^2 inside [-1, 1], 2|t|-1 outside; C^1, admits exact monomial weights.
    # Not C^3 at |t| = 1; second derivative is 2 a.e. inside, recorded as the
    # a.e. bound. Experiment-compatible but outside the smooth-class checks.
    "locally_quadratic": Activation(
        "locally_quadratic", _locally_quadratic, _locally_quadratic_d,
        d1_zero=0.0, d2_zero=2.0, third_deriv_bound=2.0, monomial_exponent=0.0,
        assumption2=False,
    ),
    # Plain square, as in the minimal-sample-exponent experiment.
    "quadratic": Activation(
        "quadratic", lambda z: np.square(z), lambda z: 2.0 * np.asarray(z, dtype=float),
        d1_zero=0.0, d2_zero=2.0, third_deriv_bound=0.0, monomial_exponent=None,
        assumption2=False,
    ),
    # cos(t): sigma''(0) = -1 violates the +1 normalization; experiment mode.
    "cosine": Activation(
        "cosine", np.cos, lambda z: -np.sin(np.asarray(z, dtype=float)),
        d1_zero=0.0, d2_zero=-1.0, third_deriv_bound=1.0, monomial_exponent=None,
        assumption2=False,
    ),
    # t^2/2 + t^3/6: the smooth reference kind with sigma'(0)=0, sigma''(0)=1,
    # sigma''' = 1 everywhere. Used by the power-iteration diagnostics.
    "cubed_smooth": Activation(
        "cubed_smooth",
        lambda z: 0.5 * np.square(z) + np.power(z, 3) / 6.0,
        lambda z: np.asarray(z, dtype=float) + 0.5 * np.square(z),
        d1_zero=0.0, d2_zero=1.0, third_deriv_bound=1.0, monomial_exponent=None,
        assumption2=True,
    ),
}


def get_activation(kind: str) -> Activation:
    try:
        return ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}") from None


@dataclass
class NetworkParams:
    """Parameters (a, b, W) plus the frozen copy of a taken at initialization."""

    a: np.ndarray
    b: np.ndarray
    W: np.ndarray
    a_init: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.a_init is None:
            self.a_init = self.a.copy()
        m = self.a.shape[0]
        if m % 2 != 0:
            raise ValueError(f"width must be even, got {m}")
        if self.b.shape != (m,) or self.W.shape[0] != m:
            raise ValueError("a, b, W must agree on the number of neurons")

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.a.copy(), self.b.copy(), self.W.copy(),
                             a_init=self.a_init.copy())


def init_symmetric(m: int, d: int, eps0: float, seed: int) -> NetworkParams:
    """Paired initialization: zero network output, features of norm eps0.

    The first half of the second layer is Rademacher and the first half of
    the features is uniform on the radius-eps0 sphere; neuron m-1-j mirrors
    neuron j with a flipped sign, so contributions cancel pairwise for every
    activation. Biases start at zero.
    """
    if m % 2 != 0:
        raise ValueError(f"width must be even, got {m}")
    if eps0 <= 0:
        raise ValueError("initialization radius must be positive")
    rng = np.random.default_rng(seed)
    half = m // 2
    a = np.empty(m)
    W = np.empty((m, d))
    a_half = rng.integers(0, 2, size=half) * 2.0 - 1.0
    G = rng.standard_normal((half, d))
    G *= eps0 / np.linalg.norm(G, axis=1, keepdims=True)
    for j in range(half):
        a[j] = a_half[j]
        a[m - 1 - j] = -a_half[j]
        W[j] = G[j]
        W[m - 1 - j] = G[j]
    return NetworkParams(a=a, b=np.zeros(m), W=W)


def init_kaiming(m: int, d: int, seed: int) -> NetworkParams:
    """Kaiming-uniform initialization for the joint-training experiment mode.

    Uses the standard bound 1/sqrt(fan_in) per layer (fan_in = d for the
    features and biases, m for the second layer).
    """
    rng = np.random.default_rng(seed)
    bw = 1.0 / math.sqrt(d)
    ba = 1.0 / math.sqrt(m)
    W = rng.uniform(-bw, bw, size=(m, d))
    b = rng.uniform(-bw, bw, size=m)
    a = rng.uniform(-ba, ba, size=m)
    return NetworkParams(a=a, b=b, W=W)


def forward(params: NetworkParams, act: Activation, x: np.ndarray):
    """Network output on one point (d,) or a batch (n, d)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    Z = np.atleast_2d(x) @ params.W.T + params.b
    out = act.f(Z) @ params.a
    return float(out[0]) if single else out


def _batch_terms(params, act, loss, X, y):
    Z = X @ params.W.T + params.b
    S = act.f(Z)
    f = S @ params.a
    lp = np.asarray(loss_d1(loss, f, y))
    return Z, S, lp


def grad_W(params: NetworkParams, act: Activation, loss: LossFunction,
           X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Mean gradient of the empirical loss w.r.t. the feature matrix W.

    Row j is (1/n) sum_i l'(f(x_i), y_i) a_j sigma'(w_j.x_i + b_j) x_i.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("gradient needs a nonempty batch")
    Z, _, lp = _batch_terms(params, act, loss, X, y)
    E = lp[:, None] * act.df(Z)          # n x m
    return params.a[:, None] * (E.T @ X) / X.shape[0]


def grad_a(params: NetworkParams, act: Activation, loss: LossFunction,
           X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Mean gradient w.r.t. the second layer: entry j is
    (1/n) sum_i l'(f(x_i), y_i) sigma(w_j.x_i + b_j)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("gradient needs a nonempty batch")
    _, S, lp = _batch_terms(params, act, loss, X, y)
    return (S.T @ lp) / X.shape[0]


def grad_b(params: NetworkParams, act: Activation, loss: LossFunction,
           X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Mean gradient w.r.t. the biases (used only by the joint Adam mode)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    Z, _, lp = _batch_terms(params, act, loss, X, y)
    return params.a * ((lp[:, None] * act.df(Z)).sum(axis=0)) / X.shape[0]

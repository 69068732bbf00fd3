"""Multi-index targets: hidden subspaces, polynomial links, Gaussian data.

A target is f(x) = g(U x) where U has orthonormal rows spanning the hidden
directions and g is a low-dimensional polynomial link. Inputs are standard
Gaussian in d dimensions; labels are noiseless evaluations of the target.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HiddenSubspace",
    "LinkFunction",
    "MultiIndexTarget",
    "Dataset",
    "hermite_poly",
    "make_subspace",
    "eval_target",
    "generate_dataset",
]

ORTHO_TOL = 1e-12


def hermite_poly(k: int, z):
    """Normalized probabilist's Hermite polynomial h_k(z).

    Normalization is E[h_j(Z) h_k(Z)] = delta_jk for Z ~ N(0, 1), i.e.
    h_k = He_k / sqrt(k!) with He_k the monic Hermite polynomial. Evaluated
    via the stable three-term recurrence He_{j+1} = z He_j - j He_{j-1},
    scaled once at the end.

    Parameters
    ----------
    k : int
        Degree, k >= 0.
    z : float or ndarray
        Evaluation point(s).

    Returns
    -------
    float or ndarray
        h_k(z), matching the shape of ``z``.
    """
    if k < 0:
        raise ValueError("hermite degree must be nonnegative")
    z = np.asarray(z, dtype=float)
    prev = np.ones_like(z)
    if k == 0:
        out = prev
    else:
        cur = z.copy()
        for j in range(1, k):
            prev, cur = cur, z * cur - j * prev
        out = cur / math.sqrt(math.factorial(k))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class HiddenSubspace:
    """r x d matrix U with orthonormal rows (the hidden directions)."""

    U: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        if U.ndim != 2:
            raise ValueError("U must be a 2-d array")
        r, d = U.shape
        if not 1 <= r <= d:
            raise ValueError(f"need 1 <= r <= d, got r={r}, d={d}")
        gram = U @ U.T
        if np.max(np.abs(gram - np.eye(r))) > ORTHO_TOL:
            raise ValueError("rows of U are not orthonormal within 1e-12")
        object.__setattr__(self, "U", U)

    @property
    def d(self) -> int:
        return self.U.shape[1]

    @property
    def r(self) -> int:
        return self.U.shape[0]


def make_subspace(d: int, r: int, mode: str = "axis_aligned", seed: int | None = None) -> HiddenSubspace:
    """Build a hidden subspace: the first r coordinate axes, or a random one.

    ``axis_aligned`` returns rows e_1..e_r (the default used by all built-in
    experiments). ``random`` orthonormalizes r i.i.d. Gaussian d-vectors from
    the seeded generator.
    """
    if r > d:
        raise ValueError(f"subspace dimension r={r} exceeds ambient dimension d={d}")
    if r < 1:
        raise ValueError("r must be >= 1")
    if mode == "axis_aligned":
        U = np.eye(d)[:r]
    elif mode == "random":
        rng = np.random.default_rng(seed)
        G = rng.standard_normal((d, r))
        Q, _ = np.linalg.qr(G)
        U = Q.T[:r]
    else:
        raise ValueError(f"unknown subspace mode {mode!r}")
    return HiddenSubspace(U)


# Built-in links. quad2d is the rank-2 quadratic (z1^2 + z2^2/2)/sqrt(5/2),
# hermite4sum is h4(z1) + h4(z2); both are even in every hidden direction.
_BUILTIN_LINKS = ("quad2d", "hermite4sum", "hermite_single", "polynomial")


@dataclass(frozen=True)
class LinkFunction:
    """Polynomial link g over r hidden variables.

    ``coeffs`` is used only for kind="polynomial": a mapping from multi-index
    tuples (one exponent per hidden variable) to real coefficients.
    """

    kind: str
    degree_k: int = 4  # only for hermite_single
    coeffs: dict[tuple[int, ...], float] | None = None

    def __post_init__(self):
        if self.kind not in _BUILTIN_LINKS:
            raise ValueError(f"unknown link kind {self.kind!r}")
        if self.kind == "hermite_single" and self.degree_k < 1:
            raise ValueError("hermite_single needs degree >= 1")
        if self.kind == "polynomial":
            if not self.coeffs:
                raise ValueError("polynomial link needs a nonempty coefficient table")
            arities = {len(mi) for mi in self.coeffs}
            if len(arities) != 1:
                raise ValueError("all multi-indices must have the same length")
            if self.degree < 1:
                raise ValueError("polynomial link must have degree >= 1")
        # Sanity: finite at 0 and finite second moment under N(0, I_r).
        z0 = np.zeros((1, self.arity))
        if not np.isfinite(self(z0)).all():
            raise ValueError("link must be finite at z = 0")
        zs = np.random.default_rng(0).standard_normal((4096, self.arity))
        vals = self(zs)
        if not np.isfinite(vals).all() or not np.isfinite((vals**2).mean()):
            raise ValueError("link second moment is not finite")

    @property
    def arity(self) -> int:
        if self.kind in ("quad2d", "hermite4sum"):
            return 2
        if self.kind == "hermite_single":
            return 1
        return len(next(iter(self.coeffs)))

    @property
    def degree(self) -> int:
        if self.kind == "quad2d":
            return 2
        if self.kind == "hermite4sum":
            return 4
        if self.kind == "hermite_single":
            return self.degree_k
        return max(sum(mi) for mi in self.coeffs)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        """Evaluate g on an (n, r) batch of hidden coordinates."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if z.shape[1] != self.arity:
            raise ValueError(f"link expects {self.arity} hidden variables, got {z.shape[1]}")
        if self.kind == "quad2d":
            return (z[:, 0] ** 2 + 0.5 * z[:, 1] ** 2) / math.sqrt(2.5)
        if self.kind == "hermite4sum":
            return hermite_poly(4, z[:, 0]) + hermite_poly(4, z[:, 1])
        if self.kind == "hermite_single":
            return np.asarray(hermite_poly(self.degree_k, z[:, 0]))
        out = np.zeros(z.shape[0])
        for mi, c in self.coeffs.items():
            term = np.full(z.shape[0], c)
            for var, p in enumerate(mi):
                if p:
                    term = term * z[:, var] ** p
            out += term
        return out

    def second_moment_mc(self, n_mc: int = 200_000, seed: int = 0) -> float:
        """Monte-Carlo estimate of E[g(Z)^2], Z ~ N(0, I_r)."""
        zs = np.random.default_rng(seed).standard_normal((n_mc, self.arity))
        return float((self(zs) ** 2).mean())


@dataclass(frozen=True)
class MultiIndexTarget:
    """Target f(x) = g(U x)."""

    subspace: HiddenSubspace
    link: LinkFunction

    def __post_init__(self):
        if self.link.arity != self.subspace.r:
            raise ValueError(
                f"link arity {self.link.arity} != subspace dimension {self.subspace.r}"
            )

    @property
    def d(self) -> int:
        return self.subspace.d

    @property
    def r(self) -> int:
        return self.subspace.r

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        Z = np.atleast_2d(X) @ self.subspace.U.T
        y = self.link(Z)
        return float(y[0]) if single else y


def eval_target(target: MultiIndexTarget, x: np.ndarray):
    """Evaluate f(x) = g(U x) on one point or a batch of rows."""
    return target(x)


@dataclass(frozen=True)
class Dataset:
    """n i.i.d. rows X ~ N(0, I_d) with labels y = f(x); regenerable from seed."""

    X: np.ndarray
    y: np.ndarray
    seed: int

    def __post_init__(self):
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y must have the same number of rows")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def generate_dataset(target: MultiIndexTarget, n: int, seed: int) -> Dataset:
    """Draw n standard-Gaussian rows and label them with the target.

    Deterministic: the same (target, n, seed) always yields bit-identical
    arrays.
    """
    if n < 1:
        raise ValueError("dataset size must be >= 1")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, target.d))
    y = target(X)
    return Dataset(X=X, y=y, seed=seed)


def make_target(kind: str, d: int, r: int | None = None, *, subspace_mode: str = "axis_aligned",
                subspace_seed: int | None = None, hermite_degree: int = 4,
                coeffs: dict | None = None) -> MultiIndexTarget:
    """Convenience constructor wiring a built-in link to a fresh subspace."""
    link = LinkFunction(kind, degree_k=hermite_degree, coeffs=coeffs)
    r = link.arity if r is None else r
    if r != link.arity:
        raise ValueError(f"link {kind!r} needs r={link.arity}")
    sub = make_subspace(d, r, mode=subspace_mode, seed=subspace_seed)
    return MultiIndexTarget(subspace=sub, link=link)

"""Layer-wise training: feature stage, bias reinitialization, ridge stage.

Stage 1 runs T1 gradient-descent steps on the features W alone, with weight
decay beta1 = 1/eta1 so each step is a pure matrix action on the features;
the final step uses the rate scaled by 1/eps0 and decay scaled by eps0, which
removes the initialization magnitude from the learned features. Biases are
then redrawn uniform on [-3, 3], the second layer is reset to its
initialization, and stage 2 runs plain ridge gradient descent on the second
layer only.

A separate joint-training mode (Adam over minibatches, Kaiming-style init)
matches the setup of the numerical studies.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .losses import LossFunction, loss_d1, loss_value
from .metrics import recovery_report
from .network import (Activation, NetworkParams, forward, grad_W, grad_a,
                      init_symmetric)
from .targets import Dataset, MultiIndexTarget, generate_dataset

__all__ = [
    "TrainPlan",
    "TrainReport",
    "AdamConfig",
    "default_hyperparams",
    "assumption7_eps0",
    "paper_exact_stage2",
    "train_stage1",
    "reinit_second_stage",
    "train_stage2",
    "run_algorithm1",
    "train_adam",
]

EPS0_FLOOR = 1e-150
EPS0_CAP = 1e-2

# Fixed offsets deriving every sub-seed from one master seed.
SEED_INIT, SEED_D1, SEED_D2, SEED_BIAS, SEED_EVAL = 1, 2, 3, 4, 5


@dataclass(frozen=True)
class TrainPlan:
    """All layer-wise hyperparameters.

    ``eta2 = None`` requests a rate backtracked from the feature-Gram
    spectral norm; ``T2 = None`` runs stage 2 until the relative loss change
    drops below 1e-6 (capped at 10^4 steps).
    """

    eta1: float
    beta1: float
    T1: int
    eps0: float | None
    m: int
    eta2: float | None = None
    beta2: float = 1e-3
    T2: int | None = None
    C_eta: float = 4.0
    D: float = 4.0
    C_eps: float = 1.0

    def __post_init__(self):
        if self.m % 2 != 0:
            raise ValueError("width m must be even")
        if self.T1 < 1:
            raise ValueError("T1 must be >= 1")
        for name in ("eta1", "beta1", "C_eta", "D", "C_eps", "beta2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.eps0 is not None and self.eps0 <= 0:
            raise ValueError("eps0 must be positive")
        if self.eta2 is not None and self.eta2 < 0:
            raise ValueError("eta2 must be nonnegative")
        if self.T2 is not None and self.T2 < 0:
            raise ValueError("T2 must be nonnegative")


def _default_T1(d: int, kappa: float) -> int:
    if kappa == 1.0:
        return max(1, math.ceil(math.sqrt(math.log(d))))
    return max(1, math.ceil(math.sqrt(math.log(d) / math.log(kappa))))


def assumption7_eps0(d: int, n: int, m: int, T1: int, C_eps: float = 1.0) -> float:
    """Initialization level (1 / (C_eps m sqrt(n) d^{7/2})) (4/5)^T1.

    Floored at 1e-150 (the formula underflows for very large d * T1; the
    analysis only needs the level to be small) and capped at 1e-2.
    """
    val = (0.8 ** T1) / (C_eps * m * math.sqrt(n) * d ** 3.5)
    if val < EPS0_FLOOR:
        warnings.warn("initialization level underflowed; flooring at 1e-150")
        val = EPS0_FLOOR
    return min(EPS0_CAP, val)


def default_hyperparams(d: int, kappa: float = 2.0, r: int = 2, *,
                        n: int | None = None, m: int = 4,
                        **overrides) -> TrainPlan:
    """Derive the default plan for dimension d and condition number kappa.

    T1 = ceil(sqrt(log d / log kappa)) (kappa = 1 degenerates to
    ceil(sqrt(log d))); eta1 = (1/C_eta) (d / (r iota^2))^{1/(2 T1)} with
    iota = 4 D log d; beta1 = 1/eta1. The initialization level needs n and m;
    pass n to fill it, or leave it None to resolve at run time. Stage-2
    settings default to the adaptive convex solver.

    Any TrainPlan field may be overridden by keyword.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    if kappa < 1.0:
        raise ValueError("condition number must be >= 1")
    C_eta = float(overrides.pop("C_eta", 4.0))
    D = float(overrides.pop("D", 4.0))
    C_eps = float(overrides.pop("C_eps", 1.0))
    T1 = int(overrides.pop("T1", _default_T1(d, kappa)))
    iota = 4.0 * D * math.log(d)
    eta1 = overrides.pop("eta1", None)
    if eta1 is None:
        eta1 = (d / (r * iota * iota)) ** (1.0 / (2 * T1)) / C_eta
    beta1 = overrides.pop("beta1", None)
    if beta1 is None:
        beta1 = 1.0 / eta1
    m = int(overrides.pop("m", m))
    eps0 = overrides.pop("eps0", None)
    if eps0 is None and n is not None:
        eps0 = assumption7_eps0(d, n, m, T1, C_eps)
    plan = TrainPlan(eta1=float(eta1), beta1=float(beta1), T1=T1, eps0=eps0,
                     m=m, C_eta=C_eta, D=D, C_eps=C_eps)
    if overrides:
        plan = replace(plan, **overrides)
    return plan


def paper_exact_stage2(J: float, U: float, m: int, L: float = 1.0) -> dict:
    """Stage-2 settings in terms of the analysis constants J and U.

    These closed forms depend on constants that are not observable from
    data; they are exposed for completeness, while the default solver reaches
    the same ridge optimum adaptively.
    """
    if J <= 0 or U <= 0:
        raise ValueError("J and U must be positive")
    eta2 = U * U / (L * math.sqrt(m) * U * U + 2.0 * J)
    beta2 = J / (U * U)
    T2 = max(1, math.ceil((U * U * L * m / J) * math.log(max(U * m, 2.0))))
    return {"eta2": eta2, "beta2": beta2, "T2": T2}


def train_stage1(params: NetworkParams, data: Dataset, act: Activation,
                 loss: LossFunction, plan: TrainPlan, snapshot: bool = False):
    """Stage 1: T1 - 1 plain decayed steps on W, then the 1/eps0-scaled step.

    Returns the updated params, plus the list of per-step W copies (starting
    with the initial matrix) when ``snapshot`` is set. a and b are untouched.
    """
    if plan.T1 < 1:
        raise ValueError("T1 must be >= 1")
    if plan.eps0 is None:
        raise ValueError("plan.eps0 is unresolved; derive it from (d, n, m, T1)")
    p = params.copy()
    snaps = [p.W.copy()] if snapshot else None
    for t in range(1, plan.T1):
        g = grad_W(p, act, loss, data.X, data.y)
        p.W = p.W - plan.eta1 * (g + plan.beta1 * p.W)
        _warn_norm_growth(p.W, t, plan)
        if snapshot:
            snaps.append(p.W.copy())
    g = grad_W(p, act, loss, data.X, data.y)
    p.W = p.W - (plan.eta1 / plan.eps0) * (g + plan.beta1 * plan.eps0 * p.W)
    if snapshot:
        snaps.append(p.W.copy())
        return p, snaps
    return p


def _warn_norm_growth(W, t, plan):
    # High-probability control: before the final rescaled step, feature
    # norms should stay under d^{t/(2 T1)} eps0. A violation is a
    # diagnostic, not an error.
    bound = W.shape[1] ** (t / (2.0 * plan.T1)) * plan.eps0
    worst = float(np.linalg.norm(W, axis=1).max())
    if worst > bound * (1.0 + 1e-9):
        warnings.warn(
            f"feature norm {worst:.3e} exceeded the step-{t} control "
            f"{bound:.3e}; the power-iteration picture may be degraded",
            RuntimeWarning)


def reinit_second_stage(params: NetworkParams, seed: int) -> NetworkParams:
    """Redraw biases uniform on [-3, 3] and reset the second layer to its
    initialization value. Features are untouched."""
    rng = np.random.default_rng(seed)
    p = params.copy()
    p.b = rng.uniform(-3.0, 3.0, size=p.m)
    p.a = p.a_init.copy()
    return p


def _gram_lipschitz(params: NetworkParams, act: Activation, X: np.ndarray,
                    beta2: float) -> float:
    S = act.f(X @ params.W.T + params.b)
    gram = S.T @ S / X.shape[0]
    return float(np.linalg.eigvalsh(gram)[-1]) + beta2


def _ridge_objective(params, act, loss, X, y, beta2):
    f = forward(params, act, X)
    return float(np.mean(loss_value(loss, f, y))) + 0.5 * beta2 * float(params.a @ params.a)


def train_stage2(params: NetworkParams, data: Dataset, act: Activation,
                 loss: LossFunction, plan: TrainPlan):
    """Stage 2: ridge gradient descent on the second layer only.

    The objective is convex in a, so with eta2 below the inverse curvature
    (estimated from the feature Gram matrix and halved while a step fails to
    decrease the objective) any stable schedule reaches the same optimum.
    Returns (params, loss_trajectory).
    """
    p = params.copy()
    X, y = data.X, data.y
    eta2 = plan.eta2
    if eta2 is None:
        eta2 = 1.0 / _gram_lipschitz(p, act, X, plan.beta2)
        obj = _ridge_objective(p, act, loss, X, y, plan.beta2)
        for _ in range(60):
            trial = p.copy()
            g = grad_a(trial, act, loss, X, y)
            trial.a = trial.a - eta2 * (g + plan.beta2 * trial.a)
            if _ridge_objective(trial, act, loss, X, y, plan.beta2) <= obj + 1e-15:
                break
            eta2 *= 0.5
    max_steps = plan.T2 if plan.T2 is not None else 10_000
    adaptive = plan.T2 is None
    traj = []
    prev = _ridge_objective(p, act, loss, X, y, plan.beta2)
    for _ in range(max_steps):
        g = grad_a(p, act, loss, X, y)
        p.a = p.a - eta2 * (g + plan.beta2 * p.a)
        cur = _ridge_objective(p, act, loss, X, y, plan.beta2)
        traj.append(cur)
        if adaptive and abs(prev - cur) <= 1e-6 * max(abs(prev), 1e-12):
            break
        prev = cur
    return p, traj


@dataclass
class TrainReport:
    """Everything a layer-wise run produced."""

    params: NetworkParams
    stage1_losses: list
    stage2_losses: list
    snapshots: list | None
    seed: int
    config: dict
    wall_clock_sec: float
    cos_best: float
    coverage_min: float
    principal_angles: np.ndarray
    test_mse: float


def run_algorithm1(target: MultiIndexTarget, n: int, act: Activation,
                   loss: LossFunction, plan: TrainPlan, seed: int,
                   snapshot: bool = False, n_test: int = 10_000) -> TrainReport:
    """Full layer-wise pipeline on two fresh size-n datasets.

    Sub-seeds (init, both datasets, bias redraw, evaluation) are derived from
    the master seed by fixed offsets, so one integer reproduces the run.
    """
    t0 = time.perf_counter()
    d = target.d
    if plan.eps0 is None:
        plan = replace(plan, eps0=assumption7_eps0(d, n, plan.m, plan.T1, plan.C_eps))
    data1 = generate_dataset(target, n, seed + SEED_D1)
    data2 = generate_dataset(target, n, seed + SEED_D2)
    params = init_symmetric(plan.m, d, plan.eps0, seed + SEED_INIT)

    trained, snaps = train_stage1(params.copy(), data1, act, loss, plan,
                                  snapshot=True)
    stage1_losses = []
    for W in snaps[1:]:
        probe = trained.copy()
        probe.W = W
        stage1_losses.append(float(np.mean(loss_value(
            loss, forward(probe, act, data1.X), data1.y))))
    if not snapshot:
        snaps = None

    trained = reinit_second_stage(trained, seed + SEED_BIAS)
    trained, stage2_losses = train_stage2(trained, data2, act, loss, plan)

    rec = recovery_report(trained, act, target, n_test=n_test, seed=seed + SEED_EVAL)
    return TrainReport(
        params=trained,
        stage1_losses=stage1_losses,
        stage2_losses=stage2_losses,
        snapshots=snaps,
        seed=seed,
        config={"n": n, "loss": loss.kind, "activation": act.kind,
                "plan": {"eta1": plan.eta1, "beta1": plan.beta1, "T1": plan.T1,
                         "eps0": plan.eps0, "eta2": plan.eta2, "beta2": plan.beta2,
                         "T2": plan.T2, "m": plan.m}},
        wall_clock_sec=time.perf_counter() - t0,
        cos_best=rec.cos_best,
        coverage_min=rec.coverage_min,
        principal_angles=rec.principal_angles,
        test_mse=rec.test_error,
    )


@dataclass(frozen=True)
class AdamConfig:
    """Minibatch Adam settings for the joint-training experiment mode."""

    lr: float = 0.005
    batch: int = 32
    epochs: int = 1000
    beta_moments: tuple = (0.9, 0.999)
    eps: float = 1e-8
    patience: int | None = 75     # None disables early stopping
    plateau_tol: float = 1e-5

    def __post_init__(self):
        if self.lr < 0 or self.batch < 1 or self.epochs < 1 or self.eps <= 0:
            raise ValueError("Adam settings must be positive")


def train_adam(params: NetworkParams, data: Dataset, act: Activation,
               loss: LossFunction, cfg: AdamConfig, seed: int) -> NetworkParams:
    """Standard Adam over shuffled minibatches, training a, b, W jointly.

    Shuffling comes from the seeded generator, so runs are deterministic.
    Training stops early once the epoch loss has not improved by a relative
    ``plateau_tol`` for ``patience`` consecutive epochs.
    """
    rng = np.random.default_rng(seed)
    p = params.copy()
    n = data.n
    b1, b2 = cfg.beta_moments
    groups = ["a", "b", "W"]
    mom = {k: np.zeros_like(getattr(p, k)) for k in groups}
    sec = {k: np.zeros_like(getattr(p, k)) for k in groups}
    t = 0
    best = math.inf
    stale = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for s in range(0, n, cfg.batch):
            idx = order[s:s + cfg.batch]
            Xb, yb = data.X[idx], data.y[idx]
            nb = len(idx)
            Z = Xb @ p.W.T + p.b
            S = act.f(Z)
            f = S @ p.a
            lp = np.asarray(loss_d1(loss, f, yb))
            E = lp[:, None] * act.df(Z)
            grads = {
                "a": (S.T @ lp) / nb,
                "b": p.a * E.sum(axis=0) / nb,
                "W": p.a[:, None] * (E.T @ Xb) / nb,
            }
            epoch_loss += float(np.sum(loss_value(loss, f, yb)))
            t += 1
            c1 = 1.0 - b1 ** t
            c2 = 1.0 - b2 ** t
            for k in groups:
                g = grads[k]
                mom[k] = b1 * mom[k] + (1.0 - b1) * g
                sec[k] = b2 * sec[k] + (1.0 - b2) * g * g
                step = cfg.lr * (mom[k] / c1) / (np.sqrt(sec[k] / c2) + cfg.eps)
                setattr(p, k, getattr(p, k) - step)
        epoch_loss /= n
        if cfg.patience is not None:
            if epoch_loss < best * (1.0 - cfg.plateau_tol):
                best = epoch_loss
                stale = 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break
    return p

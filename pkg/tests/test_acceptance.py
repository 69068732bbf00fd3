"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. The two experiment
reproductions (phase transition and minimal-exponent trend) dominate the
runtime; everything else finishes in seconds.
"""
import math

import numpy as np
import pytest

from mindex.approx import monomial_error
from mindex.experiments import (aggregate_fig1, aggregate_fig2, cell_seed,
                                loss_phase_transition, noise_norm_scaling,
                                power_check, sweep_minimal_alpha)
from mindex.losses import LossFunction, preprocess
from mindex.metrics import cos_best
from mindex.network import ACTIVATIONS, forward, grad_W, grad_a, init_kaiming, \
    init_symmetric
from mindex.spectral import (alignment_to_subspace, eigen_report,
                             mc_error_scale, op_norm, population_sigma)
from mindex.targets import generate_dataset, hermite_poly, make_subspace, \
    make_target
from mindex.trainer import default_hyperparams, run_algorithm1
from conftest import central_diff_grad, gauss_hermite_expectation


def _verdict(name, ok, detail=""):
    print(f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{name}: {detail}"


def test_fig2_phase_transition():
    """Huber aligns at n/d = 40 while square stays unaligned at n/d = 80
    (hermite4sum target, cosine activation, m = 4, joint Adam, d = 200)."""
    seeds = range(5)
    rows = loss_phase_transition([200], [40], ["huber"], seeds)
    huber_med = aggregate_fig2(rows)[0]["p50"]
    rows = loss_phase_transition([200], [80], ["mse"], seeds)
    mse_med = aggregate_fig2(rows)[0]["p50"]
    _verdict("fig2 phase transition",
             huber_med >= 0.9 and mse_med <= 0.3,
             f"(huber median cos_best at n/d=40: {huber_med:.3f} >= 0.9; "
             f"mse median at n/d=80: {mse_med:.3f} <= 0.3)")


def test_fig1_minimal_alpha_trend():
    """Mean minimal sample exponent shrinks from d = 32 to d = 128
    (quad2d target, square activation, joint Adam, eps = 0.1)."""
    alphas = [round(1.1 + 0.05 * i, 10) for i in range(15)]
    seeds = range(5)
    _, minima = sweep_minimal_alpha([32, 64, 128], alphas, [0.1], seeds)
    agg = {row["d"]: row["mean_min_alpha"]
           for row in aggregate_fig1(minima, [32, 64, 128], [0.1], seeds)}
    ok = all(isinstance(v, float) for v in agg.values()) and agg[128] < agg[32]
    _verdict("fig1 minimal-alpha trend", ok,
             f"(mean minimal alpha: d=32 -> {agg[32]}, d=64 -> {agg[64]}, "
             f"d=128 -> {agg[128]})")


def test_degenerate_preprocessing():
    """Square loss erases the hermite4sum signal; Huber keeps a rank-2 one."""
    target = make_target("hermite4sum", d=8)
    S_sq, SE_sq = population_sigma(target, LossFunction("square"),
                                   n_mc=1_000_000, seed=101)
    S_hu, SE_hu = population_sigma(target, LossFunction("huber", delta=1.0),
                                   n_mc=1_000_000, seed=102)
    sq_norm = op_norm(S_sq)
    sq_scale = mc_error_scale(SE_sq)
    hu_scale = mc_error_scale(SE_hu)
    top2 = np.abs(eigen_report(S_hu, rank_rule=2).eigenvalues[:2])
    ok = sq_norm <= 5 * sq_scale and top2.min() > 10 * hu_scale
    _verdict("degenerate preprocessing", ok,
             f"(square: |Sigma| {sq_norm:.4f} <= 5x{sq_scale:.4f}; "
             f"huber top-2 {top2.round(3)} > 10x{hu_scale:.4f})")


def test_noise_norm_scaling():
    """Operator-norm noise decays like n^(-1/2): fitted slope in [-0.6, -0.4]."""
    _, slope = noise_norm_scaling(64, [2 ** k for k in range(8, 15)],
                                  range(20))
    ok = -0.6 <= slope <= -0.4
    _verdict("noise-norm scaling", ok, f"(slope {slope:.3f})")


def test_power_iteration_fidelity():
    """Stage-1 GD tracks the empirical-matrix power iteration: halving the
    init radius halves the gap, and the gap is tiny at the derived radius."""
    d, n, T1 = 64, 32 * 64, 3
    rows = power_check(d, n, [T1], [1.0, 0.5], seeds=range(5))
    devs = {}
    for row in rows:
        devs.setdefault(round(row["eps0"], 24), {})[row["seed"]] = \
            row["max_rel_dev_empirical"]
    eps_full, eps_half = sorted(devs, reverse=True)
    ratios = [devs[eps_full][s] / devs[eps_half][s] for s in range(5)]
    max_dev = max(devs[eps_full].values())
    ok = all(1.5 <= r <= 2.5 for r in ratios) and max_dev <= 0.05
    _verdict("power-iteration fidelity", ok,
             f"(ratios {np.round(ratios, 3)}, max deviation {max_dev:.2e})")


def test_monomial_exactness():
    """Weight functions reproduce z^k through the locally quadratic
    activation to quadrature precision for k = 0..6."""
    grid = np.linspace(-1.0, 1.0, 101)
    errs = [monomial_error(k, grid, quad_order=64) for k in range(7)]
    ok = max(errs) <= 1e-8
    _verdict("monomial exactness", ok, f"(max error {max(errs):.2e})")


def test_invariant_suite():
    """Property bundle: zero init function, gradient checks, orthonormality,
    determinism, and signal containment."""
    rng = np.random.default_rng(0)
    details = []

    # symmetric-init zero function, every activation
    params = init_symmetric(8, 20, 1e-2, seed=1)
    X = rng.standard_normal((50, 20))
    zero_ok = all(np.max(np.abs(forward(params, act, X))) <= 1e-14
                  for act in ACTIVATIONS.values())
    details.append(f"zero-init {'ok' if zero_ok else 'BAD'}")

    # gradient finite differences <= 1e-5 (smooth pairs)
    from mindex.losses import loss_value as lv
    d, m, n = 5, 4, 8
    p = init_kaiming(m, d, seed=2)
    Xg = rng.standard_normal((n, d))
    yg = rng.standard_normal(n)
    grad_ok = True
    for act_kind in ("quadratic", "cosine", "cubed_smooth"):
        for loss_kind in ("square", "huber", "pseudo_huber"):
            act, loss = ACTIVATIONS[act_kind], LossFunction(loss_kind)
            got = np.concatenate([grad_W(p, act, loss, Xg, yg).ravel(),
                                  grad_a(p, act, loss, Xg, yg)])
            def f(th):
                q = p.copy()
                q.W = th[:m * d].reshape(m, d)
                q.a = th[m * d:]
                return float(np.mean(lv(loss, forward(q, act, Xg), yg)))
            fd = central_diff_grad(f, np.concatenate([p.W.ravel(), p.a]), 1e-5)
            rel = np.max(np.abs(got - fd) / np.maximum(np.abs(got), 1e-3))
            grad_ok &= rel <= 1e-5
    details.append(f"grad-fd {'ok' if grad_ok else 'BAD'}")

    # Hermite orthonormality <= 1e-10
    herm_ok = all(
        abs(gauss_hermite_expectation(
            lambda z, j=j, k=k: hermite_poly(j, z) * hermite_poly(k, z))
            - (j == k)) <= 1e-10
        for j in range(7) for k in range(7))
    details.append(f"hermite {'ok' if herm_ok else 'BAD'}")

    # U orthonormality <= 1e-12
    sub = make_subspace(100, 7, "random", seed=3)
    u_ok = np.max(np.abs(sub.U @ sub.U.T - np.eye(7))) <= 1e-12
    details.append(f"U-orthonormal {'ok' if u_ok else 'BAD'}")

    # determinism: identical seeds give bit-identical runs
    target = make_target("quad2d", d=16)
    plan = default_hyperparams(16, kappa=2.0, r=2, n=256, m=4)
    act = ACTIVATIONS["cubed_smooth"]
    loss = LossFunction("square")
    r1 = run_algorithm1(target, 256, act, loss, plan, seed=5)
    r2 = run_algorithm1(target, 256, act, loss, plan, seed=5)
    det_ok = (np.array_equal(r1.params.W, r2.params.W)
              and np.array_equal(r1.params.a, r2.params.a)
              and np.array_equal(r1.params.b, r2.params.b)
              and r1.stage2_losses == r2.stage2_losses
              and r1.test_mse == r2.test_mse)
    details.append(f"determinism {'ok' if det_ok else 'BAD'}")

    # population matrix column space inside span(U), all built-in pairs
    contain_ok = True
    for target_kind in ("quad2d", "hermite4sum"):
        t = make_target(target_kind, d=8)
        for loss_kind in ("square", "huber", "pseudo_huber", "l1"):
            S, SE = population_sigma(t, LossFunction(loss_kind),
                                     n_mc=100_000,
                                     seed=cell_seed("contain", target_kind,
                                                    loss_kind))
            contain_ok &= (alignment_to_subspace(S, t.subspace.U)
                           <= 5 * mc_error_scale(SE))
    details.append(f"containment {'ok' if contain_ok else 'BAD'}")

    ok = all((zero_ok, grad_ok, herm_ok, u_ok, det_ok, contain_ok))
    _verdict("invariant suite", ok, "(" + ", ".join(details) + ")")

"""Command-line entry point.

Subcommands: train, sweep-alpha, loss-compare, spectral, verify-approx,
power-check, noise-scaling. Every artifact embeds the effective config and
master seed; report JSON files are themselves valid config inputs, so a run
can be reproduced from its output alone. MINDEX_THREADS caps the linear
algebra thread pools (set before numpy loads).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

SCHEMA_VERSION = 1


def _apply_thread_cap():
    cap = os.environ.get("MINDEX_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, cap)


_apply_thread_cap()

import numpy as np  # noqa: E402  (thread cap must precede the import)

from .config import ConfigError, RunConfig, parse_config  # noqa: E402


def _parse_override(kv: str):
    if "=" not in kv:
        raise ConfigError(f"override {kv!r} is not of the form key=value")
    key, raw = kv.split("=", 1)
    try:
        val = json.loads(raw)
    except json.JSONDecodeError:
        val = raw
    return key.strip(), val


def _nest(flat: dict) -> dict:
    tree: dict = {}
    for key, val in flat.items():
        node = tree
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = val
    return tree


def load_config(args) -> RunConfig:
    overrides = {}
    for kv in args.set or []:
        key, val = _parse_override(kv)
        overrides[key] = val
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    return parse_config(args.config, overrides=_nest(overrides))


def _echo_config(cfg: RunConfig) -> dict:
    # the output directory has no effect on results; leaving it out keeps
    # reports byte-identical across destinations
    values = {k: v for k, v in cfg.as_dict().items() if k != "out"}
    return _nest(values)


def write_report(cfg: RunConfig, name: str, results: dict) -> Path:
    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "effective_config": _echo_config(cfg),
        "seed": cfg["seed"],
        "results": results,
    }
    path = out_dir / name
    path.write_text(json.dumps(doc, sort_keys=True, indent=1,
                               separators=(",", ": ")) + "\n")
    return path


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _build_pieces(cfg: RunConfig):
    from .losses import LossFunction
    from .network import ACTIVATIONS
    from .targets import make_target

    target = make_target(cfg["target"], d=cfg["d"],
                         subspace_mode=cfg["subspace"],
                         subspace_seed=cfg["seed"],
                         hermite_degree=cfg["hermite_degree"])
    loss_kind = cfg["loss"]
    loss = LossFunction(loss_kind, delta=cfg["loss_delta"])
    act = ACTIVATIONS[cfg["activation"]]
    return target, loss, act


def cmd_train(cfg: RunConfig) -> int:
    from .losses import preprocess
    from .network import init_kaiming
    from .spectral import eigen_report, empirical_sigma
    from .targets import generate_dataset
    from .trainer import (AdamConfig, default_hyperparams, run_algorithm1,
                          train_adam)
    from .metrics import recovery_report

    target, loss, act = _build_pieces(cfg)
    n, seed = cfg["n"], cfg["seed"]
    if cfg["mode"] == "algorithm1":
        plan = default_hyperparams(
            cfg["d"], kappa=cfg["kappa"], r=target.r, n=n, m=cfg["m"],
            **{k: cfg[k] for k in ("eta1", "beta1", "T1", "eps0", "eta2",
                                   "beta2", "T2") if cfg[k] is not None})
        report = run_algorithm1(target, n, act, loss, plan, seed,
                                n_test=cfg["n_test"])
        params = report.params
        results = {
            "cos_best": report.cos_best,
            "coverage_min": report.coverage_min,
            "principal_angles": report.principal_angles,
            "test_mse": report.test_mse,
            "stage1_losses": report.stage1_losses,
            "stage2_steps": len(report.stage2_losses),
            "final_stage2_loss": report.stage2_losses[-1] if report.stage2_losses else None,
        }
        data = generate_dataset(target, n, seed + 2)
    else:
        data = generate_dataset(target, n, seed + 1)
        params = init_kaiming(cfg["m"], cfg["d"], seed + 2)
        adam = AdamConfig(lr=cfg["adam.lr"], batch=cfg["adam.batch"],
                          epochs=cfg["adam.epochs"],
                          patience=cfg["adam.patience"])
        params = train_adam(params, data, act, loss, adam, seed + 3)
        rec = recovery_report(params, act, target, n_test=cfg["n_test"],
                              seed=seed + 5)
        results = {
            "cos_best": rec.cos_best,
            "coverage_min": rec.coverage_min,
            "principal_angles": rec.principal_angles,
            "test_mse": rec.test_error,
        }
    pv = preprocess(loss, data.y, center=cfg["center"])
    spec = eigen_report(empirical_sigma(data.X, pv), rank_rule=target.r)
    results["eigenvalues"] = spec.eigenvalues[: min(8, len(spec.eigenvalues))]
    results["kappa_hat"] = spec.kappa_hat
    path = write_report(cfg, "train_report.json", _jsonable(results))
    print(f"wrote {path}")
    return 0


def cmd_spectral(cfg: RunConfig) -> int:
    from .losses import preprocess
    from .spectral import (alignment_to_subspace, eigen_report,
                           empirical_sigma, mc_error_scale, noise_norm,
                           population_sigma)
    from .targets import generate_dataset

    target, loss, act = _build_pieces(cfg)
    data = generate_dataset(target, cfg["n"], cfg["seed"] + 1)
    pv = preprocess(loss, data.y, center=cfg["center"])
    Sigma_hat = empirical_sigma(data.X, pv)
    Sigma_pop, SE = population_sigma(target, loss, n_mc=cfg["mc.n"],
                                     seed=cfg["seed"] + 2,
                                     center=cfg["center"])
    rep = eigen_report(Sigma_hat, rank_rule="threshold")
    results = {
        "eigenvalues": rep.eigenvalues,
        "r_hat": rep.r_hat,
        "kappa_hat": rep.kappa_hat,
        "noise_norm": noise_norm(Sigma_hat, Sigma_pop),
        "mc_error_scale": mc_error_scale(SE),
        "alignment_to_U": alignment_to_subspace(Sigma_pop, target.subspace.U),
    }
    path = write_report(cfg, "spectral_report.json", _jsonable(results))
    print(f"wrote {path}")
    return 0


def cmd_verify_approx(cfg: RunConfig) -> int:
    from .approx import build_weight_fn, monomial_error

    grid = np.linspace(-1.0, 1.0, cfg["approx.grid"])
    rows = []
    print(f"{'k':>3} {'max |E[vk sigma] - z^k|':>26} {'sup |vk|':>12}")
    for k in range(cfg["approx.k_max"] + 1):
        err = monomial_error(k, grid, cfg["approx.quad_order"])
        sup = build_weight_fn(k).sup_norm()
        rows.append({"k": k, "max_error": err, "sup_vk": sup})
        print(f"{k:>3} {err:>26.3e} {sup:>12.4f}")
    path = write_report(cfg, "approx_report.json", _jsonable({"table": rows}))
    print(f"wrote {path}")
    return 0


def cmd_sweep_alpha(cfg: RunConfig) -> int:
    from .experiments import (aggregate_fig1, sweep_minimal_alpha, write_rows)
    from .trainer import AdamConfig

    alphas = list(np.round(np.arange(cfg["sweep.alpha_min"],
                                     cfg["sweep.alpha_max"] + 1e-9,
                                     cfg["sweep.alpha_step"]), 10))
    d_list = [int(d) for d in cfg["sweep.d_list"]]
    seeds = list(range(cfg["sweep.n_seeds"]))
    adam = AdamConfig(lr=cfg["adam.lr"], batch=cfg["adam.batch"],
                      epochs=cfg["adam.epochs"], patience=cfg["adam.patience"])
    rows, minima = sweep_minimal_alpha(
        d_list, alphas, cfg["sweep.eps_list"], seeds, mode=cfg["mode"],
        m=cfg["m"], activation=cfg["activation"], target_kind=cfg["target"],
        loss_kind=cfg["loss"], adam_cfg=adam, n_test=cfg["n_test"])
    agg = aggregate_fig1(minima, d_list, cfg["sweep.eps_list"], seeds)
    meta = {"effective_config": _echo_config(cfg), "seed": cfg["seed"]}
    out = Path(cfg["out"])
    write_rows(out / "fig1.csv", "fig1", rows, meta)
    write_rows(out / "fig1_agg.csv", "fig1_agg", agg, meta)
    print(f"wrote {out/'fig1.csv'} and {out/'fig1_agg.csv'}")
    return 0


def cmd_loss_compare(cfg: RunConfig) -> int:
    from .experiments import aggregate_fig2, loss_phase_transition, write_rows
    from .trainer import AdamConfig

    d_list = [int(d) for d in cfg["fig2.d_list"]]
    seeds = list(range(cfg["sweep.n_seeds"]))
    adam = AdamConfig(lr=cfg["adam.lr"], batch=cfg["adam.batch"],
                      epochs=cfg["adam.epochs"], patience=cfg["adam.patience"])
    rows = loss_phase_transition(
        d_list, cfg["fig2.ratio_grid"], cfg["fig2.losses"], seeds,
        mode=cfg["mode"], m=cfg["m"], delta=cfg["loss_delta"], adam_cfg=adam)
    agg = aggregate_fig2(rows)
    meta = {"effective_config": _echo_config(cfg), "seed": cfg["seed"]}
    out = Path(cfg["out"])
    write_rows(out / "fig2.csv", "fig2", rows, meta)
    write_rows(out / "fig2_agg.csv", "fig2_agg", agg, meta)
    print(f"wrote {out/'fig2.csv'} and {out/'fig2_agg.csv'}")
    return 0


def cmd_noise_scaling(cfg: RunConfig) -> int:
    from .experiments import noise_norm_scaling, write_rows

    rows, slope = noise_norm_scaling(
        cfg["d"], [int(n) for n in cfg["noise.n_grid"]],
        list(range(cfg["noise.n_seeds"])), loss_kind=cfg["loss"],
        target_kind=cfg["target"], delta=cfg["loss_delta"],
        center=cfg["center"], n_mc=cfg["mc.n"])
    meta = {"effective_config": _echo_config(cfg), "seed": cfg["seed"],
            "slope": slope}
    out = Path(cfg["out"])
    write_rows(out / "noise.csv", "noise", rows, meta)
    print(f"wrote {out/'noise.csv'} (slope {slope:.3f})")
    return 0


def cmd_power_check(cfg: RunConfig) -> int:
    from .experiments import power_check, write_rows

    rows = power_check(
        cfg["d"], cfg["n"], [int(t) for t in cfg["power.T1_list"]],
        cfg["power.eps0_scales"], list(range(cfg["power.n_seeds"])),
        m=cfg["m"], kappa=cfg["kappa"])
    meta = {"effective_config": _echo_config(cfg), "seed": cfg["seed"]}
    out = Path(cfg["out"])
    write_rows(out / "power.csv", "power", rows, meta)
    print(f"wrote {out/'power.csv'}")
    return 0


_COMMANDS = {
    "train": cmd_train,
    "sweep-alpha": cmd_sweep_alpha,
    "loss-compare": cmd_loss_compare,
    "spectral": cmd_spectral,
    "verify-approx": cmd_verify_approx,
    "power-check": cmd_power_check,
    "noise-scaling": cmd_noise_scaling,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mindex",
        description="Layer-wise learning of Gaussian multi-index models: "
                    "training, spectral diagnostics, and experiment sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None,
                       help="TOML config file (or a report JSON)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        if name == "verify-approx":
            p.add_argument("--k-max", type=int, default=None)
            p.add_argument("--grid", type=int, default=None)
            p.add_argument("--quad-order", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify-approx":
            args.set = args.set or []
            if args.k_max is not None:
                args.set.append(f"approx.k_max={args.k_max}")
            if args.grid is not None:
                args.set.append(f"approx.grid={args.grid}")
            if args.quad_order is not None:
                args.set.append(f"approx.quad_order={args.quad_order}")
        cfg = load_config(args)
        return _COMMANDS[args.command](cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

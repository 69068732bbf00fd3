"""Run configuration: TOML file + flag overrides, validated key by key.

Unknown keys are rejected with their full path; numeric bounds are checked at
parse time. The effective configuration is echoed into every output so a run
can be reproduced from its artifacts alone (a report JSON containing an
``effective_config`` key is itself accepted as a config file).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

__all__ = ["ConfigError", "RunConfig", "parse_config", "DEFAULTS"]


class ConfigError(ValueError):
    """Config parse or validation failure; message names the key path."""


def _positive(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and x > 0


def _nonneg(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and x >= 0


def _count(x):
    return isinstance(x, int) and not isinstance(x, bool) and x >= 1


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _number_or_none(check):
    return lambda x: x is None or check(x)


def _choice(*opts):
    return lambda x: x in opts


def _num_list(x):
    return isinstance(x, list) and len(x) > 0 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x)


# key -> (default, validator, description of the bound)
_SCHEMA = {
    "seed": (0, _is_int, "integer"),
    "out": ("out", lambda x: isinstance(x, str) and bool(x), "nonempty string"),
    "preset": ("desk", _choice("desk", "full"), "one of desk|full"),
    "d": (64, _count, "positive integer"),
    "n": (1024, _count, "positive integer"),
    "n_test": (10_000, _count, "positive integer"),
    "target": ("quad2d", _choice("quad2d", "hermite4sum", "hermite_single"),
               "one of quad2d|hermite4sum|hermite_single"),
    "subspace": ("axis_aligned", _choice("axis_aligned", "random"),
                 "one of axis_aligned|random"),
    "hermite_degree": (4, _count, "positive integer"),
    "loss": ("square", _choice("square", "huber", "pseudo_huber", "l1"),
             "one of square|huber|pseudo_huber|l1"),
    "loss_delta": (1.0, _positive, "> 0"),
    "center": (True, lambda x: isinstance(x, bool), "boolean"),
    "activation": ("locally_quadratic",
                   _choice("locally_quadratic", "quadratic", "cosine",
                           "cubed_smooth"),
                   "one of locally_quadratic|quadratic|cosine|cubed_smooth"),
    "mode": ("algorithm1", _choice("algorithm1", "adam"),
             "one of algorithm1|adam"),
    "m": (4, lambda x: _count(x) and x % 2 == 0, "positive even integer"),
    "kappa": (2.0, lambda x: _nonneg(x) and x >= 1.0, ">= 1"),
    "eta1": (None, _number_or_none(_positive), "> 0"),
    "beta1": (None, _number_or_none(_positive), "> 0"),
    "T1": (None, _number_or_none(_count), "positive integer"),
    "eps0": (None, _number_or_none(_positive), "> 0"),
    "eta2": (None, _number_or_none(_positive), "> 0"),
    "beta2": (1e-3, _positive, "> 0"),
    "T2": (None, _number_or_none(_count), "positive integer"),
    "adam.lr": (0.005, _positive, "> 0"),
    "adam.batch": (32, _count, "positive integer"),
    "adam.epochs": (1000, _count, "positive integer"),
    "adam.patience": (75, _number_or_none(_count), "positive integer"),
    "mc.n": (1_000_000, lambda x: _count(x) and x >= 10_000, ">= 10^4"),
    "sweep.d_list": ([32, 64, 128], _num_list, "nonempty number list"),
    "sweep.alpha_min": (1.1, _positive, "> 0"),
    "sweep.alpha_max": (1.8, _positive, "> 0"),
    "sweep.alpha_step": (0.05, _positive, "> 0"),
    "sweep.eps_list": ([1.0, 0.1, 0.01], _num_list, "nonempty number list"),
    "sweep.n_seeds": (5, _count, "positive integer"),
    "fig2.d_list": ([200], _num_list, "nonempty number list"),
    "fig2.ratio_grid": ([10, 20, 40, 60, 80], _num_list, "nonempty number list"),
    "fig2.losses": (["mse", "huber"], lambda x: isinstance(x, list) and x and
                    all(v in ("mse", "huber", "pseudo_huber", "l1") for v in x),
                    "list over mse|huber|pseudo_huber|l1"),
    "noise.n_grid": ([2 ** k for k in range(8, 15)], _num_list,
                     "nonempty number list"),
    "noise.n_seeds": (20, _count, "positive integer"),
    "power.T1_list": ([3], _num_list, "nonempty number list"),
    "power.eps0_scales": ([1.0, 0.5], _num_list, "nonempty number list"),
    "power.n_seeds": (5, _count, "positive integer"),
    "approx.k_max": (6, lambda x: _is_int(x) and x >= 0, ">= 0"),
    "approx.grid": (101, _count, "positive integer"),
    "approx.quad_order": (64, lambda x: _count(x) and x >= 4, ">= 4"),
}

DEFAULTS = {key: spec[0] for key, spec in _SCHEMA.items()}

# Defaults are desk scale; the full preset restores the original study grids
# (finer exponent step, more seeds, larger dimensions).
_PRESETS = {
    "desk": {},
    "full": {
        "sweep.alpha_step": 0.01,
        "sweep.n_seeds": 10,
        "sweep.d_list": [32, 64, 128, 256, 500],
        "fig2.d_list": [200, 300, 500],
        "fig2.ratio_grid": [5, 10, 15, 20, 25, 30, 40, 60, 80],
        "noise.n_seeds": 20,
    },
}


@dataclass
class RunConfig:
    """Validated flat configuration (dotted keys for namespaces)."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def as_dict(self) -> dict:
        return dict(self.values)


def _flatten(tree: dict, prefix: str = "") -> dict:
    flat = {}
    for key, val in tree.items():
        path = f"{prefix}{key}"
        if isinstance(val, dict):
            flat.update(_flatten(val, prefix=f"{path}."))
        else:
            flat[path] = val
    return flat


def _validate(flat: dict) -> dict:
    merged = dict(DEFAULTS)
    for key, val in flat.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        _, check, bound = _SCHEMA[key]
        if isinstance(DEFAULTS[key], float) and isinstance(val, int) \
                and not isinstance(val, bool):
            val = float(val)
        if not check(val):
            raise ConfigError(f"config key {key!r} violates bound ({bound}): {val!r}")
        merged[key] = val
    return merged


def parse_config(path: str | Path | None = None,
                 overrides: dict | None = None) -> RunConfig:
    """Load defaults, then the file, then the overrides; validate everything.

    ``path`` may be a TOML config, a JSON report with an ``effective_config``
    key, or None for all defaults. Override values take precedence over file
    values, which take precedence over defaults.
    """
    flat = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        raw = path.read_bytes()
        tree = None
        if path.suffix == ".json" or raw.lstrip().startswith(b"{"):
            doc = json.loads(raw)
            tree = doc.get("effective_config", doc)
        else:
            try:
                tree = tomllib.loads(raw.decode())
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"cannot parse {path}: {exc}") from exc
        flat.update(_flatten(tree))
    if overrides:
        flat.update(_flatten(overrides))
    preset = flat.get("preset", DEFAULTS["preset"])
    if preset not in _PRESETS:
        raise ConfigError(f"config key 'preset' violates bound (one of "
                          f"desk|full): {preset!r}")
    # precedence: defaults < preset overlay < file < flags
    flat = {**_PRESETS[preset], **flat}
    return RunConfig(values=_validate(flat))

"""Flat key=value experiment configs.

One file describes one setting: the base instance, the ladder of
scaling factors, the policies to run, and the Monte Carlo sizes.  A
scaling factor k multiplies the horizon and every budget-like quantity,
leaving per-period data untouched.

Syntax: `key = value` lines, `#` comments.  Scalars are parsed as
int/float/bool when possible; commas separate vector entries and
semicolons separate matrix rows, e.g. `rewards = 2,10; 3,8`.
"""

from __future__ import annotations

import numpy as np

from .. import knapsack, learning, pricing, probing

SETTINGS = ("knapsack", "probing", "pricing", "learning")

_INSTANCE_KEYS = {
    "knapsack": ("weights", "rewards", "arrival_probs", "horizon", "budget"),
    "pricing": ("prices", "support", "probabilities", "horizon", "inventory"),
    "probing": ("rewards", "sub_probs", "arrival_probs", "horizon",
                "hire_budget", "probe_budget", "probe_cost", "variant"),
    "learning": ("weights", "arrival_probs", "reward_support", "reward_probs",
                 "horizon", "budget", "feedback"),
}

_RUN_KEYS = ("setting", "policies", "scaling_factors", "replications",
             "master_seed", "diagnostics", "dp_oracle", "output_path")


def _scalar(token: str):
    low = token.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        return token


def _value(text: str):
    if ";" in text:
        return tuple(tuple(_scalar(cell.strip()) for cell in row.split(","))
                     for row in text.split(";") if row.strip())
    if "," in text:
        return tuple(_scalar(cell.strip()) for cell in text.split(",") if cell.strip())
    return _scalar(text)


def parse_config(text: str) -> dict:
    """Parse key=value lines into a dict; later keys override earlier."""
    params = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        params[key] = _value(value.strip())
    return params


def load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _require(params: dict, key: str):
    if key not in params:
        raise ValueError(f"config is missing required key {key!r}")
    return params[key]


def _tuple_of(value) -> tuple:
    return value if isinstance(value, tuple) else (value,)


def build_instance(params: dict, k: int = 1):
    """Instance for one scaling factor from the config's base data."""
    setting = _require(params, "setting")
    if setting not in SETTINGS:
        raise ValueError(f"unknown setting {setting!r}")
    if k < 1:
        raise ValueError("scaling factor must be >= 1")
    horizon = int(_require(params, "horizon")) * k

    def scaled_probs():
        probs = _require(params, "arrival_probs")
        arr = np.asarray(probs, dtype=float)
        return np.repeat(arr, k, axis=0) if arr.ndim == 2 else arr

    if setting == "knapsack":
        return knapsack.KnapsackInstance(
            weights=_tuple_of(_require(params, "weights")),
            rewards=_tuple_of(_require(params, "rewards")),
            arrival_probs=scaled_probs(),
            horizon=horizon,
            budget=float(_require(params, "budget")) * k,
        )
    if setting == "pricing":
        return pricing.PricingInstance(
            prices=_tuple_of(_require(params, "prices")),
            support=_tuple_of(_require(params, "support")),
            probabilities=_tuple_of(_require(params, "probabilities")),
            horizon=horizon,
            inventory=int(_require(params, "inventory")) * k,
        )
    if setting == "probing":
        cost = params.get("probe_cost")
        return probing.ProbingInstance(
            rewards=_require(params, "rewards"),
            sub_probs=_require(params, "sub_probs"),
            arrival_probs=scaled_probs(),
            horizon=horizon,
            hire_budget=float(_require(params, "hire_budget")) * k,
            probe_budget=float(_require(params, "probe_budget")) * k,
            probe_cost=None if cost is None else _tuple_of(cost),
            variant=params.get("variant", "budgeted"),
        )
    return learning.LearningInstance(
        weights=_tuple_of(_require(params, "weights")),
        arrival_probs=_tuple_of(_require(params, "arrival_probs")),
        reward_support=_require(params, "reward_support"),
        reward_probs=_require(params, "reward_probs"),
        horizon=horizon,
        budget=float(_require(params, "budget")) * k,
        feedback=params.get("feedback", "full"),
    )


def run_settings(params: dict) -> dict:
    """Experiment-level knobs with defaults applied."""
    setting = _require(params, "setting")
    policies = params.get("policies", "rabbi")
    policies = tuple(policies) if isinstance(policies, tuple) else (policies,)
    factors = params.get("scaling_factors", 1)
    factors = tuple(int(f) for f in _tuple_of(factors))
    unknown = set(params) - set(_RUN_KEYS) - set(_INSTANCE_KEYS[setting])
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return {
        "setting": setting,
        "policies": policies,
        "scaling_factors": factors,
        "replications": int(params.get("replications", 1000)),
        "master_seed": int(params.get("master_seed", 0)),
        "diagnostics": bool(params.get("diagnostics", False)),
        "dp_oracle": bool(params.get("dp_oracle", False)),
        "output_path": str(params.get("output_path", ".")),
    }

"""Experiment configuration: a flat ``key = value`` text file.

Values are read as JSON when they parse as JSON, otherwise kept as bare
strings. Exact scalars are written as strings (``"(sqrt5-1)/2"``, ``"3/8"``).
The target set line carries its kind before the JSON list::

    group = torus
    dim = 1
    set = intervals [[0, "(sqrt5-1)/2"]]
    alpha_samples = 3
    seed = 7

``#`` starts a comment. See README.md for the full key list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError, HeavysetError, ResourceCapError
from .exact import ExactScalar, parse
from .groups import PAdicSpace, TorusSpace
from .targets import parse_target

SET_KINDS = ("intervals", "boxes", "padic_balls")

KNOWN_KEYS = {
    "group", "dim", "prime", "depth", "set", "gamma", "cf_terms", "alpha", "alpha_samples",
    "below", "below_pairs", "k", "c2", "liouville_levels", "liouville_base", "stages",
    "horizons", "resolution", "seed", "slack", "loeve_n", "loeve_samples", "ortho_pairs",
    "ortho_samples", "transfer_samples", "regularity_eps", "grid_cap", "horizon_cap",
    "nesting_resolution", "nesting_horizon", "discreteness_min",
}


def _value(raw: str) -> Any:
    raw = raw.strip()
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_text(text: str) -> dict:
    """Key/value pairs from config text (later keys override earlier ones)."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key == "set":
            kind, _, rest = raw.partition(" ")
            if kind not in SET_KINDS:
                raise ConfigError(f"line {lineno}: set kind must be one of {SET_KINDS}")
            try:
                out[key] = (kind, json.loads(rest))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"line {lineno}: bad set list: {exc}") from None
        else:
            out[key] = _value(raw)
    return out


def _int(d: dict, key: str, default=None, lo: int = 0) -> Optional[int]:
    v = d.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key} must be an integer")
    if v < lo:
        raise ConfigError(f"{key} must be >= {lo}")
    return v


def _scalar(v, key: str) -> ExactScalar:
    try:
        if isinstance(v, float):
            raise ConfigError(f"{key}: write exact values as strings, not floats")
        return parse(v) if isinstance(v, str) else ExactScalar.coerce(v)
    except HeavysetError:
        raise
    except Exception as exc:
        raise ConfigError(f"{key}: cannot parse {v!r} ({exc})") from None


def _int_list(d: dict, key: str, default) -> list:
    v = d.get(key, default)
    if not isinstance(v, list) or not all(isinstance(x, int) and x >= 1 for x in v):
        raise ConfigError(f"{key} must be a list of positive integers")
    return v


@dataclass
class ExperimentConfig:
    raw: dict
    space: object = None
    target: object = None
    gamma: Optional[ExactScalar] = None
    alpha: Optional[list] = None
    alpha_samples: int = 0
    below: str = "convergents"
    below_pairs: Optional[list] = None
    k: int = 2
    c2: Fraction = Fraction(1)
    liouville_levels: int = 4
    liouville_base: int = 2
    stages: int = 3
    horizons: list = field(default_factory=lambda: [10, 100, 1000])
    resolution: int = 10 ** 4
    seed: Optional[int] = None
    slack: Fraction = Fraction(1, 4)
    cf_terms: int = 10
    loeve_n: list = field(default_factory=lambda: [64, 256, 1024])
    loeve_samples: int = 1000
    ortho_pairs: int = 10
    ortho_samples: int = 10000
    transfer_samples: int = 1000
    regularity_eps: list = field(default_factory=list)
    grid_cap: int = 5 * 10 ** 7
    horizon_cap: int = 10 ** 9
    nesting_resolution: int = 10 ** 4
    nesting_horizon: int = 1000
    discreteness_min: int = 10 ** 5

    def need_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("this run samples at random: a seed is required")
        return self.seed


def build(d: dict, seed_override: Optional[int] = None) -> ExperimentConfig:
    cfg = ExperimentConfig(raw=dict(d))
    try:
        group = d.get("group")
        if group is not None:
            if group == "torus":
                cfg.space = TorusSpace(_int(d, "dim", 1, lo=1))
            elif group == "padic":
                prime, depth = _int(d, "prime", lo=2), _int(d, "depth", 20, lo=1)
                if prime is None:
                    raise ConfigError("group = padic needs prime")
                cfg.space = PAdicSpace(prime, depth)
            else:
                raise ConfigError(f"group must be torus or padic, not {group!r}")
        if "gamma" in d:
            cfg.gamma = _scalar(d["gamma"], "gamma")
        cfg.below = d.get("below", "convergents")
        if cfg.below not in ("convergents", "liouville", "explicit"):
            raise ConfigError("below must be convergents, liouville or explicit")
        cfg.k = _int(d, "k", 2, lo=2)
        cfg.c2 = Fraction(_scalar(d.get("c2", 1), "c2").as_fraction())
        cfg.liouville_levels = _int(d, "liouville_levels", 4, lo=1)
        cfg.liouville_base = _int(d, "liouville_base", 2, lo=2)
        if "below_pairs" in d:
            pairs = d["below_pairs"]
            if not isinstance(pairs, list) or not all(isinstance(p, list) and len(p) == 2
                                                      for p in pairs):
                raise ConfigError("below_pairs must be a list of [p, q]")
            cfg.below_pairs = [(int(p), int(q)) for p, q in pairs]
        if cfg.below == "explicit" and cfg.below_pairs is None:
            raise ConfigError("below = explicit needs below_pairs")
        if "set" in d:
            if cfg.space is None:
                raise ConfigError("set given without group")
            kind, items = d["set"]
            cfg.target = parse_target(cfg.space, kind, items)
        if "alpha" in d:
            a = d["alpha"]
            if isinstance(cfg.space, PAdicSpace):
                if not isinstance(a, int):
                    raise ConfigError("p-adic alpha must be an integer")
                cfg.alpha = [a]
            else:
                a = a if isinstance(a, list) else [a]
                cfg.alpha = [_scalar(x, "alpha") for x in a]
        cfg.alpha_samples = _int(d, "alpha_samples", 0)
        cfg.stages = _int(d, "stages", 3, lo=1)
        cfg.horizons = _int_list(d, "horizons", [10, 100, 1000])
        cfg.resolution = _int(d, "resolution", 10 ** 4, lo=1)
        cfg.seed = seed_override if seed_override is not None else _int(d, "seed")
        cfg.slack = _scalar(d.get("slack", "1/4"), "slack").as_fraction()
        cfg.cf_terms = _int(d, "cf_terms", 10, lo=1)
        cfg.loeve_n = _int_list(d, "loeve_n", [64, 256, 1024])
        cfg.loeve_samples = _int(d, "loeve_samples", 1000, lo=2)
        cfg.ortho_pairs = _int(d, "ortho_pairs", 10, lo=0)
        cfg.ortho_samples = _int(d, "ortho_samples", 10000, lo=2)
        cfg.transfer_samples = _int(d, "transfer_samples", 1000, lo=0)
        cfg.regularity_eps = [_scalar(e, "regularity_eps")
                              for e in d.get("regularity_eps", [])]
        cfg.grid_cap = _int(d, "grid_cap", 5 * 10 ** 7, lo=1)
        cfg.horizon_cap = _int(d, "horizon_cap", 10 ** 9, lo=1)
        cfg.nesting_resolution = _int(d, "nesting_resolution", 10 ** 4, lo=1)
        cfg.nesting_horizon = _int(d, "nesting_horizon", 1000, lo=1)
        cfg.discreteness_min = _int(d, "discreteness_min", 10 ** 5, lo=0)
    except (ConfigError, ResourceCapError):
        raise
    except HeavysetError as exc:
        raise ConfigError(str(exc)) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from None
    return cfg


def load(path, seed_override: Optional[int] = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return build(parse_text(text), seed_override)

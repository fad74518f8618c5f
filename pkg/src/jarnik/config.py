"""Run configuration: an INI ``[run]`` section of exact fraction strings and integer lists.

Example::

    [run]
    a = 3
    b = 1/5
    family = E
    mode = demo
    depth = 3
    demo_m = 30, 270000, 12*270000^3
    demo_q = 3, 3, 3
    selectors = 1, 2, 0

Integer list entries may be sums of products of powers (``12*270000^3``, ``10*128^4+1``).  A selector
is an integer residue, ``-`` for the union over all selectors, or ``p+p+...``
for a set of primes (family F).
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from gmpy2 import mpz

from .errors import ConfigError
from .exact import DEFAULT_PRECISION, SIEVE_ENV, Q, Rational, fmt
from .path import MAX_CANDIDATES, MAX_SUBSTAGES
from .sequences import FAMILIES, MODES, StageParams, TargetSpec

PATH_MODES = ("none", "classical", "effective")


@dataclass(frozen=True)
class RunConfig:
    a: Rational = Q(3)
    b: Rational = Q(1, 5)
    family: str = "E"
    mode: str = "strict"
    depth: int = 3
    demo_m: Optional[tuple] = None
    demo_q: Optional[tuple] = None
    selectors: Optional[tuple] = None
    seed: int = 0
    precision_bits: int = DEFAULT_PRECISION
    max_substages: int = MAX_SUBSTAGES
    max_candidates: int = MAX_CANDIDATES
    sieve_ceiling: Optional[int] = None
    samples: int = 100
    max_convergents: int = 64
    sweep_scales: int = 8
    sweep_anchors: int = 4
    path: str = "none"
    path_stages: int = 2
    path_m: Optional[tuple] = None  # effective path demo: m_l and q_l per level
    path_q: Optional[tuple] = None
    stage_params: Optional[StageParams] = None  # effective path: alpha_0, alpha_bar_0, beta_0, eps_0
    out_dir: str = "out"

    def target(self) -> TargetSpec:
        return TargetSpec(self.a, self.b, self.family, self.depth, self.mode)

    def check(self) -> "RunConfig":
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.path not in PATH_MODES:
            raise ConfigError(f"path must be one of {PATH_MODES}")
        if self.depth < 1:
            raise ConfigError("depth must be a positive integer")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.precision_bits < 16:
            raise ConfigError("precision_bits must be at least 16")
        for name in ("demo_m", "demo_q", "selectors"):
            v = getattr(self, name)
            if v is not None and len(v) < self.depth:
                raise ConfigError(f"{name} needs one entry per level (depth {self.depth})")
        if self.mode == "demo" and self.b != 0 and self.demo_m is None:
            raise ConfigError("demo mode needs demo_m")
        if self.b != 0:
            self.target()  # family/parameter pairing
        return self

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name in ("a", "b"):
                v = fmt(v)
            elif f.name == "selectors":
                v = ", ".join(_selector_text(s) for s in v)
            elif f.name == "stage_params":
                v = ", ".join(fmt(x) for x in (v.alpha, v.alpha_bar, v.beta, v.eps))
            elif isinstance(v, tuple):
                v = ", ".join(mpz(x).digits(10) for x in v)
            out[f.name] = str(v)
        return out


# ------------------------------------------------------------------ parsing


def parse_int(text: str) -> int:
    """Decimal integer or a sum of products of powers such as ``12*270000^3`` or ``10*128^4+1``."""
    text = text.strip().replace("**", "^")
    if not text:
        raise ConfigError("empty integer")
    return int(sum((_parse_term(t, text) for t in text.split("+")), mpz(0)))


def _parse_term(term: str, text: str):
    out = mpz(1)
    for factor in term.split("*"):
        base, _, exp = factor.strip().partition("^")
        try:
            b = mpz(base.strip())
            e = int(exp) if exp else 1
        except ValueError:
            raise ConfigError(f"not an integer expression: {text!r}") from None
        if e < 0:
            raise ConfigError(f"negative exponent in {text!r}")
        out *= b ** e
    return out


def parse_int_list(text: str) -> tuple:
    return tuple(parse_int(t) for t in text.split(",") if t.strip())


def parse_fraction(text: str) -> Rational:
    t = text.strip()
    if "." in t or "e" in t.lower():
        raise ConfigError(f"{text!r}: write rationals as fraction strings like 21/10, not decimals")
    try:
        return Q(t)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a fraction: {text!r}") from None


def _parse_selector(tok: str):
    tok = tok.strip()
    if tok in ("-", "none", "None"):
        return None
    if "+" in tok:
        return tuple(parse_int(p) for p in tok.split("+"))
    return parse_int(tok)


def _selector_text(s) -> str:
    if s is None:
        return "-"
    if isinstance(s, tuple):
        return "+".join(str(p) for p in s)
    return str(s)


def _parse_stage_params(text: str) -> StageParams:
    parts = [parse_fraction(t) for t in text.split(",")]
    if len(parts) != 4:
        raise ConfigError("stage_params needs alpha, alpha_bar, beta, eps")
    return StageParams(*parts)


_PARSERS = {
    "a": parse_fraction,
    "b": parse_fraction,
    "family": str.strip,
    "mode": str.strip,
    "depth": parse_int,
    "demo_m": parse_int_list,
    "demo_q": parse_int_list,
    "selectors": lambda t: tuple(_parse_selector(x) for x in t.split(",")),
    "seed": parse_int,
    "precision_bits": parse_int,
    "max_substages": parse_int,
    "max_candidates": parse_int,
    "sieve_ceiling": parse_int,
    "samples": parse_int,
    "max_convergents": parse_int,
    "sweep_scales": parse_int,
    "sweep_anchors": parse_int,
    "path": str.strip,
    "path_stages": parse_int,
    "path_m": parse_int_list,
    "path_q": parse_int_list,
    "stage_params": _parse_stage_params,
    "out_dir": str.strip,
}

KEYS = tuple(_PARSERS)


def from_mapping(values: dict, base: Optional[RunConfig] = None) -> RunConfig:
    unknown = sorted(set(values) - set(_PARSERS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    parsed = {}
    for key, raw in values.items():
        try:
            parsed[key] = _PARSERS[key](str(raw))
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{key}: {exc}") from None
    return replace(base or RunConfig(), **parsed)


def load_config(path, overrides: Optional[dict] = None) -> RunConfig:
    """Read the ``[run]`` section; ``overrides`` (raw strings) win over the file."""
    values = {}
    if path is not None:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str  # keep key case so typos are reported verbatim
        try:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        extra_sections = [s for s in cp.sections() if s != "run"]
        if extra_sections:
            raise ConfigError(f"unknown config sections: {', '.join(extra_sections)}")
        if cp.has_section("run"):
            values.update(cp.items("run"))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    env = os.environ.get(SIEVE_ENV)
    if env:
        values["sieve_ceiling"] = env
    return from_mapping(values).check()


def dump_config(cfg: RunConfig) -> str:
    lines = ["[run]"] + [f"{k} = {v}" for k, v in cfg.to_dict().items()]
    return "\n".join(lines) + "\n"


def out_path(cfg: RunConfig, name: str) -> Path:
    return Path(cfg.out_dir) / name

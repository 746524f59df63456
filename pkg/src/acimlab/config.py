"""Flat key=value experiment configs and system construction.

The format is deliberately minimal so experiment records stay diffable:
one ``key=value`` per line, ``#`` comments, section dots in key names.
Systems come either from a named preset (``preset=example4``) or from
explicit parts (``K=2``, ``map1.left=lsv(0.5)``, ``map1.right=affine(2,-1)``,
``prob1=example4`` or ``prob1=const(0.5)`` / ``prob1=paff(c0,c1,a)``).
"""
from __future__ import annotations

import hashlib
import re
from pathlib import Path
from typing import Optional

from .maps import AffineBranch, Branch, LsvBranch, MapSpec, TabulatedBranch, lsv_left
from .presets import PRESETS, example4_probabilities
from .randomsys import (
    PowerPiecewise,
    ProbComponent,
    ProbabilityField,
    RandomMapSystem,
    TabulatedProbability,
    constant_component,
    power_affine_component,
)


class ConfigError(Exception):
    """Malformed configuration, unknown preset, or out-of-range parameter."""


def parse_config_text(text: str) -> dict[str, str]:
    cfg: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


def load_config(path: Optional[str]) -> dict[str, str]:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(p.read_text())


def cfg_float(cfg: dict, key: str, default: float, lo: float = -1e300,
              hi: float = 1e300) -> float:
    raw = cfg.get(key)
    if raw is None:
        return default
    try:
        value = float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: not a number: {raw!r}") from exc
    if not lo <= value <= hi:
        raise ConfigError(f"{key}={value} outside [{lo}, {hi}]")
    return value


def cfg_int(cfg: dict, key: str, default: int, lo: int = -2**62,
            hi: int = 2**62) -> int:
    raw = cfg.get(key)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: not an integer: {raw!r}") from exc
    if not lo <= value <= hi:
        raise ConfigError(f"{key}={value} outside [{lo}, {hi}]")
    return value


def cfg_bool(cfg: dict, key: str, default: bool) -> bool:
    raw = cfg.get(key)
    if raw is None:
        return default
    if raw.lower() in ("1", "true", "yes", "on"):
        return True
    if raw.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: not a boolean: {raw!r}")


def cfg_floats(cfg: dict, key: str, default: tuple[float, ...]) -> tuple[float, ...]:
    raw = cfg.get(key)
    if raw is None:
        return default
    try:
        return tuple(float(part) for part in raw.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: not a comma-separated number list: {raw!r}") from exc


_CALL_RE = re.compile(r"^([A-Za-z_]\w*)\s*(?:\((.*)\))?$")


def _parse_call(spec: str) -> tuple[str, list[float]]:
    m = _CALL_RE.match(spec.strip())
    if not m:
        raise ConfigError(f"cannot parse {spec!r}")
    name, arg_text = m.group(1), m.group(2)
    args: list[float] = []
    if arg_text:
        for part in arg_text.split(","):
            try:
                args.append(float(part))
            except ValueError as exc:
                raise ConfigError(f"{spec!r}: bad argument {part!r}") from exc
    return name.lower(), args


def _branch_from_spec(spec: str, side: str) -> Branch:
    name, args = _parse_call(spec)
    if name == "lsv":
        if len(args) != 1:
            raise ConfigError(f"lsv takes one exponent, got {spec!r}")
        if side != "left":
            raise ConfigError("lsv branches go on the left")
        return lsv_left(args[0])
    if name == "affine":
        if len(args) != 2:
            raise ConfigError(f"affine takes slope,intercept, got {spec!r}")
        lo, hi = (0.0, 0.5) if side == "left" else (0.5, 1.0)
        return AffineBranch(args[0], args[1], lo, hi)
    raise ConfigError(f"unknown branch form {spec!r}")


def _prob_from_spec(spec: str, index: int, alpha: float) -> ProbComponent:
    name, args = _parse_call(spec)
    if name == "const":
        if len(args) != 1:
            raise ConfigError(f"const takes one value, got {spec!r}")
        return constant_component(args[0])
    if name == "paff":
        if len(args) != 3:
            raise ConfigError(f"paff takes c0,c1,exponent, got {spec!r}")
        return power_affine_component(*args)
    if name == "example4":
        pair = example4_probabilities(alpha)
        if index >= 2:
            raise ConfigError("example4 probabilities exist for components 1 and 2 only")
        return pair[index]
    raise ConfigError(f"unknown probability form {spec!r}")


def system_from_config(cfg: dict) -> RandomMapSystem:
    """Build the random system a config describes; raises ConfigError on any
    malformed or inconsistent description (including probabilities that do
    not sum to one)."""
    preset = cfg.get("preset")
    try:
        if preset is not None:
            name = preset.strip().lower()
            if name not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}")
            if name == "example4":
                return PRESETS[name](alpha=cfg_float(cfg, "alpha", 0.5, 1e-9, 1 - 1e-9),
                                     beta=cfg_float(cfg, "beta", 0.25, 1e-9, 1 - 1e-9))
            return PRESETS[name](alpha=cfg_float(cfg, "alpha", 0.5, 1e-9, 1 - 1e-9))

        K = cfg_int(cfg, "K", 2, lo=2, hi=64)
        maps = []
        comps = []
        for j in range(1, K + 1):
            left_spec = cfg.get(f"map{j}.left")
            right_spec = cfg.get(f"map{j}.right")
            prob_spec = cfg.get(f"prob{j}")
            if left_spec is None or right_spec is None or prob_spec is None:
                raise ConfigError(
                    f"map{j}.left, map{j}.right, and prob{j} are all required")
            left = _branch_from_spec(left_spec, "left")
            right = _branch_from_spec(right_spec, "right")
            exponent = (left.exponent if isinstance(left, LsvBranch)
                        else cfg_float(cfg, f"map{j}.exponent", 0.5, 1e-9, 1 - 1e-9))
            maps.append(MapSpec(left, right, exponent))
        for j in range(1, K + 1):
            comps.append(_prob_from_spec(cfg[f"prob{j}"], j - 1, maps[0].exponent))
        return RandomMapSystem(tuple(maps), ProbabilityField(tuple(comps)))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _describe_branch(branch: Branch) -> str:
    if isinstance(branch, LsvBranch):
        return f"lsv({branch.exponent:.17g})"
    if isinstance(branch, AffineBranch):
        return f"affine({branch.slope:.17g},{branch.intercept:.17g})"
    if isinstance(branch, TabulatedBranch):
        knots = ";".join(f"{x:.17g}:{y:.17g}" for x, y in zip(branch.xs, branch.ys))
        return f"table({knots})"
    raise TypeError(f"unknown branch {branch!r}")


def _describe_component(comp: ProbComponent) -> str:
    if isinstance(comp, PowerPiecewise):
        return "|".join(f"[{p.lo:.17g},{p.hi:.17g}]{p.c0:.17g}+{p.c1:.17g}x^{p.exponent:.17g}"
                        for p in comp.pieces)
    if isinstance(comp, TabulatedProbability):
        return ";".join(f"{x:.17g}:{y:.17g}" for x, y in zip(comp.xs, comp.ys))
    raise TypeError(f"unknown component {comp!r}")


def system_fingerprint(sys: RandomMapSystem) -> str:
    """Stable hash of the full system description, for output metadata."""
    parts = []
    for m, comp in zip(sys.maps, sys.probs.components):
        parts.append(f"{_describe_branch(m.left)}/{_describe_branch(m.right)}"
                     f"@{m.exponent:.17g}~{_describe_component(comp)}")
    return hashlib.sha256("||".join(parts).encode()).hexdigest()[:16]

"""Bundled system presets addressable by name from configs and the CLI."""
from __future__ import annotations

from .maps import MapSpec, affine_right, lsv_left
from .randomsys import (
    ProbPiece,
    PowerPiecewise,
    ProbabilityField,
    RandomMapSystem,
    constant_component,
)


def example4_probabilities(alpha: float) -> tuple[PowerPiecewise, PowerPiecewise]:
    """The bundled pair p1 = (1 + x^alpha)/3, p2 = (2 - x^alpha)/3 on [0, 1/2),
    flattening to 1/3 and 2/3 on [1/2, 1]."""
    third = 1.0 / 3.0
    p1 = PowerPiecewise((
        ProbPiece(0.0, 0.5, third, third, alpha),
        ProbPiece(0.5, 1.0, third),
    ))
    p2 = PowerPiecewise((
        ProbPiece(0.0, 0.5, 2.0 * third, -third, alpha),
        ProbPiece(0.5, 1.0, 2.0 * third),
    ))
    return p1, p2


def example4(alpha: float = 0.5, beta: float = 0.25) -> RandomMapSystem:
    """Two intermittent maps with exponents beta < alpha, a non-onto second
    right branch, and position-dependent probabilities bounded below by 1/3."""
    if not 0.0 < beta < alpha < 1.0:
        raise ValueError("preset requires 0 < beta < alpha < 1")
    t1 = MapSpec(lsv_left(alpha), affine_right(2.0, -1.0), alpha)
    t2 = MapSpec(lsv_left(beta), affine_right(1.5, -0.75), beta)
    p1, p2 = example4_probabilities(alpha)
    return RandomMapSystem((t1, t2), ProbabilityField((p1, p2)))


def t1_only(alpha: float = 0.5) -> RandomMapSystem:
    """Deterministic control: the first map fires with probability one."""
    t1 = MapSpec(lsv_left(alpha), affine_right(2.0, -1.0), alpha)
    probs = ProbabilityField((constant_component(1.0), constant_component(0.0)))
    return RandomMapSystem((t1, t1), probs)


PRESETS = {
    "example4": example4,
    "t1only": t1_only,
    "t1_only": t1_only,
}

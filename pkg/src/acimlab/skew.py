"""Deterministic 2-D skew product encoding a two-map random system.

The fiber coordinate w plays the role of the random draw: the first map
applies when w < p1(x) and the fiber is rescaled by 1/p1, otherwise the
second map applies with fiber map (w - p1)/p2.  The x-marginal statistics
of a skew orbit must match the random map itself.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import _kernels
from .density import GridFunction, l1_distance
from .maps import PARTITION
from .orbits import default_burn_in, encode_system
from .randomsys import RandomMapSystem, check_condition_B
from .transfer import DEFAULT_CONFIG, TransferConfig, build_ulam, stationary_density


@dataclass(frozen=True)
class SkewState:
    x: float
    w: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.w <= 1.0):
            raise ValueError(f"state ({self.x}, {self.w}) outside the unit square")


def _require_two_maps(sys: RandomMapSystem) -> None:
    if sys.K != 2:
        raise ValueError("the skew product is defined for two-map systems")


def skew_step(sys: RandomMapSystem, s: SkewState) -> SkewState:
    """One deterministic step; the fiber boundary w = p1(x) belongs to the
    second branch."""
    _require_two_maps(sys)
    p1 = sys.probs.value(0, s.x)
    if s.w < p1:
        k, w = 0, s.w / p1
    else:
        p2 = sys.probs.value(1, s.x)
        if p2 <= 0.0:
            raise ValueError(f"second map has probability 0 at x={s.x}")
        k, w = 1, (s.w - p1) / p2
    m = sys.maps[k]
    x = m.left.value(s.x) if s.x < PARTITION else m.right.value(s.x)
    return SkewState(x, min(w, 1.0))


@dataclass(frozen=True)
class SkewOrbit:
    """Skew trajectory with the branch symbols that fired at each step."""

    xs: np.ndarray
    ws: np.ndarray
    symbols: np.ndarray
    log_deriv_sum: float

    @property
    def steps(self) -> int:
        return len(self.symbols)

    def state(self, t: int) -> SkewState:
        return SkewState(float(self.xs[t]), float(self.ws[t]))


def skew_orbit(sys: RandomMapSystem, s0: SkewState, steps: int) -> SkewOrbit:
    _require_two_maps(sys)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    xs = np.empty(steps + 1)
    ws = np.empty(steps + 1)
    symbols = np.empty(steps, dtype=np.int8)
    enc = encode_system(sys)
    if enc is not None:
        try:
            log_sum = _kernels.skew_kernel(s0.x, s0.w, steps, enc[0], enc[1],
                                           xs, ws, symbols)
        except ZeroDivisionError:
            raise ValueError("second map selected where its probability is 0") from None
    else:
        state = s0
        xs[0], ws[0] = state.x, state.w
        log_sum = 0.0
        for t in range(steps):
            p1 = sys.probs.value(0, state.x)
            k = 0 if state.w < p1 else 1
            symbols[t] = k + 1
            m = sys.maps[k]
            d = m.left.deriv(state.x) if state.x < PARTITION else m.right.deriv(state.x)
            log_sum += float(np.log(d))
            state = skew_step(sys, state)
            xs[t + 1], ws[t + 1] = state.x, state.w
    return SkewOrbit(xs, ws, symbols, float(log_sum))


def random_initial_state(x0: float, rng: np.random.Generator) -> SkewState:
    """Lebesgue on the fiber is the natural reference for the initial w."""
    return SkewState(x0, float(rng.random()))


def horizontal_lyapunov(sys: RandomMapSystem, s0: SkewState, steps: int) -> float:
    """Average log derivative of the applied branch along the skew orbit;
    exactly zero when started at the indifferent fixed point (0, 0)."""
    return skew_orbit(sys, s0, steps).log_deriv_sum / steps


def marginal_consistency(sys: RandomMapSystem, s0: SkewState, steps: int,
                         n_cells: int, cfg: TransferConfig = DEFAULT_CONFIG,
                         reference: Optional[GridFunction] = None,
                         burn_in: Optional[int] = None) -> float:
    """L1 distance between the empirical x-marginal of a skew orbit and the
    stationary density of the random map's Ulam matrix.

    Requires a genuinely random system (positive probability floor), since
    the statistics of a single skew trajectory stand in for the ensemble."""
    if steps < 1_000_000:
        raise ValueError("marginal comparison needs at least 1e6 steps")
    if check_condition_B(sys, 256) <= 0.0:
        raise ValueError("marginal consistency needs a positive probability floor")
    orbit = skew_orbit(sys, s0, steps)
    if burn_in is None:
        burn_in = default_burn_in(steps)
    data = orbit.xs[burn_in:]
    counts, _ = np.histogram(data, bins=n_cells, range=(0.0, 1.0))
    marginal = GridFunction(counts * (n_cells / data.size))
    if reference is None:
        reference = stationary_density(build_ulam(sys, n_cells, cfg), cfg).density
    return l1_distance(marginal, reference)


def write_hist2d_csv(orbit: SkewOrbit, n: int, path: Path | str,
                     burn_in: int = 0) -> None:
    """Empirical density of the orbit on an n x n grid of the unit square."""
    hist, _, _ = np.histogram2d(orbit.xs[burn_in:], orbit.ws[burn_in:],
                                bins=n, range=((0.0, 1.0), (0.0, 1.0)))
    total = hist.sum()
    lines = ["x_mid,w_mid,density"]
    for i in range(n):
        for j in range(n):
            x_mid = (i + 0.5) / n
            w_mid = (j + 0.5) / n
            value = hist[i, j] * n * n / total
            lines.append(f"{x_mid:.17g},{w_mid:.17g},{value:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")

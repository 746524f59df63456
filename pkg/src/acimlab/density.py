"""Piecewise-constant densities on [0, 1] and the invariant-cone checks.

A GridFunction stores one density value per uniform cell, so the integral
is just the mean of the values.  The cone of admissible densities consists
of nonnegative, nonincreasing functions whose cumulative integral grows at
most like ``growth_constant * x^(1 - exponent)`` times the total mass.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .maps import invert_branch_vec
from .randomsys import RandomMapSystem

MONOTONE_SLACK = 1e-10


@dataclass(frozen=True)
class GridFunction:
    """Density values on n uniform cells of [0, 1]; value = mass per unit length."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a nonempty 1-D array")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def integral(self) -> float:
        return float(self.values.mean())

    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) / self.n

    def at(self, x: float) -> float:
        return float(self.values[min(int(x * self.n), self.n - 1)])

    def at_vec(self, x: np.ndarray) -> np.ndarray:
        idx = np.minimum((np.asarray(x) * self.n).astype(int), self.n - 1)
        return self.values[idx]

    def normalized(self) -> "GridFunction":
        total = self.integral
        if total <= 0:
            raise ValueError("cannot normalize a density without mass")
        return GridFunction(self.values / total)

    @classmethod
    def uniform(cls, n: int) -> "GridFunction":
        return cls(np.ones(n))

    @classmethod
    def sample(cls, fn: Callable[[np.ndarray], np.ndarray], n: int) -> "GridFunction":
        """Sample a callable at cell midpoints."""
        return cls(np.asarray(fn((np.arange(n) + 0.5) / n), dtype=float))

    def write_csv(self, path: Path | str) -> None:
        lines = ["x_mid,density"]
        mids = self.midpoints()
        for x, v in zip(mids, self.values):
            lines.append(f"{x:.17g},{v:.17g}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def read_csv(cls, path: Path | str) -> "GridFunction":
        lines = Path(path).read_text().strip().splitlines()
        if not lines or lines[0] != "x_mid,density":
            raise ValueError(f"{path}: expected header 'x_mid,density'")
        vals = [float(line.split(",")[1]) for line in lines[1:]]
        return cls(np.array(vals))


def l1_distance(f: GridFunction, g: GridFunction) -> float:
    """L1 distance of two densities on the same grid."""
    if f.n != g.n:
        raise ValueError(f"grid mismatch: {f.n} vs {g.n}")
    return float(np.abs(f.values - g.values).mean())


@dataclass(frozen=True)
class ConeParams:
    """Parameters of the invariant cone: nonnegative nonincreasing f with
    cumulative integral <= growth_constant * x^(1-exponent) * integral(f)."""

    growth_constant: float
    exponent: float

    def __post_init__(self):
        if self.growth_constant <= 0:
            raise ValueError("growth_constant must be positive")
        if not 0.0 < self.exponent < 1.0:
            raise ValueError("exponent must lie in (0, 1)")


def min_growth_constant(exponent: float) -> float:
    """Smallest growth constant for which the cone is operator-invariant."""
    return 4.0 / (1.0 - exponent)


@dataclass(frozen=True)
class ConeReport:
    nonnegative: bool
    nonincreasing: bool
    growth_bound: bool
    margin: float
    witness: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.nonnegative and self.nonincreasing and self.growth_bound


def cone_check(f: GridFunction, cone: ConeParams, slack: float = MONOTONE_SLACK) -> ConeReport:
    """Cone membership report for a grid density.

    The cumulative integrals at cell edges are exact for piecewise-constant
    densities, so the growth bound is checked up to floating point plus the
    given slack.  margin is the minimum of (bound - cumulative) over edges.
    """
    if f.n < 2:
        raise ValueError("need at least 2 cells")
    v = f.values
    nonneg = bool(np.all(v >= -slack))
    diffs = np.diff(v)
    noninc = bool(np.all(diffs <= slack))

    edges = np.arange(1, f.n + 1) / f.n
    cumulative = np.cumsum(v) / f.n
    bound = cone.growth_constant * np.power(edges, 1.0 - cone.exponent) * f.integral
    gaps = bound - cumulative
    growth = bool(np.all(gaps >= -slack))

    witness = None
    if not nonneg:
        witness = float(np.nonzero(v < -slack)[0][0] + 0.5) / f.n
    elif not noninc:
        witness = float(np.nonzero(diffs > slack)[0][0] + 1.5) / f.n
    elif not growth:
        witness = float(edges[np.nonzero(gaps < -slack)[0][0]])

    return ConeReport(nonneg, noninc, growth, float(gaps.min()), witness)


def power_law_density(n: int, exponent: float) -> GridFunction:
    """Exact cell averages of the normalized power law (1-a) * x^(-a)."""
    if not 0.0 <= exponent < 1.0:
        raise ValueError("exponent must lie in [0, 1)")
    edges = np.arange(n + 1) / n
    mass = np.diff(np.power(edges, 1.0 - exponent))  # cell masses, sum to 1
    return GridFunction(mass * n)


def random_cone_density(n: int, cone: ConeParams, rng: np.random.Generator,
                        terms: int = 3) -> GridFunction:
    """Random cone element with unit mass: a mixture of a constant and power
    laws with exponents strictly below the cone exponent, represented by
    exact cell averages so that membership is guaranteed, then re-verified."""
    weights = rng.dirichlet(np.ones(terms + 1))
    values = weights[0] * np.ones(n)
    exps = cone.exponent * rng.uniform(0.05, 0.98, size=terms)
    for w, a in zip(weights[1:], exps):
        values = values + w * power_law_density(n, float(a)).values
    f = GridFunction(values)
    report = cone_check(f, cone)
    if not report.passed:
        raise AssertionError("generated density unexpectedly left the cone")
    return f


@dataclass(frozen=True)
class BoundItem:
    name: str
    passed: bool
    worst_margin: float
    witness: Optional[float] = None


@dataclass(frozen=True)
class PointwiseBoundReport:
    """Sampled pointwise consequences of cone membership plus the preimage
    geometry facts used by the invariance argument."""

    power_bound: BoundItem          # f(x) <= A x^(-a) m(f)
    mass_bound: BoundItem           # f(x) <= m(f) / x
    preimage_halving: BoundItem     # left preimages y_k >= x/2 and x >= max_k y_k
    concave_displacement: BoundItem  # (1-x)^(1-a) <= 1 - (1-a) x
    preimage_gap: BoundItem         # x^(1-a) - y*^(1-a) >= (1-a) x / 2

    @property
    def items(self) -> tuple[BoundItem, ...]:
        return (self.power_bound, self.mass_bound, self.preimage_halving,
                self.concave_displacement, self.preimage_gap)

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)


def _item(name: str, margins: np.ndarray, xs: np.ndarray, tol: float = 1e-12) -> BoundItem:
    bad = np.nonzero(margins < -tol)[0]
    witness = float(xs[bad[0]]) if bad.size else None
    return BoundItem(name, bad.size == 0, float(margins.min()), witness)


def pointwise_bound_suite(f: GridFunction, cone: ConeParams, sys: RandomMapSystem,
                          samples: int, rng: np.random.Generator) -> PointwiseBoundReport:
    """Sample the pointwise density bounds at random cell edges and the
    preimage inequalities at random points of (0, 1]."""
    a = cone.exponent
    mass = f.integral

    # density bounds at random cell edges (where cumulative sums are exact)
    j = rng.integers(1, f.n + 1, size=samples)
    x_edge = j / f.n
    fx = f.values[np.minimum(j, f.n - 1)]
    power = _item("power_bound",
                  cone.growth_constant * np.power(x_edge, -a) * mass - fx, x_edge)
    recip = _item("mass_bound", mass / x_edge - fx, x_edge)

    # preimage facts at random interior points
    xs = rng.uniform(0.0, 1.0, size=samples)
    xs = np.maximum(xs, 1e-12)
    preimages = []
    for m in sys.maps:
        ys = invert_branch_vec(m.left, xs)
        if np.any(np.isnan(ys)):
            raise AssertionError("left branch should cover [0, 1]")
        preimages.append(ys)
    ymat = np.vstack(preimages)
    y_star = ymat.max(axis=0)

    halving_margin = np.minimum((ymat - xs / 2.0).min(axis=0), xs - y_star)
    halving = _item("preimage_halving", halving_margin, xs)

    concave = _item("concave_displacement",
                    (1.0 - (1.0 - a) * xs) - np.power(1.0 - xs, 1.0 - a), xs)

    gap = _item("preimage_gap",
                np.power(xs, 1.0 - a) - np.power(y_star, 1.0 - a)
                - 0.5 * (1.0 - a) * xs, xs)

    return PointwiseBoundReport(power, recip, halving, concave, gap)

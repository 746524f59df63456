"""Two-branch interval maps with an indifferent fixed point at the origin.

A map consists of a slowly expanding left branch on [0, 1/2) that fixes 0
with unit derivative, and a uniformly expanding right branch on [1/2, 1]
that vanishes at the partition point.  Branches are strictly increasing,
so inversion reduces to bisection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

#: residual tolerance for branch inversion: |T(x_hat) - y| <= this
BISECTION_RESIDUAL = 1e-13

#: bisection iterations; interval shrinks to ~1e-19, well below the residual
_BISECTION_ITERS = 60

#: slack when deciding whether y lies in the branch image before bisecting;
#: the final residual check is what actually accepts or rejects
_IMAGE_SLACK = 1e-9

PARTITION = 0.5


class DomainError(ValueError):
    """Argument outside the map's domain [0, 1]."""


@dataclass(frozen=True)
class LsvBranch:
    """Left branch x -> x * (1 + 2^a * x^a), indifferent at 0."""

    exponent: float
    lo: float = 0.0
    hi: float = PARTITION

    def __post_init__(self):
        if not 0.0 < self.exponent < 1.0:
            raise ValueError(f"exponent must lie in (0, 1), got {self.exponent}")

    @property
    def coefficient(self) -> float:
        return 2.0 ** self.exponent

    def value(self, x: float) -> float:
        v = x * (1.0 + self.coefficient * x ** self.exponent)
        return 1.0 if v > 1.0 else v

    def value_vec(self, x: np.ndarray) -> np.ndarray:
        v = x * (1.0 + self.coefficient * np.power(x, self.exponent))
        return np.minimum(v, 1.0)

    def deriv(self, x: float) -> float:
        return 1.0 + (1.0 + self.exponent) * self.coefficient * x ** self.exponent

    def deriv_vec(self, x: np.ndarray) -> np.ndarray:
        return 1.0 + (1.0 + self.exponent) * self.coefficient * np.power(x, self.exponent)


@dataclass(frozen=True)
class AffineBranch:
    """Affine branch x -> slope * x + intercept."""

    slope: float
    intercept: float
    lo: float = PARTITION
    hi: float = 1.0

    def value(self, x: float) -> float:
        v = self.slope * x + self.intercept
        return 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)

    def value_vec(self, x: np.ndarray) -> np.ndarray:
        return np.clip(self.slope * x + self.intercept, 0.0, 1.0)

    def deriv(self, x: float) -> float:
        return self.slope

    def deriv_vec(self, x: np.ndarray) -> np.ndarray:
        return np.full_like(np.asarray(x, dtype=float), self.slope)


@dataclass(frozen=True)
class TabulatedBranch:
    """Monotone branch given by a tabulation, evaluated by linear interpolation.

    Knots must be strictly increasing in both coordinates; the first and last
    knots define the branch domain.
    """

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
            raise ValueError("tabulation needs matching 1-D arrays with >= 2 knots")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise ValueError("tabulation must be strictly increasing")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def lo(self) -> float:
        return float(self.xs[0])

    @property
    def hi(self) -> float:
        return float(self.xs[-1])

    def value(self, x: float) -> float:
        return float(np.interp(x, self.xs, self.ys))

    def value_vec(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self.xs, self.ys)

    def deriv(self, x: float) -> float:
        # slope of the containing segment (right-continuous at knots)
        i = int(np.searchsorted(self.xs, x, side="right")) - 1
        i = max(0, min(i, len(self.xs) - 2))
        return float((self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i]))

    def deriv_vec(self, x: np.ndarray) -> np.ndarray:
        i = np.searchsorted(self.xs, x, side="right") - 1
        i = np.clip(i, 0, len(self.xs) - 2)
        return (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i])


Branch = Union[LsvBranch, AffineBranch, TabulatedBranch]


def lsv_left(exponent: float) -> LsvBranch:
    return LsvBranch(exponent)


def affine_right(slope: float, intercept: float) -> AffineBranch:
    return AffineBranch(slope, intercept)


@dataclass(frozen=True)
class MapSpec:
    """A two-branch interval map: left branch on [0, 1/2), right on [1/2, 1].

    ``exponent`` is the intermittency exponent governing the displacement
    bound T(x) >= x + 2^exponent * x^(1+exponent) near the origin.
    """

    left: Branch
    right: Branch
    exponent: float

    def __post_init__(self):
        if not 0.0 < self.exponent < 1.0:
            raise ValueError(f"exponent must lie in (0, 1), got {self.exponent}")
        if not (self.left.lo == 0.0 and abs(self.left.hi - PARTITION) < 1e-15):
            raise ValueError("left branch domain must be [0, 1/2]")
        if not (abs(self.right.lo - PARTITION) < 1e-15 and self.right.hi == 1.0):
            raise ValueError("right branch domain must be [1/2, 1]")
        if abs(self.left.value(0.0)) > 1e-12:
            raise ValueError("left branch must fix the origin")
        if abs(self.right.value(PARTITION)) > 1e-12:
            raise ValueError("right branch must vanish at the partition point")
        if _raw_top(self.right) > 1.0 + 1e-9:
            raise ValueError("right branch must map into [0, 1]")

    def branch(self, which: str) -> Branch:
        if which == "left":
            return self.left
        if which == "right":
            return self.right
        raise ValueError(f"branch must be 'left' or 'right', got {which!r}")

    @property
    def branches(self) -> tuple[Branch, Branch]:
        return (self.left, self.right)


def _raw_top(branch: Branch) -> float:
    """Unclamped value at the top of the branch domain."""
    if isinstance(branch, AffineBranch):
        return branch.slope * branch.hi + branch.intercept
    if isinstance(branch, TabulatedBranch):
        return float(branch.ys[-1])
    return branch.hi * (1.0 + branch.coefficient * branch.hi ** branch.exponent)


def lsv_map(exponent: float, right: Optional[Branch] = None) -> MapSpec:
    """Standard intermittent map; right branch defaults to the onto 2x - 1."""
    return MapSpec(lsv_left(exponent), right or affine_right(2.0, -1.0), exponent)


def _check_domain(x: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x={x} outside [0, 1]")


def eval_map(m: MapSpec, x: float) -> float:
    """T(x); the left branch applies for x < 1/2, the right for x >= 1/2."""
    _check_domain(x)
    return m.left.value(x) if x < PARTITION else m.right.value(x)


def derivative(m: MapSpec, x: float) -> float:
    """One-sided derivative: left-branch value for x < 1/2, right-branch for x >= 1/2."""
    _check_domain(x)
    return m.left.deriv(x) if x < PARTITION else m.right.deriv(x)


def branch_image(branch: Branch) -> tuple[float, float]:
    """Image interval of a strictly increasing branch over its closed domain."""
    return branch.value(branch.lo), branch.value(branch.hi)


def invert_branch_vec(branch: Branch, ys: np.ndarray) -> np.ndarray:
    """Vectorized branch inversion; NaN where y is not in the branch image.

    Accepts an answer only when |branch(x_hat) - y| <= BISECTION_RESIDUAL,
    so boundary values survive rounding while genuinely unreachable targets
    are rejected.
    """
    ys = np.asarray(ys, dtype=float)
    v_lo, v_hi = branch_image(branch)
    inside = (ys >= v_lo - _IMAGE_SLACK) & (ys <= v_hi + _IMAGE_SLACK)
    target = np.clip(ys, v_lo, v_hi)

    if isinstance(branch, TabulatedBranch):
        # piecewise-linear branches invert exactly by interpolation
        x = np.interp(target, branch.ys, branch.xs)
    else:
        lo = np.full(ys.shape, branch.lo)
        hi = np.full(ys.shape, branch.hi)
        for _ in range(_BISECTION_ITERS):
            mid = 0.5 * (lo + hi)
            below = branch.value_vec(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        x = 0.5 * (lo + hi)
        # image endpoints invert to the domain endpoints exactly
        x = np.where(target == v_lo, branch.lo, x)
        x = np.where(target == v_hi, branch.hi, x)

    residual = np.abs(branch.value_vec(x) - ys)
    good = inside & (residual <= BISECTION_RESIDUAL)
    return np.where(good, x, np.nan)


def invert_branch(m: MapSpec, which: str, y: float) -> Optional[float]:
    """Unique preimage of y in the chosen branch, or None when y is outside
    the branch image."""
    if not 0.0 <= y <= 1.0:
        raise DomainError(f"y={y} outside [0, 1]")
    x = invert_branch_vec(m.branch(which), np.array([y]))[0]
    return None if math.isnan(x) else float(x)


@dataclass(frozen=True)
class CheckOutcome:
    """Outcome of one grid check; witness is the first failing grid point."""

    passed: bool
    witness: Optional[float] = None


@dataclass(frozen=True)
class MapClassReport:
    monotone: CheckOutcome
    convex: CheckOutcome
    expanding: CheckOutcome
    displacement: CheckOutcome
    displacement_constant: float

    @property
    def passed(self) -> bool:
        return (self.monotone.passed and self.convex.passed
                and self.expanding.passed and self.displacement.passed)


def _branch_grid(branch: Branch, k: int) -> np.ndarray:
    if isinstance(branch, TabulatedBranch):
        return np.asarray(branch.xs, dtype=float)
    return np.linspace(branch.lo, branch.hi, k)


def verify_map_class(m: MapSpec, grid_points: int) -> MapClassReport:
    """Grid check of the admissible-map assumptions.

    Checks, per branch: monotonicity, convexity (nondecreasing difference
    quotients), expansion (derivative > 1 off the origin), and on the left
    branch the displacement bound T(x) - x >= C x^(1+exponent) with the
    natural constant C = 2^exponent.  Failures are reported with the first
    witnessing grid point, never raised.
    """
    if grid_points < 16:
        raise ValueError("grid_points must be >= 16")

    monotone = CheckOutcome(True)
    convex = CheckOutcome(True)
    expanding = CheckOutcome(True)

    for branch in m.branches:
        xs = _branch_grid(branch, max(grid_points // 2, 8))
        vs = branch.value_vec(xs)

        dv = np.diff(vs)
        bad = np.nonzero(dv <= -1e-14)[0]
        if bad.size and monotone.passed:
            monotone = CheckOutcome(False, float(xs[bad[0] + 1]))

        slopes = dv / np.diff(xs)
        dslope = np.diff(slopes)
        bad = np.nonzero(dslope < -1e-10)[0]
        if bad.size and convex.passed:
            convex = CheckOutcome(False, float(xs[bad[0] + 1]))

        ds = branch.deriv_vec(xs)
        off_origin = xs > 0.0
        bad = np.nonzero(off_origin & (ds <= 1.0))[0]
        if bad.size and expanding.passed:
            expanding = CheckOutcome(False, float(xs[bad[0]]))

    const = 2.0 ** m.exponent
    xs = _branch_grid(m.left, max(grid_points // 2, 8))
    gap = m.left.value_vec(xs) - xs - const * np.power(xs, 1.0 + m.exponent)
    bad = np.nonzero(gap < -1e-12)[0]
    displacement = (CheckOutcome(False, float(xs[bad[0]])) if bad.size
                    else CheckOutcome(True))

    return MapClassReport(monotone, convex, expanding, displacement, const)

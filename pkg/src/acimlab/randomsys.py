"""Random map systems: K interval maps driven by position-dependent probabilities.

At state x the k-th map applies with probability p_k(x); the probabilities
form a measurable partition of unity.  The module also provides the two
sufficient conditions used throughout the verification suites: monotonicity
of the partial inverse-branch sums (condition A) and a uniform positive
floor on the probabilities (condition B).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .maps import MapSpec, eval_map, invert_branch_vec

CONDITION_A_SLACK = 1e-10


@dataclass(frozen=True)
class ProbPiece:
    """Closed form c0 + c1 * x^exponent on [lo, hi); constant when c1 == 0."""

    lo: float
    hi: float
    c0: float
    c1: float = 0.0
    exponent: float = 0.0


@dataclass(frozen=True)
class PowerPiecewise:
    """Probability component built from power-affine pieces covering [0, 1]."""

    pieces: tuple[ProbPiece, ...]

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("need at least one piece")
        if self.pieces[0].lo != 0.0 or self.pieces[-1].hi != 1.0:
            raise ValueError("pieces must cover [0, 1]")
        for a, b in zip(self.pieces, self.pieces[1:]):
            if a.hi != b.lo:
                raise ValueError("pieces must be contiguous")

    def breakpoints(self) -> list[float]:
        return [p.hi for p in self.pieces[:-1]]

    def _piece(self, x: float) -> ProbPiece:
        for p in self.pieces:
            if x < p.hi:
                return p
        return self.pieces[-1]

    def value(self, x: float) -> float:
        p = self._piece(x)
        if p.c1 == 0.0:
            return p.c0
        return p.c0 + p.c1 * x ** p.exponent

    def value_vec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        for i, p in enumerate(self.pieces):
            sel = (x >= p.lo) & (x < p.hi) if i < len(self.pieces) - 1 else (x >= p.lo)
            if p.c1 == 0.0:
                out[sel] = p.c0
            else:
                out[sel] = p.c0 + p.c1 * np.power(x[sel], p.exponent)
        return out


@dataclass(frozen=True)
class TabulatedProbability:
    """Probability component tabulated on knots, linearly interpolated."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
            raise ValueError("tabulation needs matching 1-D arrays with >= 2 knots")
        if xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0):
            raise ValueError("knots must increase from 0 to 1")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    def breakpoints(self) -> list[float]:
        return [float(x) for x in self.xs[1:-1]]

    def value(self, x: float) -> float:
        return float(np.interp(x, self.xs, self.ys))

    def value_vec(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self.xs, self.ys)


ProbComponent = Union[PowerPiecewise, TabulatedProbability]


def constant_component(c: float) -> PowerPiecewise:
    return PowerPiecewise((ProbPiece(0.0, 1.0, c),))


def power_affine_component(c0: float, c1: float, exponent: float) -> PowerPiecewise:
    """c0 + c1 * x^exponent on all of [0, 1]."""
    return PowerPiecewise((ProbPiece(0.0, 1.0, c0, c1, exponent),))


def complement(comp: ProbComponent) -> ProbComponent:
    """The component 1 - comp(x)."""
    if isinstance(comp, PowerPiecewise):
        return PowerPiecewise(tuple(
            ProbPiece(p.lo, p.hi, 1.0 - p.c0, -p.c1, p.exponent) for p in comp.pieces))
    return TabulatedProbability(comp.xs, 1.0 - comp.ys)


@dataclass(frozen=True)
class ProbabilityField:
    """K probability components summing to 1 everywhere on [0, 1]."""

    components: tuple[ProbComponent, ...]

    def __post_init__(self):
        if len(self.components) < 2:
            raise ValueError("a random system needs at least two components")
        self.validate()

    @property
    def K(self) -> int:
        return len(self.components)

    def value(self, k: int, x: float) -> float:
        return self.components[k].value(x)

    def values_at(self, x: float) -> np.ndarray:
        return np.array([c.value(x) for c in self.components])

    def matrix(self, xs: np.ndarray) -> np.ndarray:
        """Shape (K, len(xs)) of component values."""
        return np.vstack([c.value_vec(xs) for c in self.components])

    def validate(self, grid_points: int = 2048, tol: float = 1e-12) -> None:
        xs = np.linspace(0.0, 1.0, grid_points)
        vals = self.matrix(xs)
        if np.any(vals < -tol) or np.any(vals > 1.0 + tol):
            raise ValueError("probabilities must lie in [0, 1]")
        err = np.abs(vals.sum(axis=0) - 1.0).max()
        if err > tol:
            raise ValueError(f"probabilities must sum to 1 (max deviation {err:.3e})")


@dataclass(frozen=True)
class RandomMapSystem:
    """K maps plus a position-dependent probability field."""

    maps: tuple[MapSpec, ...]
    probs: ProbabilityField

    def __post_init__(self):
        if len(self.maps) != self.probs.K:
            raise ValueError("number of maps must match number of probability components")
        exps = [m.exponent for m in self.maps]
        # map 1 carries the largest intermittency exponent; equality is allowed
        # so that degenerate controls (identical maps, p2 = 0) stay constructible
        if any(e > exps[0] + 1e-15 for e in exps[1:]):
            raise ValueError("map 1 must carry the largest exponent")

    @property
    def K(self) -> int:
        return len(self.maps)

    @property
    def alpha_max(self) -> float:
        return max(m.exponent for m in self.maps)


@dataclass(frozen=True)
class ConditionAViolation:
    map_index: int        # 0-based
    partial_len: int      # l: number of branch terms in the partial sum
    x_prev: float
    x_next: float
    value_prev: float
    value_next: float


@dataclass(frozen=True)
class ConditionAResult:
    per_map_pass: tuple[bool, ...]
    violations: tuple[Optional[ConditionAViolation], ...]

    @property
    def passed(self) -> bool:
        return all(self.per_map_pass)


@dataclass(frozen=True)
class ConditionReport:
    condition_a: ConditionAResult
    delta: float

    @property
    def condition_a_pass(self) -> bool:
        return self.condition_a.passed

    @property
    def condition_b_pass(self) -> bool:
        return self.delta > 0.0


def prob_on_branch(comp: ProbComponent, branch, y: np.ndarray) -> np.ndarray:
    """Probability value as seen from a branch's half-open cell.

    Branch cells are [0, 1/2) and [1/2, 1]; a preimage landing exactly on an
    open right end takes the limit from inside the cell, so a piecewise
    probability cannot jump to the neighbouring cell's value there.
    """
    if branch.hi < 1.0:
        y = np.minimum(y, np.nextafter(branch.hi, 0.0))
    return comp.value_vec(y)


def check_condition_A(sys: RandomMapSystem, grid_points: int) -> ConditionAResult:
    """Check that the partial sums over inverse branches of p_k / T_k' are
    nonincreasing in x.

    For each map k and partial length l, evaluates the sum of
    p_k(y_i) / T_k'(y_i) over the first l branch preimages y_i of x on an
    increasing grid; grid x outside a branch image simply omit that branch's
    term.  Violations beyond a 1e-10 slack are reported with the first
    offending grid pair.
    """
    if grid_points < 64:
        raise ValueError("grid_points must be >= 64")
    xs = np.linspace(0.0, 1.0, grid_points)
    per_map: list[bool] = []
    violations: list[Optional[ConditionAViolation]] = []

    for k, m in enumerate(sys.maps):
        comp = sys.probs.components[k]
        terms = []
        for branch in m.branches:
            ys = invert_branch_vec(branch, xs)
            ok = ~np.isnan(ys)
            t = np.zeros_like(xs)
            t[ok] = prob_on_branch(comp, branch, ys[ok]) / branch.deriv_vec(ys[ok])
            terms.append(t)

        found: Optional[ConditionAViolation] = None
        partial = np.zeros_like(xs)
        for l, t in enumerate(terms, start=1):
            partial = partial + t
            jumps = np.diff(partial)
            bad = np.nonzero(jumps > CONDITION_A_SLACK)[0]
            if bad.size and found is None:
                j = int(bad[0])
                found = ConditionAViolation(k, l, float(xs[j]), float(xs[j + 1]),
                                            float(partial[j]), float(partial[j + 1]))
        per_map.append(found is None)
        violations.append(found)

    return ConditionAResult(tuple(per_map), tuple(violations))


def check_condition_B(sys: RandomMapSystem, grid_points: int) -> float:
    """Grid infimum of p_k(x) over all x and k; positive iff condition B holds."""
    if grid_points < 64:
        raise ValueError("grid_points must be >= 64")
    xs = np.linspace(0.0, 1.0, grid_points)
    return float(sys.probs.matrix(xs).min())


def check_conditions(sys: RandomMapSystem, grid_points: int = 1024) -> ConditionReport:
    return ConditionReport(check_condition_A(sys, grid_points),
                           check_condition_B(sys, grid_points))


def transition_kernel(sys: RandomMapSystem, x: float) -> list[tuple[float, float]]:
    """All (T_k(x), p_k(x)) pairs; the weights sum to 1."""
    pairs = [(eval_map(m, x), sys.probs.value(k, x)) for k, m in enumerate(sys.maps)]
    total = sum(w for _, w in pairs)
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"transition weights sum to {total}, expected 1")
    return pairs

"""Perturbed families and strong stochastic stability measurements.

The family perturbs a single intermittent map by occasionally (with total
probability at most eps) applying a companion map whose intermittency
exponent is lowered by eps.  Stability is measured as the L1 distance
between the stationary density of the perturbed system and that of the
unperturbed map, on a fixed grid so the distances compare like with like.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .density import ConeParams, GridFunction, l1_distance, min_growth_constant, random_cone_density
from .maps import AffineBranch, Branch, MapSpec, lsv_left
from .randomsys import (
    ProbComponent,
    ProbabilityField,
    RandomMapSystem,
    check_condition_A,
    check_condition_B,
    complement,
    constant_component,
)
from .transfer import DEFAULT_CONFIG, TransferConfig, build_ulam, stationary_density


class ConditionError(ValueError):
    """A perturbed system failed the sufficient conditions."""


def constant_profile(eps: float) -> ProbComponent:
    """Default perturbation profile: the companion map fires with constant
    probability eps, so its sup is exactly eps."""
    return constant_component(eps)


def component_sup(comp: ProbComponent, grid_points: int = 4096) -> float:
    return float(comp.value_vec(np.linspace(0.0, 1.0, grid_points)).max())


@dataclass(frozen=True)
class EpsilonFamily:
    """A family of perturbed two-map systems indexed by descending eps."""

    alpha: float
    epsilons: tuple[float, ...]
    g1: Branch = AffineBranch(2.0, -1.0)
    g1_eps: Optional[Branch] = None
    p2_profile: Callable[[float], ProbComponent] = constant_profile

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.epsilons:
            raise ValueError("need at least one eps value")
        for eps in self.epsilons:
            # eps = 0 is admitted as the unperturbed control point
            if not 0.0 <= eps < self.alpha:
                raise ValueError(f"eps={eps} must lie in [0, alpha)")
        sups = [component_sup(self.p2_profile(e)) for e in self.epsilons]
        if any(b > a + 1e-12 for a, b in zip(sups, sups[1:])):
            raise ValueError("profile sups must be nonincreasing along the eps list")

    def right_branch_for(self, eps: float) -> Branch:
        return self.g1 if (self.g1_eps is None or eps == 0.0) else self.g1_eps

    def base_map(self) -> MapSpec:
        return MapSpec(lsv_left(self.alpha), self.g1, self.alpha)

    def reference_system(self) -> RandomMapSystem:
        """The unperturbed map fired with probability one."""
        t1 = self.base_map()
        probs = ProbabilityField((constant_component(1.0), constant_component(0.0)))
        return RandomMapSystem((t1, t1), probs)


def make_perturbed_system(fam: EpsilonFamily, eps: float, check: bool = True,
                          grid_points: int = 256) -> RandomMapSystem:
    """Build the eps-perturbed two-map system and verify its conditions.

    For eps > 0 both sufficient conditions must hold; eps = 0 is the
    deterministic control, for which the probability floor is necessarily
    zero and only the branch-sum condition is required.
    """
    if eps not in fam.epsilons:
        raise ValueError(f"eps={eps} is not in the family")
    t1 = fam.base_map()
    exponent = fam.alpha - eps
    companion = MapSpec(lsv_left(exponent) if eps > 0.0 else lsv_left(fam.alpha),
                        fam.right_branch_for(eps),
                        exponent if eps > 0.0 else fam.alpha)
    p2 = fam.p2_profile(eps)
    probs = ProbabilityField((complement(p2), p2))
    sys = RandomMapSystem((t1, companion), probs)

    if check:
        result = check_condition_A(sys, grid_points)
        if not result.passed:
            bad = next(v for v in result.violations if v is not None)
            raise ConditionError(
                f"eps={eps}: branch-sum condition fails for map {bad.map_index + 1} "
                f"near x={bad.x_next:.6g}")
        if eps > 0.0:
            delta = check_condition_B(sys, grid_points)
            if delta <= 0.0:
                raise ConditionError(f"eps={eps}: probability floor is {delta}")
    return sys


@dataclass(frozen=True)
class StabilityPoint:
    epsilon: float
    l1_distance: float
    converged: bool


def stability_sweep(fam: EpsilonFamily, n: int, cfg: TransferConfig = DEFAULT_CONFIG,
                    densities: Optional[dict] = None,
                    threads: int = 1) -> list[StabilityPoint]:
    """Stationary-density distances to the unperturbed reference, one point
    per eps in the family's descending order, all on the same n-cell grid.

    Non-converged solves are flagged on their point and the sweep continues.
    If a dict is passed as ``densities`` it receives every solved density
    keyed by eps, plus the reference under ``"reference"``.
    """
    if n < 256:
        raise ValueError("sweeps need n >= 256 so the distances resolve the limit")
    ref = stationary_density(build_ulam(fam.reference_system(), n, cfg), cfg)
    if densities is not None:
        densities["reference"] = ref.density

    def solve_point(eps: float) -> tuple[StabilityPoint, GridFunction]:
        sys = make_perturbed_system(fam, eps)
        result = stationary_density(build_ulam(sys, n, cfg), cfg)
        dist = l1_distance(result.density, ref.density)
        return (StabilityPoint(eps, dist, result.converged and ref.converged),
                result.density)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            solved = list(pool.map(solve_point, fam.epsilons))
    else:
        solved = [solve_point(eps) for eps in fam.epsilons]

    points = []
    for (point, dens) in solved:
        points.append(point)
        if densities is not None:
            densities[point.epsilon] = dens
    return points


def operator_defect(fam: EpsilonFamily, eps: float, f: GridFunction, n: int,
                    cfg: TransferConfig = DEFAULT_CONFIG) -> float:
    """L1 gap between the perturbed operator and the unperturbed one applied
    to a density, measured through the Ulam matrices on n cells.  Bounded by
    twice the sup of the perturbation probability times the mass of f."""
    M_eps = build_ulam(make_perturbed_system(fam, eps, check=False), n, cfg)
    M_ref = build_ulam(fam.reference_system(), n, cfg)
    return float(np.abs(M_eps.apply(f.values) - M_ref.apply(f.values)).mean())


@dataclass(frozen=True)
class DefectBoundReport:
    epsilon: float
    trials: int
    max_defect: float
    bound: float
    passed: bool


def defect_bound_report(fam: EpsilonFamily, eps: float, n: int,
                        cfg: TransferConfig = DEFAULT_CONFIG, trials: int = 100,
                        seed: int = 0, slack: float = 1e-6) -> DefectBoundReport:
    """Check the operator-defect bound on random unit-mass cone densities."""
    M_eps = build_ulam(make_perturbed_system(fam, eps, check=False), n, cfg)
    M_ref = build_ulam(fam.reference_system(), n, cfg)
    bound = 2.0 * component_sup(fam.p2_profile(eps))
    cone = ConeParams(min_growth_constant(fam.alpha), fam.alpha)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        f = random_cone_density(n, cone, rng)
        defect = float(np.abs(M_eps.apply(f.values) - M_ref.apply(f.values)).mean())
        worst = max(worst, defect)
    return DefectBoundReport(eps, trials, worst, bound, worst <= bound + slack)

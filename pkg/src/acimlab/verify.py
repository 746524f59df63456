"""One-stop verification suite combining every property check.

Each check returns a named pass/fail result with a short human-readable
detail line; the CLI's verify-all command prints one line per check and
fails the run if any check fails.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .density import ConeParams, GridFunction, cone_check, l1_distance, min_growth_constant, pointwise_bound_suite, random_cone_density
from .randomsys import RandomMapSystem, check_condition_B, check_conditions
from .skew import SkewState, marginal_consistency
from .stability import EpsilonFamily, defect_bound_report
from .transfer import (
    DEFAULT_CONFIG,
    TransferConfig,
    build_ulam,
    stationary_density,
    verify_cone_invariance,
    verify_lower_bound,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _default_cone(sys: RandomMapSystem) -> ConeParams:
    return ConeParams(min_growth_constant(sys.alpha_max), sys.alpha_max)


def conditions_check(sys: RandomMapSystem, grid_points: int = 1024) -> CheckResult:
    report = check_conditions(sys, grid_points)
    passed = report.condition_a_pass and report.condition_b_pass
    return CheckResult(
        "conditions",
        passed,
        f"branch sums {'monotone' if report.condition_a_pass else 'NOT monotone'}, "
        f"probability floor delta={report.delta:.6g}")


def invariance_check(sys: RandomMapSystem, cone: Optional[ConeParams] = None,
                     trials: int = 25, n: int = 256, seed: int = 0) -> CheckResult:
    cone = cone or _default_cone(sys)
    rep = verify_cone_invariance(sys, cone, trials, n, seed=seed)
    return CheckResult(
        "cone_invariance", rep.all_passed,
        f"{rep.passes}/{rep.trials} images in the cone, worst margin {rep.worst_margin:.3e}")


def bounds_check(sys: RandomMapSystem, cone: Optional[ConeParams] = None,
                 samples: int = 10_000, n: int = 512, seed: int = 0) -> CheckResult:
    cone = cone or _default_cone(sys)
    rng = np.random.default_rng(seed)
    f = random_cone_density(n, cone, rng)
    report = pointwise_bound_suite(f, cone, sys, samples, rng)
    failing = [item.name for item in report.items if not item.passed]
    worst = min(item.worst_margin for item in report.items)
    return CheckResult(
        "pointwise_bounds", report.passed,
        f"worst margin {worst:.3e}" + (f", failing: {failing}" if failing else ""))


def floor_check(sys: RandomMapSystem, cone: Optional[ConeParams] = None,
                n_iterates: int = 30, n: int = 256,
                cfg: TransferConfig = DEFAULT_CONFIG, seed: int = 0) -> CheckResult:
    cone = cone or _default_cone(sys)
    gamma = verify_lower_bound(sys, cone, n_iterates, n, cfg, seed=seed)
    return CheckResult("density_floor", gamma > 0.0,
                       f"iterated density floor {gamma:.6g}")


def uniqueness_check(sys: RandomMapSystem, n: int = 512,
                     cfg: TransferConfig = DEFAULT_CONFIG,
                     tol: float = 1e-8) -> CheckResult:
    tight = replace(cfg, power_iteration_tol=min(cfg.power_iteration_tol, 1e-13))
    M = build_ulam(sys, n, tight)
    from_uniform = stationary_density(M, tight)
    near_singular = np.zeros(n)
    near_singular[:2] = n / 2.0
    from_singular = stationary_density(M, tight, GridFunction(near_singular))
    dist = l1_distance(from_uniform.density, from_singular.density)
    fixed = from_uniform.density
    shape_ok = (cone_check(fixed, _default_cone(sys)).nonincreasing
                and float(fixed.values.min()) > 0.0)
    passed = (from_uniform.converged and from_singular.converged
              and dist <= tol and shape_ok)
    return CheckResult("uniqueness", passed,
                       f"two-start distance {dist:.3e}, min value {fixed.values.min():.6g}")


def marginal_check(sys: RandomMapSystem, steps: int = 2_000_000, cells: int = 256,
                   cfg: TransferConfig = DEFAULT_CONFIG, tol: float = 0.05,
                   seed: int = 0) -> CheckResult:
    if sys.K != 2:
        return CheckResult("marginal_consistency", True, "skipped: needs a two-map system")
    if check_condition_B(sys, 256) <= 0.0:
        return CheckResult("marginal_consistency", True,
                           "skipped: needs a positive probability floor")
    rng = np.random.default_rng(seed)
    s0 = SkewState(0.3, float(rng.random()))
    dist = marginal_consistency(sys, s0, steps, cells, cfg)
    return CheckResult("marginal_consistency", dist <= tol,
                       f"skew x-marginal distance {dist:.4f} (tol {tol})")


def defect_check(fam: EpsilonFamily, n: int = 512,
                 cfg: TransferConfig = DEFAULT_CONFIG, trials: int = 20,
                 seed: int = 0) -> CheckResult:
    worst_line = []
    ok = True
    for eps in fam.epsilons:
        rep = defect_bound_report(fam, eps, n, cfg, trials=trials, seed=seed)
        ok = ok and rep.passed
        worst_line.append(f"eps={eps:g}: {rep.max_defect:.4g}<={rep.bound:.4g}")
    return CheckResult("operator_defect", ok, "; ".join(worst_line))


def verification_suite(sys: RandomMapSystem, fam: Optional[EpsilonFamily] = None,
                       cfg: TransferConfig = DEFAULT_CONFIG, seed: int = 0,
                       marginal_steps: int = 2_000_000) -> list[CheckResult]:
    """Run every property suite against a system (and optionally a family)."""
    results = [
        conditions_check(sys),
        invariance_check(sys, seed=seed),
        bounds_check(sys, seed=seed),
        floor_check(sys, cfg=cfg, seed=seed),
        uniqueness_check(sys, cfg=cfg),
        marginal_check(sys, steps=marginal_steps, cfg=cfg, seed=seed),
    ]
    if fam is None:
        fam = EpsilonFamily(alpha=0.6, epsilons=(0.1,))
    results.append(defect_check(fam, cfg=cfg, seed=seed))
    return results

"""Command-line front end: wires configs to experiments and emits artifacts.

Every command reads a flat key=value config, writes CSV data files plus a
metadata.json sidecar into the output directory, and reports through exit
codes: 0 ok, 2 config error, 3 property-suite failure, 4 non-convergence.
Data files are byte-identical across reruns with the same config and seed;
only the metadata timestamp and wall time vary.
"""
from __future__ import annotations

import argparse
import json
import os
import sys as _sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .config import (
    ConfigError,
    cfg_bool,
    cfg_float,
    cfg_floats,
    cfg_int,
    load_config,
    system_fingerprint,
    system_from_config,
)
from .density import ConeParams, GridFunction, cone_check, min_growth_constant
from .orbits import (
    GENERATOR_NAME,
    default_burn_in,
    empirical_density,
    multi_chain_density,
    rng_for,
    simulate,
    write_orbit_csv,
)
from .randomsys import check_conditions
from .skew import SkewState, skew_orbit, write_hist2d_csv
from .stability import ConditionError, EpsilonFamily, stability_sweep
from .transfer import QuadratureError, TransferConfig, build_ulam, stationary_density
from .verify import verification_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROPERTY = 3
EXIT_NONCONVERGENCE = 4

COMMANDS = ("simulate", "ulam", "invariant-density", "cone-check",
            "conditions-check", "stability-sweep", "skew-simulate", "verify-all")


def _transfer_config(cfg: dict) -> TransferConfig:
    return TransferConfig(
        quadrature_points_per_cell=cfg_int(cfg, "quad_points", 32, 4, 512),
        power_iteration_tol=cfg_float(cfg, "tol", 1e-10, 1e-16, 1e-2),
        max_iterations=cfg_int(cfg, "max_iterations", 1_000_000, 1, 10**9),
    )


def _write_metadata(out: Path, command: str, cfg: dict, seed: int, threads: int,
                    started: float, extra: Optional[dict] = None) -> None:
    meta = {
        "command": command,
        "config": dict(sorted(cfg.items())),
        "seed": seed,
        "threads": threads,
        "generator": GENERATOR_NAME,
        "versions": {"acimlab": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "wall_time_s": round(time.perf_counter() - started, 3),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        meta.update(extra)
    (out / "metadata.json").write_text(json.dumps(meta, indent=2) + "\n")


def _write_report_csv(path: Path, rows: list[tuple[str, bool, str]]) -> None:
    lines = ["check,passed,detail"]
    for name, passed, detail in rows:
        lines.append(f"{name},{'true' if passed else 'false'},\"{detail}\"")
    path.write_text("\n".join(lines) + "\n")


def _cmd_simulate(cfg: dict, out: Path, seed: int, threads: int) -> tuple[int, dict]:
    sys = system_from_config(cfg)
    steps = cfg_int(cfg, "steps", 1_000_000, 1, 10**8)
    x0 = cfg_float(cfg, "x0", 0.3, 0.0, 1.0)
    cells = cfg_int(cfg, "cells", 512, 1, 10**7)
    chains = cfg_int(cfg, "chains", 1, 1, 10**4)
    burn_in = cfg_int(cfg, "burn_in", default_burn_in(steps), 0, steps - 1)
    if chains > 1:
        density = multi_chain_density(sys, x0, steps, seed, chains, cells,
                                      burn_in, threads)
    else:
        orbit = simulate(sys, x0, steps, seed)
        density = empirical_density(orbit, cells, burn_in)
        if cfg_bool(cfg, "dump_orbit", False):
            write_orbit_csv(orbit, out / "orbit.csv")
    density.write_csv(out / "empirical_density.csv")
    return EXIT_OK, {"system": system_fingerprint(sys), "steps": steps,
                     "burn_in": burn_in, "x0": x0, "chains": chains}


def _cmd_ulam(cfg: dict, out: Path, seed: int, threads: int) -> tuple[int, dict]:
    sys = system_from_config(cfg)
    n = cfg_int(cfg, "n", 256, 1, 10**6)
    M = build_ulam(sys, n, _transfer_config(cfg))
    M.write_csv(out / "ulam_matrix.csv")
    dev = float(np.abs(M.row_sums() - 1.0).max())
    return EXIT_OK, {"system": system_fingerprint(sys), "n": n,
                     "max_row_sum_deviation": dev}


def _cmd_invariant_density(cfg: dict, out: Path, seed: int, threads: int) -> tuple[int, dict]:
    sys = system_from_config(cfg)
    n = cfg_int(cfg, "n", 1024, 1, 10**6)
    tcfg = _transfer_config(cfg)
    result = stationary_density(build_ulam(sys, n, tcfg), tcfg)
    result.density.write_csv(out / "invariant_density.csv")
    extra = {"system": system_fingerprint(sys), "n": n,
             "iterations": result.iterations, "residual": result.residual,
             "converged": result.converged}
    return (EXIT_OK if result.converged else EXIT_NONCONVERGENCE), extra


def _cmd_cone_check(cfg: dict, out: Path, seed: int, threads: int) -> tuple[int, dict]:
    sys = system_from_config(cfg)
    density_file = cfg.get("density_file")
    tcfg = _transfer_config(cfg)
    if density_file:
        f = GridFunction.read_csv(density_file)
        converged = True
    else:
        n = cfg_int(cfg, "n", 1024, 2, 10**6)
        result = stationary_density(build_ulam(sys, n, tcfg), tcfg)
        f, converged = result.density, result.converged
    cone = ConeParams(
        cfg_float(cfg, "A", min_growth_constant(sys.alpha_max), 1e-9, 1e9),
        cfg_float(cfg, "cone_exponent", sys.alpha_max, 1e-9, 1 - 1e-9))
    report = cone_check(f, cone, slack=cfg_float(cfg, "slack", 1e-10, 0.0, 1.0))
    rows = [
        ("nonnegative", report.nonnegative, ""),
        ("nonincreasing", report.nonincreasing, ""),
        ("growth_bound", report.growth_bound, f"margin={report.margin:.17g}"),
    ]
    _write_report_csv(out / "cone_report.csv", rows)
    extra = {"system": system_fingerprint(sys), "margin": report.margin,
             "growth_constant": cone.growth_constant, "passed": report.passed}
    if not converged:
        return EXIT_NONCONVERGENCE, extra
    return (EXIT_OK if report.passed else EXIT_PROPERTY), extra


def _cmd_conditions_check(cfg: dict, out: Path, seed: int, threads: int) -> tuple[int, dict]:
    sys = system_from_config(cfg)
    grid = cfg_int(cfg, "grid_points", 1024, 64, 10**7)
    report = check_conditions(sys, grid)
    rows = []
    for k, ok in enumerate(report.condition_a.per_map_pass):
        detail = ""
        violation = report.condition_a.violations[k]
        if violation is not None:
            detail = (f"partial sum l={violation.partial_len} rises at "
                      f"x={violation.x_next:.6g}")
        rows.append((f"condition_a_map{k + 1}", ok, detail))
    rows.append(("condition_b", report.condition_b_pass, f"delta={report.delta:.17g}"))
    _write_report_csv(out / "conditions_report.csv", rows)
    print(f"condition A: {'pass' if report.condition_a_pass else 'FAIL'}; "
          f"condition B: {'pass' if report.condition_b_pass else 'FAIL'} "
          f"(delta = {report.delta:.12g})")
    passed = report.condition_a_pass and report.condition_b_pass
    extra = {"system": system_fingerprint(sys), "delta": report.delta}
    return (EXIT_OK if passed else EXIT_PROPERTY), extra


def _cmd_stability_sweep(cfg: dict, out: Path, seed: int, threads: int) -> tuple[int, dict]:
    alpha = cfg_float(cfg, "alpha", 0.6, 1e-9, 1 - 1e-9)
    epsilons = cfg_floats(cfg, "epsilons", (0.2, 0.1, 0.05, 0.025, 0.0))
    n = cfg_int(cfg, "n", 512, 256, 10**6)
    fam = EpsilonFamily(alpha=alpha, epsilons=tuple(epsilons))
    densities: dict = {}
    points = stability_sweep(fam, n, _transfer_config(cfg), densities, threads)
    lines = ["epsilon,l1_distance,converged"]
    for p in points:
        lines.append(f"{p.epsilon:.17g},{p.l1_distance:.17g},"
                     f"{'true' if p.converged else 'false'}")
    (out / "stability_sweep.csv").write_text("\n".join(lines) + "\n")
    densities["reference"].write_csv(out / "f_star.csv")
    for p in points:
        densities[p.epsilon].write_csv(out / f"f_eps_{p.epsilon:g}.csv")
    extra = {"alpha": alpha, "n": n,
             "distances": {f"{p.epsilon:g}": p.l1_distance for p in points}}
    ok = all(p.converged for p in points)
    return (EXIT_OK if ok else EXIT_NONCONVERGENCE), extra


def _cmd_skew_simulate(cfg: dict, out: Path, seed: int, threads: int) -> tuple[int, dict]:
    sys = system_from_config(cfg)
    steps = cfg_int(cfg, "steps", 1_000_000, 1, 10**8)
    x0 = cfg_float(cfg, "x0", 0.3, 0.0, 1.0)
    w0 = (cfg_float(cfg, "w0", -1.0, 0.0, 1.0) if "w0" in cfg
          else float(rng_for(seed).random()))
    cells = cfg_int(cfg, "cells", 512, 1, 10**7)
    hist_cells = cfg_int(cfg, "hist2d_cells", 64, 1, 4096)
    burn_in = cfg_int(cfg, "burn_in", default_burn_in(steps), 0, steps - 1)
    orbit = skew_orbit(sys, SkewState(x0, w0), steps)
    data = orbit.xs[burn_in:]
    counts, _ = np.histogram(data, bins=cells, range=(0.0, 1.0))
    GridFunction(counts * (cells / data.size)).write_csv(out / "skew_xmarginal.csv")
    write_hist2d_csv(orbit, hist_cells, out / "skew_hist2d.csv", burn_in)
    extra = {"system": system_fingerprint(sys), "steps": steps, "x0": x0, "w0": w0,
             "horizontal_lyapunov": orbit.log_deriv_sum / steps}
    return EXIT_OK, extra


def _cmd_verify_all(cfg: dict, out: Path, seed: int, threads: int) -> tuple[int, dict]:
    sys = system_from_config(cfg)
    tcfg = _transfer_config(cfg)
    marginal_steps = cfg_int(cfg, "marginal_steps", 2_000_000, 10**6, 10**10)
    results = verification_suite(sys, cfg=tcfg, seed=seed,
                                 marginal_steps=marginal_steps)
    rows = [(r.name, r.passed, r.detail) for r in results]
    _write_report_csv(out / "verification_report.csv", rows)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    ok = all(r.passed for r in results)
    extra = {"system": system_fingerprint(sys),
             "checks": {r.name: r.passed for r in results}}
    return (EXIT_OK if ok else EXIT_PROPERTY), extra


_HANDLERS = {
    "simulate": _cmd_simulate,
    "ulam": _cmd_ulam,
    "invariant-density": _cmd_invariant_density,
    "cone-check": _cmd_cone_check,
    "conditions-check": _cmd_conditions_check,
    "stability-sweep": _cmd_stability_sweep,
    "skew-simulate": _cmd_skew_simulate,
    "verify-all": _cmd_verify_all,
}


def _resolve_threads(value: Optional[int]) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("ACIMLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"ACIMLAB_THREADS: not an integer: {env!r}") from exc
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acimlab",
        description="Random intermittent interval maps: invariant densities, "
                    "cone verification, and stochastic stability experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--out", default="acimlab_out", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="random seed (u64)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (fallback: ACIMLAB_THREADS)")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = load_config(args.config)
        threads = _resolve_threads(args.threads)
        seed = args.seed
        if not 0 <= seed < 2 ** 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        code, extra = _HANDLERS[args.command](cfg, out, seed, threads)
        _write_metadata(out, args.command, cfg, seed, threads, started, extra)
        return code
    except (ConfigError, ConditionError, ValueError) as exc:
        print(f"acimlab: config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except QuadratureError as exc:
        print(f"acimlab: quadrature failed to converge: {exc}", file=_sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    raise SystemExit(main())

"""Monte Carlo simulation of the random map and empirical density estimation.

Orbits are driven by a named counter-based generator (Philox) so that runs
are exactly reproducible from (x0, steps, seed) and parallel chains can use
disjoint jumped streams.  The per-step uniforms are drawn in one block,
which pins the stream layout independently of the stepping code path.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .density import GridFunction
from .maps import AffineBranch, LsvBranch, PARTITION
from .randomsys import PowerPiecewise, RandomMapSystem

GENERATOR_NAME = "numpy.random.Philox-4x64"


def encode_system(sys: RandomMapSystem) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Encode maps and probabilities into the kernel array forms, or None
    when the system uses tabulated branches or probabilities."""
    K = sys.K
    mp = np.zeros((K, 2, 3))
    for k, m in enumerate(sys.maps):
        for r, branch in enumerate(m.branches):
            if isinstance(branch, LsvBranch):
                mp[k, r] = (0.0, branch.exponent, branch.coefficient)
            elif isinstance(branch, AffineBranch):
                mp[k, r] = (1.0, branch.slope, branch.intercept)
            else:
                return None

    piece_rows: list[list[tuple[float, float, float, float, float]]] = []
    for comp in sys.probs.components:
        if not isinstance(comp, PowerPiecewise):
            return None
        piece_rows.append([(p.lo, p.hi, p.c0, p.c1, p.exponent) for p in comp.pieces])
    width = max(len(r) for r in piece_rows)
    pp = np.zeros((K, width, 5))
    for k, row in enumerate(piece_rows):
        padded = row + [row[-1]] * (width - len(row))
        pp[k] = np.array(padded)
    return mp, pp


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    bitgen = np.random.Philox(key=np.uint64(seed))
    if stream:
        bitgen = bitgen.jumped(stream)
    return np.random.Generator(bitgen)


@dataclass(frozen=True)
class OrbitRecord:
    """A simulated trajectory: states has one more entry than symbols, and
    states[t+1] is exactly the symbols[t]-th map applied to states[t]."""

    states: np.ndarray
    symbols: np.ndarray
    seed: int
    stream: int = 0

    @property
    def steps(self) -> int:
        return len(self.symbols)


def _python_orbit(sys: RandomMapSystem, x0: float, uniforms: np.ndarray,
                  states: np.ndarray, symbols: np.ndarray) -> None:
    K = sys.K
    x = x0
    states[0] = x
    for t in range(len(uniforms)):
        u = uniforms[t]
        acc = 0.0
        k = K - 1
        for j in range(K):
            acc += sys.probs.value(j, x)
            if u < acc:
                k = j
                break
        symbols[t] = k + 1
        m = sys.maps[k]
        x = m.left.value(x) if x < PARTITION else m.right.value(x)
        states[t + 1] = x


def orbit_from_uniforms(sys: RandomMapSystem, x0: float,
                        uniforms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Step the chain against an explicit uniform stream; the draw at step t
    depends only on uniforms[t] and the current state."""
    steps = len(uniforms)
    states = np.empty(steps + 1)
    symbols = np.empty(steps, dtype=np.int8)
    enc = encode_system(sys)
    if enc is not None:
        _kernels.orbit_kernel(x0, uniforms, enc[0], enc[1], states, symbols)
    else:
        _python_orbit(sys, x0, uniforms, states, symbols)
    return states, symbols


def simulate(sys: RandomMapSystem, x0: float, steps: int, seed: int,
             stream: int = 0) -> OrbitRecord:
    """Run the Markov chain: at each step draw map k with probability p_k(x)
    and apply it.  Fully reproducible from (x0, steps, seed, stream)."""
    if not 0.0 <= x0 <= 1.0:
        raise ValueError(f"x0={x0} outside [0, 1]")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    uniforms = rng_for(seed, stream).random(steps)
    states, symbols = orbit_from_uniforms(sys, x0, uniforms)
    return OrbitRecord(states, symbols, seed, stream)


def replay(sys: RandomMapSystem, x0: float, symbols: np.ndarray) -> np.ndarray:
    """Deterministically re-trace states from a symbol sequence."""
    states = np.empty(len(symbols) + 1)
    enc = encode_system(sys)
    if enc is not None:
        _kernels.replay_kernel(x0, np.asarray(symbols, dtype=np.int8), enc[0], states)
        return states
    x = x0
    states[0] = x
    for t, s in enumerate(symbols):
        m = sys.maps[int(s) - 1]
        x = m.left.value(x) if x < PARTITION else m.right.value(x)
        states[t + 1] = x
    return states


def default_burn_in(steps: int) -> int:
    """1% of the run; transients decay slowly near the indifferent point."""
    return steps // 100


def empirical_density(orbit: OrbitRecord, n_cells: int, burn_in: int) -> GridFunction:
    """Normalized histogram of the post-burn-in states."""
    if burn_in >= orbit.steps:
        raise ValueError("burn_in must be smaller than the number of steps")
    data = orbit.states[burn_in:]
    counts, _ = np.histogram(data, bins=n_cells, range=(0.0, 1.0))
    return GridFunction(counts * (n_cells / data.size))


def multi_chain_density(sys: RandomMapSystem, x0: float, steps: int, seed: int,
                        chains: int, n_cells: int, burn_in: Optional[int] = None,
                        threads: int = 1) -> GridFunction:
    """Empirical density aggregated over independent chains.

    Chain c runs on the jumped stream c of the same seed, so the set of
    chains is reproducible and grows without re-drawing earlier streams.
    Aggregation adds integer histogram counts, which makes the result
    independent of completion order; chains may run on worker threads
    (the stepping kernels release the GIL).
    """
    if chains < 1:
        raise ValueError("chains must be >= 1")
    if burn_in is None:
        burn_in = default_burn_in(steps)
    if burn_in >= steps:
        raise ValueError("burn_in must be smaller than the number of steps")

    def chain_counts(stream: int) -> np.ndarray:
        orbit = simulate(sys, x0, steps, seed, stream=stream)
        counts, _ = np.histogram(orbit.states[burn_in:], bins=n_cells,
                                 range=(0.0, 1.0))
        return counts

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            all_counts = list(pool.map(chain_counts, range(chains)))
    else:
        all_counts = [chain_counts(c) for c in range(chains)]

    total = np.sum(all_counts, axis=0)
    return GridFunction(total * (n_cells / total.sum()))


def birkhoff_average(orbit: OrbitRecord, observable: Callable, burn_in: int) -> float:
    """Time average of an observable over the post-burn-in states."""
    if burn_in >= orbit.steps:
        raise ValueError("burn_in must be smaller than the number of steps")
    data = orbit.states[burn_in:]
    try:
        vals = np.asarray(observable(data), dtype=float)
        if vals.shape != data.shape:
            raise TypeError
    except Exception:
        vals = np.array([float(observable(x)) for x in data])
    return float(vals.mean())


def write_orbit_csv(orbit: OrbitRecord, path: Path | str) -> None:
    """Dump t,x,k rows; the final state carries k=0 since no draw follows it."""
    lines = ["t,x,k"]
    for t, x in enumerate(orbit.states):
        k = int(orbit.symbols[t]) if t < orbit.steps else 0
        lines.append(f"{t},{x:.17g},{k}")
    Path(path).write_text("\n".join(lines) + "\n")

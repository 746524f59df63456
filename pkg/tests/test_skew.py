import numpy as np
import pytest

from acimlab.maps import derivative
from acimlab.orbits import replay, simulate
from acimlab.skew import (
    SkewState,
    horizontal_lyapunov,
    marginal_consistency,
    random_initial_state,
    skew_orbit,
    skew_step,
    write_hist2d_csv,
)
from acimlab.transfer import build_ulam, stationary_density

# frozen from high-precision evaluation of the preset closed forms
T1_AT_QUARTER = 0.42677669529663689
T2_AT_QUARTER = 0.46022410381342864


def test_origin_is_fixed(ex4):
    s = skew_step(ex4, SkewState(0.0, 0.0))
    assert (s.x, s.w) == (0.0, 0.0)


def test_step_second_branch(ex4):
    # p1(1/4) = 1/2, so w = 0.9 selects the second map
    s = skew_step(ex4, SkewState(0.25, 0.9))
    assert s.x == pytest.approx(T2_AT_QUARTER, abs=1e-15)
    assert s.w == pytest.approx(0.8, abs=1e-12)


def test_step_first_branch(ex4):
    s = skew_step(ex4, SkewState(0.25, 0.2))
    assert s.x == pytest.approx(T1_AT_QUARTER, abs=1e-15)
    assert s.w == pytest.approx(0.4, abs=1e-12)


def test_four_regions_use_matching_formulas(ex4):
    # one probe per region: (left/right cell) x (below/above the fiber cut)
    from acimlab.maps import eval_map
    for x, w in ((0.25, 0.2), (0.75, 0.1), (0.75, 0.9), (0.25, 0.9)):
        p1 = ex4.probs.value(0, x)
        s = skew_step(ex4, SkewState(x, w))
        if w < p1:
            assert s.x == eval_map(ex4.maps[0], x)
            assert s.w == pytest.approx(w / p1, abs=1e-15)
        else:
            assert s.x == eval_map(ex4.maps[1], x)
            assert s.w == pytest.approx((w - p1) / (1 - p1), abs=1e-12)


def test_fiber_boundary_goes_to_second_branch(ex4):
    orbit = skew_orbit(ex4, SkewState(0.25, 0.5), 1)
    assert orbit.symbols[0] == 2
    assert orbit.ws[1] == 0.0


def test_constant_orbit_at_origin(ex4):
    orbit = skew_orbit(ex4, SkewState(0.0, 0.0), 200)
    assert np.all(orbit.xs == 0.0)
    assert np.all(orbit.ws == 0.0)


def test_fiber_stays_in_unit_interval(ex4):
    orbit = skew_orbit(ex4, SkewState(0.3, 0.7), 1_000_000)
    assert orbit.ws.min() >= 0.0
    assert orbit.ws.max() <= 1.0


def test_projection_equivariance(ex4):
    orbit = skew_orbit(ex4, SkewState(0.3, 0.7), 100_000)
    assert np.array_equal(replay(ex4, 0.3, orbit.symbols), orbit.xs)


def test_lyapunov_zero_at_origin(ex4):
    assert horizontal_lyapunov(ex4, SkewState(0.0, 0.0), 1000) == 0.0


def test_lyapunov_positive_generic(ex4):
    value = horizontal_lyapunov(ex4, SkewState(0.3, 0.7), 100_000)
    assert value > 0


def test_lyapunov_degenerate_matches_deterministic(t1):
    # with p2 = 0 and w0 < 1 the first map fires forever
    steps = 10_000
    value = horizontal_lyapunov(t1, SkewState(0.3, 0.5), steps)
    orbit = simulate(t1, 0.3, steps, 0)
    direct = float(np.mean([np.log(derivative(t1.maps[0], x))
                            for x in orbit.states[:-1]]))
    assert value == pytest.approx(direct, abs=1e-12)


def test_degenerate_fiber_top_rejected(t1):
    # w = 1 selects the zero-probability second map
    with pytest.raises(ValueError):
        skew_orbit(t1, SkewState(0.3, 1.0), 100)
    with pytest.raises(ValueError):
        skew_step(t1, SkewState(0.3, 1.0))


def test_marginal_consistency_small(ex4):
    ref = stationary_density(build_ulam(ex4, 128)).density
    dist = marginal_consistency(ex4, SkewState(0.3, 0.7), 1_000_000, 128,
                                reference=ref)
    assert dist <= 0.05


def test_marginal_consistency_requires_random_system(t1):
    with pytest.raises(ValueError):
        marginal_consistency(t1, SkewState(0.3, 0.5), 1_000_000, 64)


def test_marginal_consistency_requires_long_orbits(ex4):
    with pytest.raises(ValueError):
        marginal_consistency(ex4, SkewState(0.3, 0.5), 10_000, 64)


def test_random_initial_state_uses_fiber(rng):
    s = random_initial_state(0.3, rng)
    assert s.x == 0.3 and 0.0 <= s.w <= 1.0


def test_state_validation():
    with pytest.raises(ValueError):
        SkewState(1.2, 0.0)
    with pytest.raises(ValueError):
        SkewState(0.2, -0.1)


def test_hist2d_export(ex4, tmp_path):
    orbit = skew_orbit(ex4, SkewState(0.3, 0.7), 20_000)
    path = tmp_path / "hist.csv"
    write_hist2d_csv(orbit, 8, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x_mid,w_mid,density"
    assert len(lines) == 65
    total = sum(float(line.split(",")[2]) for line in lines[1:])
    assert total / 64 == pytest.approx(1.0, abs=1e-9)

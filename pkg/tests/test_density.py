import numpy as np
import pytest
from scipy.integrate import quad

from acimlab.density import (
    ConeParams,
    GridFunction,
    cone_check,
    l1_distance,
    min_growth_constant,
    pointwise_bound_suite,
    power_law_density,
    random_cone_density,
)

CONE = ConeParams(8.0, 0.5)


def test_l1_distance_examples():
    f = GridFunction(np.ones(64))
    g = GridFunction(np.zeros(64))
    assert l1_distance(f, f) == 0.0
    assert l1_distance(f, g) == 1.0
    step = np.zeros(64)
    step[:32] = 2.0
    assert l1_distance(GridFunction(step), f) == 1.0
    with pytest.raises(ValueError):
        l1_distance(f, GridFunction(np.ones(32)))


def test_gridfunction_basics():
    f = GridFunction([3.0, 1.0])
    assert f.integral == 2.0
    assert f.at(0.0) == 3.0
    assert f.at(0.5) == 1.0
    assert f.at(1.0) == 1.0
    assert np.all(f.midpoints() == [0.25, 0.75])
    with pytest.raises(ValueError):
        GridFunction([np.inf, 1.0])


def test_csv_roundtrip_is_bit_exact(tmp_path, rng):
    f = GridFunction(rng.random(257) * 3.7)
    path = tmp_path / "density.csv"
    f.write_csv(path)
    g = GridFunction.read_csv(path)
    assert np.array_equal(f.values, g.values)


def test_cone_check_constant_density():
    f = GridFunction.uniform(128)
    report = cone_check(f, CONE)
    assert report.passed
    assert report.margin > 0


def test_cone_check_inverse_sqrt_sampling():
    f = GridFunction.sample(lambda x: x ** -0.5, 256)
    report = cone_check(f, CONE)
    assert report.passed


def test_cone_check_rejects_increasing():
    f = GridFunction.sample(lambda x: x, 64)
    report = cone_check(f, CONE)
    assert not report.nonincreasing
    assert report.witness is not None


def test_cone_check_rejects_negative():
    vals = np.ones(32)
    vals[5] = -0.1
    assert not cone_check(GridFunction(vals), CONE).nonnegative


def test_cone_is_positive_cone(rng):
    # scaling and addition preserve membership
    for _ in range(20):
        f = random_cone_density(128, CONE, rng)
        g = random_cone_density(128, CONE, rng)
        c = float(rng.uniform(0, 10))
        assert cone_check(GridFunction(c * f.values), CONE).passed
        assert cone_check(GridFunction(f.values + g.values), CONE).passed


def test_power_law_density_matches_quadrature():
    a = 0.37
    f = power_law_density(100, a)
    assert f.integral == pytest.approx(1.0, abs=1e-14)
    for i in (0, 1, 57, 99):
        lo, hi = i / 100, (i + 1) / 100
        expected = quad(lambda x: (1 - a) * x ** -a, lo, hi)[0] * 100
        assert f.values[i] == pytest.approx(expected, rel=1e-9)


def test_random_cone_density_always_member(rng):
    for _ in range(50):
        f = random_cone_density(200, CONE, rng)
        assert f.integral == pytest.approx(1.0, abs=1e-12)
        assert cone_check(f, CONE).passed


def test_pointwise_bounds_follow_from_membership(ex4, rng):
    # items are implied by cone membership, so random members must pass
    for _ in range(10):
        f = random_cone_density(256, CONE, rng)
        report = pointwise_bound_suite(f, CONE, ex4, 2000, rng)
        assert report.passed, [i.name for i in report.items if not i.passed]


def test_mass_bound_at_half(ex4, rng):
    # f(1/2) <= 2 m(f) for any cone member
    for _ in range(10):
        f = random_cone_density(128, CONE, rng)
        assert f.at(0.5) <= 2 * f.integral + 1e-12


def test_concave_displacement_boundary_case():
    # equality at x = 0
    a = 0.5
    assert (1 - 0) ** (1 - a) == 1.0
    x = np.linspace(0, 1, 1001)
    assert np.all((1 - x) ** (1 - a) <= 1 - (1 - a) * x + 1e-12)


def test_min_growth_constant():
    assert min_growth_constant(0.5) == 8.0
    assert min_growth_constant(0.75) == 16.0
    with pytest.raises(ValueError):
        ConeParams(0.0, 0.5)
    with pytest.raises(ValueError):
        ConeParams(8.0, 1.5)

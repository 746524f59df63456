import numpy as np
import pytest

from acimlab.maps import (
    DomainError,
    MapSpec,
    TabulatedBranch,
    affine_right,
    branch_image,
    derivative,
    eval_map,
    invert_branch,
    invert_branch_vec,
    lsv_left,
    lsv_map,
    verify_map_class,
)

# left-branch preimage of 1/2 at exponent 0.5, from an independent
# high-precision root solve of c*(1 + sqrt(2)*sqrt(c)) = 1/2
C_HALF = 0.28492014549902663


@pytest.fixture(scope="module")
def m_half():
    return lsv_map(0.5)


def test_origin_is_fixed(m_half):
    assert eval_map(m_half, 0.0) == 0.0


def test_left_branch_reaches_one_at_partition(m_half):
    # (1/2)(1 + 2^a 2^-a) = 1 for any exponent
    assert m_half.left.value(0.5) == pytest.approx(1.0, abs=1e-15)
    assert eval_map(m_half, np.nextafter(0.5, 0)) == pytest.approx(1.0, abs=1e-9)


def test_right_branch_affine_value(m_half):
    assert eval_map(m_half, 0.75) == 0.5


def test_partition_point_uses_right_branch(m_half):
    assert eval_map(m_half, 0.5) == 0.0
    assert derivative(m_half, 0.5) == 2.0


def test_derivative_values(m_half):
    assert derivative(m_half, 0.0) == 1.0
    # left-branch one-sided limit at the partition point is 2 + exponent
    assert m_half.left.deriv(0.5) == pytest.approx(2.5, abs=1e-12)
    assert derivative(m_half, 0.9) == 2.0


@pytest.mark.parametrize("exponent", [0.25, 0.5, 0.75])
def test_derivative_matches_finite_differences(exponent, rng):
    m = lsv_map(exponent)
    xs = rng.uniform(0.005, 0.995, 1000)
    xs = xs[np.abs(xs - 0.5) > 1e-3]
    h = 1e-6
    for x in xs:
        fd = (eval_map(m, x + h) - eval_map(m, x - h)) / (2 * h)
        assert derivative(m, x) == pytest.approx(fd, rel=1e-6)


def test_invert_left_endpoint(m_half):
    assert invert_branch(m_half, "left", 1.0) == pytest.approx(0.5, abs=1e-13)


def test_invert_left_half(m_half):
    c = invert_branch(m_half, "left", 0.5)
    assert c == pytest.approx(C_HALF, abs=1e-12)
    assert eval_map(m_half, c) == pytest.approx(0.5, abs=1e-12)


def test_invert_missing_preimage():
    # second preset map: right branch image is [0, 3/4]
    g2 = affine_right(1.5, -0.75)
    m = MapSpec(lsv_left(0.25), g2, 0.25)
    assert invert_branch(m, "right", 0.9) is None
    assert invert_branch(m, "right", 0.75) == pytest.approx(1.0, abs=1e-13)
    assert branch_image(g2) == (0.0, 0.75)


@pytest.mark.parametrize("exponent", [0.25, 0.5, 0.9])
def test_invert_is_inverse_on_each_branch(exponent, rng):
    m = lsv_map(exponent)
    for which, lo, hi in (("left", 0.0, 0.5), ("right", 0.5, 1.0)):
        xs = rng.uniform(lo, hi, 200)
        for x in xs:
            y = m.branch(which).value(x)
            back = invert_branch(m, which, y)
            assert back == pytest.approx(x, abs=1e-12)


def test_left_branch_between_x_and_2x(m_half, rng):
    xs = rng.uniform(0.0, 0.5, 2000)
    vals = m_half.left.value_vec(xs)
    assert np.all(vals >= xs)
    assert np.all(vals <= 2 * xs + 1e-15)


def test_domain_violations_rejected(m_half):
    with pytest.raises(DomainError):
        eval_map(m_half, -0.1)
    with pytest.raises(DomainError):
        derivative(m_half, 1.5)
    with pytest.raises(DomainError):
        invert_branch(m_half, "left", 1.2)


def test_map_class_lsv_passes(m_half):
    report = verify_map_class(m_half, 1024)
    assert report.passed
    assert report.displacement_constant == pytest.approx(2.0 ** 0.5)
    # the displacement bound is an exact identity for this family
    xs = np.linspace(0, 0.5, 64)
    gap = m_half.left.value_vec(xs) - xs - report.displacement_constant * xs ** 1.5
    assert np.abs(gap).max() < 1e-14


def test_map_class_slope_above_one_passes():
    m = MapSpec(lsv_left(0.25), affine_right(1.5, -0.75), 0.25)
    assert verify_map_class(m, 256).expanding.passed


def test_map_class_flags_contracting_branch():
    m = MapSpec(lsv_left(0.5), affine_right(0.9, -0.45), 0.5)
    report = verify_map_class(m, 256)
    assert not report.expanding.passed
    assert report.expanding.witness is not None
    assert report.expanding.witness >= 0.5


def test_mapspec_structural_invariants():
    with pytest.raises(ValueError):
        MapSpec(lsv_left(0.5), affine_right(2.0, -0.9), 0.5)  # right(1/2) != 0
    with pytest.raises(ValueError):
        MapSpec(lsv_left(0.5), affine_right(3.0, -1.5), 0.5)  # image leaves [0, 1]
    with pytest.raises(ValueError):
        lsv_left(1.2)


def test_tabulated_branch_roundtrip():
    xs = np.linspace(0.5, 1.0, 33)
    ys = 2.0 * xs - 1.0
    branch = TabulatedBranch(xs, ys)
    m = MapSpec(lsv_left(0.5), branch, 0.5)
    assert eval_map(m, 0.75) == pytest.approx(0.5, abs=1e-15)
    assert invert_branch(m, "right", 0.5) == pytest.approx(0.75, abs=1e-13)
    assert verify_map_class(m, 256).passed


def test_vectorized_inversion_flags_missing():
    g2 = affine_right(1.5, -0.75)
    ys = np.array([0.0, 0.3, 0.75, 0.76, 1.0])
    out = invert_branch_vec(g2, ys)
    assert np.isnan(out[-2:]).all()
    assert out[0] == pytest.approx(0.5)
    assert out[2] == pytest.approx(1.0)

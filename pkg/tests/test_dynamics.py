import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from skewlab import corpus
from skewlab.cocycle import FourierSeries, build_psi_tilde, constant_series
from skewlab.diophantine import RealHandle
from skewlab.dynamics import (SkewProductSpec, TorusPoint, bowen_metric, conjugate_check, fiber_phases, metric,
                              orbit, power, step)
from skewlab.errors import DomainError, ShapeError, SpecError

K = 12
E = corpus.get("golden-smooth")
T = E.spec("T", truncation=K)
unit = st.floats(min_value=0, max_value=1, exclude_max=True)
points = arrays(np.float64, K, elements=unit)


def wrap(d):
    d = np.abs(d) % 1.0
    return np.minimum(d, 1 - d)


def test_metric_example():
    x = np.zeros(K)
    y = np.zeros(K)
    y[:2] = 0.5
    assert metric(x, y) == pytest.approx(3 / 8)
    assert metric(x, x) == 0


@given(x=points, y=points, z=points)
def test_metric_axioms(x, y, z):
    assert metric(x, y) == pytest.approx(metric(y, x))
    assert metric(x, z) <= metric(x, y) + metric(y, z) + 1e-15


def test_zero_h_is_a_rotation():
    spec = SkewProductSpec("T", E.alpha_handle(), FourierSeries({}), E.beta_handle(), K)
    x = np.random.default_rng(0).random(K)
    y = power(spec, x, 1234)
    assert np.allclose(y[1:], x[1:])
    assert wrap(y[0] - x[0] - 1234 * float(E.alpha_handle())) < 1e-9


def test_rotation_variant_shifts_by_mean():
    h = FourierSeries({0: 0.125, 1: 0.3, -1: 0.3})
    spec = SkewProductSpec("rot", E.alpha_handle(), h, E.beta_handle(), K)
    x = np.random.default_rng(1).random(K)
    y = step(spec, x)
    assert np.allclose(wrap(y[1:] - x[1:] - 0.125), 0, atol=1e-15)


def test_geometric_phases_for_half():
    ph = fiber_phases("Q", RealHandle.parse("rational:1/2"), 6)
    assert ph.tolist() == [0.0, 0.5, 0.25, 0.125, 0.0625]   # beta^0 = 1 is 0 mod 1
    lin = fiber_phases("T", RealHandle.parse("rational:1/3"), 5)
    assert np.allclose(lin, [0, 1 / 3, 2 / 3, 0])


def test_power_trivial_cases():
    x = np.random.default_rng(2).random(K)
    assert np.array_equal(power(T, x, 0), x)
    assert np.allclose(power(T, x, 1), step(T, x), atol=1e-14)


@pytest.mark.parametrize("variant", ["T", "Q", "S"])
def test_power_matches_iterated_step(variant):
    spec = E.spec(variant, truncation=K)
    x = np.random.default_rng(3).random(K)
    y = x.copy()
    for _ in range(1000):
        y = step(spec, y)
    assert metric(power(spec, x, 1000), y) < 1e-8


@given(x=points, n=st.integers(min_value=0, max_value=10**9))
def test_inverse_power(x, n):
    assert metric(power(T, power(T, x, n), -n), x) < 1e-8


def test_orbit_matches_power():
    x = np.random.default_rng(4).random(K)
    ns = np.array([0, 1, 7, 1000, 123456])
    Y = orbit(T, x, ns)
    for n, y in zip(ns, Y):
        assert metric(y, power(T, x, int(n))) < 1e-9


def test_rotation_is_an_isometry():
    rot = E.spec("rot", truncation=K)
    rng = np.random.default_rng(5)
    x, y = rng.random(K), rng.random(K)
    assert bowen_metric(rot, x, y, 1000) == pytest.approx(float(metric(x, y)), abs=1e-12)
    assert bowen_metric(rot, x, y, 1) == pytest.approx(float(metric(x, y)))


def test_conjugations():
    rng = np.random.default_rng(6)
    pts = rng.random((100, K))
    assert conjugate_check(T, T, FourierSeries({}), pts).max() == 0
    psi = build_psi_tilde(E.series(), E.alpha_handle())
    assert conjugate_check(T, E.spec("rot", truncation=K), psi, pts).max() < 1e-10


def test_shape_and_domain_errors():
    with pytest.raises(ShapeError):
        power(T, np.zeros(K + 1), 3)
    with pytest.raises(SpecError):
        SkewProductSpec("X", E.alpha_handle(), constant_series(0.0), E.beta_handle(), K)
    with pytest.raises(SpecError):
        SkewProductSpec("T", E.alpha_handle(), constant_series(0.0), None, K)
    with pytest.raises(DomainError):
        orbit(T, np.zeros(K), [-1])
    with pytest.raises(DomainError):
        TorusPoint(np.array([0.5, 1.0]))

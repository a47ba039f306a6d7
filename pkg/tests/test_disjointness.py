from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from skewlab import corpus
from skewlab.cocycle import FourierSeries
from skewlab.diophantine import RealHandle
from skewlab.dynamics import SkewProductSpec, orbit
from skewlab.disjointness import (Observable, birkhoff_average, birkhoff_irregularity_probe, davenport_decay_probe,
                                  decades, mobius_average, polynomial_phases, rational_alpha_sum)
from skewlab.errors import DomainError, RangeError


def direct(mu, vals, N):
    return complex((mu[1:N + 1] * vals[:N]).sum())


def test_constant_observable_is_mertens(small_mu):
    spec = corpus.get("golden-smooth").spec(truncation=8)
    tr = mobius_average(spec, Observable((0,)), np.zeros(8), small_mu, [10, 100, 1000, 10**5])
    assert [round(s.real) for s in tr.sums] == [-1, 1, 2, -48]
    assert tr.checkpoints[-1][2] == pytest.approx(48 / 10**5)


def test_rotation_observable_is_linear_exponential_sum(small_mu):
    g = corpus.get("golden-smooth")
    spec = SkewProductSpec("T", g.alpha_handle(), FourierSeries({}), g.beta_handle(), 8)
    N = 10**5
    tr = mobius_average(spec, Observable((1, 0)), np.zeros(8), small_mu, [N])
    with mpmath.workdps(30):
        alpha = mpmath.sqrt(5) / 2 - mpmath.mpf(1) / 2
        fr = np.array([float(mpmath.frac(n * alpha)) for n in range(1, N + 1)])
    assert abs(tr.sums[0] - direct(small_mu.values, np.exp(2j * np.pi * fr), N)) < 1e-8


def test_matches_orbit_oracle(small_mu):
    spec = corpus.get("golden-smooth").spec(truncation=8)
    x0 = np.random.default_rng(4).random(8)
    f = Observable((1, 2, -1, 3))
    N = 3000
    pts = orbit(spec, x0, np.arange(1, N + 1))
    tr = mobius_average(spec, f, x0, small_mu, [N])
    assert abs(tr.sums[0] - direct(small_mu.values, f(pts), N)) < 1e-8
    assert tr.max_drift < 1e-8


def test_birkhoff_constant_has_no_oscillation():
    spec = corpus.get("golden-smooth").spec(truncation=8)
    osc = birkhoff_irregularity_probe(spec, Observable((0,)), np.zeros(8), decades(10, 10**4))
    assert osc.oscillation == 0
    tr = birkhoff_average(spec, Observable((0,)), np.zeros(8), [7, 70])
    assert [a for _, a, _ in tr.checkpoints] == [1, 1]


def test_rational_path_against_direct(small_mu):
    rng = np.random.default_rng(11)
    h = corpus.get("rational").series()
    beta = corpus.get("rational").beta_handle()
    for r in ("2/5", "0", "3/7"):
        spec = SkewProductSpec("T", RealHandle.parse("rational:" + r), h, beta, 8)
        x0 = rng.random(8)
        f = Observable((1, -1, 2, 1))
        res = rational_alpha_sum(spec, f, x0, small_mu, 20000)
        ref = mobius_average(spec, f, x0, small_mu, [20000]).sums[0]
        assert abs(res.total - ref) < 1e-9
        assert res.partition_gap < 1e-12
        assert abs(sum(res.per_residue.values()) - res.total) < 1e-12


def test_rational_path_rejects_irrational(small_mu):
    with pytest.raises(DomainError):
        rational_alpha_sum(corpus.get("golden-smooth").spec(), Observable((1,)), np.zeros(40), small_mu, 10)
    spec = SkewProductSpec("T", RealHandle.parse("rational:1/3"), FourierSeries({}),
                           corpus.get("rational").beta_handle(), 8)
    with pytest.raises(RangeError):
        rational_alpha_sum(spec, Observable((1,)), np.zeros(8), small_mu, 10**6)


def test_davenport_zero_and_half(small_mu):
    tr = davenport_decay_probe([0], (0, 1), small_mu, [10**5])
    assert tr.sums[0] == pytest.approx(-48)
    tr = davenport_decay_probe([Fraction(1, 2)], (0, 1), small_mu, [100, 10**4])
    mu = small_mu.values
    for N, s in zip([100, 10**4], tr.sums):
        sign = np.where(np.arange(1, N + 1) % 2, -1, 1)
        assert s == pytest.approx(float((mu[1:N + 1] * sign).sum()), abs=1e-9)


def test_davenport_residue_class(small_mu):
    theta = Fraction(12345, 2**20)
    tr = davenport_decay_probe([theta], (2, 3), small_mu, [999])
    ns = np.arange(2, 1000, 3)
    ref = complex((small_mu.values[ns] * np.exp(2j * np.pi * (ns * 12345 % 2**20) / 2**20)).sum())
    assert abs(tr.sums[0] - ref) < 1e-9


@given(c=st.lists(st.integers(0, 2**64 - 1), min_size=1, max_size=3), n=st.integers(0, 10**9))
def test_polynomial_phases_exact(c, n):
    coeffs = [Fraction(v, 2**64) for v in c]
    exact = sum(th * n ** (len(coeffs) - i) for i, th in enumerate(coeffs)) % 1
    assert polynomial_phases(coeffs, np.array([n]))[0] == pytest.approx(float(exact), abs=1e-15)


def test_random_quadratic_decays(small_mu):
    # mu(n) e(theta n^2) for a random theta: the average shrinks across the range
    theta = Fraction(int(np.random.default_rng(5).integers(1, 2**63)), 2**63)
    tr = davenport_decay_probe([theta, 0], (0, 1), small_mu, decades(10**3, 10**5))
    mods = tr.moduli()
    assert mods[-1] < mods[0]


def test_furstenberg_oscillation_against_rotation_baseline():
    f = Observable((0, 1))
    win = decades(10, 10**5)
    fur = corpus.get("furstenberg").spec(truncation=8)
    osc = birkhoff_irregularity_probe(fur, f, np.zeros(8), win).oscillation
    g = corpus.get("golden-smooth")
    rot = SkewProductSpec("rot", g.alpha_handle(), FourierSeries({0: 2**0.5 - 1}), None, 8)
    base = birkhoff_irregularity_probe(rot, f, np.zeros(8), win).oscillation
    # regression values from the first run
    assert osc == pytest.approx(0.0854844852, rel=1e-8)
    assert base == pytest.approx(0.0447939491, rel=1e-8)

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from skewlab import corpus
from skewlab.cocycle import FourierSeries
from skewlab.diophantine import RealHandle, nearest_distance
from skewlab.dynamics import SkewProductSpec, metric, power
from skewlab.errors import ConfigurationError, DomainError
from skewlab.rigidity import (RigidityParams, build_rigidity_sequence, detect_case, dirichlet_multiplier,
                              k_truncation, l2_shift_norm, nearest_frac, pr_rigidity_sum, rigidity_integral)

GOLD = corpus.get("golden-smooth")


def brute_multiplier(c0: Fraction, q: int, gamma: float) -> int:
    bound = q ** -gamma
    l = 1
    while float(nearest_frac(c0 * l * q)) >= bound:
        l += 1
    return l


def test_multiplier_trivial_cases():
    t = RealHandle.parse(corpus.GOLDEN, 20).table
    assert dirichlet_multiplier(t, 5, 0, Fraction(1, 10)) == 1
    even = next(n for n in range(1, 20) if t.q[n] % 2 == 0)
    assert dirichlet_multiplier(t, even, Fraction(1, 2), Fraction(1, 10)) == 1


def test_multiplier_against_exhaustive_search():
    t = RealHandle.parse("quotients:1000003,7").table
    assert t.q[1] == 10**6 + 3
    c0 = Fraction(1 / math.pi)
    l = dirichlet_multiplier(t, 1, c0, Fraction(1, 10))
    assert l == brute_multiplier(c0, t.q[1], 0.1)
    assert l <= math.ceil(t.q[1] ** 0.1)


@given(num=st.integers(min_value=1, max_value=2**20 - 1), n=st.integers(min_value=3, max_value=25))
def test_multiplier_property(num, n):
    t = RealHandle.parse(corpus.SILVER, 30).table
    c0 = Fraction(num, 2**20)
    assert dirichlet_multiplier(t, n, c0, Fraction(1, 10)) == brute_multiplier(c0, t.q[n], 0.1)


@given(r=st.integers(min_value=2, max_value=10**30))
def test_k_truncation_is_least(r):
    lam = Fraction(1, 100)
    k = k_truncation(r, lam)
    assert 2.0 ** (-2 * k) < r ** -0.01 * (1 + 1e-12)
    assert k == 1 or 2.0 ** (-2 * (k - 1)) >= r ** -0.01 * (1 - 1e-12)


def test_zero_h_integral_is_quarter_rotation():
    spec = SkewProductSpec("T", GOLD.alpha_handle(), FourierSeries({}), GOLD.beta_handle(), 40)
    t = spec.alpha.table
    r = t.q[10]
    res = rigidity_integral(spec, r)
    d = nearest_distance(t, r).value
    assert float(res.value) == pytest.approx(d * d / 4, rel=1e-12)


def test_quadrature_against_riemann_oracle():
    h = FourierSeries({3: 0.2 + 0.1j, -3: 0.2 - 0.1j})
    spec = SkewProductSpec("T", GOLD.alpha_handle(), h, GOLD.beta_handle(), 16)
    r = 7
    res = rigidity_integral(spec, r)
    M = 10**6
    acc = 0.0
    for lo in range(0, M, 10**5):
        X = np.zeros((10**5, 16))
        X[:, 0] = (np.arange(lo, lo + 10**5) + 0.5) / M
        acc += float((metric(power(spec, X, r), X) ** 2).sum())
    assert float(res.value) == pytest.approx(acc / M, abs=1e-6)


def test_case_detection():
    assert detect_case(RealHandle.parse(corpus.GOLDEN, 40).table)[0] == "case-1"
    case, idx = detect_case(RealHandle.parse("rule:liouville:5", 9).table)
    assert case == "case-2" and idx == tuple(range(2, 9))


def test_sequence_decays_and_is_dominated():
    seq = build_rigidity_sequence(GOLD.spec("T"), RigidityParams(1), depth=8, quadrature=2**11)
    assert len(seq.rows) == 8 and seq.status == "ok"
    assert all(r.verdict == "pass" for r in seq.rows)
    assert seq.slope(last=8) <= -0.01
    assert seq.monotone(5)


def test_truncation_guard():
    spec = GOLD.spec("T", truncation=2)
    with pytest.raises(ConfigurationError):
        rigidity_integral(spec, 2**1000)
    with pytest.raises(DomainError):
        rigidity_integral(GOLD.spec("Q"), 5)


def test_pr_sum_trivial_cases():
    spec = GOLD.spec("T")
    seq = build_rigidity_sequence(spec, RigidityParams(1), depth=3, quadrature=2**11)
    assert pr_rigidity_sum(spec, (0, 0), seq.rows[-1]).value == 0
    assert l2_shift_norm(spec, (0, 1), 0) == 0
    assert pr_rigidity_sum(spec, (0, 1), seq.rows[-1]).value > 0

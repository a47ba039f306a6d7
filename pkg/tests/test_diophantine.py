import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from conftest import mp_dist, mp_quotients, mp_value
from skewlab.diophantine import (IrrationalSpec, RealHandle, audit_table, check_p2, expand,
                                 nearest_distance, resonance_sum, tail_min_sum)
from skewlab.errors import DomainError, RangeError, SpecError

SURDS = ["surd:-1,2,5", "surd:-1,1,2", "surd:0,1,3", "surd:1,2,7", "surd:0,1,11", "surd:3,5,13"]


def test_quotient_list_recurrence():
    t = expand(IrrationalSpec.parse("quotients:2,2,2,2"), 4)
    assert t.q == (1, 2, 5, 12, 29)
    assert t.l == (0, 1, 2, 5, 12)
    assert t.terminated and t.exact_value == Fraction(12, 29)


def test_golden_ratio_gives_fibonacci():
    t = RealHandle.parse("surd:-1,2,5", 30).table
    fib = [1, 1]
    while len(fib) < 31:
        fib.append(fib[-1] + fib[-2])
    assert list(t.q) == fib[:31]
    assert all(a == 1 for a in t.a[1:])


@pytest.mark.parametrize("spec", SURDS)
def test_surd_quotients_match_high_precision_expansion(spec):
    t = RealHandle.parse(spec, 40).table
    assert list(t.a[1:]) == mp_quotients(mp_value(spec), 40)


@pytest.mark.parametrize("spec", SURDS)
def test_audit_is_clean(spec):
    t = RealHandle.parse(spec, 30).table
    rep = audit_table(t)
    assert rep.ok and rep.p2_checked >= 27 and rep.p2_checked + rep.p2_undecided == 29


def test_p2_is_an_exact_check():
    t = RealHandle.parse("surd:-1,1,2", 20).table
    for k in range(1, 19):
        d = Fraction(nearest_distance(t, t.q[k]).num, nearest_distance(t, t.q[k]).den)
        assert check_p2(t, k) is True
        assert Fraction(1, 2 * t.q[k + 1]) < d < Fraction(1, t.q[k + 1])


def test_rational_audit_stops_before_terminal_equality():
    t = RealHandle.parse("quotients:2,2,2,2").table
    assert audit_table(t).ok


def test_liouville_rule():
    t = RealHandle.parse("rule:liouville:5", 7).table
    for k in range(1, 6):
        assert t.a[k + 1] == t.q[k] ** 5
    assert t.q[3] == 65 and t.a[3] == 32


def test_liouville_rule_is_depth_limited():
    t = RealHandle.parse("rule:liouville:5", 48).table
    assert t.status == "depth-limited" and t.depth == 9


def test_furstenberg_rows():
    t = RealHandle.parse("rule:furstenberg", 48).table
    assert t.q[:4] == (1, 3, 22, 3584912851)


@given(n=st.integers(min_value=1, max_value=10**12))
def test_nearest_distance_against_mpmath(n):
    t = RealHandle.parse("surd:-1,2,5", 48).table
    d = nearest_distance(t, n)
    ref = mp_dist(mp_value("surd:-1,2,5"), n)
    assert abs(d.value - ref) <= 1e-15 * max(ref, 1e-300) + float(d.error)
    lo, hi = d.interval()
    assert float(lo) <= ref * (1 + 1e-15) and ref <= float(hi) * (1 + 1e-15)


@given(n=st.integers(min_value=-2**40, max_value=2**40))
def test_frac_is_exactly_rounded(n):
    h = RealHandle.parse("surd:0,1,3")
    v, err = h.frac(n)
    with mpmath.workdps(200):
        x = n * mp_value("surd:0,1,3")
        ref = x - mpmath.floor(x)
        assert abs(mpmath.mpf(v.numerator) / v.denominator - ref) <= mpmath.mpf(err.numerator) / err.denominator + mpmath.mpf(2) ** -150


def test_frac_array_matches_scalar():
    import numpy as np
    h = RealHandle.parse("surd:-1,1,2")
    ns = np.arange(0, 2**31, 2**31 // 997, dtype=np.int64)
    arr = h.frac_array(ns)
    ref = np.array([float(h.frac(int(n))[0]) for n in ns])
    diff = np.abs(arr - ref)
    assert np.minimum(diff, 1 - diff).max() < 1e-14


def test_signed_fraction_separates_tiny_values():
    h = RealHandle.parse("rule:liouville:5", 9)
    q = h.table.q[6]
    v, err = h.frac_signed(q)
    assert v != 0 and err <= abs(v) / 2**50


@pytest.mark.parametrize("text", ["surd:1,2,4", "surd:1,0,5", "quotients:1,0,2", "nope:1", "rule:unknown"])
def test_bad_specs_raise(text):
    with pytest.raises(SpecError):
        IrrationalSpec.parse(text)


def test_resonance_sum_oracle():
    t = RealHandle.parse("surd:-1,2,5", 20).table
    k = 7
    x = mp_value("surd:-1,2,5")
    ref = 2 * math.fsum(1 / mp_dist(x, q) ** 2 for q in range(1, t.q[k])) / t.q[k] ** 2
    assert resonance_sum(t, k) == pytest.approx(ref, rel=1e-9)


def test_tail_min_sum_oracle():
    t = RealHandle.parse("surd:-1,1,2", 20).table
    k, c = 5, 10
    x = mp_value("surd:-1,1,2")
    ref = 2 * math.fsum(min(mp_dist(x, q) ** -2, c * c) / q**2 for q in range(t.q[k], t.q[k + 1]))
    res = tail_min_sum(t, k, c)
    assert res.value == pytest.approx(ref, rel=1e-9)
    assert res.comparison == pytest.approx(c / t.q[k])


def test_range_errors():
    t = RealHandle.parse("surd:-1,2,5", 10).table
    with pytest.raises(RangeError):
        tail_min_sum(t, 11, 1)
    with pytest.raises(DomainError):
        resonance_sum(t, 1)

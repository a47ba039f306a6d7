import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from skewlab import corpus
from skewlab.cocycle import (Cocycle, DecayTag, FourierSeries, H_n_eval, build_h1_and_psi, build_psi_tilde,
                             cocycle_sum_closed, cocycle_sum_direct, constant_series, evaluate_shifted,
                             lemma44_constant, make_furstenberg_h, make_smooth_sample, resonant_sets)
from skewlab.diophantine import RealHandle
from skewlab.errors import DomainError, NearResonanceError, SpecError

GOLDEN = RealHandle.parse(corpus.GOLDEN)
GRID = (np.arange(2**12) + 0.5) / 2**12
H = corpus.get("golden-smooth").series()


def test_cosine_sample():
    h = make_smooth_sample("cosine", r=2, modes=1, amplitude=0.5)
    t = np.linspace(0, 1, 17)
    assert np.allclose(h(t), np.cos(2 * np.pi * t), atol=1e-15)


def test_sample_is_deterministic_and_tagged():
    a = make_smooth_sample(r=1.5, modes=5, seed=3)
    b = make_smooth_sample(r=1.5, modes=5, seed=3)
    assert np.array_equal(a.coeffs, b.coeffs)
    scan = max(abs(c) * abs(m) ** 1.5 for m, c in zip(a.modes, a.coeffs) if m)
    assert scan == pytest.approx(1.0)


def test_series_validation():
    with pytest.raises(SpecError):
        FourierSeries({1: 1.0, -1: 0.5})
    with pytest.raises(SpecError):
        FourierSeries({2: 1.0, -2: 1.0}, decay=DecayTag(2.0, 1.0))
    with pytest.raises(DomainError):
        make_smooth_sample(r=1.0)


def test_csv_roundtrip(tmp_path):
    p = tmp_path / "h.csv"
    H.to_csv(p)
    back = FourierSeries.from_csv(p)
    assert np.array_equal(back.modes, H.modes) and np.array_equal(back.coeffs, H.coeffs)
    assert back.decay == H.decay and back.window == H.window


def test_hand_evaluated_two_step_sum():
    h = FourierSeries({1: 0.5, -1: 0.5})
    t = np.array([0.1, 0.37])
    quarter = RealHandle.parse("rational:1/4")
    expect = np.cos(2 * np.pi * t) + np.cos(2 * np.pi * (t + 0.25))
    assert np.allclose(cocycle_sum_closed(h, t, 2, quarter), expect, atol=1e-14)


def test_trivial_sums():
    assert cocycle_sum_closed(H, [0.3], 0, GOLDEN)[0] == 0
    assert cocycle_sum_direct(H, [0.3], 0, GOLDEN)[0] == 0
    c = constant_series(0.7)
    assert cocycle_sum_closed(c, [0.2], 1000, GOLDEN)[0] == pytest.approx(700)
    assert H_n_eval(H, [0.4], 0, GOLDEN)[0] == 0


@given(t=st.floats(min_value=0, max_value=1, exclude_max=True), n=st.integers(min_value=0, max_value=3000))
def test_closed_form_matches_iteration(t, n):
    closed = cocycle_sum_closed(H, [t], n, GOLDEN)[0]
    direct = cocycle_sum_direct(H, [t], n, GOLDEN)[0]
    assert abs(closed - direct) < 1e-9 * (1 + n * H.l1_norm())


@given(t=st.floats(min_value=0, max_value=1, exclude_max=True),
       m=st.integers(min_value=0, max_value=10**6), n=st.integers(min_value=0, max_value=10**6))
def test_cocycle_identity(t, m, n):
    # S_{m+n}(t) = S_m(t) + S_n(t + m alpha)
    coc = Cocycle(H, GOLDEN)
    shift = float(GOLDEN.frac(m)[0])
    lhs = coc.sum([t], m + n)[0]
    rhs = coc.sum([t], m)[0] + coc.sum([(t + shift) % 1.0], n)[0]
    assert abs(lhs - rhs) < 1e-7


def test_rational_resonant_mode_counts_n():
    h = FourierSeries({5: 0.25, -5: 0.25, 1: 0.1, -1: 0.1})
    a = RealHandle.parse("rational:2/5")
    coc = Cocycle(h, a)
    assert coc.resonant.tolist() == [True, False, False, True]
    t = np.array([0.0, 0.3])
    assert np.allclose(coc.sum(t, 17), cocycle_sum_direct(h, t, 17, a), atol=1e-12)


def test_scaled_factors_against_mpmath_oracle():
    # Liouville q_4 has ||m q_4 alpha|| ~ 1e-55: the float path underflows to zero signal
    e = corpus.get("liouville-smooth")
    a = e.alpha_handle()
    h = e.series()
    n = a.table.q[4]
    coc = Cocycle(h, a)
    s, G = coc.scaled_factors(n)
    assert s > 100
    t = a.table
    with mpmath.workdps(400):
        x = mpmath.mpf(t.l[8]) / t.q[8]
        for m, g in zip(coc.modes, G):
            ref = (1 - mpmath.expjpi(2 * m * n * x)) / (1 - mpmath.expjpi(2 * m * x))
            got = mpmath.mpc(complex(g)) * mpmath.mpf(2) ** -s
            assert abs(got - ref) <= 1e-12 * abs(ref)


def test_fluctuation_bound_is_tiny_for_liouville():
    e = corpus.get("liouville-smooth")
    sets, h1, _ = e.split()
    a = e.alpha_handle()
    C = lemma44_constant(h1, a.table, 1, [2, 3, 4])
    assert all(v > 0 for v in C.values())
    b = Cocycle(h1, a).fluctuation_bound(a.table.q[4])
    assert b < mpmath.mpf(10) ** -40


def test_psi_tilde_identity_one_mode():
    h = FourierSeries({1: 0.5, -1: 0.5})
    psi = build_psi_tilde(h, GOLDEN)
    lhs = evaluate_shifted(psi, GRID, GOLDEN) - psi(GRID)
    assert np.abs(lhs - h(GRID)).max() < 1e-12
    # |psi~ coefficient| = |h(m)| / (2 |sin pi m alpha|)
    assert abs(psi.coefficient(1)) == pytest.approx(0.5 / (2 * abs(math.sin(math.pi * float(GOLDEN)))))


def test_psi_tilde_of_constant_is_zero():
    psi = build_psi_tilde(constant_series(0.3), GOLDEN)
    assert len(psi) == 0


def test_near_resonance_is_refused():
    h = FourierSeries({5: 0.25, -5: 0.25})
    with pytest.raises(NearResonanceError):
        build_psi_tilde(h, RealHandle.parse("rational:2/5"))


def test_resonant_sets_golden_empty():
    t = RealHandle.parse(corpus.GOLDEN, 42).table
    sets = resonant_sets(t, 1, 40)
    assert sets.E == () and sets.M == () and sets.regime == "finite-M"


def test_resonant_sets_liouville_exact_scan():
    t = RealHandle.parse("rule:liouville:5", 9).table
    sets = resonant_sets(t, 1, 9)
    expect = tuple(k for k in range(2, 9) if t.q[k + 1] > t.q[k] ** 4)
    assert sets.E == expect == tuple(range(2, 9))
    assert sets.undecided == (9,)
    assert sets.regime == "infinite-M"
    assert sets.multipliers(3) == range(1, 33)


def test_tau_monotonicity():
    t = RealHandle.parse("surd:0,1,11", 30).table
    e_small = set(resonant_sets(t, Fraction(1, 2), 28).E)
    e_big = set(resonant_sets(t, 1000, 28).E)
    assert e_small <= e_big
    assert e_big == {k for k in range(2, 29) if t.q[k + 1] ** 1000 > t.q[k] ** 3001}


def test_m_range_switch():
    t = RealHandle.parse("rule:liouville:5", 9).table
    a = resonant_sets(t, 1, 9, window=100, m_range="ak")
    b = resonant_sets(t, 1, 9, window=100, m_range="ak1")
    assert a.multipliers(2) == range(1, 2)
    # a_3 = 32 sits below the window cap 100 // q_2 = 50
    assert b.multipliers(2) == range(1, 33)
    assert b.multipliers(3) == range(1, 2)

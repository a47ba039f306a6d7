import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from skewlab import corpus
from skewlab.cocycle import FourierSeries
from skewlab.complexity import (CoveringConfig, build_grid, chain_terms, coordinate_cutoff, count_grid,
                                covering_reports, derive_config, empirical_covering_number,
                                nearest_grid_point, subpolynomial_trend, verify_grid_covers)
from skewlab.dynamics import SkewProductSpec
from skewlab.errors import BranchError, ResourceError

LIOU = corpus.get("liouville-smooth")


@pytest.fixture(scope="module")
def liouville():
    a = LIOU.alpha_handle()
    _, h1, _ = LIOU.split()
    cfg = derive_config(h1, a.table, LIOU.tau, Fraction(1, 4))
    return a, h1, cfg, SkewProductSpec("S", a, h1, LIOU.beta_handle(), 40)


def toy(L=2, N=2, eps=Fraction(1, 2), tau=Fraction(1), E=(1,)):
    return CoveringConfig(eps, tau, L, N, E[0], mpmath.mpf(1), E)


def test_cutoff_and_mesh(liouville):
    assert coordinate_cutoff(Fraction(1, 4)) == 4
    assert coordinate_cutoff(Fraction(1, 2)) == 3
    _, _, cfg, _ = liouville
    assert cfg.N == 4 and cfg.L >= 16


def test_constant_h1_gives_plain_mesh():
    a = LIOU.alpha_handle()
    h1 = FourierSeries({0: 0.3})
    for eps in (Fraction(1, 4), Fraction(1, 3), Fraction(1, 10)):
        assert derive_config(h1, a.table, 1, eps).L == math.ceil(4 / eps)


def test_lemma_constant_against_direct_sum(liouville):
    a, h1, cfg, _ = liouville
    q = a.table.q[2]
    with mpmath.workdps(60):
        alpha = mpmath.mpf(a.table.l[3]) / a.table.q[3]
        worst = mpmath.mpf(0)
        for j in range(512):
            x = (mpmath.mpf(j) + 0.5) / 512
            s = sum(c * mpmath.expjpi(2 * int(m) * (x + i * alpha))
                    for i in range(q) for m, c in zip(h1.modes, h1.coeffs))
            worst = max(worst, abs(s))
        direct = worst * mpmath.power(q, 3)
    assert direct / 10 <= cfg.per_t_C[2] <= direct * 10
    first = cfg.per_t_C[min(cfg.per_t_C)]
    assert all(v <= 10 * first for v in cfg.per_t_C.values())
    assert cfg.C_hat == max(cfg.per_t_C.values())


def test_toy_grid():
    cfg = toy()
    pts = np.concatenate(list(build_grid(cfg, 1, 1)))
    assert cfg.cells == 9 and len(pts) == cfg.grid_size(1) == 2 * 2 * 9
    assert len({tuple(p) for p in pts}) == len(pts)
    assert set(pts[:, 1]) == {0.0, 0.5}


@given(L=st.integers(2, 6), N=st.integers(1, 4), q=st.integers(1, 30), d=st.integers(2, 9))
def test_grid_count_formula(L, N, q, d):
    cfg = toy(L, N, Fraction(1, d))
    assert count_grid(cfg, 1, q) == L ** N * q * (math.floor(4 * d) + 1)


def test_grid_point_is_its_own_rounding():
    cfg = toy(4, 3, Fraction(1, 4))
    pts = np.concatenate(list(build_grid(cfg, 1, 5)))
    assert np.array_equal(nearest_grid_point(cfg, 5, pts), pts)


def test_finer_mesh_as_q_grows():
    cfg = toy(4, 3, Fraction(1, 4))
    assert cfg.base_mesh(7) > cfg.base_mesh(3)
    assert chain_terms(cfg, 7)["base_offset"] < chain_terms(cfg, 3)["base_offset"]


def test_grid_point_has_zero_defect(liouville):
    a, _, cfg, S = liouville
    q = a.table.q[2]
    pt = next(build_grid(cfg, 2, q))[:3]
    chk = verify_grid_covers(S, cfg, 2, q_t=q, points=pt)
    assert chk.max_defect == pytest.approx(0, abs=1e-12)


def test_constant_cocycle_chain_below_eps():
    a = LIOU.alpha_handle()
    cfg = derive_config(FourierSeries({0: 0.3}), a.table, 1, Fraction(1, 4))
    for t in cfg.times[:3]:
        assert chain_terms(cfg, a.table.q[t])["total"] < 0.25


def test_liouville_cover(liouville):
    _, _, cfg, S = liouville
    chk = verify_grid_covers(S, cfg, cfg.times[0], samples=200, seed=1)
    assert chk.max_defect <= 0.25 and chk.exact_average


def test_greedy_counts():
    a = corpus.get("golden-smooth").alpha_handle()
    rot = SkewProductSpec("S", a, FourierSeries({}), corpus.get("golden-smooth").beta_handle(), 16)
    assert empirical_covering_number(rot, 10, Fraction(99, 100), samples=200) == 1
    c1 = empirical_covering_number(rot, 1, Fraction(1, 4), samples=300, seed=2)
    c2 = empirical_covering_number(rot, 1000, Fraction(1, 4), samples=300, seed=2)
    assert c1 == c2


def test_greedy_below_grid(liouville):
    a, _, cfg, S = liouville
    t = cfg.times[0]
    n = cfg.n_t(a.table.q[t])
    assert empirical_covering_number(S, n, cfg.epsilon, samples=300) <= cfg.grid_size(a.table.q[t])


def test_trend(liouville):
    _, _, cfg, S = liouville
    reps = covering_reports(S, cfg, samples=0, verify=0)
    tr = subpolynomial_trend(reps, cfg)
    assert tr.decreasing and tr.dominated and tr.status == "subpolynomial"
    assert subpolynomial_trend(reps[:1], cfg).status == "insufficient-data"


def test_finite_branch_and_budget(liouville):
    g = corpus.get("golden-smooth")
    _, h1, _ = g.split()
    with pytest.raises(BranchError):
        derive_config(h1, g.alpha_handle().table, 1, Fraction(1, 4))
    a, _, cfg, _ = liouville
    with pytest.raises(ResourceError):
        count_grid(cfg, cfg.times[2], a.table.q[cfg.times[2]])

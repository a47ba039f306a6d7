"""Explicit covering grids for the S model, empirical covering numbers under
the Bowen-averaged metric, and the sub-polynomial trend of grid size over n^tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

import mpmath
import numpy as np

from .cocycle import (Cocycle, FourierSeries, H_n_eval, as_handle, cocycle_sum_closed, e, frac_mul,
                      lemma44_constant, resonant_sets)
from .diophantine import ConvergentTable, RealHandle
from .dynamics import SkewProductSpec, frac_c0_times, metric_tail
from .errors import BranchError, ConfigurationError, DomainError, ResourceError, VerificationFailure

GRID_BUDGET = 10**8
DIRECT_LIMIT = 1 << 20
EXTRA_FIBERS = 8


@dataclass(frozen=True)
class CoveringConfig:
    epsilon: Fraction
    tau: Fraction
    L: int
    N: int
    t0: int
    C_hat: mpmath.mpf
    E: tuple
    per_t_C: dict = field(default_factory=dict)
    lipschitz: float = 0.0

    @property
    def cells(self) -> int:
        """floor(4/eps) + 1."""
        return math.floor(4 / self.epsilon) + 1

    @property
    def times(self) -> tuple:
        return tuple(t for t in self.E if t >= self.t0)

    def n_t(self, q: int) -> int:
        return q ** (math.floor(1 / self.tau) + 2)

    def grid_size(self, q: int) -> int:
        return self.L ** self.N * q * self.cells

    def base_mesh(self, q: int) -> int:
        """Number of first-coordinate grid values."""
        return self.L * q * self.cells


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


def coordinate_cutoff(epsilon) -> int:
    """Least N with 2^N >= 4/eps."""
    r = 4 / _frac(epsilon)
    N = 0
    while 2**N < r:
        N += 1
    return N


def derive_config(h1: FourierSeries, table: ConvergentTable, tau, epsilon,
                  horizon: Optional[int] = None, m_range: str = "ak") -> CoveringConfig:
    eps, tau = _frac(epsilon), _frac(tau)
    if not 0 < eps < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    sets = resonant_sets(table, tau, horizon or table.depth, h1.window, m_range)
    if not sets.E:
        raise BranchError("E is empty within the horizon: finite-M branch, complexity is bounded "
                          "and not computed here")
    lip = 2 * math.pi * float(sum(abs(int(m)) * abs(c) for m, c in zip(h1.modes, h1.coeffs)))
    L = max(math.ceil(4 / eps), math.ceil(lip))
    N = coordinate_cutoff(eps)
    ks = [k for k in sets.E if k <= table.depth]
    per_t = lemma44_constant(h1, table, tau, ks)
    C = max(per_t.values())
    t0 = next((k for k in ks if 2 * C / table.q[k] < mpmath.mpf(eps.numerator) / (4 * eps.denominator)), None)
    if t0 is None:
        raise ConfigurationError(f"no t in E with 2C/q_t < eps/4 (C = {mpmath.nstr(C, 5)}); deepen the table")
    return CoveringConfig(eps, tau, L, N, t0, C, tuple(sets.E), per_t, lip)


def build_grid(config: CoveringConfig, t: int, q_t: int, budget: int = GRID_BUDGET,
               block: int = 1 << 16) -> Iterator[np.ndarray]:
    """Yield blocks of grid points (rows of N coordinates; the rest are zero)."""
    if t < config.t0:
        raise DomainError(f"t={t} precedes t0={config.t0}")
    size = config.grid_size(q_t)
    if size > budget:
        raise ResourceError(f"grid of {size} points exceeds the budget {budget}; try a larger epsilon")
    M1, L, N = config.base_mesh(q_t), config.L, config.N
    fibers = L ** (N - 1)
    for start in range(0, size, block):
        idx = np.arange(start, min(start + block, size), dtype=np.int64)
        pts = np.empty((idx.size, N))
        pts[:, 0] = (idx // fibers) / M1
        rest = idx % fibers
        for k in range(N - 1, 0, -1):
            pts[:, k] = (rest % L) / L
            rest //= L
        yield pts


def count_grid(config: CoveringConfig, t: int, q_t: int, budget: int = GRID_BUDGET) -> int:
    return sum(len(b) for b in build_grid(config, t, q_t, budget))


def nearest_grid_point(config: CoveringConfig, q_t: int, x: np.ndarray) -> np.ndarray:
    """Component-wise rounding onto the grid; coordinates beyond N become 0."""
    out = np.zeros_like(x)
    M1 = config.base_mesh(q_t)
    out[..., 0] = (np.round(x[..., 0] * M1) % M1) / M1
    out[..., 1:config.N] = (np.round(x[..., 1:config.N] * config.L) % config.L) / config.L
    return out


def _wrap(d: np.ndarray) -> np.ndarray:
    d = np.abs(d - np.round(d))
    return d


@dataclass(frozen=True)
class CoverCheck:
    t: int
    q_t: int
    n_t: int
    max_defect: float
    mean_defect: float
    witness: np.ndarray
    chain: dict
    times_used: int
    exact_average: bool

    @property
    def margin(self) -> float:
        return float(self.chain["epsilon"]) - self.max_defect


def chain_terms(config: CoveringConfig, q_t: int) -> dict:
    """The covering chain term by term (upper bounds on d(S^i x, S^i x*))."""
    M1 = config.base_mesh(q_t)
    a_max = q_t ** (math.floor(1 / config.tau) + 1)
    expo = mpmath.mpf(config.tau.denominator) / config.tau.numerator + 2
    block = float(a_max * 2 * config.C_hat / mpmath.power(q_t, expo))
    terms = {
        "base_offset": 1 / (4 * M1),
        "fiber_offsets": 1 / (2 * config.L) * (0.5 - 0.5 ** config.N),
        "H_blocks": block,
        "partial_sums": config.lipschitz * q_t / (2 * M1),
        "tail": 0.5 ** config.N,
    }
    terms["total"] = sum(terms.values())
    terms["epsilon"] = float(config.epsilon)
    return terms


def verify_grid_covers(spec: SkewProductSpec, config: CoveringConfig, t: int, samples: int = 1000,
                       seed: int = 0, q_t: Optional[int] = None, max_times: int = 1 << 16,
                       chunk: int = 1 << 14, raise_on_defect: bool = True,
                       points: Optional[np.ndarray] = None) -> CoverCheck:
    """max over sampled x of dbar_{n_t}(x, x*) with x* the rounded grid point.

    The average runs over every i < n_t when n_t <= DIRECT_LIMIT, otherwise
    over ``max_times`` stratified i.  Fibers past N + 8 are replaced by their
    worst-case tail, so the reported defect is an upper estimate.
    """
    if spec.variant != "S":
        raise DomainError("verify_grid_covers expects the S model")
    if q_t is None:
        q_t = spec.alpha.table.q[t]
    n_t = config.n_t(q_t)
    rng = np.random.default_rng(seed)
    if n_t <= DIRECT_LIMIT:
        ns, exact = np.arange(n_t, dtype=np.int64), True
    else:
        k = max_times
        ns = np.array([int((j + u) * n_t // k) for j, u in enumerate(rng.random(k))], dtype=object)
        exact = False
    K = min(spec.truncation, config.N + EXTRA_FIBERS)
    xs = np.zeros((samples, K))
    if points is None:
        xs[:, :config.N] = rng.random((samples, config.N))
    else:
        points = np.atleast_2d(points)
        samples = points.shape[0]
        xs = np.zeros((samples, K))
        xs[:, :config.N] = points[:, :config.N]
    stars = nearest_grid_point(config, q_t, xs)

    coc = Cocycle(spec.h, spec.alpha)
    phases = spec.phases[:K - 1]
    w = 0.5 ** np.arange(2, K + 1)
    base = 0.5 * _wrap(xs[:, 0] - stars[:, 0])
    # fibers beyond K only move apart when the base coordinates differ
    tail = np.where(xs[:, 0] != stars[:, 0], metric_tail(K), 0.0)
    totals = np.zeros(samples)
    cols = samples * (K - 1)
    if coc.modes.size:
        # W[s, k, m] = c_m (e(m(x1 + phi_k)) - e(m(x1* + phi_k))); Re(G W) as one real product
        def mode_weights(x1):
            pts = (x1[:, None] + phases[None, :]) % 1.0
            return e(frac_mul(coc.modes, pts.reshape(-1))).reshape(samples, K - 1, -1)
        W = (mode_weights(xs[:, 0]) - mode_weights(stars[:, 0])) * coc.coeffs
        W = W.transpose(2, 0, 1).reshape(coc.modes.size, -1)
        W = np.concatenate([W.real, W.imag])
    offsets = (xs[:, 1:] - stars[:, 1:]).reshape(-1)
    step = max(1, min(chunk, (1 << 22) // cols))
    for i in range(0, len(ns), step):
        part = ns[i:i + step]
        if exact:
            G = coc.factors_many(part)
        else:
            G = np.stack([coc.factors(int(n)) for n in part])
        if coc.modes.size:
            D = np.concatenate([G.real, -G.imag], axis=1) @ W
            D += offsets
        else:
            D = np.broadcast_to(offsets, (len(part), cols))
        D -= np.round(D)
        np.abs(D, out=D)
        totals += (D.reshape(len(part), samples, K - 1) @ w).sum(axis=0)
    defects = totals / len(ns) + base + tail
    worst = int(np.argmax(defects))
    out = CoverCheck(t, q_t, n_t, float(defects[worst]), float(defects.mean()), xs[worst].copy(),
                     chain_terms(config, q_t), len(ns), exact)
    if raise_on_defect and out.max_defect > config.epsilon:
        raise VerificationFailure(f"dbar defect {out.max_defect:.4g} exceeds eps at t={t}", witness=xs[worst])
    return out


def block_decomposition_gap(h1: FourierSeries, alpha, q: int, i: int, x) -> float:
    """|H_i(x) - [sum_{r<a} H_q(x + r q alpha) + sum_{j<b} h1(x + (a q + j) alpha)]| with i = a q + b."""
    handle = as_handle(alpha)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    a, b = divmod(int(i), int(q))
    lhs = cocycle_sum_closed(h1, x, i, handle)
    rq = handle.frac_array(np.arange(a, dtype=np.int64) * q) if a else np.zeros(0)
    pts = (x[:, None] + rq[None, :]) % 1.0
    blocks = H_n_eval(h1, pts.reshape(-1), q, handle).reshape(pts.shape).sum(axis=1)
    js = handle.frac_array(a * q + np.arange(b, dtype=np.int64)) if b else np.zeros(0)
    tail = h1(((x[:, None] + js[None, :]) % 1.0).reshape(-1)).reshape(x.size, b).sum(axis=1)
    return float(np.abs(lhs - blocks - tail).max())


# ---------------------------------------------------------------------------
# greedy covering numbers


def _stratified_times(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    if n <= count:
        return np.arange(n, dtype=np.int64)
    u = rng.random(count)
    return np.array([int((j + v) * n // count) for j, v in enumerate(u)], dtype=object)


def sample_orbits(spec: SkewProductSpec, xs: np.ndarray, ns) -> np.ndarray:
    """Orbit coordinates for a stack of points at shared times; shape (points, times, K)."""
    P, K = xs.shape
    ns_obj = np.asarray(ns, dtype=object)
    small = all(int(n) < 2**62 for n in ns_obj)
    coc = spec.cocycle
    if small:
        ns64 = ns_obj.astype(np.int64)
        shift = spec.alpha.frac_array(ns64)
        G = coc.factors_many(ns64) if coc.modes.size else None
    else:
        shift = np.array([float(spec.alpha.frac(int(n))[0]) for n in ns_obj])
        G = np.stack([coc.factors(int(n)) for n in ns_obj]) if coc.modes.size else None
    c0n = frac_c0_times(spec.h.c0, ns_obj)
    out = np.empty((P, len(ns_obj), K))
    out[:, :, 0] = xs[:, :1] + shift
    for k, ph in enumerate(spec.phases[:K - 1], start=1):
        fl = 0.0
        if G is not None:
            E = e(frac_mul(coc.modes, (xs[:, 0] + ph) % 1.0)) * coc.coeffs
            fl = (E @ G.T).real
        out[:, :, k] = xs[:, k:k + 1] + c0n + fl
    return out - np.floor(out)


def bowen_matrix(Y: np.ndarray, rows: Optional[int] = None) -> np.ndarray:
    """Pairwise averaged distances from orbit stacks Y of shape (points, times, K).

    Single precision: the matrix is only compared against eps, far above float32 rounding.
    """
    P, T, K = Y.shape
    Y = Y.astype(np.float32)
    w = (0.5 ** np.arange(1, K + 1)).astype(np.float32)
    out = np.empty((P, P))
    rows = rows or max(1, (1 << 22) // (P * T * K))
    for a in range(0, P, rows):
        diff = Y[a:a + rows, None] - Y[None, :]
        diff -= np.rint(diff)
        np.abs(diff, out=diff)
        out[a:a + rows] = (diff @ w).mean(axis=2)
    return out


def greedy_cover(ball: np.ndarray, epsilon: float) -> int:
    """Greedy pick of the sample covering most uncovered points until > 1 - eps is covered."""
    S = ball.shape[0]
    covered = np.zeros(S, dtype=bool)
    picks = 0
    while covered.mean() <= 1 - epsilon:
        gains = ball[:, ~covered].sum(axis=1)
        best = int(np.argmax(gains))
        covered |= ball[best]
        picks += 1
    return picks


def empirical_covering_number(spec: SkewProductSpec, n: int, epsilon, samples: int = 2000, seed: int = 0,
                              times: int = 256, active: Optional[int] = None) -> int:
    """Greedy upper estimate of the minimal number of dbar_n balls of radius eps covering > 1 - eps."""
    eps = float(epsilon)
    if samples < 100:
        raise DomainError("need at least 100 samples")
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    N = active or coordinate_cutoff(_frac(epsilon))
    K = min(spec.truncation, N + EXTRA_FIBERS)
    rng = np.random.default_rng(seed)
    xs = np.zeros((samples, K))
    xs[:, :min(N, K)] = rng.random((samples, min(N, K)))
    ns = _stratified_times(n, times, np.random.default_rng([seed, 1]))
    Y = sample_orbits(spec, xs, ns)
    D = bowen_matrix(Y)
    return greedy_cover(D < eps, eps)


# ---------------------------------------------------------------------------
# reports and trend


@dataclass(frozen=True)
class CoveringReport:
    t: int
    q_t: int
    n_t: int
    grid_size: int
    empirical_count: Optional[int]
    ratio: Optional[mpmath.mpf]
    grid_ratio: mpmath.mpf
    max_defect: Optional[float] = None
    verdict: str = "count-only"

    def row(self) -> dict:
        fmt = lambda v: "" if v is None else mpmath.nstr(v, 8)
        return {"t": self.t, "q_t": big_str(self.q_t), "n_t": big_str(self.n_t),
                "grid_size": big_str(self.grid_size),
                "empirical_count": "" if self.empirical_count is None else self.empirical_count,
                "ratio": fmt(self.ratio), "verdict": self.verdict}


def big_str(n: int, digits: int = 60) -> str:
    """Exact decimal for moderate integers, otherwise a 15-digit scientific form."""
    if n.bit_length() <= digits * 3.32:
        return str(n)
    return mpmath.nstr(mpmath.mpf(n), 15)


def _pow_tau(n: int, tau: Fraction) -> mpmath.mpf:
    return mpmath.power(mpmath.mpf(n), mpmath.mpf(tau.numerator) / tau.denominator)


def covering_reports(spec: SkewProductSpec, config: CoveringConfig, ts=None, samples: int = 1000,
                     seed: int = 0, verify: int = 2, greedy_samples: int = 0,
                     budget: int = GRID_BUDGET) -> list:
    """One report per t; the first ``verify`` times within budget are checked by sampling."""
    table = spec.alpha.table
    ts = config.times if ts is None else ts
    out, checked = [], 0
    for t in ts:
        if t > table.depth:
            break
        q = table.q[t]
        n_t, grid = config.n_t(q), config.grid_size(q)
        gr = mpmath.mpf(grid) / _pow_tau(n_t, config.tau)
        defect, count, ratio, verdict = None, None, None, "count-only"
        if checked < verify and grid <= budget:
            chk = verify_grid_covers(spec, config, t, samples, seed, q_t=q, raise_on_defect=False)
            defect = chk.max_defect
            verdict = "covered" if defect <= config.epsilon else "defect"
            checked += 1
            if greedy_samples:
                count = empirical_covering_number(spec, n_t, config.epsilon, greedy_samples, seed)
                ratio = mpmath.mpf(count) / _pow_tau(n_t, config.tau)
        out.append(CoveringReport(t, q, n_t, grid, count, ratio, gr, defect, verdict))
    return out


@dataclass(frozen=True)
class TrendVerdict:
    status: str
    decreasing: bool
    fitted_exponent: Optional[float]
    exact_exponent: Fraction
    dominated: bool


def subpolynomial_trend(reports: list, config: CoveringConfig) -> TrendVerdict:
    """grid_size / n_t^tau along t: strictly decreasing, with decay exponent in q_t."""
    tau = config.tau
    exact = 1 - tau * (math.floor(1 / tau) + 2)
    if len(reports) < 3:
        return TrendVerdict("insufficient-data", False, None, exact, False)
    r = [rep.grid_ratio for rep in reports]
    dec = all(b < a for a, b in zip(r, r[1:]))
    lx = np.array([float(mpmath.log(rep.q_t)) for rep in reports])
    ly = np.array([float(mpmath.log(v)) for v in r])
    slope = float(np.polyfit(lx, ly, 1)[0])
    scale = config.L ** config.N * config.cells
    ex = mpmath.mpf(exact.numerator) / exact.denominator
    dom = all(v <= scale * mpmath.power(rep.q_t, ex) * (1 + mpmath.mpf(10) ** -12)
              for v, rep in zip(r, reports))
    ok = dec and dom and exact < 0
    return TrendVerdict("subpolynomial" if ok else "not-decreasing", dec, slope, exact, dom)

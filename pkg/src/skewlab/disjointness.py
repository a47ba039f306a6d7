"""Möbius-weighted averages of e(<b, T^n x>) along skew-product orbits, the
residue-class reduction for rational alpha, polynomial-phase decay probes and
a Birkhoff-average oscillation demonstration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np

from .cocycle import Cocycle, cocycle_sum_closed, e, frac_mul
from .dynamics import SkewProductSpec, TorusPoint, frac_c0_times
from .errors import DomainError, RangeError, ShapeError
from .mobius import MobiusTable, weighted_exp_sum

ANCHOR = 10**4


@dataclass(frozen=True)
class Observable:
    """f(x) = e(<b, x>) for an integer vector b of finite support."""

    b: tuple

    def __post_init__(self):
        b = tuple(int(v) for v in self.b)
        if not b:
            raise ShapeError("observable needs at least one coefficient")
        object.__setattr__(self, "b", b)

    @classmethod
    def parse(cls, text: str) -> "Observable":
        return cls(tuple(int(v) for v in text.split(",")))

    @property
    def support(self) -> int:
        nz = [i for i, v in enumerate(self.b) if v]
        return nz[-1] + 1 if nz else 0

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return e(x[..., :len(self.b)] @ np.array(self.b, dtype=np.float64))


@dataclass(frozen=True)
class DecayTrace:
    checkpoints: list
    label: str = ""
    max_drift: float = 0.0
    sums: list = field(default_factory=list)

    def moduli(self) -> np.ndarray:
        return np.array([m for _, _, m in self.checkpoints])

    def rows(self) -> list:
        out = []
        for (N, avg, mod), s in zip(self.checkpoints, self.sums or [a * n for n, a, _ in self.checkpoints]):
            lg = math.log(N) ** 2 if N > 1 else 1.0
            out.append({"N": N, "re": avg.real, "im": avg.imag, "modulus": mod,
                        "modulus_over_N_log2N": abs(s) / (N / lg)})
        return out


def _checkpoints(cps, limit: Optional[int]) -> list:
    cps = [int(c) for c in cps]
    if not cps or any(b <= a for a, b in zip(cps, cps[1:])) or cps[0] < 1:
        raise DomainError("checkpoints must be positive and strictly increasing")
    if limit is not None and cps[-1] > limit:
        raise RangeError(f"checkpoint {cps[-1]} beyond the sieve limit {limit}")
    return cps


def decades(lo: int, hi: int) -> list:
    """Powers of ten from lo to hi inclusive."""
    out, v = [], lo
    while v <= hi:
        out.append(v)
        v *= 10
    return out


def fiber_mean(coc: Cocycle, t: float) -> Fraction:
    """c_0 + Re sum over resonant modes of c_m e(m t): the per-step drift of S_{h,n}(t)."""
    mean = Fraction(coc.c0)
    if coc.resonant.any():
        with mpmath.workdps(40):
            v = mpmath.mpf(0)
            for m, c in zip(coc.modes[coc.resonant], coc.coeffs[coc.resonant]):
                v += (mpmath.mpc(c.real, c.imag) * mpmath.expjpi(2 * int(m) * mpmath.mpf(t))).real
            sign, man, exp, _ = mpmath.mpf(v)._mpf_
            mean += (-1) ** sign * Fraction(int(man)) * Fraction(2) ** int(exp)
    return mean


def frac_times(x, ns: np.ndarray) -> np.ndarray:
    """frac(n x) for n < 2^24 and x a float or Fraction, splitting x so n * hi is exact."""
    x = Fraction(x)
    x -= math.floor(x)
    hi = Fraction(math.floor(x * 2**28), 2**28)
    lo = float(x - hi)
    v = ns.astype(np.float64) * float(hi)
    v -= np.floor(v)
    v += ns.astype(np.float64) * lo
    return v - np.floor(v)


class _PhaseStream:
    """<b, T^n x0> mod 1 in blocks of consecutive n.

    Each fiber sum S_{h,n}(t_k) is split into its linear drift n * mean
    (c_0 plus resonant modes, reduced mod 1 exactly) and the bounded
    non-resonant part, evaluated per n from the closed form with frac(m n
    alpha) taken from the exact table.  The step recurrence
    S_{h,n+1} = S_{h,n} + h(t + n alpha), re-anchored every ``anchor`` steps,
    runs alongside as a drift monitor.
    """

    def __init__(self, spec: SkewProductSpec, f: Observable, x0, anchor: int = ANCHOR):
        c = spec.check(x0 if not isinstance(x0, TorusPoint) else x0.coords)
        if f.support > spec.truncation:
            raise ShapeError("observable support exceeds the truncation")
        self.spec, self.anchor = spec, int(anchor)
        self.b = np.zeros(spec.truncation)
        self.b[:len(f.b)] = f.b[:spec.truncation]
        self.x = c
        self.fibers = [k for k in range(1, spec.truncation) if self.b[k]]
        self.t = np.array([(c[0] + spec.phases[k - 1]) % 1.0 for k in self.fibers])
        self.coc = coc = Cocycle(spec.h, spec.alpha)
        self.means = [fiber_mean(coc, t) for t in self.t]
        free = ~coc.resonant
        self.modes = coc.modes[free]
        self.inv_sin = 1.0 / coc._sin_theta[free]
        self.theta = coc.theta[free]
        # c_m e(m t_k) per fiber and free mode
        self.weights = e(frac_mul(self.modes, self.t)) * coc.coeffs[free] if self.fibers else None
        self.const = float(self.b @ c)
        self.max_drift = 0.0

    def fiber_sums(self, ns: np.ndarray) -> np.ndarray:
        """S_{h,n}(t_k) mod 1, shape (fibers, len(ns))."""
        S = np.array([frac_times(m, ns) for m in self.means])
        if self.modes.size:
            phi = np.stack([self.spec.alpha.frac_array(int(m) * ns) for m in self.modes])
            G = np.exp(1j * np.pi * (phi - self.theta[:, None])) * np.sin(np.pi * phi) * self.inv_sin[:, None]
            S += (self.weights @ G).real
        return S

    def block(self, n0: int, n1: int) -> np.ndarray:
        """Phases for n0 <= n < n1."""
        ns = np.arange(n0, n1, dtype=np.int64)
        ph = self.const + self.b[0] * self.spec.alpha.frac_array(ns)
        if self.fibers:
            S = self.fiber_sums(np.append(ns, n1))
            ph = ph + self.b[self.fibers] @ S[:, :-1]
            self._monitor(ns, S[:, 0], S[:, -1])
        return ph % 1.0

    def _monitor(self, ns: np.ndarray, start: np.ndarray, end: np.ndarray) -> None:
        steps = self.spec.alpha.frac_array(ns)
        pts = (self.t[:, None] + steps[None, :]) % 1.0
        inc = start + self.spec.h(pts.reshape(-1)).reshape(pts.shape).sum(axis=1)
        d = (inc - end) % 1.0
        self.max_drift = max(self.max_drift, float(np.max(np.minimum(d, 1 - d))))

    def blocks(self, n_lo: int, n_hi: int):
        for n0 in range(n_lo, n_hi + 1, self.anchor):
            n1 = min(n0 + self.anchor, n_hi + 1)
            yield n0, self.block(n0, n1)


def _weighted_trace(stream: _PhaseStream, cps: list, weights: Callable[[int, int], np.ndarray],
                    label: str) -> DecayTrace:
    total = 0j
    out, sums = [], []
    pos = 0
    for n0, ph in stream.blocks(1, cps[-1]):
        w = weights(n0, n0 + ph.size)
        vals = w * e(ph)
        while pos < len(cps) and cps[pos] < n0 + ph.size:
            N = cps[pos]
            s = total + vals[:N - n0 + 1].sum()
            out.append((N, s / N, abs(s) / N))
            sums.append(s)
            pos += 1
        total += vals.sum()
    return DecayTrace(out, label, stream.max_drift, sums)


def mobius_average(spec: SkewProductSpec, f: Observable, x0, table: MobiusTable, checkpoints: Sequence[int],
                   anchor: int = ANCHOR) -> DecayTrace:
    """(1/N) sum_{n <= N} mu(n) f(T^n x0) at each checkpoint N."""
    cps = _checkpoints(checkpoints, table.limit)
    stream = _PhaseStream(spec, f, x0, anchor)
    mu = table.values
    return _weighted_trace(stream, cps, lambda a, b: mu[a:b].astype(np.float64), "mobius")


def birkhoff_average(spec: SkewProductSpec, f: Observable, x0, checkpoints: Sequence[int],
                     anchor: int = ANCHOR) -> DecayTrace:
    """(1/N) sum_{n <= N} f(T^n x0) at each checkpoint N."""
    cps = _checkpoints(checkpoints, None)
    stream = _PhaseStream(spec, f, x0, anchor)
    return _weighted_trace(stream, cps, lambda a, b: np.ones(b - a), "birkhoff")


# ---------------------------------------------------------------------------
# rational alpha


@dataclass(frozen=True)
class RationalSum:
    total: complex
    average: complex
    per_residue: dict
    gamma: dict
    partition_gap: float


def rational_alpha_sum(spec: SkewProductSpec, f: Observable, x0, table: MobiusTable, N: int) -> RationalSum:
    """sum_{n <= N} mu(n) f(T^n x0) for rational alpha = l/q by residue classes mod q.

    On n = r mod q every fiber sum is linear in n:
    S_{h,n}(t) = gamma1_r (n - r + q)/q + gamma2_r (n - r)/q with
    gamma1_r = sum_{j<r} h(t + j l/q) and gamma2_r = sum_{r<=j<q} h(t + j l/q).
    """
    if not spec.alpha.is_rational:
        raise DomainError("rational_alpha_sum needs a rational alpha")
    N = int(N)
    if N > table.limit:
        raise RangeError(f"N={N} beyond the sieve limit {table.limit}")
    a = Fraction(spec.alpha.table.exact_value)
    l, q = a.numerator % a.denominator, a.denominator
    c = spec.check(x0 if not isinstance(x0, TorusPoint) else x0.coords)
    b = np.zeros(spec.truncation)
    b[:len(f.b)] = f.b[:spec.truncation]
    fibers = [k for k in range(1, spec.truncation) if b[k]]
    js = (np.arange(q) * l % q) / q
    coc = Cocycle(spec.h, spec.alpha)
    gamma, Sq, gap = {}, {}, 0.0
    for k in fibers:
        t = (c[0] + spec.phases[k - 1]) % 1.0
        hv = spec.h((t + js) % 1.0)
        pre = np.concatenate([[0.0], np.cumsum(hv)[:-1]])
        full = hv.sum()
        gamma[k] = [(float(pre[r]), float(full - pre[r])) for r in range(q)]
        # gamma1 + gamma2 = S_{h,q}(t) = q * mean, taken in extended precision for the n-linear part
        Sq[k] = q * fiber_mean(coc, t)
        closed = float(cocycle_sum_closed(spec.h, np.array([t]), q, spec.alpha)[0])
        gap = max(gap, abs(full - closed), abs(full - float(Sq[k])))
    per, total = {}, 0j
    const = float(b @ c)
    for r in range(q):
        # n = r + m q: phase = b1 (x1 + n l/q) + sum_k b_k (x_k + gamma1_r + m (gamma1_r + gamma2_r))
        A = const + sum(b[k] * gamma[k][r][0] for k in fibers)
        slopes = [(b[k], Sq[k]) for k in fibers]

        def phase(ns, A=A, r=r, slopes=slopes):
            m = (ns - r) // q
            v = A + b[0] * ((ns * l) % q) / q
            for bk, sk in slopes:
                v = v + bk * frac_times(sk, m)
            return v
        s = weighted_exp_sum(table, phase, N, residue=(r, q)).value
        per[r] = s
        total += s
    return RationalSum(total, total / N, per, gamma, gap)


# ---------------------------------------------------------------------------
# polynomial phases


def _to_fixed(theta) -> int:
    th = Fraction(theta) if not isinstance(theta, str) else Fraction(theta)
    return int(round(th * 2**64)) % 2**64


def polynomial_phases(coeffs: Sequence, ns: np.ndarray) -> np.ndarray:
    """P(n) mod 1 for P = theta_d n^d + ... + theta_1 n, with each theta on the 2^-64 lattice.

    The products wrap in uint64, so the reduction mod 1 is exact for the
    quantized coefficients even when n^d overflows.
    """
    ns = np.asarray(ns, dtype=np.uint64)
    acc = np.zeros(ns.size, dtype=np.uint64)
    power = np.ones(ns.size, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for th in reversed(list(coeffs)):
            power = power * ns
            acc = acc + np.uint64(_to_fixed(th)) * power
    return acc.astype(np.float64) / 2.0**64


def davenport_decay_probe(coeffs: Sequence, residue: tuple, table: MobiusTable,
                          checkpoints: Sequence[int]) -> DecayTrace:
    """Partial sums of mu(n) e(P(n)) over n = a mod q; coefficients listed from the top degree."""
    if len(coeffs) < 1:
        raise DomainError("polynomial degree must be >= 1")
    cps = _checkpoints(checkpoints, table.limit)
    a, q = int(residue[0]), int(residue[1])
    out, sums = [], []
    for N in cps:
        s = weighted_exp_sum(table, lambda ns: polynomial_phases(coeffs, ns), N, residue=(a, q) if q > 1 else None)
        out.append((N, s.value / N, abs(s.value) / N))
        sums.append(s.value)
    return DecayTrace(out, "davenport", 0.0, sums)


# ---------------------------------------------------------------------------
# Birkhoff irregularity (demonstration)


@dataclass(frozen=True)
class Oscillation:
    trace: DecayTrace
    oscillation: float
    argmax: tuple
    label: str = "demonstration"


def birkhoff_irregularity_probe(spec: SkewProductSpec, f: Observable, x0, window: Sequence[int]) -> Oscillation:
    """max |A_N - A_N'| over the window of Birkhoff averages, with the pair achieving it."""
    trace = birkhoff_average(spec, f, x0, window)
    avgs = np.array([a for _, a, _ in trace.checkpoints])
    D = np.abs(avgs[:, None] - avgs[None, :])
    i, j = np.unravel_index(int(np.argmax(D)), D.shape)
    Ns = [n for n, _, _ in trace.checkpoints]
    return Oscillation(trace, float(D[i, j]), (Ns[min(i, j)], Ns[max(i, j)]))

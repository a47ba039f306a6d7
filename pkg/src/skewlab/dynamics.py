"""Skew products on a truncated infinite torus.

A point is an array of K coordinates in [0, 1).  Fiber k (1-based, k >= 2)
is driven by h evaluated at x_1 plus a fixed phase: (k-2) beta for the
linear shift T and the model S, beta^(k-2) for the geometric shift Q.
Iterates are computed from closed-form Birkhoff sums, never by looping n
times.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .cocycle import Cocycle, FourierSeries, as_handle, constant_series, evaluate_shifted
from .diophantine import RealHandle
from .errors import DomainError, ShapeError, SpecError

DEFAULT_K = 40
VARIANTS = ("T", "Q", "rot", "S")


def reduce(x):
    x = np.asarray(x, dtype=np.float64)
    return x - np.floor(x)


@dataclass(frozen=True)
class TorusPoint:
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if c.ndim != 1 or c.size < 2:
            raise ShapeError("a torus point needs a 1-d array of at least 2 coordinates")
        if np.any((c < 0) | (c >= 1)):
            raise DomainError("torus coordinates must lie in [0, 1)")
        object.__setattr__(self, "coords", c)

    @property
    def truncation(self) -> int:
        return self.coords.size

    @classmethod
    def zero(cls, K: int = DEFAULT_K) -> "TorusPoint":
        return cls(np.zeros(K))

    @classmethod
    def random(cls, rng: np.random.Generator, K: int = DEFAULT_K, active: Optional[int] = None) -> "TorusPoint":
        c = rng.random(K)
        if active is not None:
            c[active:] = 0.0
        return cls(c)


def _coords(x) -> np.ndarray:
    return x.coords if isinstance(x, TorusPoint) else np.asarray(x, dtype=np.float64)


def fiber_phases(variant: str, beta: Optional[RealHandle], K: int) -> np.ndarray:
    """Phases added to x_1 for fibers k = 2..K (index 0 is k = 2)."""
    ks = np.arange(K - 1)
    if variant in ("rot",) or beta is None:
        return np.zeros(K - 1)
    if variant in ("T", "S"):
        return beta.frac_array(ks)
    if variant == "Q":
        # beta^j reduced mod 1 from an exact rational approximation of beta
        approx, err = beta.approximation(2**16, tol_bits=80)
        out = np.empty(K - 1)
        p = Fraction(1)
        for j in ks:
            out[j] = float(p - (p.numerator // p.denominator))
            p *= approx
        return out
    raise SpecError(f"unknown variant {variant!r}")


@dataclass
class SkewProductSpec:
    """One of the maps T (linear phases), Q (geometric phases), rot (fibers shift by c_0) or S.

    ``h`` is the fiber series; for the S model it is the truncation h_1.
    """

    variant: str
    alpha: RealHandle
    h: FourierSeries
    beta: Optional[RealHandle] = None
    truncation: int = DEFAULT_K
    _phases: np.ndarray = field(default=None, repr=False)
    _coc: Optional[Cocycle] = field(default=None, repr=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise SpecError(f"variant must be one of {VARIANTS}")
        if self.truncation < 2:
            raise ShapeError("truncation K must be >= 2")
        self.alpha = as_handle(self.alpha)
        if self.beta is not None:
            self.beta = as_handle(self.beta)
        elif self.variant in ("T", "Q", "S"):
            raise SpecError(f"variant {self.variant} needs beta")
        if self.variant == "rot":
            self.h = constant_series(self.h.c0, self.h.window)
        self._phases = fiber_phases(self.variant, self.beta, self.truncation)

    @property
    def phases(self) -> np.ndarray:
        return self._phases

    @property
    def cocycle(self) -> Cocycle:
        if self._coc is None:
            self._coc = Cocycle(self.h, self.alpha)
        return self._coc

    def check(self, x) -> np.ndarray:
        c = _coords(x)
        if c.shape[-1] != self.truncation:
            raise ShapeError(f"point has {c.shape[-1]} coordinates, spec truncation is {self.truncation}")
        return c

    def with_h(self, h: FourierSeries, variant: Optional[str] = None) -> "SkewProductSpec":
        return SkewProductSpec(variant or self.variant, self.alpha, h, self.beta, self.truncation)


def frac_c0_times(c0: float, ns) -> np.ndarray:
    """frac(c_0 n) exactly for an array of integers, c_0 being a binary rational."""
    c = Fraction(c0)
    ns = np.atleast_1d(np.asarray(ns, dtype=object))
    if c == 0:
        return np.zeros(ns.size)
    r = (ns * c.numerator) % c.denominator
    return np.array([float(Fraction(int(v), c.denominator)) for v in r])


def step(spec: SkewProductSpec, x) -> np.ndarray:
    """One application of the map; works on a single point or a stack of points."""
    c = spec.check(x)
    out = np.empty_like(c)
    x1 = c[..., 0]
    out[..., 0] = x1 + spec.alpha.frac_float(1)
    pts = (x1[..., None] + spec.phases) % 1.0
    out[..., 1:] = c[..., 1:] + spec.h(pts)
    return reduce(out)


def power(spec: SkewProductSpec, x, n: int) -> np.ndarray:
    """T^n x from closed-form Birkhoff sums; negative n applies the inverse map."""
    c = spec.check(x)
    n = int(n)
    if n == 0:
        return c.copy()
    m = abs(n)
    shift = spec.alpha.frac_float(m)
    out = np.empty_like(c)
    coc = spec.cocycle
    c0m = frac_c0_times(spec.h.c0, m)[0]
    if n > 0:
        base = c[..., 0]
        out[..., 0] = base + shift
        sign = 1.0
    else:
        base = reduce(c[..., 0] - shift)
        out[..., 0] = base
        sign = -1.0
    pts = (base[..., None] + spec.phases) % 1.0
    fl = coc.fluctuation(pts.reshape(-1), m).reshape(pts.shape)
    out[..., 1:] = c[..., 1:] + sign * (c0m + fl)
    return reduce(out)


def orbit(spec: SkewProductSpec, x, ns) -> np.ndarray:
    """T^n x for each n in a nonnegative int64 array; shape (len(ns), K)."""
    c = spec.check(x)
    if c.ndim != 1:
        raise ShapeError("orbit takes a single point")
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size and ns.min() < 0:
        raise DomainError("orbit times must be >= 0")
    out = np.empty((ns.size, c.size))
    out[:, 0] = c[0] + spec.alpha.frac_array(ns)
    c0n = frac_c0_times(spec.h.c0, ns)
    coc = spec.cocycle
    for k, ph in enumerate(spec.phases, start=1):
        t = (c[0] + ph) % 1.0
        out[:, k] = c[k] + c0n + coc.fluctuation_many(t, ns)
    return reduce(out)


def metric(x, y) -> np.ndarray:
    """d(x, y) = sum_k 2^-k ||x_k - y_k|| over the stored coordinates."""
    a, b = _coords(x), _coords(y)
    if a.shape[-1] != b.shape[-1]:
        raise ShapeError("points have different truncations")
    diff = np.abs(a - b) % 1.0
    dist = np.minimum(diff, 1.0 - diff)
    w = 0.5 ** np.arange(1, a.shape[-1] + 1)
    return dist @ w


def metric_tail(K: int) -> float:
    """Largest possible contribution of coordinates beyond K."""
    return 0.5 ** K * 0.5


def bowen_metric(spec: SkewProductSpec, x, y, n: int, chunk: int = 1 << 14) -> float:
    """(1/n) sum over j < n of d(T^j x, T^j y)."""
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    total = 0.0
    for j0 in range(0, n, chunk):
        js = np.arange(j0, min(j0 + chunk, n), dtype=np.int64)
        total += float(metric(orbit(spec, x, js), orbit(spec, y, js)).sum())
    return total / n


# ---------------------------------------------------------------------------
# conjugations


def fiber_shift(spec: SkewProductSpec, psi: FourierSeries, x, sign: float = -1.0) -> np.ndarray:
    """(x_1, x_k + sign * psi(x_1 + phase_k)); sign -1 is pi, +1 its inverse."""
    c = spec.check(x)
    out = c.copy()
    pts = (c[..., :1] + spec.phases) % 1.0
    out[..., 1:] = c[..., 1:] + sign * psi(pts)
    return reduce(out)


def conjugate_check(outer: SkewProductSpec, inner: SkewProductSpec, psi: FourierSeries, x) -> np.ndarray:
    """d(pi^-1 inner pi x, outer x) with pi(x)_k = x_k - psi(x_1 + phase_k)."""
    if outer.truncation != inner.truncation:
        raise ShapeError("outer and inner truncations differ")
    c = outer.check(x)
    y = step(inner, fiber_shift(outer, psi, c, -1.0))
    lhs = y.copy()
    # undo pi at the image point: psi is evaluated at y_1 + phase_k, with y_1 = x_1 + alpha
    pts = (c[..., :1] + outer.phases) % 1.0
    lhs[..., 1:] = y[..., 1:] + evaluate_shifted(psi, pts.reshape(-1), outer.alpha).reshape(pts.shape)
    return metric(reduce(lhs), step(outer, c))

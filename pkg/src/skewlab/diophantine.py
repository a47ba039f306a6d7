"""Continued fractions, certified nearest-integer distances and small-divisor sums.

Exact big-integer convergents are the source of truth for every irrational
number handled by the package.  Floating point values are always derived
from a convergent together with an explicit error bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional, Sequence

import mpmath
import numpy as np

from .errors import DomainError, PrecisionError, RangeError, SpecError

DEFAULT_BIT_CAP = 10**6
TAIL_TERM_CAP = 10**7
# An unexpanded next denominator is never assumed larger than 2**256 * q_m.
_LOWER_BOUND_BITS = 256
_INT64_SAFE = 2**62


# ---------------------------------------------------------------------------
# integer helpers


def short_int(n) -> str:
    """Digits of n, or its bit length when the digits would be unwieldy (for messages)."""
    n = int(n)
    return str(n) if n.bit_length() < 1000 else f"<{n.bit_length()}-bit integer>"


def iroot(x: int, k: int) -> int:
    """floor(x ** (1/k)) for integers x >= 0, k >= 1."""
    if x < 0:
        raise DomainError("iroot of a negative number")
    if x < 2 or k == 1:
        return x
    r = 1 << ((x.bit_length() + k - 1) // k)
    while True:
        y = ((k - 1) * r + x // r ** (k - 1)) // k
        if y >= r:
            return r
        r = y


def ceil_pow(q: int, s: Fraction) -> int:
    """ceil(q ** s) for an integer q >= 1 and rational s >= 0."""
    x = q**s.numerator
    r = iroot(x, s.denominator)
    return r if r**s.denominator == x else r + 1


def log2_fraction(x: Fraction) -> float:
    """log2|x| for a nonzero Fraction of any size."""
    x = abs(x)
    num, den = x.numerator, x.denominator
    shift = num.bit_length() - den.bit_length()
    # bring the ratio into float range before taking the log
    if shift > 0:
        den <<= shift
    else:
        num <<= -shift
    return shift + math.log2(num / den)


# ---------------------------------------------------------------------------
# specs


class _Oversize:
    """Marker yielded by a quotient source when a_{k+1} would exceed the bit cap."""

    def __init__(self, lower_bits: int):
        self.lower_bits = lower_bits


@dataclass(frozen=True)
class IrrationalSpec:
    """How to generate the partial quotients of a number alpha in [0, 1).

    ``kind`` is one of ``surd`` (alpha = (p + sqrt d)/q, reduced mod 1),
    ``quotients`` (a finite list, so alpha is rational), ``rule``
    (a_{k+1} computed from q_k) or ``rational``.
    """

    kind: str
    params: tuple
    rule: Optional[Callable[[int, int], int]] = field(default=None, compare=False, repr=False)

    # -- constructors -------------------------------------------------------

    @classmethod
    def surd(cls, p: int, q: int, d: int) -> "IrrationalSpec":
        if q == 0:
            raise SpecError("surd denominator q must be nonzero")
        if d <= 0:
            raise SpecError(f"surd radicand d={d} must be positive")
        if math.isqrt(d) ** 2 == d:
            raise SpecError(f"surd radicand d={d} is a perfect square")
        return cls("surd", (int(p), int(q), int(d)))

    @classmethod
    def quotients(cls, seq: Sequence[int]) -> "IrrationalSpec":
        seq = tuple(int(a) for a in seq)
        for i, a in enumerate(seq, start=1):
            if a < 1:
                raise SpecError(f"partial quotient a_{i}={a} must be >= 1")
        return cls("quotients", seq)

    @classmethod
    def liouville(cls, s) -> "IrrationalSpec":
        s = Fraction(str(s)) if not isinstance(s, Fraction) else s
        if s < 0:
            raise SpecError("liouville exponent must be >= 0")
        return cls("rule", ("liouville", s))

    @classmethod
    def furstenberg(cls) -> "IrrationalSpec":
        return cls("rule", ("furstenberg",))

    @classmethod
    def rational(cls, value) -> "IrrationalSpec":
        value = Fraction(value)
        return cls("rational", (value - math.floor(value),))

    @classmethod
    def from_rule(cls, name: str, fn: Callable[[int, int], int]) -> "IrrationalSpec":
        """Custom rule: ``fn(k, q_k)`` returns a_{k+1}."""
        return cls("rule", ("custom", name), rule=fn)

    @classmethod
    def parse(cls, text: str) -> "IrrationalSpec":
        """Parse ``surd:p,q,d``, ``quotients:a1,a2,..``, ``rule:liouville:s``,
        ``rule:furstenberg`` or ``rational:l/q``."""
        text = text.strip()
        head, _, rest = text.partition(":")
        try:
            if head == "surd":
                p, q, d = (int(v) for v in rest.split(","))
                return cls.surd(p, q, d)
            if head == "quotients":
                return cls.quotients([int(v) for v in rest.split(",") if v.strip()])
            if head == "rational":
                return cls.rational(Fraction(rest))
            if head == "rule":
                name, _, arg = rest.partition(":")
                if name == "liouville":
                    return cls.liouville(Fraction(arg))
                if name == "furstenberg":
                    return cls.furstenberg()
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecError(f"cannot parse number spec {text!r}: {exc}") from exc
        raise SpecError(f"unknown number spec {text!r}")

    def __str__(self) -> str:
        if self.kind == "surd":
            return "surd:%d,%d,%d" % self.params
        if self.kind == "quotients":
            return "quotients:" + ",".join(str(a) for a in self.params)
        if self.kind == "rational":
            return f"rational:{self.params[0]}"
        name = self.params[0]
        if name == "liouville":
            return f"rule:liouville:{self.params[1]}"
        return f"rule:{name}" if name != "custom" else f"rule:custom:{self.params[1]}"

    @property
    def is_rational(self) -> bool:
        return self.kind in ("quotients", "rational")

    # -- quotient sources ---------------------------------------------------
    # Each source is a generator primed with next(); expand() sends the
    # current q_k and receives a_{k+1}, None (expansion terminated) or _Oversize.

    def _source(self, bit_cap: int):
        if self.kind == "surd":
            return _surd_source(*self.params)
        if self.kind == "quotients":
            return _list_source(self.params)
        if self.kind == "rational":
            return _list_source(_rational_quotients(self.params[0]))
        name = self.params[0]
        if name == "liouville":
            return _liouville_source(self.params[1], bit_cap)
        if name == "furstenberg":
            return _furstenberg_source(bit_cap)
        return _custom_source(self.rule)


def _rational_quotients(x: Fraction) -> list:
    out = []
    num, den = x.numerator, x.denominator
    # x in [0, 1): skip the integer part
    num, den = den, num
    while den:
        a, r = divmod(num, den)
        out.append(a)
        num, den = den, r
    return out


def _surd_source(p: int, q: int, d: int):
    # (P + sqrt D)/Q with Q | D - P^2
    if (d - p * p) % q:
        P, D, Q = p * abs(q), d * q * q, q * abs(q)
    else:
        P, D, Q = p, d, q
    s = math.isqrt(D)

    def floor_x(P, Q):
        return (P + s) // Q if Q > 0 else (-P - s - 1) // (-Q)

    a0 = floor_x(P, Q)
    P, Q = a0 * Q - P, (D - (a0 * Q - P) ** 2) // Q
    yield None  # priming
    while True:
        a = floor_x(P, Q)
        P = a * Q - P
        Q = (D - P * P) // Q
        yield a


def _list_source(seq):
    yield None
    for a in seq:
        yield a
    while True:
        yield None


def _liouville_source(s: Fraction, bit_cap: int):
    qk = yield None
    while True:
        est = math.ceil(s * (qk.bit_length() - 1)) if qk > 1 else 0
        if est + qk.bit_length() > bit_cap:
            qk = yield _Oversize(max(est - 1, 0))
        else:
            qk = yield ceil_pow(qk, s)


_LOG2_E = math.log2(math.e)


def _furstenberg_source(bit_cap: int):
    # a_{k+1} = max(1, round(e^{q_k} / q_k)), so that q_{k+1} is comparable to e^{q_k}
    qk = yield None
    while True:
        est = math.floor(qk * _LOG2_E - math.log2(qk))
        if est + qk.bit_length() > bit_cap:
            qk = yield _Oversize(max(est - 1, 0))
            continue
        with mpmath.workprec(max(est, 0) + 80):
            a = int(mpmath.nint(mpmath.exp(qk) / qk))
        qk = yield max(1, a)


def _custom_source(fn):
    k = 0
    qk = yield None
    while True:
        qk = yield fn(k, qk)
        k += 1


# ---------------------------------------------------------------------------
# convergent tables


@dataclass(frozen=True)
class ConvergentTable:
    """Rows k = 0..depth of (a_k, l_k, q_k) with l_0/q_0 = 0/1.

    ``q_next_lower`` is a valid lower bound for q_{depth+1} (exact when the
    next quotient was computable); it is None once the expansion terminated,
    in which case alpha equals l_depth / q_depth exactly.
    """

    a: tuple
    l: tuple
    q: tuple
    status: str = "ok"
    q_next_lower: Optional[int] = None
    spec: Optional[IrrationalSpec] = field(default=None, compare=False)
    bit_cap: int = DEFAULT_BIT_CAP

    @property
    def depth(self) -> int:
        return len(self.q) - 1

    @property
    def terminated(self) -> bool:
        return self.status == "terminated"

    def rows(self) -> Iterator[tuple]:
        for k in range(len(self.q)):
            yield k, self.a[k], self.l[k], self.q[k]

    def convergent(self, k: int) -> Fraction:
        return Fraction(self.l[k], self.q[k])

    def q_after(self, m: int) -> Optional[int]:
        """q_{m+1} if tabulated, else a lower bound for it (None if alpha = l_m/q_m)."""
        if m < self.depth:
            return self.q[m + 1]
        if m == self.depth:
            return self.q_next_lower
        raise RangeError(f"index {m} beyond table depth {self.depth}")

    def error_bound(self, m: int) -> Fraction:
        """Bound on |alpha - l_m/q_m|, from |alpha - l_m/q_m| <= 1/(q_m q_{m+1})."""
        nxt = self.q_after(m)
        if nxt is None:
            return Fraction(0)
        return Fraction(1, self.q[m] * nxt)

    def extended(self, depth: int) -> "ConvergentTable":
        if self.spec is None:
            raise PrecisionError("table has no spec; cannot extend", required_index=depth)
        return expand(self.spec, depth, bit_cap=self.bit_cap)

    @property
    def exact_value(self) -> Optional[Fraction]:
        return self.convergent(self.depth) if self.terminated else None


def expand(spec: IrrationalSpec, depth: int, bit_cap: int = DEFAULT_BIT_CAP) -> ConvergentTable:
    """Expand ``spec`` to ``depth`` rows beyond q_0 = 1.

    Stops early with status ``terminated`` (alpha rational) or
    ``depth-limited`` (next denominator above ``bit_cap`` bits).
    """
    if depth < 1:
        raise DomainError("depth must be >= 1")
    a, l, q = [0], [0], [1]
    l_prev, q_prev = 1, 0
    src = spec._source(bit_cap)
    next(src)
    status, q_next_lower = "ok", None
    for k in range(1, depth + 2):
        ak = src.send(q[-1])
        if ak is None:
            status = "terminated"
            break
        if isinstance(ak, _Oversize):
            status = "depth-limited" if k <= depth else status
            bits = min(ak.lower_bits, _LOWER_BOUND_BITS)
            q_next_lower = max(q[-1] + q_prev, (q[-1] << bits) + q_prev)
            break
        if not isinstance(ak, int) or ak < 1:
            raise SpecError(f"rule produced non-positive partial quotient a_{k}={ak!r}")
        qn = ak * q[-1] + q_prev
        ln = ak * l[-1] + l_prev
        if k > depth or qn.bit_length() > bit_cap:
            # exact next denominator known but not tabulated
            if k <= depth:
                status = "depth-limited"
            q_next_lower = qn
            break
        a.append(ak)
        l_prev, q_prev = l[-1], q[-1]
        l.append(ln)
        q.append(qn)
    return ConvergentTable(tuple(a), tuple(l), tuple(q), status, q_next_lower, spec, bit_cap)


# ---------------------------------------------------------------------------
# certified distances


@dataclass(frozen=True)
class CertifiedDistance:
    """||n alpha|| lies within ``error`` of ``exact`` (clipped to [0, 1/2]).

    The exact parts are kept as integer pairs; building Fractions of
    million-bit integers costs a gcd per call.
    """

    value: float
    error_bound: float
    num: int
    den: int
    err_num: int
    err_den: int

    @property
    def exact(self) -> Fraction:
        return Fraction(self.num, self.den)

    @property
    def error(self) -> Fraction:
        return Fraction(self.err_num, self.err_den)

    def interval(self) -> tuple:
        lo = max(Fraction(0), self.exact - self.error)
        hi = min(Fraction(1, 2), self.exact + self.error)
        return lo, hi


def _pick_index(table: ConvergentTable, n_abs: int, bits: int = 64) -> Optional[int]:
    best = None
    for m in range(table.depth + 1):
        if table.q[m] <= n_abs and not (table.terminated and m == table.depth):
            continue
        best = m
        nxt = table.q_after(m)
        if nxt is None or table.q[m] * nxt >= n_abs << bits:
            return m
    return best if best is not None and best == table.depth and table.terminated else None


def nearest_distance(table: ConvergentTable, n: int, precision_index: Optional[int] = None,
                     auto_extend: bool = True) -> CertifiedDistance:
    """Certified ||n alpha|| from a convergent l_m/q_m with q_m > |n|.

    Without ``precision_index`` the first row whose error bound is below
    2**-64 is used, extending the table when allowed.
    """
    n = int(n)
    if n == 0:
        return CertifiedDistance(0.0, 0.0, 0, 1, 0, 1)
    n_abs = abs(n)
    m = precision_index
    while True:
        if m is None:
            m = _pick_index(table, n_abs)
        usable = m is not None and m <= table.depth and (table.q[m] > n_abs or table.terminated)
        if usable:
            break
        if not auto_extend or table.spec is None or table.status != "ok":
            if m is None:
                m = next((k for k in range(table.depth + 1) if table.q[k] > n_abs), None)
                if m is not None:
                    break
            need = table.depth + 1 if m is None else m
            raise PrecisionError(f"||{short_int(n)} alpha|| needs convergent index >= {need}", required_index=need)
        table = table.extended(max(2 * table.depth, 8))
        if precision_index is None:
            m = None
    Q = table.q[m]
    r = (n * table.l[m]) % Q
    num = min(r, Q - r)
    nxt = table.q_after(m)
    err_num, err_den = (0, 1) if nxt is None else (n_abs, Q * nxt)
    return CertifiedDistance(num / Q, err_num / err_den, num, Q, err_num, err_den)


# ---------------------------------------------------------------------------
# certified real handle


class RealHandle:
    """A real number x in [0, 1) backed by a convergent table.

    Provides fractional parts of integer multiples n*x, exactly rounded from
    a rational approximation whose error is bounded by table.error_bound.
    """

    def __init__(self, table: ConvergentTable, label: str = ""):
        self._table = table
        self.label = label or (str(table.spec) if table.spec is not None else "")
        self._vec = None
        self._approx_cache = {}

    @classmethod
    def from_spec(cls, spec: IrrationalSpec, depth: int = 48, bit_cap: int = DEFAULT_BIT_CAP) -> "RealHandle":
        return cls(expand(spec, depth, bit_cap=bit_cap))

    @classmethod
    def parse(cls, text: str, depth: int = 48) -> "RealHandle":
        return cls.from_spec(IrrationalSpec.parse(text), depth)

    @classmethod
    def from_fraction(cls, value) -> "RealHandle":
        spec = IrrationalSpec.rational(Fraction(value))
        return cls(expand(spec, 10**9), label=str(spec))

    @property
    def table(self) -> ConvergentTable:
        return self._table

    @property
    def is_rational(self) -> bool:
        return self._table.terminated

    def __float__(self) -> float:
        frac, _ = self.approximation(1)
        return float(frac)

    def __repr__(self) -> str:
        return f"RealHandle({self.label or float(self)!r})"

    def _grow(self) -> bool:
        t = self._table
        if t.terminated or t.status != "ok" or t.spec is None:
            return False
        self._table = t.extended(max(2 * t.depth, 8))
        self._approx_cache.clear()
        self._vec = None
        return self._table.depth > t.depth or self._table.terminated

    def approximation(self, scale: int, tol_bits: int = 80) -> tuple:
        """(l_m/q_m, bound) with |scale| * bound <= 2**-tol_bits when reachable."""
        scale = max(abs(int(scale)), 1)
        key = (scale.bit_length(), tol_bits)
        hit = self._approx_cache.get(key)
        if hit is not None:
            return hit
        # round the scale up to a power of two so cached answers stay valid
        scale = 1 << scale.bit_length()
        out = self._approximation(scale, tol_bits)
        self._approx_cache[key] = out
        return out

    def _approximation(self, scale: int, tol_bits: int) -> tuple:
        while True:
            t = self._table
            if t.terminated:
                return t.convergent(t.depth), Fraction(0)
            target = scale << tol_bits
            for m in range(t.depth + 1):
                nxt = t.q_after(m)
                if t.q[m] * nxt >= target:
                    return t.convergent(m), t.error_bound(m)
            if not self._grow():
                m = self._table.depth
                return self._table.convergent(m), self._table.error_bound(m)

    def frac(self, n: int, tol_bits: int = 80) -> tuple:
        """(frac(n x) approximated as a Fraction in [0,1), error bound)."""
        n = int(n)
        approx, err = self.approximation(n, tol_bits)
        v = n * approx
        return v - math.floor(v), abs(n) * err

    def frac_signed(self, n: int, rel_bits: int = 50) -> tuple:
        """Signed fractional part in [-1/2, 1/2) with relative error <= 2**-rel_bits when possible.

        A zero from an exact convergent (n a multiple of q_m) is retried at
        deeper convergents until it separates or the table is exhausted.
        """
        tol = 80
        while True:
            v, err = self.frac(n, tol_bits=tol)
            if v >= Fraction(1, 2):
                v -= 1
            if err == 0 or (v != 0 and err <= abs(v) / 2**rel_bits):
                return v, err
            if v != 0:
                new = max(tol + 8, rel_bits + math.ceil(-log2_fraction(abs(v))) + 4)
            else:
                new = 2 * tol
            t = self._table
            ceiling = 2 * t.q[t.depth].bit_length() + abs(int(n)).bit_length() + 64
            if tol > ceiling and (t.terminated or t.status != "ok"):
                return v, err
            tol = new

    def frac_float(self, n: int) -> float:
        v, _ = self.frac(n)
        return float(v)

    def _vector_params(self, nmax: int):
        t = self._table
        best = 0
        for m in range(t.depth + 1):
            if t.q[m] <= 2**31 and t.l[m] * max(nmax, 1) < _INT64_SAFE:
                best = m
            else:
                break
        L, Q = t.l[best], t.q[best]
        approx, err = self.approximation(max(nmax, 1), tol_bits=90)
        delta = float(approx - Fraction(L, Q))
        return L, Q, delta

    def frac_array(self, ns) -> np.ndarray:
        """Vectorised frac(n x) for an int64 array; absolute error ~1e-15 for |n| < 2**31."""
        ns = np.asarray(ns, dtype=np.int64)
        nmax = int(np.abs(ns).max()) if ns.size else 1
        key = nmax.bit_length()
        if self._vec is None or self._vec[0] < key:
            self._vec = (key, self._vector_params(1 << key))
        L, Q, delta = self._vec[1]
        r = (ns * L) % Q
        x = r / Q + ns * delta
        return x - np.floor(x)


# ---------------------------------------------------------------------------
# small-divisor sums


def _distances(handle: RealHandle, qs: np.ndarray, rel_tol: float, floor_value: float = 0.0) -> np.ndarray:
    """||q alpha|| for an array of positive q, certified to relative error rel_tol.

    Terms whose value is below ``floor_value`` are certified in absolute terms
    against floor_value instead (used when the summand is capped).
    """
    if qs.size == 0:
        return np.zeros(0)
    hi = int(qs.max())
    tol_bits = 24 + 2 * hi.bit_length()
    prev_err = None
    while True:
        approx, err = handle.approximation(hi, tol_bits)
        L, Q = approx.numerator, approx.denominator
        if hi * L < 2**63 and Q < 2**63:
            r = (qs.astype(np.int64) * L) % Q
            dist = np.minimum(r, Q - r).astype(np.float64) / float(Q)
        else:
            r = (qs.astype(object) * L) % Q
            dist = np.array([float(Fraction(min(x, Q - x), Q)) for x in r])
        errs = qs.astype(np.float64) * float(err) * (1 + 1e-12)
        ref = np.maximum(dist, floor_value)
        bad = errs > rel_tol * ref
        if not bad.any():
            return dist
        if handle.table.terminated or err == prev_err:
            q_bad = int(qs[np.argmax(bad)])
            raise PrecisionError(f"cannot certify ||{short_int(q_bad)} alpha|| to relative error {rel_tol}",
                                 required_index=handle.table.depth + 1)
        prev_err = err
        tol_bits += 32


def resonance_sum(table: ConvergentTable, k: int, rel_tol: float = 1e-6,
                  max_terms: int = 2 * 10**7) -> float:
    """Sum over 0 < |q| < q_k of 1/||q alpha||^2, divided by q_k^2."""
    if k < 2:
        raise DomainError("resonance_sum needs k >= 2")
    if k > table.depth:
        raise RangeError(f"k={k} beyond table depth {table.depth}")
    qk = table.q[k]
    if qk - 1 > max_terms:
        raise PrecisionError(f"q_{k}={short_int(qk)} too large for brute-force summation", required_index=k)
    handle = RealHandle(table)
    qs = np.arange(1, qk, dtype=np.int64)
    dist = _distances(handle, qs, rel_tol)
    if (dist == 0).any():
        raise PrecisionError("zero distance: alpha is rational with denominator below q_k")
    return 2.0 * math.fsum(1.0 / dist**2) / float(qk) ** 2


@dataclass(frozen=True)
class TailMinSum:
    value: float
    comparison: float  # c / q_k
    partial: bool
    q_lo: int
    q_hi: int

    @property
    def ratio(self) -> float:
        return self.value / self.comparison


def tail_min_sum(table: ConvergentTable, k: int, c: int, cap: int = TAIL_TERM_CAP,
                 rel_tol: float = 1e-6) -> TailMinSum:
    """Sum over q_k <= |q| < q_{k+1} of q^-2 min(||q alpha||^-2, c^2), truncated to ``cap`` terms."""
    if k < 1 or k > table.depth:
        raise RangeError(f"k={k} outside table rows 1..{table.depth}")
    qk = table.q[k]
    c = int(c)
    if not 1 <= c <= qk:
        raise DomainError(f"c={short_int(c)} outside [1, q_k={short_int(qk)}]")
    q_next = table.q_after(k)
    if q_next is None:
        q_next = qk + 1  # rational alpha: the range ends here
    partial = q_next - qk > cap
    q_hi = qk + cap if partial else q_next
    handle = RealHandle(table)
    qs = np.arange(qk, q_hi, dtype=np.int64) if q_hi < 2**62 else None
    if qs is None:
        raise PrecisionError("summation range does not fit in 64-bit integers")
    dist = _distances(handle, qs, rel_tol, floor_value=1.0 / c)
    with np.errstate(divide="ignore"):
        inv = np.where(dist > 0, 1.0 / dist**2, np.inf)
    terms = np.minimum(inv, float(c) ** 2) / qs.astype(np.float64) ** 2
    value = 2.0 * math.fsum(terms)
    return TailMinSum(value, c / qk, partial, qk, q_hi)


# ---------------------------------------------------------------------------
# table audit


@dataclass
class TableAudit:
    recurrence: bool = True
    coprime: bool = True
    determinant: bool = True
    increasing: bool = True
    p2: bool = True
    q_doubling: bool = True
    p2_checked: int = 0
    p2_undecided: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all((self.recurrence, self.coprime, self.determinant, self.increasing,
                    self.p2, self.q_doubling))


def _p2_verdict(table: ConvergentTable, k: int, m: int) -> Optional[bool]:
    q = table.q
    d = nearest_distance(table, q[k], precision_index=m, auto_extend=False)
    q1 = q[k + 1]
    # d = num/den +- err_num/err_den against 1/(2 q1) and 1/q1, cross-multiplied
    scale = d.den * d.err_den
    lo = d.num * d.err_den - d.err_num * d.den
    hi = d.num * d.err_den + d.err_num * d.den
    if 2 * q1 * lo > scale and q1 * hi < scale:
        return True
    if 2 * q1 * hi <= scale or q1 * lo >= scale:
        return False
    return None


def check_p2(table: ConvergentTable, k: int) -> Optional[bool]:
    """Exact verdict on 1/(2 q_{k+1}) < ||q_k alpha|| < 1/q_{k+1}; None if the table is too short."""
    if not 0 <= k < table.depth:
        raise RangeError(f"k={k} needs rows up to k+1 <= {table.depth}")
    verdict = None
    for m in sorted({min(k + 2, table.depth), table.depth}):
        verdict = _p2_verdict(table, k, m)
        if verdict is not None:
            break
    return verdict


def audit_table(table: ConvergentTable, p2_upto: Optional[int] = None) -> TableAudit:
    """Exact checks of the convergent identities and of
    1/(2 q_{k+1}) < ||q_k alpha|| < 1/q_{k+1} for k = 1..p2_upto."""
    rep = TableAudit()
    a, l, q = table.a, table.l, table.q
    for k in range(1, table.depth + 1):
        lp, qp = (l[k - 2], q[k - 2]) if k >= 2 else (1, 0)
        if q[k] != a[k] * q[k - 1] + qp or l[k] != a[k] * l[k - 1] + lp:
            rep.recurrence = False
            rep.failures.append(("recurrence", k))
    for k in range(table.depth + 1):
        if math.gcd(l[k], q[k]) != 1:
            rep.coprime = False
            rep.failures.append(("gcd", k))
    for k in range(table.depth):
        if l[k + 1] * q[k] - l[k] * q[k + 1] != (-1) ** k:
            rep.determinant = False
            rep.failures.append(("determinant", k))
    for k in range(1, table.depth):
        if not q[k + 1] > q[k]:
            rep.increasing = False
            rep.failures.append(("increasing", k))
    for k in range(1, table.depth - 1):
        if not q[k + 2] > 2 * q[k]:
            rep.q_doubling = False
            rep.failures.append(("q_doubling", k))
    # for rational alpha the last row has ||q alpha|| = 1/q_{k+1} exactly, so the strict bound stops earlier
    top = table.depth - 2 if table.terminated else table.depth - 1
    last = top if p2_upto is None else min(p2_upto, top)
    for k in range(1, last + 1):
        verdict = check_p2(table, k)
        if verdict is True:
            rep.p2_checked += 1
        elif verdict is False:
            rep.p2 = False
            rep.failures.append(("p2", k))
        else:
            # the deepest rows sit too close to the end of the table to decide
            rep.p2_undecided += 1
    return rep

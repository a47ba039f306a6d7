"""Fourier series for the fiber function and everything built from it.

Series are finite: a sorted array of integer modes and complex coefficients,
tagged with a decay bound |c_m| <= B |m|^-r and the mode window they were
materialised to.  Birkhoff sums are evaluated by the per-mode geometric sum

    S_{h,n}(t) = c_0 n + sum_m c_m e(mt) (1 - e(mn alpha)) / (1 - e(m alpha)),

with the fractional parts of m alpha and mn alpha taken from certified
convergents rather than from floating products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional

import mpmath
import numpy as np

from .diophantine import ConvergentTable, IrrationalSpec, RealHandle, short_int
from .errors import DomainError, NearResonanceError, PrecisionError, SpecError

DEFAULT_WINDOW = 2**16
RESONANCE_FLOOR = 1e-15
# int64 times below this use the floating n * theta path
_VECTOR_N_LIMIT = 2**40


def as_handle(alpha) -> RealHandle:
    """Coerce a RealHandle, spec string, IrrationalSpec or rational into a RealHandle."""
    if isinstance(alpha, RealHandle):
        return alpha
    if isinstance(alpha, str):
        return RealHandle.parse(alpha)
    if isinstance(alpha, IrrationalSpec):
        return RealHandle.from_spec(alpha)
    if isinstance(alpha, ConvergentTable):
        return RealHandle(alpha)
    if isinstance(alpha, (int, Fraction, float)):
        return RealHandle.from_fraction(Fraction(alpha))
    raise TypeError(f"cannot interpret {alpha!r} as a real number handle")


# ---------------------------------------------------------------------------
# fixed-point phases: t in [0,1) is held as round(t * 2^64), and m * t mod 1
# is the wrapping uint64 product


def to_fixed(t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    t = t - np.floor(t)
    return np.ldexp(t, 64).astype(np.uint64)


def frac_mul(m, t) -> np.ndarray:
    """frac(m * t) for integer m and real t, exact up to the rounding of t to 2^-64."""
    T = to_fixed(t)
    M = np.asarray(m, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        prod = np.multiply.outer(T, M)
    return np.ldexp(prod.astype(np.float64), -64)


def e(x):
    return np.exp(2j * np.pi * np.asarray(x, dtype=np.float64))


# ---------------------------------------------------------------------------
# series


@dataclass(frozen=True)
class DecayTag:
    r: float
    B: float


class FourierSeries:
    """h(t) = sum_m c_m e(mt) over a finite set of integer modes."""

    def __init__(self, coeffs=None, *, modes=None, values=None, decay: Optional[DecayTag] = None,
                 window: int = DEFAULT_WINDOW, check: bool = True, symmetry_tol: float = 1e-14):
        if coeffs is not None:
            items = sorted((int(m), complex(c)) for m, c in dict(coeffs).items())
            modes = [m for m, _ in items]
            values = [c for _, c in items]
        modes = np.asarray([] if modes is None else modes, dtype=np.int64)
        values = np.asarray([] if values is None else values, dtype=np.complex128)
        if modes.shape != values.shape:
            raise SpecError("modes and coefficients differ in length")
        order = np.argsort(modes, kind="stable")
        modes, values = modes[order], values[order]
        if modes.size and np.any(np.diff(modes) == 0):
            raise SpecError("duplicate modes")
        self.modes = modes
        self.coeffs = values
        self.decay = decay
        self.window = int(window)
        self.modes.flags.writeable = False
        self.coeffs.flags.writeable = False
        self._index = {int(m): i for i, m in enumerate(modes)}
        if check:
            self._check_real(symmetry_tol)
            self._check_decay()

    # -- validation ---------------------------------------------------------

    def _check_real(self, tol: float) -> None:
        scale = max(float(np.abs(self.coeffs).max()), 1.0) if self.coeffs.size else 1.0
        for m, c in zip(self.modes, self.coeffs):
            partner = self.coefficient(-int(m))
            if abs(partner - np.conj(c)) > tol * scale:
                raise SpecError(f"series is not real-valued: c({-m}) != conj(c({m}))")

    def _check_decay(self) -> None:
        if self.decay is None:
            return
        nz = self.modes != 0
        if not nz.any():
            return
        bound = self.decay.B * np.abs(self.modes[nz]).astype(np.float64) ** (-self.decay.r)
        bad = np.abs(self.coeffs[nz]) > bound * (1 + 1e-9) + 1e-300
        if bad.any():
            m = int(self.modes[nz][np.argmax(bad)])
            raise SpecError(f"coefficient at mode {m} violates the decay tag r={self.decay.r}, B={self.decay.B}")

    # -- access -------------------------------------------------------------

    def coefficient(self, m: int) -> complex:
        i = self._index.get(int(m))
        return complex(self.coeffs[i]) if i is not None else 0j

    @property
    def c0(self) -> float:
        return self.coefficient(0).real

    def __len__(self) -> int:
        return int(self.modes.size)

    def __repr__(self) -> str:
        tag = f", r={self.decay.r:g}" if self.decay else ""
        return f"FourierSeries({len(self)} modes{tag}, window={self.window})"

    def nonzero_modes(self) -> np.ndarray:
        return self.modes[self.modes != 0]

    def l1_norm(self, include_zero: bool = False) -> float:
        mask = slice(None) if include_zero else self.modes != 0
        return float(np.abs(self.coeffs[mask]).sum())

    def lipschitz_bound(self) -> float:
        """2 pi sum |m| |c_m|, a Lipschitz constant for h on the circle."""
        return float(2 * np.pi * (np.abs(self.modes) * np.abs(self.coeffs)).sum())

    def truncation_error(self) -> float:
        """Sup-norm bound on the tail beyond the window implied by the decay tag."""
        if self.decay is None or self.decay.r <= 1:
            return math.inf
        r, W = self.decay.r, self.window
        return 2 * self.decay.B * W ** (1 - r) / (r - 1)

    def restrict(self, keep: Callable[[int], bool], decay: Optional[DecayTag] = None) -> "FourierSeries":
        mask = np.array([bool(keep(int(m))) for m in self.modes], dtype=bool)
        return FourierSeries(modes=self.modes[mask], values=self.coeffs[mask],
                             decay=decay if decay is not None else self.decay,
                             window=self.window, check=False)

    def with_coeffs(self, values, decay: Optional[DecayTag] = None) -> "FourierSeries":
        return FourierSeries(modes=self.modes, values=values, decay=decay, window=self.window, check=False)

    # -- evaluation ---------------------------------------------------------

    def evaluate_complex(self, t, chunk: int = 1 << 22) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        out = np.zeros(t.shape, dtype=np.complex128)
        if not self.modes.size:
            return out
        flat = t.reshape(-1)
        res = out.reshape(-1)
        step = max(1, chunk // max(1, self.modes.size))
        for i in range(0, flat.size, step):
            ph = frac_mul(self.modes, flat[i:i + step])
            res[i:i + step] = e(ph) @ self.coeffs
        return out

    def __call__(self, t) -> np.ndarray:
        return self.evaluate_complex(t).real

    # -- io -----------------------------------------------------------------

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            r, B = (self.decay.r, self.decay.B) if self.decay else ("none", "none")
            fh.write(f"# decay r={r!r} B={B!r} window={self.window}\n")
            fh.write("mode,re,im\n")
            for m, c in zip(self.modes, self.coeffs):
                fh.write(f"{int(m)},{float(c.real)!r},{float(c.imag)!r}\n")

    @classmethod
    def from_csv(cls, path) -> "FourierSeries":
        decay, window = None, DEFAULT_WINDOW
        modes, values = [], []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    fields = dict(kv.split("=", 1) for kv in line[1:].split() if "=" in kv)
                    if fields.get("r", "none") != "none":
                        decay = DecayTag(float(fields["r"]), float(fields["B"]))
                    window = int(fields.get("window", window))
                    continue
                if line.startswith("mode"):
                    continue
                try:
                    m, re_, im_ = line.split(",")
                    modes.append(int(m))
                    values.append(complex(float(re_), float(im_)))
                except ValueError as exc:
                    raise SpecError(f"{path}: bad series row {line!r}") from exc
        return cls(modes=modes, values=values, decay=decay, window=window)


def constant_series(c0: float, window: int = DEFAULT_WINDOW) -> FourierSeries:
    return FourierSeries({0: c0} if c0 else {}, decay=DecayTag(2.0, 0.0), window=window)


def make_smooth_sample(kind: str = "random-phase", r: float = 2.0, modes: int = 5, seed: int = 0,
                       c0: float = 0.0, amplitude: float = 1.0, window: int = DEFAULT_WINDOW) -> FourierSeries:
    """Real trigonometric polynomial with |c_m| = amplitude |m|^-r for 1 <= |m| <= modes.

    ``random-phase`` draws a unit phase per mode from the seed; ``cosine``
    uses zero phases, so amplitude 1/2 and modes=1 give cos(2 pi t).
    """
    if r <= 1:
        raise DomainError(f"decay exponent r={r} must exceed 1")
    if modes < 1:
        raise DomainError("need at least one mode")
    if modes > window:
        raise DomainError("modes beyond the window")
    ms = np.arange(1, modes + 1)
    if kind == "random-phase":
        rng = np.random.default_rng(seed)
        phase = np.exp(2j * np.pi * rng.random(modes))
    elif kind == "cosine":
        phase = np.ones(modes, dtype=np.complex128)
    else:
        raise SpecError(f"unknown sample family {kind!r}")
    pos = amplitude * ms.astype(np.float64) ** (-r) * phase
    coeffs = {int(m): c for m, c in zip(ms, pos)}
    coeffs.update({-int(m): np.conj(c) for m, c in zip(ms, pos)})
    if c0:
        coeffs[0] = c0
    return FourierSeries(coeffs, decay=DecayTag(float(r), float(amplitude)), window=window)


def _one_minus_e(theta: Fraction) -> complex:
    """1 - e(theta) = -2i sin(pi theta) e(theta/2), accurate for small theta."""
    th = float(theta)
    return -2j * math.sin(math.pi * th) * complex(math.cos(math.pi * th), math.sin(math.pi * th))


def make_furstenberg_h(table: ConvergentTable, coeff_rule: Callable[[int], complex], window: int,
                       r: float = 2.0, tau0: Optional[float] = None) -> FourierSeries:
    """h = sum over 1 <= |m| <= window of t_m (1 - e(q_m alpha)) e(q_m x).

    Mode +q_m carries t_m (1 - e(q_m alpha)), mode -q_m carries
    t_{-m} (1 - e(-q_m alpha)).  The decay tag is fitted for exponent r.
    """
    if window < 1 or window > table.depth:
        raise DomainError(f"window {window} outside 1..{table.depth}")
    handle = RealHandle(table)
    coeffs = {}
    for m in range(1, window + 1):
        tp, tn = complex(coeff_rule(m)), complex(coeff_rule(-m))
        if tp != tn:
            raise SpecError(f"coefficient rule is not symmetric at m={m}: t_m={tp}, t_-m={tn}")
        if tau0 is not None and abs(tp) > tau0:
            raise SpecError(f"|t_{m}| = {abs(tp)} exceeds the bound {tau0}")
        q = table.q[m]
        theta, _ = handle.frac_signed(q)
        coeffs[q] = tp * _one_minus_e(theta)
        coeffs[-q] = tn * _one_minus_e(-theta)
    if not any(coeffs.values()):
        return FourierSeries({}, decay=DecayTag(r, 0.0), window=table.q[window])
    B = max(abs(c) * abs(m) ** r for m, c in coeffs.items())
    return FourierSeries(coeffs, decay=DecayTag(r, B * (1 + 1e-12)), window=table.q[window])


# ---------------------------------------------------------------------------
# Birkhoff sums


def _signed_thetas(handle: RealHandle, modes: np.ndarray, resonance_bits: int = 40):
    """Signed frac(m alpha) for each mode as floats with relative error ~2^-50.

    Returns (theta, exact_zero) where exact_zero marks modes with m alpha in Z
    (possible only for rational alpha).
    """
    theta = np.zeros(modes.size)
    zero = np.zeros(modes.size, dtype=bool)
    if not modes.size:
        return theta, zero
    small = np.ones(modes.size, dtype=bool)
    if np.abs(modes).max() < 2**31:
        approx = handle.frac_array(modes)
        approx = approx - np.round(approx)
        small = np.abs(approx) < 1e-3
        theta = approx
    for i in np.flatnonzero(small):
        m = int(modes[i])
        v, err = handle.frac_signed(m)
        if v == 0:
            if err == 0:
                zero[i] = True
                continue
            raise PrecisionError(f"cannot separate {short_int(m)} alpha from an integer", mode=m,
                                 required_index=handle.table.depth + 1)
        if err > abs(v) / 2**resonance_bits:
            raise PrecisionError(f"||{short_int(m)} alpha|| not certified to relative precision", mode=m,
                                 required_index=handle.table.depth + 1)
        theta[i] = float(v)
    return theta, zero


LINEAR_BITS = 20


def scale_exponent(values: Iterable[Fraction], linear_bits: int = LINEAR_BITS) -> int:
    """s >= 0 with max |v| about 2^-(s+2), or 0 unless every |v| is below 2^-linear_bits."""
    sizes = [abs(v) for v in values if v != 0]
    if not sizes:
        return 0
    big = max(sizes)
    lg = big.numerator.bit_length() - big.denominator.bit_length()
    return -lg - 2 if -lg - 2 > linear_bits else 0


def sin_pi_scaled(phi: Fraction, s: int) -> float:
    """sin(pi phi) * 2^s; for s > 0 the caller guarantees |phi| < 2^-20."""
    if s == 0:
        return math.sin(math.pi * float(phi))
    x = float(phi * 2**s)
    pf = math.pi * float(phi)
    return math.pi * x * (1 - pf * pf / 6)


class Cocycle:
    """Closed-form Birkhoff sums S_{h,n}(t) for one series over one rotation."""

    def __init__(self, h: FourierSeries, alpha):
        self.h = h
        self.alpha = as_handle(alpha)
        keep = (h.modes != 0) & (h.coeffs != 0)
        self.modes = h.modes[keep]
        self.coeffs = h.coeffs[keep]
        self.c0 = h.c0
        self.theta, self.resonant = _signed_thetas(self.alpha, self.modes)
        self._sin_theta = np.where(self.resonant, 1.0, np.sin(np.pi * self.theta))

    # G_m(n) = (1 - e(mn alpha)) / (1 - e(m alpha)) = e((phi - theta)/2) sin(pi phi) / sin(pi theta)

    def _factors_from_phi(self, phi: np.ndarray, n: np.ndarray) -> np.ndarray:
        G = np.exp(1j * np.pi * (phi - self.theta)) * np.sin(np.pi * phi) / self._sin_theta
        if self.resonant.any():
            G = np.where(self.resonant, n.astype(np.float64)[..., None] * np.ones_like(G.real), G)
        return G

    def factors(self, n: int) -> np.ndarray:
        """G_m(n) for a single, possibly huge, integer n (exact reduction of mn alpha)."""
        n = int(n)
        phi = np.empty(self.modes.size)
        for i, m in enumerate(self.modes):
            v, _ = self.alpha.frac_signed(int(m) * n)
            phi[i] = float(v)
        G = np.exp(1j * np.pi * (phi - self.theta)) * np.sin(np.pi * phi) / self._sin_theta
        return np.where(self.resonant, float(n), G)

    def phis(self, n: int) -> list:
        """Signed frac(m n alpha) per mode as Fractions."""
        return [self.alpha.frac_signed(int(m) * int(n))[0] for m in self.modes]

    def scaled_factors(self, n: int, s: Optional[int] = None, phis: Optional[list] = None) -> tuple:
        """(s, G_m(n) * 2^s) with s chosen so the scaled factors are O(1) when all are tiny."""
        n = int(n)
        phis = self.phis(n) if phis is None else phis
        if s is None:
            s = scale_exponent(phis)
        G = np.empty(self.modes.size, dtype=np.complex128)
        for i, phi in enumerate(phis):
            if self.resonant[i]:
                if s:
                    raise PrecisionError("resonant mode in the scaled regime", mode=int(self.modes[i]))
                G[i] = n
                continue
            th = self.theta[i]
            G[i] = np.exp(1j * np.pi * (float(phi) - th)) * sin_pi_scaled(phi, s) / self._sin_theta[i]
        return s, G

    def fluctuation_bound(self, n: int) -> mpmath.mpf:
        """max_t |S_{h,n}(t) - c_0 n| over a 2^12 grid, as an mpf (no underflow)."""
        s, G = self.scaled_factors(n)
        t = (np.arange(2**12) + 0.5) / 2**12
        if not self.modes.size:
            return mpmath.mpf(0)
        dev = np.abs((e(frac_mul(self.modes, t)) @ (self.coeffs * G)).real).max()
        return mpmath.ldexp(mpmath.mpf(float(dev)), -s)

    def factors_many(self, ns) -> np.ndarray:
        """G_m(n) for an array of times; shape (len(ns), modes).

        Uses phi = n theta mod 1 in floating point, so the absolute error in
        G grows like |n| 2^-52; fine for Birkhoff sums compared against n, not
        for isolating the tiny fluctuation of H_{q_k} (use ``factors``).
        """
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size and int(np.abs(ns).max()) >= _VECTOR_N_LIMIT:
            return np.stack([self.factors(int(n)) for n in ns])
        phi = np.multiply.outer(ns.astype(np.float64), self.theta)
        phi -= np.round(phi)
        return self._factors_from_phi(phi, ns)

    def fluctuation(self, t, n: int) -> np.ndarray:
        """S_{h,n}(t) - c_0 n for an array of t and one n."""
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        if not self.modes.size:
            return np.zeros(t.shape)
        G = self.factors(n)
        return (e(frac_mul(self.modes, t.reshape(-1))) @ (self.coeffs * G)).real.reshape(t.shape)

    def fluctuation_many(self, t, ns, chunk: int = 1 << 22) -> np.ndarray:
        """S_{h,n_i}(t_i) - c_0 n_i for paired 1-d arrays (t is broadcast against ns)."""
        ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
        t = np.broadcast_to(np.asarray(t, dtype=np.float64), ns.shape)
        out = np.zeros(ns.shape)
        if not self.modes.size:
            return out
        step = max(1, chunk // self.modes.size)
        for i in range(0, ns.size, step):
            G = self.factors_many(ns[i:i + step])
            E = e(frac_mul(self.modes, t[i:i + step]))
            out[i:i + step] = (E * G * self.coeffs).sum(axis=1).real
        return out

    def sum(self, t, n: int) -> np.ndarray:
        return self.c0 * n + self.fluctuation(t, n)

    def sum_many(self, t, ns) -> np.ndarray:
        ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
        return self.c0 * ns.astype(np.float64) + self.fluctuation_many(t, ns)


def cocycle_sum_direct(h: FourierSeries, t, n: int, alpha, chunk: int = 4096) -> np.ndarray:
    """S_{h,n}(t) by summing h(t + j alpha) over j < n."""
    handle = as_handle(alpha)
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    n = int(n)
    if n < 0:
        raise DomainError("n must be >= 0")
    total = np.zeros(t.shape)
    for j0 in range(0, n, chunk):
        js = np.arange(j0, min(j0 + chunk, n), dtype=np.int64)
        shifts = handle.frac_array(js)
        pts = (t.reshape(-1, 1) + shifts.reshape(1, -1)) % 1.0
        total += h(pts.reshape(-1)).reshape(t.size, js.size).sum(axis=1).reshape(t.shape)
    return total


def cocycle_sum_closed(h: FourierSeries, t, n: int, alpha) -> np.ndarray:
    """S_{h,n}(t) in O(#modes) operations, independent of n."""
    if int(n) < 0:
        raise DomainError("n must be >= 0")
    return Cocycle(h, alpha).sum(t, n)


def H_n_eval(h1: FourierSeries, t, n: int, alpha) -> np.ndarray:
    """H_n(t) = sum over j < n of h_1(t + j alpha); H_0 = 0."""
    return cocycle_sum_closed(h1, t, n, alpha)


def evaluate_shifted(h: FourierSeries, t, alpha, n: int = 1) -> np.ndarray:
    """h(t + n alpha) with the shift applied per mode from the certified frac(m n alpha)."""
    handle = as_handle(alpha)
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if not h.modes.size:
        return np.zeros(t.shape)
    mn = h.modes.astype(object) * int(n)
    if all(abs(v) < 2**31 for v in mn):
        shift = handle.frac_array(np.asarray(mn, dtype=np.int64))
    else:
        shift = np.array([float(handle.frac(int(v))[0]) for v in mn])
    shifted = h.with_coeffs(h.coeffs * e(shift))
    return shifted(t)


# ---------------------------------------------------------------------------
# resonant sets


def _exceeds_power(big: int, base: int, expo: Fraction) -> Optional[bool]:
    """Decide big > base^expo; None if the available lower bound cannot decide."""
    if base <= 1:
        return big > 1
    a, b = expo.numerator, expo.denominator
    if b <= 64 and (a * base.bit_length()) <= 2**26:
        return big**b > base**a
    with mpmath.workprec(256):
        lhs = mpmath.log(mpmath.mpf(big))
        rhs = mpmath.mpf(a) / b * mpmath.log(mpmath.mpf(base))
        gap = lhs - rhs
        if abs(gap) < mpmath.mpf(2) ** -200 * abs(rhs):
            raise PrecisionError("exponent comparison too close to call at 256 bits")
        return bool(gap > 0)


@dataclass(frozen=True)
class ResonantSets:
    tau: Fraction
    horizon: int
    window: int
    m_range: str
    E: tuple
    M: tuple
    M_is_finite_within_horizon: bool
    regime: str
    undecided: tuple = field(default=())
    tops: tuple = field(default=())

    def multipliers(self, k: int) -> range:
        """The multipliers m with m q_k placed in M at index k."""
        return range(1, dict(self.tops).get(k, 0) + 1)

    def contains(self, m: int) -> bool:
        return int(m) in self._Mset

    @property
    def _Mset(self) -> frozenset:
        return frozenset(self.M)


def resonant_sets(table: ConvergentTable, tau, horizon: int, window: int = DEFAULT_WINDOW,
                  m_range: str = "ak") -> ResonantSets:
    """E = {2 <= k <= horizon : q_{k+1} > q_k^(1/tau + 3)} and the mode set M it generates.

    ``m_range`` selects the multiplier range 1..a_k ("ak") or 1..a_{k+1} ("ak1").
    """
    tau = Fraction(str(tau)) if isinstance(tau, str) else Fraction(tau)
    if tau <= 0:
        raise DomainError("tau must be positive")
    if m_range not in ("ak", "ak1"):
        raise DomainError("m_range must be 'ak' or 'ak1'")
    horizon = min(int(horizon), table.depth)
    expo = 1 / tau + 3
    q, a = table.q, table.a
    E, undecided = [], []
    for k in range(2, horizon + 1):
        nxt = table.q_after(k)
        if nxt is None:
            break
        verdict = _exceeds_power(nxt, q[k], expo)
        if not verdict and k == table.depth:
            # only a lower bound on q_{k+1} is known
            undecided.append(k)
            continue
        if verdict:
            E.append(k)
    M = set()
    tops = []
    last_growth = None
    for k in E:
        if m_range == "ak":
            top = a[k]
        elif k + 1 <= table.depth:
            top = a[k + 1]
        else:
            nxt = table.q_after(k)
            top = max(1, (nxt - q[k - 1]) // q[k])
        top = min(top, window // q[k])
        tops.append((k, max(top, 0)))
        if top >= 1:
            last_growth = k
            for m in range(1, top + 1):
                M.update((m * q[k], -m * q[k]))
    finite = not E or last_growth is None or last_growth < E[-1]
    infinite_regime = bool(E) and E[-1] >= max(2, horizon // 2)
    return ResonantSets(tau, horizon, window, m_range, tuple(E), tuple(sorted(M)), finite,
                        "infinite-M" if infinite_regime else "finite-M", tuple(undecided), tuple(tops))


# ---------------------------------------------------------------------------
# coboundaries


def _inverse_factors(handle: RealHandle, modes: np.ndarray) -> np.ndarray:
    """1 / (e(m alpha) - 1) per mode, with the near-resonance guard."""
    theta, zero = _signed_thetas(handle, modes)
    bad = zero | (np.abs(theta) < RESONANCE_FLOOR)
    if bad.any():
        m = int(modes[np.argmax(bad)])
        raise NearResonanceError(f"||{short_int(m)} alpha|| below {RESONANCE_FLOOR}; route this mode through h1", mode=m)
    # e(theta) - 1 = 2i sin(pi theta) e(theta/2)
    return 1.0 / (2j * np.sin(np.pi * theta) * np.exp(1j * np.pi * theta))


def build_psi_tilde(h: FourierSeries, alpha) -> FourierSeries:
    """psi~ with psi~(t + alpha) - psi~(t) = h(t) - c_0: coefficients c_m / (e(m alpha) - 1)."""
    handle = as_handle(alpha)
    modes = np.array([m for m in h.nonzero_modes() if h.coefficient(int(m)) != 0], dtype=np.int64)
    vals = np.array([h.coefficient(int(m)) for m in modes], dtype=np.complex128)
    inv = _inverse_factors(handle, modes)
    return FourierSeries(modes=modes, values=vals * inv, window=h.window, check=False)


def build_h1_and_psi(h: FourierSeries, sets: ResonantSets, alpha) -> tuple:
    """Split h into h1 (modes in M and 0) and the coboundary part solved by psi."""
    handle = as_handle(alpha)
    Mset = sets._Mset
    h1 = h.restrict(lambda m: m == 0 or m in Mset)
    rest = h.restrict(lambda m: m != 0 and m not in Mset, decay=None)
    inv = _inverse_factors(handle, rest.modes)
    psi = FourierSeries(modes=rest.modes, values=rest.coeffs * inv, window=h.window, check=False)
    return h1, psi


def lemma44_constant(h1: FourierSeries, table: ConvergentTable, tau, ks: Iterable[int]) -> dict:
    """q_k^(1/tau + 2) * max over a 2^12 grid of |H_{q_k} - q_k c_0|, per k (mpf values)."""
    tau = Fraction(tau)
    coc = Cocycle(h1, RealHandle(table))
    expo = mpmath.mpf(tau.denominator) / tau.numerator + 2
    return {k: coc.fluctuation_bound(table.q[k]) * mpmath.power(table.q[k], expo) for k in ks}

"""Rigidity times r_n = l_n q_n for the linear skew product and their L^2 decay.

The displacement d(T^r x, x) depends on x only through x_1, so every
integral here is a one-dimensional quadrature over x_1 in [0, 1).

For Liouville-type rotation numbers the displacements are far below the
double-precision range (2^-90000 is typical).  Such rows are evaluated in
a scaled regime: every small quantity is carried relative to a power of two
2^-s, the integrand is linear in them, and the results are returned as
mpmath numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np

from .cocycle import LINEAR_BITS, Cocycle, e, frac_mul, scale_exponent
from .diophantine import ConvergentTable, check_p2, nearest_distance, short_int
from .dynamics import SkewProductSpec, power
from .errors import ConfigurationError, DomainError, PrecisionError

QUADRATURE = 2**13
PR_TERM_CAP = 10**6


@dataclass(frozen=True)
class RigidityParams:
    epsilon: Fraction = Fraction(1)

    def __post_init__(self):
        eps = Fraction(self.epsilon) if not isinstance(self.epsilon, str) else Fraction(self.epsilon)
        if eps <= 0:
            raise DomainError("epsilon must be positive")
        object.__setattr__(self, "epsilon", eps)

    @property
    def gamma(self) -> Fraction:
        return self.epsilon / 10

    @property
    def lam(self) -> Fraction:
        return self.epsilon / 100

    @property
    def delta(self) -> Fraction:
        return self.epsilon / 400


# ---------------------------------------------------------------------------
# exact comparisons with rational exponents


def _pow_less(x: Fraction, base: int, expo: Fraction) -> bool:
    """x < base^expo for rational x > 0, integer base >= 1, rational expo."""
    if x <= 0:
        return True
    a, b = expo.numerator, expo.denominator
    if b <= 1000 and abs(a) * base.bit_length() <= 2**22:
        # x^b < base^a
        lhs = x**b
        return lhs < Fraction(base) ** a
    with mpmath.workprec(256):
        return mpmath.log(mpmath.mpf(x.numerator)) - mpmath.log(mpmath.mpf(x.denominator)) < \
            mpmath.mpf(a) / b * mpmath.log(base)


def nearest_frac(x: Fraction) -> Fraction:
    """||x|| for a rational x."""
    f = x - math.floor(x)
    return min(f, 1 - f)


def dirichlet_multiplier(table: ConvergentTable, n: int, c0, gamma) -> int:
    """Smallest l >= 1 with ||c_0 l q_n|| < q_n^-gamma.

    The smallest such l is a best approximation of the second kind for
    theta = c_0 q_n, hence a convergent denominator of theta; the search
    walks those.  Dirichlet's theorem puts it at most ceil(q_n^gamma).
    """
    gamma = Fraction(gamma)
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    qn = table.q[n]
    theta = Fraction(c0) * qn
    theta -= math.floor(theta)
    if theta == 0:
        return 1
    # convergent denominators of theta
    num, den = theta.numerator, theta.denominator
    q_prev, q_cur = 0, 1
    x_num, x_den = num, den
    while True:
        if _pow_less(nearest_frac(theta * q_cur), qn, -gamma):
            return q_cur
        if x_num == 0:
            break
        a, rem = divmod(x_den, x_num)
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        x_den, x_num = x_num, rem
    raise PrecisionError("no multiplier found; theta expansion exhausted")


def k_truncation(r: int, lam) -> int:
    """K_{r,lambda}: least k with 2^(-2k) < r^(-lambda)."""
    lam = Fraction(lam)
    if r <= 1:
        return 1
    with mpmath.workprec(128):
        k = int(mpmath.floor(mpmath.mpf(lam.numerator) / lam.denominator * mpmath.log(r, 2) / 2)) + 1
    # exact confirmation: 2^(2k) > r^lam  <=>  2^(2k b) > r^a
    a, b = lam.numerator, lam.denominator
    while k > 1 and (1 << (2 * (k - 1) * b)) > r**a:
        k -= 1
    while not (1 << (2 * k * b)) > r**a:
        k += 1
    return k


# ---------------------------------------------------------------------------
# the displacement at time r


@dataclass
class _Displacement:
    """Everything needed to evaluate d(T^r x, x) over x_1, scaled by 2^-s."""

    s: int
    rotation: float          # ||r alpha|| / 2^-s
    c0_signed: float         # signed frac(c_0 r) / 2^-s
    G: np.ndarray            # G_m(r) / 2^-s
    modes: np.ndarray
    coeffs: np.ndarray
    phases: np.ndarray
    exact_rotation: Fraction
    exact_c0: Fraction

    @property
    def scale(self) -> mpmath.mpf:
        return mpmath.ldexp(mpmath.mpf(1), -self.s)

    def fiber_values(self, x: np.ndarray) -> np.ndarray:
        """S_{h,r}(x + phase_k) scaled, shape (len(x), fibers)."""
        t = (x[:, None] + self.phases[None, :]) % 1.0
        if not self.modes.size:
            fl = np.zeros(t.shape)
        else:
            E = e(frac_mul(self.modes, t.reshape(-1)))
            fl = (E @ (self.coeffs * self.G)).real.reshape(t.shape)
        return self.c0_signed + fl

    def fiber_norms(self, x: np.ndarray) -> np.ndarray:
        v = self.fiber_values(x)
        if self.s == 0:
            f = v - np.floor(v)
            return np.minimum(f, 1 - f)
        return np.abs(v)


def displacement(spec: SkewProductSpec, r: int) -> _Displacement:
    r = int(r)
    table = spec.alpha.table
    coc: Cocycle = spec.cocycle
    ra = nearest_distance(table, r)
    if ra.error > ra.exact / 2**40 and ra.exact > 0:
        raise PrecisionError(f"||{short_int(r)} alpha|| not certified", required_index=table.depth + 1)
    c0 = Fraction(spec.h.c0)
    cr = c0 * r
    cr -= math.floor(cr)
    if cr >= Fraction(1, 2):
        cr -= 1
    phis = coc.phis(r)
    s = scale_exponent(phis + [ra.exact, cr])
    s, G = coc.scaled_factors(r, s=s, phis=phis)
    scale = Fraction(2**s)
    return _Displacement(s, float(ra.exact * scale), float(cr * scale), G, coc.modes, coc.coeffs,
                         spec.phases, ra.exact, cr)


@dataclass
class IntegralResult:
    value: mpmath.mpf
    bound: mpmath.mpf
    terms: dict
    richardson_rel: float
    converged: bool
    scale_bits: int

    @property
    def dominated(self) -> bool:
        return self.value <= self.bound * (1 + 1e-4)


def _midpoint(fn, n: int) -> float:
    x = (np.arange(n) + 0.5) / n
    return math.fsum(fn(x)) / n


def rigidity_integral(spec: SkewProductSpec, r: int, quadrature: int = QUADRATURE,
                      lam=Fraction(1, 100), check_truncation: bool = True) -> IntegralResult:
    """Integral over x_1 of d(T^r x, x)^2, with the four-term Fourier bound.

    The bound is ||r alpha||^2 + ||c_0 r||^2 + sum_q |c_q|^2 |G_q(r)|^2, split
    into modes |q| >= q_n and 0 < |q| < q_n by the caller's ``split`` (the
    table row of r is not known here, so the split uses |q| >= r).
    """
    if spec.variant not in ("T", "S", "rot"):
        raise DomainError("rigidity integrals are defined for the linear-phase variants")
    if quadrature < 2**10:
        raise DomainError("quadrature needs at least 2^10 points")
    if check_truncation:
        need = k_truncation(r, lam)
        if need > spec.truncation:
            raise ConfigurationError(
                f"K_(r,lambda) = {need} exceeds the truncation K = {spec.truncation}; raise K")
    disp = displacement(spec, r)
    return _integrate(disp, quadrature)


def _integrate(disp: _Displacement, quadrature: int, split: Optional[int] = None) -> IntegralResult:
    K = disp.phases.size + 1
    w = 0.5 ** np.arange(2, K + 1)

    def integrand(x):
        d = 0.5 * disp.rotation + disp.fiber_norms(x) @ w
        return d * d

    coarse = _midpoint(integrand, quadrature)
    fine = _midpoint(integrand, 2 * quadrature)
    rel = abs(fine - coarse) / fine if fine else 0.0
    sc2 = disp.scale**2
    amp = np.abs(disp.coeffs) ** 2 * np.abs(disp.G) ** 2
    split = split if split is not None else 0
    high = float(amp[np.abs(disp.modes) >= split].sum()) if split else float(amp.sum())
    low = float(amp[np.abs(disp.modes) < split].sum()) if split else 0.0
    terms = {
        "rotation": mpmath.mpf(disp.rotation) ** 2 * sc2,
        "c0": mpmath.mpf(disp.c0_signed) ** 2 * sc2,
        "high": mpmath.mpf(high) * sc2,
        "low": mpmath.mpf(low) * sc2,
    }
    bound = sum(terms.values())
    return IntegralResult(mpmath.mpf(fine) * sc2, bound, terms, rel, rel <= 1e-4, disp.s)


# ---------------------------------------------------------------------------
# the sequence


@dataclass
class RigidityRow:
    n: int
    q_n: int
    l_n: int
    r_n: int
    integral: mpmath.mpf
    bound: mpmath.mpf
    r_pow_neg_lambda: mpmath.mpf
    terms: dict
    richardson_rel: float
    dominated: bool
    running_C: float
    checks: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if self.dominated and all(self.checks.values()) else "fail"


@dataclass
class RigiditySequence:
    rows: list
    case: str
    indices: tuple
    status: str

    def slope(self, last: int = 5) -> float:
        """Least-squares slope of log(integral) against log(r_n) over the last rows."""
        rows = self.rows[-last:]
        if len(rows) < 2:
            return math.nan
        xs = [float(mpmath.log(r.r_n)) for r in rows]
        ys = [float(mpmath.log(r.integral)) for r in rows]
        return float(np.polyfit(xs, ys, 1)[0])

    def monotone(self, last: int = 5) -> bool:
        vals = [r.integral for r in self.rows[-last:]]
        return all(b < a for a, b in zip(vals, vals[1:]))


def detect_case(table: ConvergentTable, upto: Optional[int] = None) -> tuple:
    """('case-2', indices) when q_{n+1} >= q_n^2 recurs late in the table, else ('case-1', ())."""
    upto = table.depth - 1 if upto is None else min(upto, table.depth - 1)
    B = [n for n in range(1, upto + 1) if table.q[n] >= 2 and table.q[n + 1] >= table.q[n] ** 2]
    late = [n for n in B if n >= max(1, upto // 2)]
    return ("case-2", tuple(B)) if late else ("case-1", ())


def row_checks(table: ConvergentTable, n: int, l: int, c0, params: RigidityParams) -> dict:
    """Certified versions of 1 <= l <= q^gamma, ||c0 l q|| < q^-gamma, ||r alpha|| <= l ||q alpha|| < q^gamma / q_{n+1}."""
    q = table.q[n]
    g = params.gamma
    a, b = g.numerator, g.denominator
    out = {"l_range": l >= 1 and l**b <= q**a}
    out["dirichlet"] = _pow_less(nearest_frac(Fraction(c0) * l * q), q, -g)
    ra = nearest_distance(table, l * q)
    qa = nearest_distance(table, q)
    # ||l x|| <= l ||x|| holds exactly; confirm it on the certified intervals
    out["rotation_chain"] = ra.interval()[0] <= l * qa.interval()[1]
    # l ||q alpha|| < l / q_{n+1} <= q^gamma / q_{n+1}: the upper half of P2 plus l <= q^gamma
    out["p2_chain"] = check_p2(table, n) is True and l**b <= q**a
    return out


def build_rigidity_sequence(spec: SkewProductSpec, params: RigidityParams = RigidityParams(),
                            depth: int = 12, quadrature: int = QUADRATURE,
                            min_q: int = 2) -> RigiditySequence:
    """Rows for the first ``depth`` usable indices n (the Case-2 subsequence when it applies)."""
    if spec.variant not in ("T", "S"):
        raise DomainError("rigidity sequences are built for the linear skew product")
    table = spec.alpha.table
    if table.terminated:
        raise DomainError("alpha is rational; there is no rigidity sequence")
    case, B = detect_case(table)
    candidates = B if case == "case-2" else tuple(n for n in range(1, table.depth) if table.q[n] >= min_q)
    c0 = Fraction(spec.h.c0)
    rows, status, C = [], "ok", 0.0
    for n in candidates:
        if len(rows) >= depth:
            break
        q = table.q[n]
        l = dirichlet_multiplier(table, n, c0, params.gamma)
        r = l * q
        if k_truncation(r, params.lam) > spec.truncation:
            status = "truncation-limited"
            break
        disp = displacement(spec, r)
        res = _integrate(disp, quadrature, split=q)
        rpow = mpmath.power(mpmath.mpf(r), -mpmath.mpf(params.lam.numerator) / params.lam.denominator)
        C = max(C, float(res.value / rpow))
        rows.append(RigidityRow(n, q, l, r, res.value, res.bound, rpow, res.terms, res.richardson_rel,
                                res.dominated, C, row_checks(table, n, l, c0, params)))
    else:
        if len(rows) < depth:
            status = "table-limited"
    return RigiditySequence(rows, case, tuple(B), status)


# ---------------------------------------------------------------------------
# PR-rigidity sums


def l2_shift_norm(spec: SkewProductSpec, b: Sequence[int], m: int, quadrature: int = 2**12) -> float:
    """||f o T^m - f||^2 in L^2(Lebesgue on x_1) for f = e(<b, x>), by quadrature (double precision)."""
    x1 = (np.arange(quadrature) + 0.5) / quadrature
    pts = np.zeros((quadrature, spec.truncation))
    pts[:, 0] = x1
    y = power(spec, pts, m)
    b = np.zeros(spec.truncation) if len(b) == 0 else np.pad(np.asarray(b, float), (0, spec.truncation - len(b)))
    phase = (y - pts) @ b
    return float(np.mean(np.abs(np.exp(2j * np.pi * phase) - 1) ** 2))


@dataclass
class PRSum:
    value: mpmath.mpf
    J: int
    terms: int
    truncated: bool
    method: str


def pr_rigidity_sum(spec: SkewProductSpec, b: Sequence[int], row: RigidityRow,
                    params: RigidityParams = RigidityParams(), quadrature: int = 2**12,
                    cap: int = PR_TERM_CAP) -> PRSum:
    """Sum over 0 < |j| <= r^delta of ||f o T^(j r) - f||^2 for f = e(<b, x>).

    Lebesgue measure on x_1 with frozen fibers.  When all displacements at
    j r stay below 2^-20 the phase is linear in j and the sum has the closed
    form 8 pi^2 (sum j^2) integral(Phi_1^2); otherwise each j (and its inverse
    -j) is evaluated separately.
    """
    b = [int(v) for v in b]
    if not any(b):
        return PRSum(mpmath.mpf(0), 0, 0, False, "trivial")
    r = row.r_n
    d = params.delta
    with mpmath.workprec(128):
        J = int(mpmath.floor(mpmath.power(mpmath.mpf(r), mpmath.mpf(d.numerator) / d.denominator)))
    # exact floor correction: J^den <= r^num
    while J > 0 and J**d.denominator > r**d.numerator:
        J -= 1
    while (J + 1) ** d.denominator <= r**d.numerator:
        J += 1
    truncated = J > cap
    J_used = min(J, cap)
    if J_used == 0:
        return PRSum(mpmath.mpf(0), J, 0, truncated, "empty")
    disp = displacement(spec, r)
    linear = disp.s > LINEAR_BITS and J_used < 2 ** (disp.s - LINEAR_BITS)
    if linear:
        x = (np.arange(quadrature) + 0.5) / quadrature
        rot, _ = spec.alpha.frac_signed(r)
        phi = np.full(x.size, b[0] * float(rot * 2**disp.s))
        fib_b = np.asarray(b[1:spec.truncation], dtype=np.float64)
        if fib_b.size:
            phi += disp.fiber_values(x)[:, : fib_b.size] @ fib_b
        mean_sq = mpmath.mpf(math.fsum(phi * phi) / x.size) * disp.scale**2
        sj2 = mpmath.mpf(J_used) * (J_used + 1) * (2 * J_used + 1) / 6
        return PRSum(8 * mpmath.pi**2 * sj2 * mean_sq, J, 2 * J_used, truncated, "linear")
    if J_used > 4096:
        raise PrecisionError(f"{J_used} nonlinear PR terms requested; reduce epsilon")
    total = 0.0
    for j in range(1, J_used + 1):
        total += l2_shift_norm(spec, b, j * r, quadrature)
        total += l2_shift_norm(spec, b, -j * r, quadrature)
    return PRSum(mpmath.mpf(total), J, 2 * J_used, truncated, "direct")


"""Sieved Möbius table, the MUTBL on-disk format and weighted exponential sums."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from .errors import DomainError, RangeError, ResourceError, SpecError

MAGIC = b"MUTBL\x00\x00\x01"
DEFAULT_BUDGET = 10**8
SEGMENT = 1 << 20


def small_primes(limit: int) -> np.ndarray:
    """Primes <= limit by a plain Eratosthenes sieve."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_p[p]:
            is_p[p * p::p] = False
    return np.flatnonzero(is_p).astype(np.int64)


def _sieve_segment(lo: int, hi: int, primes: np.ndarray) -> np.ndarray:
    """mu(n) for lo <= n < hi; ``primes`` must contain every prime <= sqrt(hi - 1)."""
    size = hi - lo
    mu = np.ones(size, dtype=np.int8)
    rest = np.arange(lo, hi, dtype=np.int64)
    for p in primes:
        p = int(p)
        start = (-lo) % p
        mu[start::p] *= -1
        rest[start::p] //= p
        pp = p * p
        mu[(-lo) % pp::pp] = 0
    # a cofactor > 1 left after dividing out each small prime once is a single large prime
    mu[rest > 1] *= -1
    return mu


@dataclass(frozen=True, eq=False)
class MobiusTable:
    """mu(n) for 1 <= n <= limit; ``values[n]`` is mu(n) and ``values[0]`` is unused."""

    limit: int
    values: np.ndarray

    def __getitem__(self, n):
        if isinstance(n, (int, np.integer)):
            if not 1 <= n <= self.limit:
                raise RangeError(f"n={n} outside 1..{self.limit}")
        return self.values[n]

    def __eq__(self, other):
        return (isinstance(other, MobiusTable) and self.limit == other.limit
                and np.array_equal(self.values, other.values))

    def mertens(self, n: Optional[int] = None) -> int:
        n = self.limit if n is None else n
        if n > self.limit:
            raise RangeError(f"n={n} beyond table limit {self.limit}")
        return int(self.values[1:n + 1].sum(dtype=np.int64))

    def save(self, path) -> None:
        write_mutbl(self, path)

    @classmethod
    def load(cls, path) -> "MobiusTable":
        return read_mutbl(path)


def sieve(N: int, budget: int = DEFAULT_BUDGET, segment: int = SEGMENT) -> MobiusTable:
    """Möbius values up to N by a segmented sieve over primes <= sqrt(N)."""
    N = int(N)
    if N < 1:
        raise DomainError("sieve limit must be >= 1")
    if N > budget:
        raise ResourceError(
            f"N={N} exceeds the memory budget of {budget} entries; "
            "raise the budget or sieve in segments with sieve_segments()")
    primes = small_primes(math.isqrt(N))
    values = np.zeros(N + 1, dtype=np.int8)
    for lo in range(1, N + 1, segment):
        hi = min(lo + segment, N + 1)
        values[lo:hi] = _sieve_segment(lo, hi, primes)
    values.flags.writeable = False
    return MobiusTable(N, values)


def sieve_segments(N: int, segment: int = SEGMENT):
    """Yield (lo, mu[lo:hi]) blocks covering 1..N without holding the whole table."""
    primes = small_primes(math.isqrt(N))
    for lo in range(1, N + 1, segment):
        hi = min(lo + segment, N + 1)
        yield lo, _sieve_segment(lo, hi, primes)


# ---------------------------------------------------------------------------
# MUTBL: magic, u64 LE limit, 2-bit codes (00 = 0, 01 = +1, 11 = -1), four per byte from the low bits


def pack_codes(mu: np.ndarray) -> bytes:
    codes = (mu.astype(np.int8) & 3).astype(np.uint8)
    pad = (-codes.size) % 4
    if pad:
        codes = np.concatenate([codes, np.zeros(pad, dtype=np.uint8)])
    c = codes.reshape(-1, 4)
    return (c[:, 0] | (c[:, 1] << 2) | (c[:, 2] << 4) | (c[:, 3] << 6)).astype(np.uint8).tobytes()


def unpack_codes(data: bytes, count: int) -> np.ndarray:
    raw = np.frombuffer(data, dtype=np.uint8)
    if raw.size * 4 < count:
        raise SpecError(f"MUTBL payload holds {raw.size * 4} codes, expected {count}")
    codes = np.stack([(raw >> s) & 3 for s in (0, 2, 4, 6)], axis=1).reshape(-1)[:count]
    if (codes == 2).any():
        bad = int(np.flatnonzero(codes == 2)[0]) + 1
        raise SpecError(f"invalid MUTBL code 10 at n={bad}")
    out = codes.astype(np.int8)
    out[codes == 3] = -1
    return out


def write_mutbl(table: MobiusTable, path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", table.limit))
        fh.write(pack_codes(table.values[1:]))


def read_mutbl(path) -> MobiusTable:
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise SpecError(f"{path}: not a MUTBL file")
    (limit,) = struct.unpack("<Q", data[8:16])
    values = np.zeros(limit + 1, dtype=np.int8)
    values[1:] = unpack_codes(data[16:], limit)
    values.flags.writeable = False
    return MobiusTable(limit, values)


# ---------------------------------------------------------------------------
# weighted sums


@dataclass(frozen=True)
class WeightedSum:
    value: complex
    nonzero: int


Phases = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def weighted_exp_sum(table: MobiusTable, phases: Phases, N: int,
                     residue: Optional[tuple] = None) -> WeightedSum:
    """Sum of mu(n) e(phase(n)) over 1 <= n <= N, optionally restricted to n = a mod q.

    ``phases`` is either an array indexed by n (entry 0 ignored) or a
    vectorised callable taking the array of summed n.
    """
    N = int(N)
    if N > table.limit:
        raise RangeError(f"N={N} beyond table limit {table.limit}")
    if N < 1:
        return WeightedSum(0j, 0)
    if residue is None:
        ns = np.arange(1, N + 1, dtype=np.int64)
    else:
        a, q = int(residue[0]), int(residue[1])
        if q < 1:
            raise DomainError("residue modulus must be >= 1")
        first = a % q or q
        ns = np.arange(first, N + 1, q, dtype=np.int64)
    mu = table.values[ns]
    keep = mu != 0
    ns, mu = ns[keep], mu[keep].astype(np.float64)
    if callable(phases):
        ph = np.asarray(phases(ns), dtype=np.float64)
    else:
        ph = np.asarray(phases, dtype=np.float64)
        ph = ph[ns] if ph.ndim else np.full(ns.size, float(ph))
    ph = ph - np.floor(ph)
    two_pi = 2 * np.pi
    re = math.fsum(mu * np.cos(two_pi * ph))
    im = math.fsum(mu * np.sin(two_pi * ph))
    return WeightedSum(complex(re, im), int(ns.size))

import numpy as np
import pytest
from hypothesis import given, strategies as st

from skewlab.errors import RangeError, ResourceError, SpecError
from skewlab.mobius import (MAGIC, pack_codes, read_mutbl, sieve, sieve_segments, unpack_codes,
                            weighted_exp_sum, write_mutbl)


def trial_mu(n: int) -> int:
    out, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            out = -out
        p += 1
    return -out if n > 1 else out


def test_agrees_with_trial_division(small_mu):
    ref = np.array([trial_mu(n) for n in range(1, 20001)])
    assert np.array_equal(small_mu.values[1:20001], ref)


@given(n=st.integers(min_value=1, max_value=10**5))
def test_agrees_with_sympy(small_mu, n):
    numbers = pytest.importorskip("sympy.functions.combinatorial.numbers")
    assert small_mu[n] == int(numbers.mobius(n))


def test_divisor_sum_identity(small_mu):
    mu = small_mu.values.astype(np.int64)
    acc = np.zeros(10**4 + 1, dtype=np.int64)
    for d in range(1, 10**4 + 1):
        acc[d::d] += mu[d]
    assert acc[1] == 1 and not acc[2:].any()


@pytest.mark.parametrize("N,M", [(10, -1), (100, 1), (1000, 2), (10**4, -23), (10**5, -48), (10**6, 212)])
def test_mertens_values(N, M):
    assert sieve(N).mertens() == M


def test_segments_match_full_table():
    full = sieve(300000)
    parts = np.concatenate([blk for _, blk in sieve_segments(300000, segment=65536)])
    assert np.array_equal(parts, full.values[1:])


def test_mutbl_roundtrip(tmp_path):
    t = sieve(12345)
    p = tmp_path / "mu.bin"
    write_mutbl(t, p)
    data = p.read_bytes()
    assert data[:8] == MAGIC == b"MUTBL\x00\x00\x01"
    assert int.from_bytes(data[8:16], "little") == 12345
    assert len(data) == 16 + (12345 + 3) // 4
    assert read_mutbl(p) == t


def test_code_layout():
    # 00 = 0, 01 = +1, 11 = -1, four codes per byte from the low bits
    assert pack_codes(np.array([1, -1, 0, 1], dtype=np.int8)) == bytes([0b01_00_11_01])
    assert list(unpack_codes(bytes([0b01_00_11_01]), 4)) == [1, -1, 0, 1]


def test_corrupt_files(tmp_path):
    with pytest.raises(SpecError):
        unpack_codes(bytes([0b10]), 1)
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"NOTMUTBL" + (4).to_bytes(8, "little") + b"\x00")
    with pytest.raises(SpecError):
        read_mutbl(bad)


def test_budget_and_range(small_mu):
    with pytest.raises(ResourceError):
        sieve(1000, budget=100)
    with pytest.raises(RangeError):
        small_mu[10**5 + 1]
    with pytest.raises(RangeError):
        weighted_exp_sum(small_mu, 0.0, 10**5 + 1)


def test_zero_phase_gives_mertens(small_mu):
    s = weighted_exp_sum(small_mu, 0.0, 10**5)
    assert s.value == pytest.approx(-48)


@given(q=st.integers(min_value=1, max_value=12), theta=st.floats(min_value=0, max_value=1))
def test_residue_classes_partition(small_mu, q, theta):
    f = lambda ns: theta * ns
    whole = weighted_exp_sum(small_mu, f, 5000).value
    parts = sum(weighted_exp_sum(small_mu, f, 5000, residue=(a, q)).value for a in range(q))
    assert abs(whole - parts) < 1e-9

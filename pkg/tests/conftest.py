import mpmath
import pytest
from hypothesis import settings

settings.register_profile("lab", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("lab")


def mp_value(spec: str, dps: int = 400):
    """High-precision value of a surd or rational spec, computed independently of the package."""
    head, _, rest = spec.partition(":")
    with mpmath.workdps(dps):
        if head == "surd":
            p, q, d = (int(v) for v in rest.split(","))
            x = (p + mpmath.sqrt(d)) / q
        elif head == "rational":
            num, _, den = rest.partition("/")
            x = mpmath.mpf(int(num)) / int(den or 1)
        else:
            raise ValueError(spec)
        return x - mpmath.floor(x)


def mp_quotients(x, count: int, dps: int = 400) -> list:
    """Partial quotients a_1.. of x in (0, 1) by repeated inversion at high precision."""
    out = []
    with mpmath.workdps(dps):
        for _ in range(count):
            if x == 0:
                break
            y = 1 / x
            a = int(mpmath.floor(y))
            out.append(a)
            x = y - a
    return out


def mp_dist(x, n: int, dps: int = 400) -> float:
    with mpmath.workdps(dps):
        v = n * x
        f = v - mpmath.floor(v)
        return float(min(f, 1 - f))


@pytest.fixture(scope="session")
def small_mu():
    from skewlab.mobius import sieve
    return sieve(10**5)

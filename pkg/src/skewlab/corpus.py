"""Named experiment inputs: (alpha, beta, h) triples tagged with the regime they exercise."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from .cocycle import FourierSeries, build_h1_and_psi, make_furstenberg_h, make_smooth_sample, resonant_sets
from .diophantine import RealHandle
from .dynamics import SkewProductSpec
from .errors import SpecError

GOLDEN = "surd:-1,2,5"
SILVER = "surd:-1,1,2"


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    alpha: str
    beta: str
    h: dict
    variant: str
    branch: str
    depth: int = 48
    tau: float = 1.0
    notes: str = ""
    extra: dict = field(default_factory=dict)

    def alpha_handle(self) -> RealHandle:
        return _handle(self.alpha, self.depth)

    def beta_handle(self) -> RealHandle:
        return _handle(self.beta, 48)

    def series(self) -> FourierSeries:
        return _series(self)

    def spec(self, variant: Optional[str] = None, truncation: int = 40) -> SkewProductSpec:
        return SkewProductSpec(variant or self.variant, self.alpha_handle(), self.series(),
                               self.beta_handle(), truncation)

    def split(self, m_range: str = "ak"):
        """(resonant sets, h1, psi) for this entry."""
        a = self.alpha_handle()
        h = self.series()
        sets = resonant_sets(a.table, self.tau, a.table.depth, h.window, m_range)
        h1, psi = build_h1_and_psi(h, sets, a)
        return sets, h1, psi


@lru_cache(maxsize=None)
def _handle(text: str, depth: int) -> RealHandle:
    return RealHandle.parse(text, depth=depth)


def _series(entry: CorpusEntry) -> FourierSeries:
    kw = dict(entry.h)
    kind = kw.pop("kind")
    if kind == "furstenberg":
        table = entry.alpha_handle().table
        t = kw.pop("t", 0.5)
        return make_furstenberg_h(table, lambda m: t, window=min(table.depth, kw.pop("window", 4)), **kw)
    return make_smooth_sample(kind, **kw)


SMOOTH = {"kind": "random-phase", "r": 1.5, "modes": 5, "seed": 3}
STEEP = {"kind": "random-phase", "r": 10.0, "modes": 5, "seed": 1, "amplitude": 0.5}

ENTRIES = {
    e.name: e for e in [
        CorpusEntry("golden-smooth", GOLDEN, SILVER, SMOOTH, "T", "finite-M / Case 1",
                    notes="bounded quotients: E empty, h is a coboundary up to its mean"),
        CorpusEntry("silver-smooth", SILVER, GOLDEN, SMOOTH, "T", "finite-M / Case 1"),
        CorpusEntry("liouville-smooth", "rule:liouville:5", GOLDEN, STEEP, "T", "infinite-M / Case 2",
                    depth=9, notes="a_{k+1} = ceil(q_k^5): every k >= 2 is resonant"),
        CorpusEntry("furstenberg", "rule:furstenberg", GOLDEN, {"kind": "furstenberg", "t": 0.5, "window": 4},
                    "Q", "infinite-M", notes="depth-limited by the bit cap after three rows"),
        CorpusEntry("rational", "rational:2/5", GOLDEN, SMOOTH, "T", "rational"),
    ]
}

# extra irrationals for table-level checks
CF_ALPHAS = (GOLDEN, SILVER, "surd:0,1,3", "surd:1,2,7", "surd:0,1,11",
             "quotients:" + ",".join(str(k) for k in range(1, 41)))


def get(name: str) -> CorpusEntry:
    try:
        return ENTRIES[name]
    except KeyError:
        raise SpecError(f"unknown corpus entry {name!r}; known: {', '.join(ENTRIES)}") from None

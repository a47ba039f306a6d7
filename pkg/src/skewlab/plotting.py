"""Figures drawn next to CSV outputs.  Uses the Agg backend, so no display is needed."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def figure_path(out) -> Path:
    return Path(out).with_suffix(".png")


def _log10(v) -> float:
    """log10 of a float, mpf or numeric string, without overflowing on mpf values."""
    try:
        import mpmath
        x = mpmath.mpf(v)
        return float(mpmath.log10(x)) if x > 0 else math.nan
    except (TypeError, ValueError):
        return math.nan


def _save(fig, out) -> Path:
    path = figure_path(out)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_cf(rows: list, out) -> Path:
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ks = [r["k"] for r in rows]
    a1.plot(ks, [_log10(r["q_k"]) for r in rows], "o-")
    a1.set_xlabel("k")
    a1.set_ylabel("log10 q_k")
    pts = [(r["k"], _log10(r["dist"])) for r in rows if r["dist"] not in ("", "0", 0)]
    if pts:
        a2.plot(*zip(*pts), "s-", color="C1")
    a2.set_xlabel("k")
    a2.set_ylabel("log10 ||q_k alpha||")
    return _save(fig, out)


def plot_orbit(rows: list, out) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.scatter([r["x_1"] for r in rows], [r["x_2"] for r in rows], s=4)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("x_1")
    ax.set_ylabel("x_2")
    return _save(fig, out)


def plot_rigidity(rows: list, out) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    x = [_log10(r["r_n"]) for r in rows]
    ax.plot(x, [_log10(r["integral"]) for r in rows], "o-", label="integral")
    ax.plot(x, [_log10(r["bound_i2"]) for r in rows], "x--", label="four-term bound")
    ax.plot(x, [_log10(r["r_pow_neg_lambda"]) for r in rows], ":", label="r^-lambda")
    ax.set_xlabel("log10 r_n")
    ax.set_ylabel("log10 value")
    ax.legend()
    return _save(fig, out)


def plot_complexity(rows: list, out) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    x = [_log10(r["q_t"]) for r in rows]
    ax.plot(x, [_log10(r["grid_size"]) - _log10(r["n_t"]) * r["tau"] for r in rows], "o-",
            label="grid / n_t^tau")
    emp = [(xi, _log10(r["ratio"])) for xi, r in zip(x, rows) if r["ratio"] != ""]
    if emp:
        ax.plot(*zip(*emp), "s", label="empirical / n_t^tau")
    ax.set_xlabel("log10 q_t")
    ax.set_ylabel("log10 ratio")
    ax.legend()
    return _save(fig, out)


def plot_trace(rows: list, out) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    x = [_log10(r["N"]) for r in rows]
    ax.plot(x, [_log10(r["modulus"]) for r in rows], "o-", label="|average|")
    ax.plot(x, [_log10(r["modulus_over_N_log2N"]) for r in rows], "x--", label="|sum| / (N / log^2 N)")
    ax.set_xlabel("log10 N")
    ax.legend()
    return _save(fig, out)


def plot_corpus(rows: list, out) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3))
    ok = [1 if r["verdict"] == "pass" else 0 for r in rows]
    ax.bar([str(r["criterion"]) for r in rows], ok, color=["C2" if v else "C3" for v in ok])
    ax.set_yticks([0, 1], ["fail", "pass"])
    ax.set_xlabel("criterion")
    return _save(fig, out)


PLOTTERS = {
    "cf": plot_cf,
    "orbit": plot_orbit,
    "rigidity": plot_rigidity,
    "complexity": plot_complexity,
    "disjoint": plot_trace,
    "corpus": plot_corpus,
}

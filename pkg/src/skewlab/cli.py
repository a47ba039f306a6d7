"""The ``lab`` command: one experiment per invocation, CSV out, a JSON-lines manifest beside it.

Every subcommand accepts ``--config FILE`` (flat ``key=value`` lines, ``#``
comments).  Values given as flags win over the file, which wins over the
built-in defaults.  A ``command=<name>`` line in the file selects the
subcommand when none is given on the command line.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Optional

import mpmath
import numpy as np

from . import __version__, corpus
from .errors import (BranchError, ConfigurationError, LabError, NearResonanceError, PrecisionError,
                     SpecError, VerificationFailure)

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_USAGE = 0, 2, 3, 64

# options that never change results; kept out of the config hash
_UNHASHED = {"config", "out", "no_plot", "threads", "func", "command"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


class Run:
    """What a command hands back: CSV rows plus verdicts for the manifest."""

    def __init__(self, columns: list, rows: list, verdicts: Optional[dict] = None,
                 failure: Optional[VerificationFailure] = None, plot_rows: Optional[list] = None):
        self.columns = columns
        self.rows = rows
        self.verdicts = verdicts or {}
        self.failure = failure
        self.plot_rows = plot_rows if plot_rows is not None else rows


# ---------------------------------------------------------------------------
# value formatting and parsing


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        v = int(v)
        if v.bit_length() < 13000:
            return str(v)
        from .complexity import big_str
        return big_str(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, Fraction):
        v = mpmath.mpf(v.numerator) / v.denominator
    if isinstance(v, mpmath.mpf):
        if not v or 1e-300 < abs(v) < 1e300:
            return repr(float(v))
        return mpmath.nstr(v, 17)
    return str(v)


def decimal(x: Fraction, rounding: str = "nearest", digits: int = 17) -> str:
    """Exact 17-significant-digit scientific form of a nonnegative rational, rounded down, up or to nearest."""
    x = Fraction(x)
    if x < 0:
        raise ValueError("decimal() takes nonnegative values")
    if x == 0:
        return "0.0"
    e = int(mpmath.floor(mpmath.log10(x.numerator) - mpmath.log10(x.denominator)))
    while x < Fraction(10) ** e:
        e -= 1
    while x >= Fraction(10) ** (e + 1):
        e += 1
    scaled = x * Fraction(10) ** (digits - 1 - e)
    if rounding == "down":
        m = scaled.numerator // scaled.denominator
    elif rounding == "up":
        m = -((-scaled.numerator) // scaled.denominator)
    else:
        m = round(scaled)
    if m >= 10**digits:
        m //= 10
        e += 1
    d = str(m)
    return f"{d[0]}.{d[1:]}e{e:+d}"


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise ConfigurationError(f"not a boolean: {text!r}")


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def parse_checkpoints(text: str) -> list:
    """``1e3..1e7`` (decades) or a comma list such as ``100,1000,5000``."""
    def num(s):
        return int(float(s)) if "e" in s.lower() else int(s)

    try:
        if ".." in text:
            lo, hi = text.split("..")
            from .disjointness import decades
            return decades(num(lo), num(hi))
        return sorted({num(s) for s in text.split(",") if s.strip()})
    except ValueError as exc:
        raise SpecError(f"bad checkpoint list {text!r}") from exc


def resolve_alpha(text: str, depth: int):
    from .diophantine import RealHandle
    return RealHandle.parse(text, depth=depth)


def resolve_h(text: str, alpha=None):
    """A series file, ``corpus:<entry>``, ``sample:<kind>,r=..,modes=..,seed=..`` or ``furstenberg:t=..,window=..``."""
    from .cocycle import FourierSeries, make_furstenberg_h, make_smooth_sample
    if text.startswith("corpus:"):
        return corpus.get(text[7:]).series()
    if text.startswith("sample:") or text.startswith("furstenberg:"):
        head, _, rest = text.partition(":")
        parts = [p for p in rest.split(",") if p]
        kw = {}
        kind = None
        for p in parts:
            if "=" in p:
                k, v = p.split("=", 1)
                kw[k.strip()] = v.strip()
            else:
                kind = p.strip()
        try:
            if head == "furstenberg":
                if alpha is None:
                    raise SpecError("furstenberg h needs alpha")
                t = float(kw.pop("t", 0.5))
                window = min(alpha.table.depth, int(kw.pop("window", 4)))
                return make_furstenberg_h(alpha.table, lambda m: t, window=window,
                                          **{k: float(v) for k, v in kw.items()})
            conv = {"r": float, "modes": int, "seed": int, "c0": float, "amplitude": float, "window": int}
            args = {k: conv[k](v) for k, v in kw.items()}
        except KeyError as exc:
            raise SpecError(f"unknown h parameter {exc.args[0]!r}") from None
        except ValueError as exc:
            raise SpecError(f"bad h spec {text!r}: {exc}") from None
        return make_smooth_sample(kind or "random-phase", **args)
    if not os.path.exists(text):
        raise ConfigurationError(f"series file {text!r} not found")
    return FourierSeries.from_csv(text)


def resolve_point(text: str, K: int) -> np.ndarray:
    """Initial point from a CSV file (first data line) or an inline comma list; padded with zeros to K."""
    src = text
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
        lines = [ln for ln in lines if not ln[0].isalpha()]
        if not lines:
            raise SpecError(f"{text}: no coordinates")
        src = lines[0]
    try:
        vals = [float(v) for v in src.split(",") if v.strip()]
    except ValueError as exc:
        raise SpecError(f"bad point {text!r}") from exc
    if len(vals) > K:
        raise ConfigurationError(f"point has {len(vals)} coordinates, truncation K is {K}")
    x = np.zeros(K)
    x[:len(vals)] = vals
    return x % 1.0


def _spec(args, h=None, variant=None, truncation=None):
    from .dynamics import SkewProductSpec
    alpha = resolve_alpha(args.alpha, args.alpha_depth)
    h = h if h is not None else resolve_h(args.h, alpha)
    beta = resolve_alpha(args.beta, 48)
    return SkewProductSpec(variant or args.variant, alpha, h, beta, truncation or args.K)


# ---------------------------------------------------------------------------
# commands


def cmd_cf(args) -> Run:
    from .diophantine import audit_table, nearest_distance
    table = resolve_alpha(args.alpha, args.depth).table
    rows = []
    for k in range(table.depth + 1):
        row = {"k": k, "a_k": table.a[k] if k else "", "l_k": table.l[k], "q_k": table.q[k]}
        try:
            d = nearest_distance(table, table.q[k])
            exact = d.exact
            lo, hi = max(Fraction(0), exact - d.error), exact + d.error
            row.update(dist_low=decimal(lo, "down"), dist=decimal(exact), dist_high=decimal(hi, "up"))
        except PrecisionError:
            row.update(dist_low=None, dist=None, dist_high=None)
        rows.append(row)
    audit = audit_table(table)
    verdicts = {"depth": table.depth, "status": table.status, "audit_ok": audit.ok}
    failure = None if audit.ok else VerificationFailure("convergent table audit failed", audit.failures[:3])
    return Run(["k", "a_k", "l_k", "q_k", "dist_low", "dist", "dist_high"], rows, verdicts, failure,
               plot_rows=[{**r, "dist": "" if r["dist"] is None else mpmath.mpf(r["dist"])} for r in rows])


def cmd_sieve(args) -> Run:
    from .mobius import sieve, write_mutbl
    if not args.out:
        raise ConfigurationError("sieve needs --out for the MUTBL file")
    table = sieve(args.n, budget=max(args.budget, args.n))
    write_mutbl(table, args.out)
    M = table.mertens()
    print(f"wrote {args.out}: mu(1..{args.n}), Mertens M(N) = {M}")
    return Run([], [], {"limit": args.n, "mertens": M}, plot_rows=None)


def cmd_cocycle(args) -> Run:
    from .cocycle import build_h1_and_psi, build_psi_tilde, evaluate_shifted, resonant_sets
    alpha = resolve_alpha(args.alpha, args.alpha_depth)
    h = resolve_h(args.h, alpha)
    if args.emit_h:
        if not args.out:
            raise ConfigurationError("--emit-h needs --out")
        h.to_csv(args.out)
        print(f"wrote series with {len(h.modes)} modes to {args.out}")
        return Run([], [], {"modes": len(h.modes)}, plot_rows=None)
    if args.sets:
        sets = resonant_sets(alpha.table, args.tau, args.horizon or alpha.table.depth, h.window, args.m_range)
        table = alpha.table
        rows = []
        for k in range(2, min(sets.horizon, table.depth) + 1):
            mult = sets.multipliers(k)
            state = "in" if k in sets.E else ("undecided" if k in sets.undecided else "out")
            rows.append({"k": k, "q_k": table.q[k], "a_k": table.a[k], "in_E": state,
                         "multipliers": f"1..{mult[-1]}" if mult else ""})
        verdicts = {"E": list(sets.E), "M_size": len(sets.M), "regime": sets.regime,
                    "undecided": list(sets.undecided), "m_range": sets.m_range}
        return Run(["k", "q_k", "a_k", "in_E", "multipliers"], rows, verdicts, plot_rows=None)
    if args.check_coboundary:
        grid = (np.arange(args.grid) + 0.5) / args.grid
        rows = []
        try:
            psi = build_psi_tilde(h, alpha)
            defect = np.abs(evaluate_shifted(psi, grid, alpha) - psi(grid) - h(grid) + h.c0).max()
            rows.append({"check": "psi~(t+alpha)-psi~(t) = h(t)-c0", "modes": len(psi.modes),
                         "max_defect": float(defect)})
        except NearResonanceError as exc:
            rows.append({"check": "psi~(t+alpha)-psi~(t) = h(t)-c0", "modes": "",
                         "max_defect": f"near-resonant mode {exc.mode}"})
            sets = resonant_sets(alpha.table, args.tau, alpha.table.depth, h.window, args.m_range)
            h1, psi = build_h1_and_psi(h, sets, alpha)
            defect = np.abs(h(grid) - h1(grid) - (evaluate_shifted(psi, grid, alpha) - psi(grid))).max()
            rows.append({"check": "h-h1 = psi(t+alpha)-psi(t)", "modes": len(psi.modes),
                         "max_defect": float(defect)})
        worst = max(r["max_defect"] for r in rows if isinstance(r["max_defect"], float))
        for r in rows:
            if isinstance(r["max_defect"], float):
                r["verdict"] = "pass" if r["max_defect"] <= args.tol else "fail"
            else:
                r["verdict"] = "skipped"
        failure = None
        if worst > args.tol:
            failure = VerificationFailure(f"coboundary defect {worst:.3e} exceeds {args.tol:g}",
                                          {"max_defect": worst})
        return Run(["check", "modes", "max_defect", "verdict"], rows, {"max_defect": worst}, failure,
                   plot_rows=None)
    raise UsageError("cocycle needs one of --check-coboundary, --sets or --emit-h")


def cmd_orbit(args) -> Run:
    from .dynamics import orbit
    spec = _spec(args)
    x = resolve_point(args.x0, spec.truncation)
    ns = np.arange(0, args.n + 1, args.stride, dtype=np.int64)
    Y = orbit(spec, x, ns)
    cols = ["n"] + [f"x_{k}" for k in range(1, spec.truncation + 1)]
    rows = [dict(zip(cols, [int(n)] + [float(v) for v in y])) for n, y in zip(ns, Y)]
    return Run(cols, rows, {"points": len(rows)})


def cmd_rigidity(args) -> Run:
    from .rigidity import RigidityParams, build_rigidity_sequence
    spec = _spec(args)
    params = RigidityParams(args.eps)
    seq = build_rigidity_sequence(spec, params, depth=args.depth, quadrature=args.quadrature)
    rows = [{"n": r.n, "q_n": r.q_n, "l_n": r.l_n, "r_n": r.r_n, "integral": r.integral,
             "bound_i2": r.bound, "r_pow_neg_lambda": r.r_pow_neg_lambda, "verdict": r.verdict}
            for r in seq.rows]
    slope = seq.slope(last=len(seq.rows)) if len(seq.rows) >= 2 else None
    verdicts = {"case": seq.case, "status": seq.status, "rows": len(rows),
                "slope": slope, "monotone_last5": seq.monotone(5),
                "all_pass": all(r["verdict"] == "pass" for r in rows)}
    bad = [r for r in seq.rows if r.verdict != "pass"]
    failure = None
    if bad:
        w = bad[0]
        failure = VerificationFailure(f"rigidity row n={w.n} failed",
                                      {"n": w.n, "r_n": str(w.r_n), "integral": fmt(w.integral),
                                       "bound": fmt(w.bound), "checks": w.checks})
    return Run(["n", "q_n", "l_n", "r_n", "integral", "bound_i2", "r_pow_neg_lambda", "verdict"],
               rows, verdicts, failure)


def cmd_complexity(args) -> Run:
    from .complexity import covering_reports, derive_config, subpolynomial_trend
    from .cocycle import build_h1_and_psi, resonant_sets
    from .dynamics import SkewProductSpec
    alpha = resolve_alpha(args.alpha, args.alpha_depth)
    h = resolve_h(args.h, alpha)
    beta = resolve_alpha(args.beta, 48)
    cols = ["t", "q_t", "n_t", "grid_size", "empirical_count", "ratio", "verdict"]
    sets = resonant_sets(alpha.table, args.tau, alpha.table.depth, h.window, args.m_range)
    h1, _ = build_h1_and_psi(h, sets, alpha)
    try:
        cfg = derive_config(h1, alpha.table, args.tau, args.eps, m_range=args.m_range)
    except BranchError as exc:
        print(f"finite-M regime: {exc}", file=sys.stderr)
        return Run(cols, [], {"regime": "finite-M", "verdict": "bounded (not computed)"})
    S = SkewProductSpec("S", alpha, h1, beta, args.K)
    reports = covering_reports(S, cfg, samples=args.samples, seed=args.seed, verify=args.verify,
                               greedy_samples=args.samples if args.greedy_samples < 0 else args.greedy_samples,
                               budget=args.budget)
    trend = subpolynomial_trend(reports, cfg)
    rows = [{"t": r.t, "q_t": r.q_t, "n_t": r.n_t, "grid_size": r.grid_size,
             "empirical_count": r.empirical_count, "ratio": r.ratio, "verdict": r.verdict} for r in reports]
    plot_rows = [{**row, "ratio": "" if r.ratio is None else r.ratio, "tau": float(cfg.tau)}
                 for row, r in zip(rows, reports)]
    verdicts = {"N": cfg.N, "L": cfg.L, "t0": cfg.t0, "E": list(cfg.E), "C_hat": fmt(cfg.C_hat),
                "trend": trend.status, "fitted_exponent": trend.fitted_exponent,
                "exact_exponent": str(trend.exact_exponent),
                "max_defect": max((r.max_defect for r in reports if r.max_defect is not None), default=None)}
    bad = [r for r in reports if r.verdict == "defect"]
    failure = None
    if bad:
        failure = VerificationFailure(f"grid F_t at t={bad[0].t} leaves a sampled point uncovered",
                                      {"t": bad[0].t, "max_defect": bad[0].max_defect,
                                       "epsilon": str(cfg.epsilon)})
    return Run(cols, rows, verdicts, failure, plot_rows)


def cmd_disjoint(args) -> Run:
    from .disjointness import (Observable, birkhoff_average, birkhoff_irregularity_probe,
                               davenport_decay_probe, mobius_average, rational_alpha_sum)
    from .mobius import read_mutbl, sieve
    cps = parse_checkpoints(args.checkpoints)
    if not cps:
        raise ConfigurationError("no checkpoints")

    def mu():
        if args.sieve:
            if not os.path.exists(args.sieve):
                raise ConfigurationError(f"sieve file {args.sieve!r} not found")
            return read_mutbl(args.sieve)
        return sieve(max(cps))

    cols = ["N", "re", "im", "modulus", "modulus_over_N_log2N"]
    verdicts = {"probe": args.probe}
    if args.probe == "davenport":
        trace = davenport_decay_probe(args.poly, args.residue, mu(), cps)
    else:
        spec = _spec(args)
        f = Observable(args.b)
        x0 = resolve_point(args.x0, spec.truncation)
        if args.probe == "mobius":
            trace = mobius_average(spec, f, x0, mu(), cps)
        elif args.probe == "birkhoff":
            trace = birkhoff_average(spec, f, x0, cps)
        elif args.probe == "irregularity":
            osc = birkhoff_irregularity_probe(spec, f, x0, cps)
            trace = osc.trace
            verdicts.update(oscillation=osc.oscillation, argmax=list(osc.argmax), label=osc.label)
        else:
            if not spec.alpha.is_rational:
                raise ConfigurationError("the rational probe needs a rational alpha")
            table = mu()
            rows = []
            for N in cps:
                res = rational_alpha_sum(spec, f, x0, table, N)
                rows.append({"N": N, "re": res.average.real, "im": res.average.imag,
                             "modulus": abs(res.average), "partition_gap": res.partition_gap})
            verdicts["max_partition_gap"] = max(r["partition_gap"] for r in rows)
            return Run(["N", "re", "im", "modulus", "partition_gap"], rows, verdicts, plot_rows=None)
        verdicts["max_drift"] = trace.max_drift
    rows = trace.rows()
    mods = [r["modulus"] for r in rows]
    verdicts["decreasing"] = all(b <= a for a, b in zip(mods, mods[1:]))
    return Run(cols, rows, verdicts)


def cmd_corpus(args) -> Run:
    if args.suite == "acceptance":
        from .acceptance import run_all
        nums = list(args.criteria) if args.criteria else None
        results = run_all(nums, echo=print)
        rows = [{"criterion": r.number, "title": r.title, "verdict": "pass" if r.passed else "fail",
                 "detail": r.detail} for r in results]
        passed = sum(r.passed for r in results)
        print(f"acceptance: {passed}/{len(results)} criteria passed")
        verdicts = {"passed": passed, "total": len(results),
                    "criteria": {str(r.number): {"passed": r.passed, "seconds": round(r.seconds, 3)}
                                 for r in results}}
        failure = None
        if passed < len(results):
            failure = VerificationFailure("acceptance suite has failing criteria",
                                          [r.number for r in results if not r.passed])
        return Run(["criterion", "title", "verdict", "detail"], rows, verdicts, failure)
    rows = [{"name": e.name, "alpha": e.alpha, "beta": e.beta, "h": json.dumps(e.h, sort_keys=True),
             "variant": e.variant, "branch": e.branch} for e in corpus.ENTRIES.values()]
    return Run(["name", "alpha", "beta", "h", "variant", "branch"], rows, {"entries": len(rows)},
               plot_rows=None)


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run options")
    g.add_argument("--config", help="flat key=value file; flags override it")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output path (CSV); stdout when omitted")
    g.add_argument("--no-plot", action="store_true", help="skip the PNG figure written next to --out")
    g.add_argument("--threads", type=int, default=1, help="worker cap (computations are single-threaded)")


def _system(p: argparse.ArgumentParser, variant: str = "T", K: int = 40) -> None:
    p.add_argument("--variant", choices=("T", "Q", "rot", "S"), default=variant)
    p.add_argument("--alpha", default=corpus.GOLDEN)
    p.add_argument("--alpha-depth", type=int, default=48)
    p.add_argument("--beta", default=corpus.SILVER)
    p.add_argument("--h", default="sample:random-phase,r=1.5,modes=5,seed=3",
                   help="series CSV, corpus:<entry>, sample:<kind>,r=..,modes=..,seed=.. or furstenberg:t=..")
    p.add_argument("--K", type=int, default=K, help="torus truncation")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lab", description="Experiments on skew products of the infinite torus.")
    parser.add_argument("--version", action="version", version=f"lab {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("cf", help="convergent table with certified distances")
    p.add_argument("--alpha", required=True)
    p.add_argument("--depth", type=int, default=10)
    p.set_defaults(func=cmd_cf)

    p = sub.add_parser("sieve", help="Möbius table to a MUTBL file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--budget", type=int, default=10**8)
    p.set_defaults(func=cmd_sieve)

    p = sub.add_parser("cocycle", help="coboundary checks and resonant sets")
    p.add_argument("--alpha", default=corpus.GOLDEN)
    p.add_argument("--alpha-depth", type=int, default=48)
    p.add_argument("--h", default="sample:random-phase,r=1.5,modes=5,seed=3")
    p.add_argument("--check-coboundary", action="store_true")
    p.add_argument("--sets", action="store_true")
    p.add_argument("--emit-h", action="store_true", help="write the resolved series to --out")
    p.add_argument("--tau", type=_fraction, default=Fraction(1))
    p.add_argument("--horizon", type=int, default=0)
    p.add_argument("--m-range", choices=("ak", "ak1"), default="ak")
    p.add_argument("--grid", type=int, default=2**12)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_cocycle)

    p = sub.add_parser("orbit", help="orbit samples T^n x0")
    _system(p)
    p.add_argument("--x0", default="0")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--stride", type=int, default=1)
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("rigidity", help="rigidity times and L2 decay")
    _system(p)
    p.add_argument("--eps", type=_fraction, default=Fraction(1))
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--quadrature", type=int, default=2**13)
    p.set_defaults(func=cmd_rigidity)

    p = sub.add_parser("complexity", help="covering grids F_t and empirical covering numbers")
    _system(p, variant="S")
    p.add_argument("--tau", type=_fraction, default=Fraction(1))
    p.add_argument("--eps", type=_fraction, default=Fraction(1, 4))
    p.add_argument("--samples", type=int, default=1000, help="sample points per grid check")
    p.add_argument("--greedy-samples", type=int, default=-1,
                   help="sample size for the greedy cover; -1 follows --samples, 0 skips it")
    p.add_argument("--verify", type=int, default=2, help="number of t values checked by sampling")
    p.add_argument("--m-range", choices=("ak", "ak1"), default="ak")
    p.add_argument("--budget", type=int, default=10**8)
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("disjoint", help="Möbius-weighted averages along an orbit")
    _system(p, K=8)
    p.add_argument("--probe", choices=("mobius", "birkhoff", "rational", "davenport", "irregularity"),
                   default="mobius")
    p.add_argument("--b", type=_int_list, default=(0, 1))
    p.add_argument("--x0", default="0")
    p.add_argument("--sieve", help="MUTBL file; sieved in process when omitted")
    p.add_argument("--checkpoints", default="1e3..1e6")
    p.add_argument("--poly", type=_fraction_list, default=(Fraction(1, 2), Fraction(0)),
                   help="davenport: coefficients from the top degree down")
    p.add_argument("--residue", type=_int_list, default=(0, 1), help="davenport: a,q")
    p.set_defaults(func=cmd_disjoint)

    p = sub.add_parser("corpus", help="list corpus entries or run the acceptance suite")
    p.add_argument("--suite", choices=("acceptance",))
    p.add_argument("--criteria", type=_int_list, default=())
    p.set_defaults(func=cmd_corpus)

    for sp in sub.choices.values():
        _common(sp)
    return parser


def _fraction_list(text: str) -> tuple:
    return tuple(_fraction(v.strip()) for v in text.split(",") if v.strip())


# ---------------------------------------------------------------------------
# config files, hashing, output


def read_config(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigurationError(f"config file {path!r} not found")
    out = {}
    with open(path, encoding="utf-8") as fh:
        for no, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{no}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().lstrip("-").replace("-", "_")] = v.strip()
    return out


def _apply_config(sub: argparse.ArgumentParser, values: dict) -> None:
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for k, v in values.items():
        if k == "command":
            continue
        if k not in actions or k == "help":
            raise ConfigurationError(f"unknown config key {k!r} for this command")
        if isinstance(actions[k], argparse._StoreTrueAction):
            defaults[k] = _bool(v)
        else:
            defaults[k] = v
        actions[k].required = False
    sub.set_defaults(**defaults)


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, mpmath.mpf):
        return fmt(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


_FILE_KEYS = ("h", "x0", "sieve")


def _file_digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:16]


def config_dict(args) -> dict:
    """Parameters that determine the output; referenced input files are pinned by content digest."""
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in _UNHASHED:
            continue
        if k in _FILE_KEYS and isinstance(v, str) and os.path.isfile(v):
            v = f"{v}@sha256:{_file_digest(v)}"
        out[k] = _jsonable(v)
    return out


def config_hash(command: str, cfg: dict) -> str:
    blob = json.dumps({"command": command, **cfg}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def render_csv(command: str, cfg: dict, seed: int, columns: list, rows: list) -> str:
    buf = io.StringIO()
    buf.write(f"# artifact {__version__}\n")
    buf.write(f"# command {command}\n")
    buf.write(f"# config_hash {config_hash(command, cfg)}\n")
    buf.write(f"# seed {seed}\n")
    buf.write(",".join(columns) + "\n")
    for r in rows:
        cells = []
        for c in columns:
            s = fmt(r.get(c))
            if "," in s or '"' in s:
                s = '"' + s.replace('"', '""') + '"'
            cells.append(s)
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def write_manifest(out: str, command: str, cfg: dict, seed: int, wall: float, verdicts: dict,
                   status: int) -> Path:
    path = Path(str(out) + ".manifest.jsonl")
    rec = {"command": command, "config": cfg, "config_hash": config_hash(command, cfg), "seed": seed,
           "version": __version__, "wall_time": round(wall, 6), "verdicts": _jsonable(verdicts),
           "exit_status": status}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
    return path


# ---------------------------------------------------------------------------
# entry point


def _parse(argv: list):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    values = read_config(known.config) if known.config else {}
    sub = parser._subparsers._group_actions[0].choices
    if values.get("command") and not any(a in sub for a in argv):
        argv = [values["command"]] + list(argv)
    if not any(a in sub for a in argv) and {"-h", "--help", "--version"} & set(argv):
        parser.parse_args(argv)
    if not argv or not any(a in sub for a in argv):
        raise UsageError(parser.format_usage().rstrip())
    name = next(a for a in argv if a in sub)
    if values:
        _apply_config(sub[name], values)
    return parser, parser.parse_args(argv)


def main(argv: Optional[list] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        parser, args = _parse(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        if "usage:" not in str(exc):
            print(build_parser().format_usage().rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except (LabError, OSError) as exc:
        print(f"lab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads < 1:
        print("lab: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    cfg = config_dict(args)
    t0 = time.perf_counter()
    try:
        run = args.func(args)
    except UsageError as exc:
        print(f"lab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationFailure as exc:
        print(f"lab: verification failed: {exc}; witness: {exc.witness}", file=sys.stderr)
        return EXIT_ASSERT
    except (LabError, OSError, MemoryError) as exc:
        print(f"lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    wall = time.perf_counter() - t0
    status = EXIT_OK
    if run.failure is not None:
        print(f"lab: verification failed: {run.failure}; witness: {run.failure.witness}", file=sys.stderr)
        status = EXIT_ASSERT
    if run.columns:
        text = render_csv(args.command, cfg, args.seed, run.columns, run.rows)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    if args.out:
        write_manifest(args.out, args.command, cfg, args.seed, wall, run.verdicts, status)
        if run.plot_rows and not args.no_plot:
            from .plotting import PLOTTERS
            plot = PLOTTERS.get(args.command)
            if plot:
                plot(run.plot_rows, args.out)
    return status


if __name__ == "__main__":
    sys.exit(main())

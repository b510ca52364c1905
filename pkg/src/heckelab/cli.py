"""Command-line front end.

Subcommands: verify-lemma, verify-theorem, structure, hecke-apply,
find-cases.  Reports are machine-readable (schema "hecke-lab/1"), exit
codes: 0 all checks pass, 1 check failures, 2 usage errors, 3 precision
exhaustion (raise N).  Slopes are exact fractions "c/e", never decimals.
"""

from __future__ import annotations

import csv
import io
import json
import os
import random
import sys
from fractions import Fraction

import click

from . import congr, nonvanish, structure
from .harness import (THEOREM_NAMES, TheoremCase, find_cases, verify_case,
                      xrinkernel_check, thetainkernel_check)
from .hecke import HeckeParams, PrecisionError, apply_T, reduce_mod_p
from .padic import EisRing, RingCtx
from .sympoly import SymPoly, WeightVec
from .tree import IndElem, root_plus

SCHEMA = "hecke-lab/1"


def _parse_slope(text):
    if "/" not in text:
        raise click.UsageError(f"slope must be an exact fraction c/e, got {text!r}")
    c, e = text.split("/")
    return Fraction(int(c), int(e))


def _parse_r(text, f):
    parts = tuple(int(x) for x in text.split(","))
    if len(parts) != f:
        raise click.UsageError(f"--r needs {f} comma-separated entries, got {text!r}")
    return parts


def _emit(report, out, fmt):
    report["schema"] = SCHEMA
    if fmt == "json":
        payload = json.dumps(report, sort_keys=True, indent=1, default=str) + "\n"
    elif fmt == "csv":
        rows = report.get("results", [])
        buf = io.StringIO()
        keys = sorted({k for row in rows for k in row if not isinstance(row[k], (dict, list))})
        writer = csv.DictWriter(buf, fieldnames=keys, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k) for k in keys})
        payload = buf.getvalue()
    else:
        lines = [f"schema: {SCHEMA}"]
        for row in report.get("results", []):
            lines.append(json.dumps(row, sort_keys=True, default=str))
        lines.append(f"pass: {report.get('pass')}")
        payload = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def _finish(report, out, fmt):
    _emit(report, out, fmt)
    raise SystemExit(0 if report.get("pass") else 1)


def _workers():
    try:
        return max(1, int(os.environ.get("HECKELAB_WORKERS", "1")))
    except ValueError:
        return 1


def _run_cases(cases):
    n = _workers()
    if n == 1 or len(cases) <= 1:
        return [verify_case(c) for c in cases]
    import concurrent.futures as cf
    with cf.ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(verify_case, cases))


@click.group()
def main():
    """Verification-grade computations for mod-p Hecke module structure."""


common = [
    click.option("--p", "p", type=int, default=3, show_default=True),
    click.option("--f", "f", type=int, default=2, show_default=True),
    click.option("--N", "n_prec", type=int, default=6, show_default=True,
                 help="p-adic working precision"),
    click.option("--seed", type=int, default=20240601, show_default=True),
    click.option("--out", type=str, default=None, help="write the report to a file"),
    click.option("--format", "fmt", type=click.Choice(["json", "csv", "text"]),
                 default="json", show_default=True),
]


def with_common(fn):
    for opt in reversed(common):
        fn = opt(fn)
    return fn


@main.command("verify-lemma")
@click.argument("lemma", type=click.Choice([
    "binomialsum", "gbinomialsum", "vanishing", "xr-iso", "eqsol-kernel",
    "xrinkernel", "thetainkernel", "coeff-formula"]))
@with_common
@click.option("--rmax", type=int, default=None, help="upper bound of the weight sweep")
@click.option("--count", type=int, default=50, show_default=True,
              help="number of randomized trials where applicable")
@click.option("--slope", type=str, default="1/2", show_default=True)
def verify_lemma(lemma, p, f, n_prec, seed, out, fmt, rmax, count, slope):
    """Sweep one congruence/structure lemma and report every instance."""
    rng = random.Random(seed)
    q = p ** f
    results = []
    if lemma == "binomialsum":
        hi = rmax if rmax is not None else 2 * q
        import itertools
        for r in itertools.product(range(q, hi + 1), repeat=f):
            s = congr.sum_S_r(r, p)
            results.append({"r": list(r), "S_r_mod_p": s, "pass": s == 0})
    elif lemma == "gbinomialsum":
        hi = rmax if rmax is not None else q + 2
        import itertools
        for r in itertools.product(range(1, hi + 1), repeat=f):
            bad = 0
            total = 0
            for m in itertools.product(*(range(ri + 1) for ri in r)):
                if congr.weight_of(m, p) >= congr.weight_of(r, p):
                    continue
                for b in range(1, q):
                    total += 1
                    brute, closed = congr.sum_S_rbm(r, b, m, p)
                    if brute != closed:
                        bad += 1
            results.append({"r": list(r), "instances": total, "mismatches": bad,
                            "pass": bad == 0})
    elif lemma == "vanishing":
        for trial in range(count):
            res = _random_vanishing_trial(p, f, rng)
            res["trial"] = trial
            results.append(res)
    elif lemma == "xr-iso":
        ctx = RingCtx.get(p, f, n_prec, 1)
        lo = q
        hi = rmax if rmax is not None else q + 7
        seen = set()
        import itertools
        for r in itertools.product(range(lo, hi + 1), repeat=f):
            a = congr.bracket(congr.weight_of(r, p), q)
            if a in seen:
                continue
            seen.add(a)
            rep = structure.xr_iso_check(ctx, r, n_matrices=12,
                                         rng=random.Random(seed + a))
            results.append(rep)
    elif lemma == "eqsol-kernel":
        hi = rmax if rmax is not None else 2 * p - 2
        for r0 in range(hi + 1):
            for r1 in range(hi + 1):
                ok = nonvanish.kernel_check_eqsol(p, r0, r1)
                results.append({"r": [r0, r1], "trivial_kernel": ok, "pass": ok})
    elif lemma in ("xrinkernel", "thetainkernel"):
        sl = _parse_slope(slope)
        ctx = RingCtx.get(p, f, n_prec, sl.denominator)
        a_p = ctx.make_ap(sl.numerator, 1)
        for trial in range(count):
            r = tuple(rng.randrange(q, 2 * q) for _ in range(f))
            if lemma == "xrinkernel":
                ok = xrinkernel_check(ctx, r, a_p)
                results.append({"r": list(r), "pass": bool(ok)})
            else:
                i = rng.randrange(f)
                need = structure.theta_degree(ctx, i)
                comp = tuple(ri - ni for ri, ni in zip(r, need))
                idx = tuple(rng.randrange(ci + 1) for ci in comp)
                ok = thetainkernel_check(ctx, r, i, idx, a_p)
                results.append({"r": list(r), "i": i, "P_index": list(idx), "pass": bool(ok)})
    elif lemma == "coeff-formula":
        sl = _parse_slope(slope)
        ctx = RingCtx.get(3, 2, n_prec, sl.denominator)
        for trial in range(count):
            ok = _coeff_formula_trial(ctx, sl, rng)
            results.append({"trial": trial, "pass": ok})
    report = {"command": f"verify-lemma {lemma}",
              "config": {"p": p, "f": f, "N": n_prec, "seed": seed},
              "results": results,
              "pass": all(r.get("pass", True) for r in results)}
    _finish(report, out, fmt)


def _random_vanishing_trial(p, f, rng):
    q = p ** f
    c = rng.randrange(1, q)
    cd = congr.digits(c, p, f)
    m = tuple(rng.randrange(0, 3) for _ in range(f))
    r = tuple(cd[i] + m[i] * (q - 1) + rng.randrange(1, 4) for i in range(f))
    raw = {}
    for j in congr.class_indices(r, c, p):
        if rng.random() < 0.6:
            raw[tuple(j)] = rng.randrange(-50, 50)
    # massage raw into an admissible family (class sums = 0 mod p^t)
    try:
        beta = congr.vanishing_solve(raw, r, c, m, 0, 1, p)
        alpha = congr.vanishing_solve(beta, r, c, m, 1, 4, p)
    except (congr.HypothesisError, ArithmeticError) as ex:
        return {"pass": False, "error": str(ex)}
    pn = p ** 4
    ls = [l for l in __import__("itertools").product(*(range(mi + 1) for mi in m))]
    sums_ok = all(congr.class_sum(alpha, l) % pn == 0 for l in ls)
    cong_ok = all((alpha.get(j, 0) - beta.get(j, 0)) % p == 0
                  for j in set(alpha) | set(beta))
    zero = tuple([0] * f)
    ends_ok = (alpha.get(zero, 0) == beta.get(zero, 0)
               and alpha.get(tuple(r), 0) == beta.get(tuple(r), 0))
    return {"r": list(r), "class": c, "m": list(m),
            "sums_mod_p4": sums_ok, "alpha_eq_beta_mod_p": cong_ok,
            "extreme_values_fixed": ends_ok,
            "pass": sums_ok and cong_ok and ends_ok}


def _coeff_formula_trial(ctx, slope, rng):
    from .nonvanish import LevelData, coefficient_C, coefficient_C_oracle
    ring = EisRing(ctx)
    a_p = ctx.make_ap(slope.numerator, 1)
    ld = LevelData(ctx, (2, 2), 1)
    q = ctx.q
    for _ in range(6):
        ld.c_upper[(rng.randrange(3), rng.randrange(3),
                    (rng.randrange(q), rng.randrange(q)))] = ring.from_int(rng.randrange(-9, 9))
    for _ in range(4):
        ld.c_mid[(rng.randrange(3), rng.randrange(3),
                  (rng.randrange(q),))] = ring.from_int(rng.randrange(-9, 9))
    for _ in range(3):
        ld.c_lower[(rng.randrange(3), rng.randrange(3), ())] = ring.from_int(rng.randrange(-9, 9))
    oracle, _total = coefficient_C_oracle(ld, a_p)
    for mu0 in range(q):
        for j0 in range(3):
            for j1 in range(3):
                lhs = coefficient_C(ld, (j0, j1), (mu0,), a_p)
                rhs = oracle.get((j0, j1, (mu0,)), ring.zero())
                if not (lhs - rhs).is_known_zero():
                    return False
    return True


@main.command("verify-theorem")
@click.argument("theorem", type=click.Choice(list(THEOREM_NAMES)))
@with_common
@click.option("--r", "r_text", type=str, default=None, help="weight, e.g. 12,12")
@click.option("--slope", type=str, default="1/2", show_default=True)
@click.option("--unit", type=int, default=1, show_default=True,
              help="unit part of a_p = pi^c * unit")
@click.option("--rmin", type=int, default=None)
@click.option("--rmax", type=int, default=None)
@click.option("--limit", type=int, default=5, show_default=True)
def verify_theorem(theorem, p, f, n_prec, seed, out, fmt, r_text, slope, unit,
                   rmin, rmax, limit):
    """Verify the factorization claim for explicit or scanned instances."""
    sl = _parse_slope(slope)
    if r_text is not None:
        cases = [TheoremCase(theorem, p, f, _parse_r(r_text, f), sl, N=n_prec, unit=unit)]
    else:
        q = p ** f
        lo = rmin if rmin is not None else q + p - 1
        hi = rmax if rmax is not None else lo + 5
        cases = find_cases(theorem, p, f, lo, hi, [sl], N=n_prec, unit=unit, limit=limit)
        if not cases:
            raise click.UsageError("no admissible cases in the given box")
    try:
        results = _run_cases(cases)
    except PrecisionError as ex:
        click.echo(f"precision exhausted: {ex}; rerun with a larger --N", err=True)
        raise SystemExit(3)
    passed = all(r["pass"] or r["status"] == "outside-theorem-hypotheses"
                 for r in results)
    report = {"command": f"verify-theorem {theorem}",
              "config": {"p": p, "f": f, "N": n_prec, "slope": slope, "unit": unit},
              "results": results, "pass": passed}
    _finish(report, out, fmt)


@main.command("structure")
@with_common
@click.option("--r", "r_text", type=str, required=True)
def structure_cmd(p, f, n_prec, seed, out, fmt, r_text):
    """Dimensions, labels and filtration layers of Q = V_r/(V_r* + X_r)."""
    ctx = RingCtx.get(p, f, n_prec, 1)
    r = _parse_r(r_text, f)
    info = structure.q_quotient(ctx, r)
    vs = None
    if structure.box_size(r) <= 400:
        vs = structure.vstar_basis(ctx, r).dim
    res = {"r": list(r), "a": info.a, "a_digits": list(info.adigits),
           "dim_q": info.dim_q, "pattern": info.pattern,
           "dim_vstar": vs,
           "layers": [[repr(lab) for lab in layer] for layer in info.layers],
           "pass": True}
    report = {"command": "structure", "config": {"p": p, "f": f},
              "results": [res], "pass": True}
    _finish(report, out, fmt)


@main.command("hecke-apply")
@with_common
@click.option("--r", "r_text", type=str, required=True)
@click.option("--slope", type=str, default="1/2", show_default=True)
@click.option("--index", type=str, default=None,
              help="Y-degree multi-index of the starting monomial (default: pure Y)")
@click.option("--minus-ap/--no-minus-ap", default=True, show_default=True)
def hecke_apply(p, f, n_prec, seed, out, fmt, r_text, slope, index, minus_ap):
    """Apply T (or T - a_p) to the elementary function [Id, monomial]."""
    sl = _parse_slope(slope)
    ctx = RingCtx.get(p, f, n_prec, sl.denominator)
    r = _parse_r(r_text, f)
    j = _parse_r(index, f) if index else tuple(r)
    ring = EisRing(ctx)
    w = WeightVec(r)
    F = IndElem(ring, w)
    F.insert(root_plus(), SymPoly.monomial(ring, w, j))
    try:
        out_elem = apply_T(F)
        if minus_ap:
            a_p = ctx.make_ap(sl.numerator, 1)
            out_elem = out_elem + F.scale(-a_p)
        rows = []
        for rep in out_elem.support():
            poly = out_elem.entries[rep]
            rows.append({"vertex": repr(rep), "terms": len(poly.coeffs),
                         "poly": poly.render()})
    except PrecisionError as ex:
        click.echo(f"precision exhausted: {ex}; rerun with a larger --N", err=True)
        raise SystemExit(3)
    report = {"command": "hecke-apply",
              "config": {"p": p, "f": f, "r": list(r), "slope": slope,
                         "index": list(j), "minus_ap": minus_ap},
              "results": rows, "pass": True}
    _finish(report, out, fmt)


@main.command("find-cases")
@with_common
@click.option("--theorem", type=click.Choice(list(THEOREM_NAMES)), required=True)
@click.option("--rmin", type=int, required=True)
@click.option("--rmax", type=int, required=True)
@click.option("--slopes", type=str, default="1/2", show_default=True,
              help="comma-separated exact fractions")
@click.option("--limit", type=int, default=None)
def find_cases_cmd(p, f, n_prec, seed, out, fmt, theorem, rmin, rmax, slopes, limit):
    """List admissible parameter tuples for a theorem in a weight box."""
    sls = [_parse_slope(s) for s in slopes.split(",")]
    cases = find_cases(theorem, p, f, rmin, rmax, sls, N=n_prec, limit=limit)
    rows = [c.params_dict() | {"name": c.name} for c in cases]
    report = {"command": f"find-cases {theorem}",
              "config": {"p": p, "f": f, "rmin": rmin, "rmax": rmax, "slopes": slopes},
              "results": rows, "count": len(rows), "pass": True}
    _finish(report, out, fmt)


if __name__ == "__main__":
    main()

"""Finite checkable pieces of the lattice (non-vanishing) argument.

* Vandermonde recovery: coefficients of sum c_e [lam]^e from its values on
  all Teichmuller points; integral values force integral coefficients.
* The kernel lemma: the three families of reduced equations over F_{p^2}
  only have the trivial solution, for all weights in [0, 2p-2]^2.
* The level-m coefficient recurrence (f = 2): the explicit formula for the
  coefficient array of T^-(f_{m+1}) + T^+(f_{m-1}) - a_p f_m, matched
  against the operator pipeline, plus a one-step recursion predicate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from .padic import Eis, EisRing, Fq, NonIntegralError, RingCtx, teichmuller
from .sympoly import SymPoly, WeightVec
from .tree import PLUS, CosetRep, IndElem
from .hecke import HeckeParams, apply_T_minus_ap


def vandermonde_recover(ctx, values, exponents):
    """Solve value(lam) = sum_k c_k [lam]^{e_k} for the coefficients c_k.

    ``values`` maps every F_q index to an Eis element; ``exponents`` is a
    list of distinct integers in [0, q-1].  The full q x q Teichmuller
    Vandermonde system is solved (its determinant is a unit); coefficients
    off the declared support must come out zero, otherwise the support was
    wrong and we raise.  Integral values therefore force integral
    coefficients, which is the content of the recovery lemma.
    """
    q = ctx.q
    if len(set(exponents)) != len(exponents):
        raise ValueError("exponent collision")
    if any(e < 0 or e >= q for e in exponents):
        raise ValueError("exponents must lie in [0, q-1]")
    ring = EisRing(ctx)
    teichs = [ring.teich(Fq(ctx, lam)) for lam in range(q)]
    rows = []
    rhs = []
    for lam in range(q):
        powers = [ring.one()]
        for _ in range(q - 1):
            powers.append(powers[-1] * teichs[lam])
        rows.append(powers)
        rhs.append(values[lam])
    coeffs = _solve_eis(ring, rows, rhs)
    support = set(exponents)
    for e_idx, c in enumerate(coeffs):
        if e_idx not in support and not c.is_known_zero():
            raise ValueError(
                f"values are inconsistent with the declared exponents: "
                f"coefficient at exponent {e_idx} is nonzero")
    return [coeffs[e] for e in exponents]


def _solve_eis(ring, rows, rhs):
    """Gaussian elimination over E with unit pivots (valuations tracked)."""
    n = len(rows)
    M = [row[:] + [b] for row, b in zip(rows, rhs)]
    perm = []
    for col in range(n):
        piv = None
        for i in range(n):
            if i in perm:
                continue
            v = M[i][col].val()
            if v == 0:
                piv = i
                break
        if piv is None:
            # fall back to the smallest-valuation entry
            best = None
            for i in range(n):
                if i in perm:
                    continue
                v = M[i][col].val()
                if v is not None and (best is None or v < best[1]):
                    best = (i, v)
            if best is None:
                raise ArithmeticError("singular system at working precision")
            piv = best[0]
        perm.append(piv)
        inv_p = M[piv][col]
        M[piv] = [x / inv_p for x in M[piv]]
        for i in range(n):
            if i != piv and not M[i][col].is_known_zero():
                c = M[i][col]
                M[i] = [x - c * y for x, y in zip(M[i], M[piv])]
    out = [None] * n
    for col, piv in enumerate(perm):
        out[col] = M[piv][n]
    return out


def kernel_check_eqsol(p, r0, r1):
    """Trivial-kernel test for the three equation families over F_{p^2}.

    Unknowns c_{i0,i1} for 0 <= i0 <= r0, 0 <= i1 <= r1; equations, for
    every lam in F_{p^2}:
        sum c lam^{i0+p i1} = 0
        sum i0 c lam^{i0-1+p i1} = 0
        sum i1 c lam^{i0+p(i1-1)} = 0.
    Returns True iff only c = 0 solves all three.
    """
    ctx = RingCtx(p, 2, 1, 1)
    q = ctx.q
    mul, add = ctx.fq_mul, ctx.fq_add
    pw = ctx.fq_pow_idx
    unknowns = [(i0, i1) for i0 in range(r0 + 1) for i1 in range(r1 + 1)]
    pos = {u: t for t, u in enumerate(unknowns)}
    from .structure import FqEchelon
    ech = FqEchelon(ctx, len(unknowns))
    for lam in range(q):
        row0 = [0] * len(unknowns)
        row1 = [0] * len(unknowns)
        row2 = [0] * len(unknowns)
        for (i0, i1), t in pos.items():
            row0[t] = pw(lam, i0 + p * i1)
            if i0 % p:
                row1[t] = mul[i0 % p][pw(lam, i0 - 1 + p * i1)]
            if i1 % p:
                row2[t] = mul[i1 % p][pw(lam, i0 + p * (i1 - 1))]
        for row in (row0, row1, row2):
            ech.insert(row)
    return ech.rank == len(unknowns)


# --------------------------------------------------- coefficient recurrence

@dataclass
class LevelData:
    """Coefficient arrays c^{m-1}, c^m, c^{m+1} for f = 2 at levels around m.

    Keys are (j0, j1, mu) with mu a digit tuple indexing I_level; values are
    Eis elements.  Missing keys are zero.
    """

    ctx: RingCtx
    weight: tuple
    m: int
    c_lower: dict = field(default_factory=dict)
    c_mid: dict = field(default_factory=dict)
    c_upper: dict = field(default_factory=dict)

    def to_ind(self, which):
        ring = EisRing(self.ctx)
        w = WeightVec(self.weight)
        F = IndElem(ring, w)
        data, level = {
            "lower": (self.c_lower, self.m - 1),
            "mid": (self.c_mid, self.m),
            "upper": (self.c_upper, self.m + 1),
        }[which]
        for (j0, j1, mu), c in data.items():
            assert len(mu) == level
            F.insert_term(CosetRep(PLUS, tuple(mu)), (j0, j1), c)
        return F


def _mu_witt(ctx, mu, prec):
    """mu = sum p^i [mu_i] as a Witt element."""
    acc = ctx.witt(0, prec)
    for i, d in enumerate(mu):
        acc = acc + teichmuller(ctx, Fq(ctx, d), prec) * ctx.witt(ctx.p ** i, prec)
    return acc


def coefficient_C(ld, j, mu, a_p):
    """The displayed formula for C^m_{j0,j1,mu} (f = 2).

    T^- from level m+1 contributes p^{r0-i0+r1-i1} binom(i0,j0) binom(i1,j1)
    sum_lam c^{m+1}_{i0,i1,mu+p^m[lam]} [lam]^{(i0-j0)+p(i1-j1)}; T^+ from
    level m-1 contributes p^{j0+j1} binom(i0,j0) binom(i1,j1)
    c^{m-1}_{i0,i1,[mu]_{m-1}} (([mu]_{m-1}-mu)/p^{m-1})^{(i0-j0)+p(i1-j1)};
    and -a_p c^m picks up the middle level.
    """
    ctx = ld.ctx
    assert ctx.f == 2, "the coefficient formula is stated for f = 2"
    ring = EisRing(ctx)
    p = ctx.p
    r0, r1 = ld.weight
    j0, j1 = j
    m = ld.m
    assert len(mu) == m and m >= 1
    total = ring.zero()
    # T^- sum over the fibre above mu
    teich_pows = {}
    for lam in range(ctx.q):
        t = ring.teich(Fq(ctx, lam))
        pws = [ring.one()]
        for _ in range(r0 + p * r1):
            pws.append(pws[-1] * t)
        teich_pows[lam] = pws
    for i0 in range(j0, r0 + 1):
        for i1 in range(j1, r1 + 1):
            b = comb(i0, j0) * comb(i1, j1)
            inner = ring.zero()
            seen = False
            for lam in range(ctx.q):
                c = ld.c_upper.get((i0, i1, tuple(mu) + (lam,)))
                if c is None:
                    continue
                seen = True
                inner = inner + c * teich_pows[lam][(i0 - j0) + p * (i1 - j1)]
            if seen:
                total = total + inner * ring.from_int(b) * ring.p_power(r0 - i0 + r1 - i1)
    # T^+ from the truncation [mu]_{m-1}
    mu_low = tuple(mu[:-1])
    prec = ctx.n_store
    mu_w = _mu_witt(ctx, mu, prec)
    mu_low_w = _mu_witt(ctx, mu_low, prec)
    ratio = (mu_low_w - mu_w).divexact_p(m - 1) if m >= 1 else None
    ratio = Eis.from_witt(ratio)
    ratio_pows = [ring.one()]
    for _ in range(r0 + p * r1):
        ratio_pows.append(ratio_pows[-1] * ratio)
    for i0 in range(j0, r0 + 1):
        for i1 in range(j1, r1 + 1):
            c = ld.c_lower.get((i0, i1, mu_low))
            if c is None:
                continue
            b = comb(i0, j0) * comb(i1, j1)
            term = c * ratio_pows[(i0 - j0) + p * (i1 - j1)] * ring.from_int(b)
            total = total + term * ring.p_power(j0 + j1)
    cm = ld.c_mid.get((j0, j1, tuple(mu)))
    if cm is not None:
        total = total - a_p * cm
    return total


def coefficient_C_oracle(ld, a_p):
    """All C^m coefficients via the Hecke-operator pipeline (the oracle)."""
    ctx = ld.ctx
    params = HeckeParams(ctx, WeightVec(ld.weight), a_p)
    from .hecke import hecke_T_minus, hecke_T_plus
    total = hecke_T_minus(ld.to_ind("upper")) + hecke_T_plus(ld.to_ind("lower")) \
        + ld.to_ind("mid").scale(-a_p)
    del params
    out = {}
    for rep, poly in total.entries.items():
        if rep.level != ld.m or rep.half != PLUS:
            continue
        for j, c in poly.coeffs.items():
            out[(j[0], j[1], rep.digits)] = c
    return out, total


# --------------------------------------------------- recursion step checking

def _val_ge(x, thresh_pi_digits):
    v = x.val()
    if v is None:
        return x.val_floor() >= thresh_pi_digits
    return v >= thresh_pi_digits


def level_claims_hold(ctx, weight, coeffs, level_keys, n, a_p, strong=True):
    """The five membership claims of the lattice recursion at one level.

    coeffs: (j0,j1,mu) -> Eis for a fixed level; n in p-adic digits.  The
    claims: c_{0,0}, c_{r0,r1} and both weighted class sums lie in
    p^n/a_p * O; every coefficient lies in p^{n-1}/a_p * O.
    """
    e = ctx.e
    p = ctx.p
    q = ctx.q
    r0, r1 = weight
    vap = a_p.val()
    thr_main = e * n - vap
    thr_floor = e * (n - 1) - vap
    ring = EisRing(ctx)
    mus = sorted({k[2] for k in coeffs})
    for mu in mus:
        c00 = coeffs.get((0, 0, mu), ring.zero())
        crr = coeffs.get((r0, r1, mu), ring.zero())
        if not (_val_ge(c00, thr_main) and _val_ge(crr, thr_main)):
            return False
        for klass in (1, p):
            s = ring.zero()
            for (i0, i1, m2), c in coeffs.items():
                if m2 == mu and (i0 + p * i1) % (q - 1) == klass % (q - 1):
                    s = s + c
            if not _val_ge(s, thr_main):
                return False
        if strong:
            for (i0, i1, m2), c in coeffs.items():
                if m2 == mu and not _val_ge(c, thr_floor):
                    return False
    return True


def recursion_step_report(ld, a_p, n):
    """One checkable step of the lattice recursion.

    Evaluates: (hypotheses) the claims at levels m+1 and m and the
    integrality C^m in p^n O; (conclusion) the claims at level m-1.
    Returns a dict with both truth values; the lattice argument asserts
    hypotheses => conclusion, so a report with hypotheses true and
    conclusion false would falsify the paper's recursion.
    """
    ctx = ld.ctx
    e = ctx.e
    oracle, _ = coefficient_C_oracle(ld, a_p)
    c_ok = all(_val_ge(c, e * n) for c in oracle.values())
    hyp = (level_claims_hold(ctx, ld.weight, ld.c_upper, ld.m + 1, n, a_p)
           and level_claims_hold(ctx, ld.weight, ld.c_mid, ld.m, n, a_p)
           and c_ok)
    concl = level_claims_hold(ctx, ld.weight, ld.c_lower, ld.m - 1, n, a_p)
    return {"hypotheses": hyp, "conclusion": concl,
            "vacuous": not hyp, "consistent": (not hyp) or concl}

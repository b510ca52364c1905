"""Coset representatives for KZ\\G and finitely supported induced functions.

Vertices of the Bruhat-Tits tree are encoded by a half (plus = positive
direction from the standard vertex, minus = below the adjacent vertex), a
level m, and a Teichmuller digit string mu in I_m.  The representative
matrices are

    plus : g0_{m,mu} = (p^m, mu; 0, 1)
    minus: g1_{m,mu} = (1, 0; p mu, p^{m+1})

with mu = sum_{i<m} p^i [mu_i].  The two elementary right moves, by
(p,[lam];0,1) and by alpha = (1,0;0,p), are realized combinatorially; each
move returns the canonical representative together with the KZ factor k and
the central p-power it produced, so that [g * move, v] = [rep', act(k, v)]
(central powers of p act trivially).

All move rules are verified against the literal matrix identities in the
test suite; nothing here is trusted geometry.
"""

from __future__ import annotations

from dataclasses import dataclass

from .padic import Fq, WittRing
from .sympoly import Mat2, SymPoly, act

PLUS, MINUS = 0, 1


@dataclass(frozen=True)
class CosetRep:
    half: int
    digits: tuple  # F_q indices, lowest digit first

    @property
    def level(self):
        return len(self.digits)

    def __repr__(self):
        h = "+" if self.half == PLUS else "-"
        return f"({h},{self.level},{'.'.join(map(str, self.digits))})"


def root_plus():
    return CosetRep(PLUS, ())


def root_minus():
    return CosetRep(MINUS, ())


def rep_matrix(ctx, rep, prec=None):
    """The representative matrix over W."""
    ring = WittRing(ctx, ctx.N if prec is None else prec)
    p = ctx.p
    m = rep.level
    mu = ring.zero()
    for i, d in enumerate(rep.digits):
        mu = mu + ring.teich(Fq(ctx, d)) * ring.from_int(p ** i)
    if rep.half == PLUS:
        return Mat2(ring.from_int(p ** m), mu, ring.zero(), ring.one())
    return Mat2(ring.one(), ring.zero(), mu * ring.from_int(p), ring.from_int(p ** (m + 1)))


def truncate(rep, ctx=None):
    """Split off the top digit: mu = [mu]_{m-1} + p^{m-1} [lam].

    Returns (the level-(m-1) representative, the top digit as an F_q index).
    """
    if rep.level == 0:
        raise ValueError("cannot truncate a level-0 representative")
    return CosetRep(rep.half, rep.digits[:-1]), rep.digits[-1]


def _unipotent_upper(ring, lam_idx):
    t = ring.teich(Fq(ring.ctx, lam_idx))
    return Mat2(ring.one(), t, ring.zero(), ring.one())


def _unipotent_lower(ring, lam_idx):
    t = ring.teich(Fq(ring.ctx, lam_idx))
    return Mat2(ring.one(), ring.zero(), t, ring.one())


def child_plus(ctx, ring, rep, lam_idx):
    """Normalize rep * (p, [lam]; 0, 1).

    Returns (rep', k, c) with  matrix(rep) * (p,[lam];0,1) = p^c * matrix(rep') * k.
    """
    if rep.half == PLUS:
        return CosetRep(PLUS, rep.digits + (lam_idx,)), None, 0
    # minus half
    if lam_idx == 0:
        if rep.level == 0:
            return root_plus(), None, 1
        parent, top = truncate(rep)
        return parent, _unipotent_lower(ring, top), 1
    inv = ctx.fq_inv[lam_idx]
    t_lam = ring.teich(Fq(ctx, lam_idx))
    t_inv = ring.teich(Fq(ctx, inv))
    k = Mat2(ring.from_int(ctx.p), t_lam, -t_inv, ring.zero())
    return CosetRep(MINUS, rep.digits + (inv,)), k, 0


def child_alpha(ctx, ring, rep):
    """Normalize rep * (1, 0; 0, p); same return convention as child_plus."""
    if rep.half == PLUS:
        if rep.level == 0:
            return root_minus(), None, 0
        parent, top = truncate(rep)
        return parent, _unipotent_upper(ring, top), 1
    return CosetRep(MINUS, rep.digits + (0,)), None, 0


def move_plus(rep, lam_idx):
    """Plus-half specialization: the rep of g * (p,[lam];0,1) (no KZ factor)."""
    if rep.half != PLUS:
        raise ValueError("move_plus is the plus-half move; use child_plus")
    return CosetRep(PLUS, rep.digits + (lam_idx,))


def move_alpha(ctx, ring, rep):
    """The rep of g * alpha together with its KZ factor and central p-power."""
    return child_alpha(ctx, ring, rep)


def kz_equivalent(ctx, m1, m2, prec=None):
    """Whether two integral matrices over W represent the same KZ-coset.

    Brute force over central p-powers at working precision; only meant for
    validating the combinatorial moves at small levels.
    """
    prec = ctx.N if prec is None else prec
    ring = WittRing(ctx, prec)

    def pval(w):
        return w.val()

    def check(a, b):
        # is a^{-1} b in K (up to the precision cap)?
        det_a = a.det()
        va = pval(det_a)
        if va >= prec:
            return False
        adj = Mat2(a.d, -a.b, -a.c, a.a)
        cand = adj * b
        ents = cand.entries()
        if any(pval(x) < va for x in ents):
            return False
        pv = ctx.p ** va
        red = [ctx.witt_from_coords(tuple(c // pv for c in x.reduce_to(prec).co), prec - va)
               for x in ents]
        unit = det_a.divexact_p(va)
        inv = unit.inverse()
        red = [x * inv for x in red]
        d = red[0] * red[3] - red[1] * red[2]
        return d.val() == 0

    for j in range(prec // 2 + 1):
        pj = ring.from_int(ctx.p ** j)
        if check(m1, Mat2(*(x * pj for x in m2.entries()))):
            return True
        if j and check(m2, Mat2(*(x * pj for x in m1.entries()))):
            return True
    return False


class IndElem:
    """Finitely supported function in ind_{KZ}^G V: map CosetRep -> SymPoly."""

    __slots__ = ("ring", "weight", "entries")

    def __init__(self, ring, weight):
        self.ring = ring
        self.weight = weight
        self.entries = {}

    def copy(self):
        out = IndElem(self.ring, self.weight)
        out.entries = {rep: poly.copy() for rep, poly in self.entries.items()}
        return out

    def insert(self, rep, poly):
        """Accumulate a polynomial at a vertex, keeping the support sparse."""
        assert poly.weight == self.weight
        cur = self.entries.get(rep)
        tot = poly if cur is None else cur + poly
        if tot.is_zero():
            self.entries.pop(rep, None)
        else:
            self.entries[rep] = tot

    def insert_term(self, rep, j, c):
        if rep not in self.entries:
            self.entries[rep] = SymPoly(self.ring, self.weight)
        self.entries[rep].add_term(j, c)
        if self.entries[rep].is_zero():
            del self.entries[rep]

    def __add__(self, other):
        assert self.weight == other.weight
        out = self.copy()
        for rep, poly in other.entries.items():
            out.insert(rep, poly)
        return out

    def __sub__(self, other):
        return self + other.scale(-self.ring.one())

    def __neg__(self):
        return self.scale(-self.ring.one())

    def scale(self, c):
        out = IndElem(self.ring, self.weight)
        for rep, poly in self.entries.items():
            out.insert(rep, poly.scale(c))
        return out

    def support(self):
        return sorted(self.entries, key=lambda r: (r.half, r.level, r.digits))

    def radius(self):
        return max((rep.level for rep in self.entries), default=0)

    def is_zero(self):
        return not self.entries

    def __eq__(self, other):
        if not isinstance(other, IndElem):
            return NotImplemented
        if set(self.entries) != set(other.entries):
            return False
        return all(self.entries[r] == other.entries[r] for r in self.entries)

    __hash__ = None

    def render(self):
        return " ; ".join(f"[{rep!r}: {poly.render()}]"
                          for rep, poly in sorted(self.entries.items(),
                                                  key=lambda kv: (kv[0].half, kv[0].level, kv[0].digits)))

    def __repr__(self):
        return f"IndElem({len(self.entries)} vertices, weight {self.weight.r})"


def elementary(ring, weight, rep, poly):
    out = IndElem(ring, weight)
    out.insert(rep, poly)
    return out


def normalize_insert(F, rep, k, central, v):
    """Insert [g k, v] = [g, act(k, v)] at the canonical rep; central p acts trivially."""
    del central  # p in the center acts trivially by convention
    if k is None:
        F.insert(rep, v)
    else:
        F.insert(rep, act(_coerce_mat(F.ring, k), v))
    return F


def _coerce_mat(ring, k):
    """Lift a Mat2 over W into the coefficient ring of the target (W -> Eis)."""
    if ring.name == "E":
        from .padic import Eis, Witt
        ents = [Eis.from_witt(x) if isinstance(x, Witt) else x for x in k.entries()]
        return Mat2(*ents)
    return k

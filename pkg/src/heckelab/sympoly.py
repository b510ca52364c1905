"""Multi-homogeneous polynomial model of V = (tensor_i Sym^{r_i} R^2) (x) D^s.

A polynomial is stored sparsely by its Y-degree multi-index: the index
(j_0, .., j_{f-1}) stands for the monomial prod_i X_i^{r_i - j_i} Y_i^{j_i}.
A 2x2 matrix acts on the i-th tensor factor through the i-th Frobenius twist
of its entries; the determinant twist D^s is tracked in the weight and
applied as a scalar at action time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb


@dataclass(frozen=True)
class WeightVec:
    """Weight r = (r_0..r_{f-1}) (so k_i = r_i + 2) and determinant twist s."""

    r: tuple
    s: int = 0

    def __post_init__(self):
        object.__setattr__(self, "r", tuple(self.r))

    @property
    def f(self):
        return len(self.r)

    def dim(self):
        out = 1
        for ri in self.r:
            out *= ri + 1
        return out

    def indices(self):
        return itertools.product(*(range(ri + 1) for ri in self.r))


def index_weight(j, p):
    """The base-p weight sum j_i p^i of a multi-index."""
    return sum(ji * p ** i for i, ji in enumerate(j))


class Mat2:
    """A 2x2 matrix over a coefficient ring; singular matrices are allowed."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d):
        self.a, self.b, self.c, self.d = a, b, c, d

    def det(self):
        return self.a * self.d - self.b * self.c

    def __mul__(self, other):
        return Mat2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def __repr__(self):
        return f"Mat2({self.a!r}, {self.b!r}; {self.c!r}, {self.d!r})"


def mat2_int(ring, a, b, c, d):
    return Mat2(ring.from_int(a), ring.from_int(b), ring.from_int(c), ring.from_int(d))


def identity(ring):
    return mat2_int(ring, 1, 0, 0, 1)


def weyl(ring):
    return mat2_int(ring, 0, 1, 1, 0)


class SymPoly:
    """Sparse element of V_r: map from Y-degree multi-indices to coefficients."""

    __slots__ = ("ring", "weight", "coeffs")

    def __init__(self, ring, weight, coeffs=None):
        self.ring = ring
        self.weight = weight
        self.coeffs = {} if coeffs is None else coeffs

    @staticmethod
    def zero(ring, weight):
        return SymPoly(ring, weight)

    @staticmethod
    def monomial(ring, weight, j, coeff=None):
        j = tuple(j)
        for ji, ri in zip(j, weight.r):
            if not 0 <= ji <= ri:
                raise ValueError(f"index {j} out of bounds for weight {weight.r}")
        c = ring.one() if coeff is None else coeff
        if ring.is_zero(c):
            return SymPoly(ring, weight)
        return SymPoly(ring, weight, {j: c})

    def copy(self):
        return SymPoly(self.ring, self.weight, dict(self.coeffs))

    def is_zero(self):
        return not self.coeffs

    def add_term(self, j, c):
        """In-place accumulate; maintains the no-stored-zeros invariant."""
        cur = self.coeffs.get(j)
        tot = c if cur is None else cur + c
        if self.ring.is_zero(tot):
            self.coeffs.pop(j, None)
        else:
            self.coeffs[j] = tot

    def __add__(self, other):
        assert self.weight == other.weight
        out = self.copy()
        for j, c in other.coeffs.items():
            out.add_term(j, c)
        return out

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return SymPoly(self.ring, self.weight, {j: -c for j, c in self.coeffs.items()})

    def scale(self, c):
        if self.ring.is_zero(c):
            return SymPoly(self.ring, self.weight)
        out = SymPoly(self.ring, self.weight)
        for j, v in self.coeffs.items():
            out.add_term(j, v * c)
        return out

    def __mul__(self, other):
        """Product into the sum weight (used to embed theta into an ambient V_r)."""
        assert self.ring is other.ring
        w = WeightVec(tuple(a + b for a, b in zip(self.weight.r, other.weight.r)),
                      self.weight.s + other.weight.s)
        out = SymPoly(self.ring, w)
        for j1, c1 in self.coeffs.items():
            for j2, c2 in other.coeffs.items():
                out.add_term(tuple(a + b for a, b in zip(j1, j2)), c1 * c2)
        return out

    def map_coeffs(self, fn):
        out = SymPoly(self.ring, self.weight)
        for j, c in self.coeffs.items():
            out.add_term(j, fn(c))
        return out

    def __eq__(self, other):
        if not isinstance(other, SymPoly):
            return NotImplemented
        if self.weight != other.weight:
            return False
        if set(self.coeffs) != set(other.coeffs):
            return False
        return all(self.coeffs[j] == other.coeffs[j] for j in self.coeffs)

    __hash__ = None

    def render(self):
        """Canonical text form, indices in lexicographic order."""
        if not self.coeffs:
            return "0"
        parts = []
        for j in sorted(self.coeffs):
            mono = "*".join(
                f"X{i}^{ri - ji}Y{i}^{ji}" for i, (ri, ji) in enumerate(zip(self.weight.r, j)))
            parts.append(f"({self.coeffs[j]!r})*{mono}")
        return " + ".join(parts)

    def __repr__(self):
        return f"SymPoly[{self.weight.r}; s={self.weight.s}]({len(self.coeffs)} terms)"


def _subst_row(ring, m, j, A, C, B, D):
    """Coefficients over Y-degree of (A X + C Y)^(m-j) (B X + D Y)^j.

    Returns a list of length m+1; entry t multiplies X^(m-t) Y^t.
    """
    za = [ring.from_int(comb(m - j, t)) * (A ** (m - j - t)) * (C ** t)
          for t in range(m - j + 1)]
    zb = [ring.from_int(comb(j, t)) * (B ** (j - t)) * (D ** t)
          for t in range(j + 1)]
    out = [ring.zero()] * (m + 1)
    for t1, c1 in enumerate(za):
        if ring.is_zero(c1):
            continue
        for t2, c2 in enumerate(zb):
            out[t1 + t2] = out[t1 + t2] + c1 * c2
    return out


def act(g, v):
    """The twisted action of g on v: factor i sees the Fr^i-image of g's entries."""
    ring = v.ring
    f = v.weight.f
    ents = [[ring.frob(x, i) for x in g.entries()] for i in range(f)]
    rows = [{} for _ in range(f)]

    def row(i, j):
        if j not in rows[i]:
            a, b, c, d = ents[i]
            rows[i][j] = _subst_row(ring, v.weight.r[i], j, a, c, b, d)
        return rows[i][j]

    out = SymPoly(ring, v.weight)
    for j, cj in v.coeffs.items():
        partial = {(): cj}
        for i in range(f):
            ri_row = row(i, j[i])
            nxt = {}
            for pref, c in partial.items():
                for t, rc in enumerate(ri_row):
                    if ring.is_zero(rc):
                        continue
                    key = pref + (t,)
                    val = c * rc
                    if key in nxt:
                        nxt[key] = nxt[key] + val
                    else:
                        nxt[key] = val
            partial = nxt
        for key, c in partial.items():
            out.add_term(key, c)
    if v.weight.s:
        det = g.det()
        out = out.scale(det ** v.weight.s)
    return out


def theta(ring, i, r=None):
    """The generalized Dickson polynomial theta_i = X_i Y_{i-1}^p - Y_i X_{i-1}^p.

    Returned in its own minimal weight (degree 1 at factor i, p at factor i-1,
    both at factor 0 when f = 1).  When an ambient weight r is supplied it is
    checked to be large enough to contain theta_i times a complement.
    """
    ctx = ring.ctx
    f = ctx.f
    p = ctx.p
    if not 0 <= i < f:
        raise ValueError(f"factor index {i} out of range for f={f}")
    prev = (i - 1) % f
    if r is not None:
        rr = r.r if isinstance(r, WeightVec) else tuple(r)
        need = [0] * f
        need[i] += 1
        need[prev] += p
        if any(ri < ni for ri, ni in zip(rr, need)):
            raise ValueError(f"weight {rr} too small to contain theta_{i}")
    if f == 1:
        w = WeightVec((p + 1,))
        poly = SymPoly(ring, w)
        poly.add_term((p,), ring.one())
        poly.add_term((1,), -ring.one())
        return poly
    wt = [0] * f
    wt[i] = 1
    wt[prev] = p
    w = WeightVec(tuple(wt))
    jx = [0] * f
    jx[prev] = p          # X_i Y_{i-1}^p
    jy = [0] * f
    jy[i] = 1             # Y_i X_{i-1}^p
    poly = SymPoly(ring, w)
    poly.add_term(tuple(jx), ring.one())
    poly.add_term(tuple(jy), -ring.one())
    return poly


def linear_form_product(ring, weight, forms):
    """Expand prod_i (u_i X_i + w_i Y_i)^{r_i} for given per-factor pairs.

    ``forms`` is a list of (u_i, w_i) ring elements.  This is both a
    constructor for the X_r generators and an independent oracle for `act`
    on products of linear forms.
    """
    out = SymPoly(ring, weight)
    rowdata = []
    for (u, w), m in zip(forms, weight.r):
        row = [ring.from_int(comb(m, t)) * (u ** (m - t)) * (w ** t) for t in range(m + 1)]
        rowdata.append(row)
    for j in weight.indices():
        c = ring.one()
        dead = False
        for i, ji in enumerate(j):
            c = c * rowdata[i][ji]
            if ring.is_zero(c):
                dead = True
                break
        if not dead:
            out.add_term(tuple(j), c)
    return out

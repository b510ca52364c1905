"""Exact arithmetic backends for the whole package.

Three coefficient rings, all attached to a shared context:

* ``Fq``   -- the residue field F_q, q = p^f, with table-driven arithmetic;
* ``Witt`` -- the truncated unramified ring W = Z_{p^f} / p^k, realized as
  (Z/p^k)[x]/(h) for a fixed irreducible h;
* ``Eis``  -- the totally ramified extension E = W[pi]/(pi^e - p), truncated
  pi-adically, with per-element absolute precision tracking.  Negative
  valuations are supported (elements of E, not just O_E); integrality is
  certified or refuted at use sites.

Everything is deterministic: h is the lexicographically first monic
irreducible of degree f over F_p, lifted coefficient-wise.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

GUARD_DIGITS = 4  # extra p-adic digits stored beyond the requested precision N


class NonIntegralError(ArithmeticError):
    """A coefficient required to be integral has certified negative valuation."""

    def __init__(self, message, valuation=None):
        super().__init__(message)
        self.valuation = valuation


class PrecisionError(ArithmeticError):
    """An operation needs p-adic digits below the working precision.

    Remedy: rebuild the context with a larger N.
    """


def _is_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _poly_mul_mod_p(a, b, p, h):
    """Multiply digit vectors a,b in F_p[x]/(h), h monic of degree f = len(h)."""
    f = len(h)
    prod = [0] * (2 * f - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] = (prod[i + j] + ai * bj) % p
    for t in range(2 * f - 2, f - 1, -1):
        c = prod[t]
        if c:
            prod[t] = 0
            # x^t = x^(t-f) * (x^f) = -x^(t-f) * sum h[i] x^i
            for i, hi in enumerate(h):
                prod[t - f + i] = (prod[t - f + i] - c * hi) % p
    return prod[:f]


def _poly_pow_mod_p(a, n, p, h):
    result = [1] + [0] * (len(h) - 1)
    base = list(a)
    while n:
        if n & 1:
            result = _poly_mul_mod_p(result, base, p, h)
        base = _poly_mul_mod_p(base, base, p, h)
        n >>= 1
    return result


def _is_irreducible(h, p):
    """h = low coefficients of a monic degree-f polynomial over F_p."""
    f = len(h)
    if f == 1:
        return True
    # irreducible iff x^(p^f) = x in F_p[x]/(h) and x^(p^d) != x for proper d|f
    x = [0, 1] + [0] * (f - 2)
    if _poly_pow_mod_p(x, p ** f, p, h) != x:
        return False
    for d in range(1, f):
        if f % d == 0 and _poly_pow_mod_p(x, p ** d, p, h) == x:
            return False
    return True


def _first_irreducible(p, f):
    """Lexicographically first monic irreducible of degree f over F_p.

    Coefficient tuples (c_0, .., c_{f-1}) of x^f + sum c_i x^i are scanned in
    lexicographic order, c_0 moving fastest.
    """
    if f == 1:
        return (0,)  # x itself
    for combo in itertools.product(range(p), repeat=f):
        # combo is (c_{f-1}, ..., c_0) so that earlier digits vary slowest;
        # reverse for the conventional low-to-high storage
        h = tuple(reversed(combo))
        if h[0] == 0:
            continue  # reducible: x divides
        if _is_irreducible(list(h), p):
            return h
    raise AssertionError("no irreducible polynomial found")


class RingCtx:
    """Fixed arithmetic universe (p, f, N, e).

    Immutable after construction; safe to share.  Serializes as the text
    tuple ``p,f,N,e,h-coeffs`` via :meth:`descriptor`.  Use :meth:`get` to
    share the (table-heavy) construction across equal parameter tuples.
    """

    _interned = {}

    @classmethod
    def get(cls, p, f=1, N=6, e=1):
        key = (p, f, N, e)
        if key not in cls._interned:
            cls._interned[key] = cls(p, f, N, e)
        return cls._interned[key]

    def __init__(self, p, f=1, N=6, e=1):
        if not _is_prime(p):
            raise ValueError(f"p = {p} is not prime")
        if f < 1 or N < 1 or e < 1:
            raise ValueError("need f >= 1, N >= 1, e >= 1")
        self.p = p
        self.f = f
        self.N = N
        self.e = e
        self.q = p ** f
        self.M = e * N
        self.n_store = N + GUARD_DIGITS
        self.h = _first_irreducible(p, f)
        assert _is_irreducible(list(self.h), p)
        self._build_fq_tables()
        self._frob_cache = {}   # (prec, j) -> tuple of f coordinate vectors
        self._teich_cache = {}  # (prec, idx) -> coordinate tuple
        self._xpow_cache = {}   # prec -> reduction vectors for x^f .. x^(2f-2)

    # ------------------------------------------------------------------ F_q

    def _build_fq_tables(self):
        p, f, q, h = self.p, self.f, self.q, list(self.h)

        def idx_of(vec):
            n = 0
            for i in reversed(range(f)):
                n = n * p + vec[i]
            return n

        def vec_of(n):
            return [(n // p ** i) % p for i in range(f)]

        # find a multiplicative generator by brute force
        gen = None
        for cand in range(1, q):
            vec = vec_of(cand)
            acc = vec
            order = 1
            while idx_of(acc) != 1 or order == 0:
                acc = _poly_mul_mod_p(acc, vec, p, h)
                order += 1
                if order > q:
                    break
            if order == q - 1:
                gen = cand
                break
        assert gen is not None, "F_q^x is cyclic; generator search failed"

        exp = [0] * (q - 1)
        log = [None] * q
        acc = vec_of(1)
        for k in range(q - 1):
            idx = idx_of(acc)
            exp[k] = idx
            log[idx] = k
            acc = _poly_mul_mod_p(acc, vec_of(gen), p, h)
        self.fq_exp = exp
        self.fq_log = log

        add = [[0] * q for _ in range(q)]
        for a in range(q):
            va = vec_of(a)
            for b in range(q):
                vb = vec_of(b)
                add[a][b] = idx_of([(x + y) % p for x, y in zip(va, vb)])
        mul = [[0] * q for _ in range(q)]
        for a in range(1, q):
            la = log[a]
            row = mul[a]
            for b in range(1, q):
                row[b] = exp[(la + log[b]) % (q - 1)]
        self.fq_add = add
        self.fq_mul = mul
        self.fq_neg = [add[a].index(0) for a in range(q)]
        self.fq_inv = [0] + [exp[(q - 1 - log[a]) % (q - 1)] for a in range(1, q)]
        self.fq_frob = [self.fq_pow_idx(a, p) for a in range(q)]

    def fq_pow_idx(self, a, n):
        """a^n on raw indices, with 0^0 = 1."""
        if n == 0:
            return 1
        if a == 0:
            return 0
        return self.fq_exp[(self.fq_log[a] * n) % (self.q - 1)]

    def fq(self, n):
        """Embed an integer (or coerce an index-coded element) into F_q."""
        return Fq(self, n % self.p)

    def fq_from_index(self, idx):
        return Fq(self, idx % self.q)

    def fq_elements(self):
        return [Fq(self, i) for i in range(self.q)]

    # ----------------------------------------------------------------- Witt

    def _xpow_reductions(self, prec):
        """x^(f+t) mod h for 0 <= t <= f-2, coefficient vectors mod p^prec."""
        if prec in self._xpow_cache:
            return self._xpow_cache[prec]
        mod = self.p ** prec
        f = self.f
        red = []
        cur = [(-c) % mod for c in self.h]  # x^f = -sum h_i x^i
        red.append(tuple(cur))
        for _ in range(f - 2):
            top = cur[f - 1]
            cur = [0] + cur[:-1]
            if top:
                cur = [(c - top * hc) % mod for c, hc in zip(cur, list(self.h) + [0] * 0)]
                # the line above shifts then folds the overflow x^f term
            red.append(tuple(cur))
        self._xpow_cache[prec] = red
        return red

    def witt(self, n, prec=None):
        prec = self.n_store if prec is None else prec
        mod = self.p ** prec
        return Witt(self, (n % mod,) + (0,) * (self.f - 1), prec)

    def witt_from_coords(self, coords, prec=None):
        prec = self.n_store if prec is None else prec
        mod = self.p ** prec
        return Witt(self, tuple(c % mod for c in coords), prec)

    def _frob_images(self, prec, j):
        """Coordinate vectors of Fr^j(x^i) for 0 <= i < f, at precision prec."""
        j %= self.f
        key = (prec, j)
        if key in self._frob_cache:
            return self._frob_cache[key]
        if j == 0:
            imgs = tuple(tuple(1 if t == i else 0 for t in range(self.f)) for i in range(self.f))
        elif j == 1:
            y = self._frob_root(prec)
            imgs = [None] * self.f
            cur = self.witt(1, prec)
            imgs[0] = cur.co
            for i in range(1, self.f):
                cur = cur * y
                imgs[i] = cur.co
            imgs = tuple(imgs)
        else:
            prev = self._frob_images(prec, j - 1)
            one = self._frob_images(prec, 1)
            imgs = []
            for i in range(self.f):
                w = Witt(self, prev[i], prec)
                imgs.append(w._apply_images(one).co)
            imgs = tuple(imgs)
        self._frob_cache[key] = imgs
        return imgs

    def _frob_root(self, prec):
        """The root of h congruent to x^p mod p, found by Hensel lifting."""
        p, f = self.p, self.f
        if f == 1:
            return self.witt(0, prec)
        # start from x^p reduced mod (h, p)
        x = [0] * f
        x[1] = 1
        start = _poly_pow_mod_p(x, p, p, list(self.h))
        y = self.witt_from_coords(start, prec)
        hpoly = list(self.h) + [1]
        dcoeffs = [(i + 1) * hpoly[i + 1] for i in range(f)]
        for _ in range(prec + 1):
            hy = _witt_poly_eval(hpoly, y)
            if all(c == 0 for c in hy.co):
                break
            dy = _witt_poly_eval(dcoeffs, y)
            y = y - hy * dy.inverse()
        assert all(c == 0 for c in _witt_poly_eval(hpoly, y).co)
        return y

    def teichmuller_coords(self, idx, prec):
        key = (prec, idx)
        if key in self._teich_cache:
            return self._teich_cache[key]
        mod = self.p ** prec
        z = Witt(self, tuple((idx // self.p ** i) % self.p for i in range(self.f)), prec)
        for _ in range(prec + 1):
            znew = z ** self.q
            if znew.co == z.co:
                break
            z = znew
        assert (z ** self.q).co == z.co
        self._teich_cache[key] = z.co
        del mod
        return z.co

    # ------------------------------------------------------------------ Eis

    def eis(self, n):
        """n as an element of E, claimed at the contractual precision M = e*N."""
        return Eis.from_witt(self.witt(n, self.n_store)).with_precision(self.e * self.N)

    def eis_pi(self, t=1):
        """pi^t, claimed mod pi^(M + t) (t may be negative)."""
        return self.eis(1).pi_shift(t)

    def make_ap(self, c, unit=1):
        """a_p = pi^c * u with 1 <= c <= e-1 (so v(a_p) = c/e in (0,1)).

        ``unit`` is an integer or Witt unit.
        """
        if not 1 <= c <= self.e - 1:
            raise ValueError("need 1 <= c <= e-1 for a slope in (0,1)")
        u = unit if isinstance(unit, Witt) else self.witt(unit)
        if u.val() != 0:
            raise ValueError("unit part of a_p must be a unit")
        return Eis.from_witt(u).with_precision(self.e * self.N).pi_shift(c)

    # ------------------------------------------------------------- exterior

    def descriptor(self):
        return f"{self.p},{self.f},{self.N},{self.e},{'.'.join(map(str, self.h))}"

    def __repr__(self):
        return f"RingCtx(p={self.p}, f={self.f}, N={self.N}, e={self.e})"


class Fq:
    """Element of F_q, encoded by the integer sum of its digits times p^i."""

    __slots__ = ("ctx", "i")

    def __init__(self, ctx, i):
        self.ctx = ctx
        self.i = i

    def __add__(self, other):
        return Fq(self.ctx, self.ctx.fq_add[self.i][other.i])

    def __sub__(self, other):
        return Fq(self.ctx, self.ctx.fq_add[self.i][self.ctx.fq_neg[other.i]])

    def __neg__(self):
        return Fq(self.ctx, self.ctx.fq_neg[self.i])

    def __mul__(self, other):
        return Fq(self.ctx, self.ctx.fq_mul[self.i][other.i])

    def __pow__(self, n):
        if n < 0:
            return Fq(self.ctx, self.ctx.fq_pow_idx(self.ctx.fq_inv[self.i], -n))
        return Fq(self.ctx, self.ctx.fq_pow_idx(self.i, n))

    def inverse(self):
        if self.i == 0:
            raise ZeroDivisionError("inverse of 0 in F_q")
        return Fq(self.ctx, self.ctx.fq_inv[self.i])

    def frob(self, j=1):
        idx = self.i
        for _ in range(j % self.ctx.f):
            idx = self.ctx.fq_frob[idx]
        return Fq(self.ctx, idx)

    def is_zero(self):
        return self.i == 0

    def __eq__(self, other):
        return (isinstance(other, Fq) and self.i == other.i
                and self.ctx.p == other.ctx.p and self.ctx.f == other.ctx.f)

    def __hash__(self):
        return hash(("Fq", self.i))

    def __repr__(self):
        return f"Fq({self.i})"


def _witt_poly_eval(coeffs, y):
    """Evaluate a polynomial with integer coefficients at a Witt element."""
    acc = y.ctx.witt(0, y.k)
    for c in reversed(coeffs):
        acc = acc * y + y.ctx.witt(c, y.k)
    return acc


class Witt:
    """Element of W = (Z/p^k)[x]/(h): coordinates in the power basis of h's root."""

    __slots__ = ("ctx", "co", "k")

    def __init__(self, ctx, co, k):
        self.ctx = ctx
        self.co = co
        self.k = k

    def _mod(self):
        return self.ctx.p ** self.k

    def __add__(self, other):
        assert self.k == other.k
        m = self._mod()
        return Witt(self.ctx, tuple((a + b) % m for a, b in zip(self.co, other.co)), self.k)

    def __sub__(self, other):
        assert self.k == other.k
        m = self._mod()
        return Witt(self.ctx, tuple((a - b) % m for a, b in zip(self.co, other.co)), self.k)

    def __neg__(self):
        m = self._mod()
        return Witt(self.ctx, tuple((-a) % m for a in self.co), self.k)

    def __mul__(self, other):
        assert self.k == other.k
        f = self.ctx.f
        m = self._mod()
        if f == 1:
            return Witt(self.ctx, ((self.co[0] * other.co[0]) % m,), self.k)
        prod = [0] * (2 * f - 1)
        for i, ai in enumerate(self.co):
            if ai:
                for j, bj in enumerate(other.co):
                    prod[i + j] = (prod[i + j] + ai * bj) % m
        red = self.ctx._xpow_reductions(self.k)
        out = prod[:f]
        for t in range(f, 2 * f - 1):
            c = prod[t]
            if c:
                vec = red[t - f]
                out = [(o + c * v) % m for o, v in zip(out, vec)]
        return Witt(self.ctx, tuple(out), self.k)

    def __pow__(self, n):
        assert n >= 0
        result = self.ctx.witt(1, self.k)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def is_zero(self):
        return all(c == 0 for c in self.co)

    def val(self):
        """p-adic valuation; returns k (the precision) for the zero residue."""
        best = self.k
        for c in self.co:
            if c:
                v = 0
                while c % self.ctx.p == 0:
                    c //= self.ctx.p
                    v += 1
                best = min(best, v)
        return best

    def residue(self):
        p = self.ctx.p
        idx = sum((c % p) * p ** i for i, c in enumerate(self.co))
        return Fq(self.ctx, idx)

    def frob(self, j=1):
        return self._apply_images(self.ctx._frob_images(self.k, j))

    def _apply_images(self, imgs):
        m = self._mod()
        out = [0] * self.ctx.f
        for i, a in enumerate(self.co):
            if a:
                vec = imgs[i]
                out = [(o + a * v) % m for o, v in zip(out, vec)]
        return Witt(self.ctx, tuple(out), self.k)

    def inverse(self):
        """Inverse of a unit, by Newton lifting from the residue field."""
        r = self.residue()
        if r.i == 0:
            raise ZeroDivisionError("not a unit in W")
        zvec = r.inverse()
        z = self.ctx.witt_from_coords(
            tuple((zvec.i // self.ctx.p ** i) % self.ctx.p for i in range(self.ctx.f)), self.k)
        two = self.ctx.witt(2, self.k)
        for _ in range(self.k.bit_length() + 1):
            z = z * (two - self * z)
        assert (self * z).co == self.ctx.witt(1, self.k).co
        return z

    def divexact_p(self, t):
        """Exact division by p^t; the result lives at precision k - t."""
        pt = self.ctx.p ** t
        if any(c % pt for c in self.co):
            raise NonIntegralError(f"Witt element not divisible by p^{t}")
        if self.k - t < 1:
            raise PrecisionError("division by p exhausts Witt precision")
        m = self.ctx.p ** (self.k - t)
        return Witt(self.ctx, tuple((c // pt) % m for c in self.co), self.k - t)

    def reduce_to(self, k2):
        assert k2 <= self.k
        m = self.ctx.p ** k2
        return Witt(self.ctx, tuple(c % m for c in self.co), k2)

    def __eq__(self, other):
        return isinstance(other, Witt) and self.k == other.k and self.co == other.co

    def __hash__(self):
        return hash(("Witt", self.co, self.k))

    def __repr__(self):
        return f"Witt{self.co}@p^{self.k}"


def teichmuller(ctx, lam, prec=None):
    """Teichmuller lift [lam] in W: the unique fixed point of x -> x^q above lam."""
    prec = ctx.N if prec is None else prec
    return Witt(ctx, ctx.teichmuller_coords(lam.i, prec), prec)


def frobenius(ctx, w, j=1):
    """The Frobenius automorphism of W (lifting lambda -> lambda^p), iterated j times."""
    return w.frob(j)


class Eis:
    """Element of E = W[pi]/(pi^e - p), pi-adically truncated.

    Value = pi^(-sh) * sum co[i] pi^i, correct modulo pi^ap (ap counted in
    pi-digits relative to the value).  Digits at or above ap are stored as 0.
    """

    __slots__ = ("ctx", "sh", "co", "ap")

    def __init__(self, ctx, sh, co, ap):
        if ap <= 0:
            raise PrecisionError(
                "element lost all significant pi-adic digits; raise N")
        self.ctx = ctx
        self.sh = sh
        self.co = co
        self.ap = ap

    # -- construction ------------------------------------------------------

    @staticmethod
    def from_witt(w):
        ctx = w.ctx
        known = min(w.k, ctx.n_store)
        lifted = ctx.witt_from_coords(w.co, ctx.n_store)
        zero = ctx.witt(0, ctx.n_store)
        co = (lifted,) + (zero,) * (ctx.e - 1)
        ap = ctx.e * known
        return Eis(ctx, 0, _num_truncate(ctx, co, ap), ap)

    def with_precision(self, ap2):
        """Clamp the claimed absolute precision down to ap2 pi-digits."""
        if ap2 >= self.ap:
            return self
        return Eis(self.ctx, self.sh,
                   _num_truncate(self.ctx, self.co, ap2 + self.sh), ap2)

    def pi_shift(self, t):
        """Multiply by pi^t (t of either sign), exactly."""
        if t == 0:
            return self
        if t < 0:
            return Eis(self.ctx, self.sh - t, self.co, self.ap + t)
        co, sh = self.co, self.sh
        take = min(t, sh)
        sh -= take
        t -= take
        for _ in range(t):
            co = _num_shift_up1(self.ctx, co)
        ap = min(self.ap + take + t, self.ctx.e * self.ctx.n_store - sh)
        return Eis(self.ctx, sh, _num_truncate(self.ctx, co, ap + sh), ap)

    # -- digit helpers -----------------------------------------------------

    def _num_val(self):
        """Least pi-digit position of the numerator with a nonzero known digit.

        Returns None when all stored digits vanish.
        """
        e = self.ctx.e
        best = None
        for i, w in enumerate(self.co):
            v = w.val()
            if v < w.k:
                pos = i + e * v
                if best is None or pos < best:
                    best = pos
        return best

    def val(self):
        """Exact pi-adic valuation as an int, or None if indistinguishable from 0."""
        nv = self._num_val()
        if nv is None:
            return None
        return nv - self.sh

    def val_fraction(self):
        v = self.val()
        return None if v is None else Fraction(v, self.ctx.e)

    def val_floor(self):
        """Certified lower bound on the valuation, in pi-digits."""
        nv = self._num_val()
        return self.ap if nv is None else nv - self.sh

    def is_known_zero(self):
        return self._num_val() is None

    # -- ring operations ----------------------------------------------------

    def _aligned(self, other):
        sh = max(self.sh, other.sh)
        a, b = self.co, other.co
        for _ in range(sh - self.sh):
            a = _num_shift_up1(self.ctx, a)
        for _ in range(sh - other.sh):
            b = _num_shift_up1(self.ctx, b)
        return sh, a, b

    def __add__(self, other):
        sh, a, b = self._aligned(other)
        ap = min(self.ap, other.ap, self.ctx.e * self.ctx.n_store - sh)
        co = tuple(x + y for x, y in zip(a, b))
        return Eis(self.ctx, sh, _num_truncate(self.ctx, co, ap + sh), ap)

    def __sub__(self, other):
        sh, a, b = self._aligned(other)
        ap = min(self.ap, other.ap, self.ctx.e * self.ctx.n_store - sh)
        co = tuple(x - y for x, y in zip(a, b))
        return Eis(self.ctx, sh, _num_truncate(self.ctx, co, ap + sh), ap)

    def __neg__(self):
        return Eis(self.ctx, self.sh, tuple(-w for w in self.co), self.ap)

    def __mul__(self, other):
        ctx = self.ctx
        e = ctx.e
        va = self.val()
        vb = other.val()
        fa = self.ap if va is None else va
        fb = other.ap if vb is None else vb
        ap = min(fa + other.ap, fb + self.ap)
        sh = self.sh + other.sh
        if va is None or vb is None:
            # product is certified O(pi^ap); avoid building garbage digits
            zero = ctx.witt(0, ctx.n_store)
            return Eis(ctx, 0, (zero,) * e, min(ap, e * ctx.n_store))
        prod = [ctx.witt(0, ctx.n_store) for _ in range(e)]
        p_elt = ctx.witt(ctx.p, ctx.n_store)
        for i, wa in enumerate(self.co):
            if wa.is_zero():
                continue
            for j, wb in enumerate(other.co):
                if wb.is_zero():
                    continue
                t = i + j
                term = wa * wb
                if t >= e:
                    t -= e
                    term = term * p_elt
                prod[t] = prod[t] + term
        ap = min(ap, e * ctx.n_store - sh)
        out = Eis(ctx, sh, _num_truncate(ctx, tuple(prod), ap + sh), ap)
        return out._normalized()

    def _normalized(self):
        """Strip known-zero low digits into the shift (keeps sh small)."""
        if self.sh == 0:
            return self
        co, sh = self.co, self.sh
        while sh > 0:
            w0 = co[0]
            if w0.val() < 1:
                break
            co = _num_shift_down1(self.ctx, co)
            sh -= 1
        if sh == self.sh:
            return self
        return Eis(self.ctx, sh, _num_truncate(self.ctx, co, self.ap + sh), self.ap)

    def scale_int(self, n):
        return self * Eis.from_witt(self.ctx.witt(n))

    def __truediv__(self, other):
        """Exact division in E (negative valuations permitted)."""
        t = other.val()
        if t is None:
            raise PrecisionError("divisor is indistinguishable from zero")
        unit = other.pi_shift(-t)._normalized()
        inv = unit._unit_inverse()
        return (self * inv).pi_shift(-t)

    def div_integral(self, other):
        """Division that insists on an integral quotient.

        Raises NonIntegralError when v(self) < v(other); this is the checked
        variant used where only O_E-arithmetic is meaningful.
        """
        t = other.val()
        if t is None:
            raise PrecisionError("divisor is indistinguishable from zero")
        v = self.val()
        if v is not None and v < t:
            raise NonIntegralError(
                f"quotient has negative valuation {Fraction(v - t, self.ctx.e)}",
                valuation=Fraction(v - t, self.ctx.e))
        if v is None and self.val_floor() < t:
            raise PrecisionError("cannot certify integrality of the quotient")
        return self / other

    def _unit_inverse(self):
        ctx = self.ctx
        assert self.sh == 0 and self.co[0].val() == 0
        z = Eis.from_witt(self.co[0].inverse())
        two = ctx.eis(2)
        for _ in range((ctx.e * ctx.n_store).bit_length() + 1):
            z = two * z - self * z * z
            # rewritten from z*(2 - self*z) to reuse operator overloads
        return z

    def __pow__(self, n):
        assert n >= 0
        result = self.ctx.eis(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- reduction ----------------------------------------------------------

    def residue(self):
        """Image in F_q; certifies integrality first."""
        x = self._normalized()
        if x.sh > 0:
            v = x.val()
            raise NonIntegralError(
                f"coefficient has valuation {Fraction(v, self.ctx.e)} < 0",
                valuation=Fraction(v, self.ctx.e))
        return x.co[0].residue()

    def is_integral(self):
        x = self._normalized()
        return x.sh == 0

    def __eq__(self, other):
        if not isinstance(other, Eis):
            return NotImplemented
        return (self - other).is_known_zero()

    __hash__ = None

    def __repr__(self):
        v = self.val()
        vs = "0?" if v is None else str(Fraction(v, self.ctx.e))
        return f"Eis(val={vs}, sh={self.sh}, ap={self.ap})"


def _num_shift_up1(ctx, co):
    """Numerator times pi: (c_0,...,c_{e-1}) -> (p*c_{e-1}, c_0, ..., c_{e-2})."""
    if ctx.e == 1:
        p_elt = ctx.witt(ctx.p, ctx.n_store)
        return (co[0] * p_elt,)
    p_elt = ctx.witt(ctx.p, ctx.n_store)
    return (co[-1] * p_elt,) + co[:-1]


def _num_shift_down1(ctx, co):
    """Numerator divided by pi; requires p | c_0."""
    b = co[0].divexact_p(1)
    b = Witt(ctx, b.co, ctx.n_store)  # top storage digit is unknown: zero-filled
    if ctx.e == 1:
        return (b,)
    return co[1:] + (b,)


def _num_truncate(ctx, co, top):
    """Zero all numerator pi-digits at positions >= top."""
    e = ctx.e
    out = []
    for i, w in enumerate(co):
        keep = max(0, -(-(top - i) // e))  # ceil((top - i) / e)
        if keep >= ctx.n_store:
            out.append(w)
        elif keep <= 0:
            out.append(ctx.witt(0, ctx.n_store))
        else:
            m = ctx.p ** keep
            out.append(Witt(ctx, tuple(c % m for c in w.co), ctx.n_store))
    return tuple(out)


def valuation(ctx, x):
    """Normalized valuation of an Eis element, with v(p) = 1.

    Returns a Fraction, or None for elements indistinguishable from zero at
    working precision (i.e. valuation >= M/e is all that is known).
    """
    return x.val_fraction()


# --------------------------------------------------------------- ring tags

class FqRing:
    """Coefficient-ring adapter for F_q."""

    name = "Fq"

    def __init__(self, ctx):
        self.ctx = ctx

    def zero(self):
        return Fq(self.ctx, 0)

    def one(self):
        return Fq(self.ctx, 1)

    def from_int(self, n):
        return Fq(self.ctx, n % self.ctx.p)

    def p_power(self, t):
        return self.one() if t == 0 else self.zero()

    def teich(self, lam):
        return lam

    def is_zero(self, x):
        return x.i == 0

    def frob(self, x, j):
        return x.frob(j)


class WittRing:
    """Coefficient-ring adapter for W at a fixed precision."""

    name = "W"

    def __init__(self, ctx, prec=None):
        self.ctx = ctx
        self.prec = ctx.N if prec is None else prec

    def zero(self):
        return self.ctx.witt(0, self.prec)

    def one(self):
        return self.ctx.witt(1, self.prec)

    def from_int(self, n):
        return self.ctx.witt(n, self.prec)

    def p_power(self, t):
        return self.ctx.witt(self.ctx.p ** t, self.prec)

    def teich(self, lam):
        return teichmuller(self.ctx, lam, self.prec)

    def is_zero(self, x):
        return x.is_zero()

    def frob(self, x, j):
        return x.frob(j)


class EisRing:
    """Coefficient-ring adapter for the ramified extension.

    Constructors claim precision at the contractual window M = e*N; the
    extra storage digits only serve internal shifts.
    """

    name = "E"

    def __init__(self, ctx):
        self.ctx = ctx
        self._cap = ctx.e * ctx.N

    def zero(self):
        return self.ctx.eis(0)

    def one(self):
        return self.ctx.eis(1)

    def from_int(self, n):
        return self.ctx.eis(n)

    def p_power(self, t):
        return self.ctx.eis(1).pi_shift(self.ctx.e * t)

    def teich(self, lam):
        return Eis.from_witt(
            teichmuller(self.ctx, lam, self.ctx.n_store)).with_precision(self._cap)

    def is_zero(self, x):
        # a coefficient certified zero modulo pi is safe to drop from sparse maps
        return x.is_known_zero()

    def frob(self, x, j):
        return Eis(x.ctx, x.sh, tuple(w.frob(j) for w in x.co), x.ap)

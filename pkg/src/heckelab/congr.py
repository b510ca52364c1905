"""Binomial-coefficient congruence machinery.

Everything here is exact integer arithmetic reduced at the end; the sums
S_r and S_{r,b,m} that control which Hecke terms survive mod p, Lucas'
theorem, and the smoothing solver that upgrades a family of class sums from
vanishing mod p^t to vanishing mod p^n without moving the coefficients mod
p^t (in particular the extreme coefficients do not move at all).
"""

from __future__ import annotations

import itertools
from math import comb


def bracket(n, q):
    """The representative of n mod (q-1) in {1, ..., q-1}."""
    m = n % (q - 1)
    return q - 1 if m == 0 else m


def digits(n, p, length=None):
    out = []
    while n:
        out.append(n % p)
        n //= p
    if length is not None:
        out += [0] * (length - len(out))
    return out


def lucas_binom(n, k, p):
    """binom(n, k) mod p by Lucas' theorem (independent of math.comb)."""
    if k < 0 or k > n:
        return 0
    out = 1
    while n or k:
        nd, kd = n % p, k % p
        if kd > nd:
            return 0
        out = (out * comb(nd, kd)) % p
        n //= p
        k //= p
    return out


def index_box(r):
    return itertools.product(*(range(ri + 1) for ri in r))


def weight_of(j, p):
    return sum(ji * p ** i for i, ji in enumerate(j))


def sum_S_r(r, p):
    """The primed class sum of products binom(r_i, i_i) over i = a mod (q-1).

    Excludes (0,...,0) and r itself; the contract (Lemma on binomial sums)
    is that the result vanishes mod p.
    """
    f = len(r)
    q = p ** f
    a = bracket(weight_of(r, p), q)
    total = 0
    for i in index_box(r):
        if all(x == 0 for x in i) or tuple(i) == tuple(r):
            continue
        if bracket(weight_of(i, p), q) == a:
            prod = 1
            for ri, ii in zip(r, i):
                prod *= comb(ri, ii)
            total += prod
    return total % p


def sum_S_rbm(r, b, m, p):
    """Brute-force S_{r,b,m} and its closed form; returns (brute, closed) mod p.

    closed = prod binom(r_i, m_i) * (binom([a-m],[b-m]) + [all digits of
    [b-m] equal p-1]) with a = r mod (q-1).
    """
    f = len(r)
    q = p ** f
    total = 0
    for l in index_box(r):
        if weight_of(l, p) % (q - 1) == b % (q - 1):
            prod = 1
            for ri, li, mi in zip(r, l, m):
                prod *= comb(ri, li) * comb(li, mi)
            total += prod
    brute = total % p
    a = weight_of(r, p)
    mw = weight_of(m, p)
    am = bracket(a - mw, q)
    bm = bracket(b - mw, q)
    bdig = digits(bm, p, f)
    delta = 1 if all(d == p - 1 for d in bdig) else 0
    closed = 1
    for ri, mi in zip(r, m):
        closed *= comb(ri, mi)
    closed = (closed * (lucas_binom(am, bm, p) + delta)) % p
    return brute, closed


class HypothesisError(ValueError):
    """The beta family fails the mod-p^t class-sum hypotheses."""


def class_indices(r, c, p):
    q = p ** len(r)
    return [j for j in index_box(r) if bracket(weight_of(j, p), q) == bracket(c, q)]


def class_sum(beta, l):
    total = 0
    for j, bj in beta.items():
        prod = bj
        for ji, li in zip(j, l):
            if li:
                prod *= comb(ji, li)
        total += prod
    return total


def _solve_unit_system(A, b, mod, p):
    """Solve A x = b mod p^k by Gaussian elimination with unit pivots.

    A is invertible mod p by construction (tensor of matrices with unit
    determinant); a missing unit pivot is therefore a hard error.
    """
    n = len(A)
    M = [row[:] + [bv % mod] for row, bv in zip(A, b)]
    where = [None] * n
    used = set()
    for col in range(n):
        piv = None
        for row in range(n):
            if row in used:
                continue
            if M[row][col] % p != 0:
                piv = row
                break
        if piv is None:
            raise ArithmeticError("coefficient matrix is singular mod p")
        where[col] = piv
        used.add(piv)
        inv = pow(M[piv][col], -1, mod)
        M[piv] = [(x * inv) % mod for x in M[piv]]
        for row in range(n):
            if row != piv and M[row][col]:
                c = M[row][col]
                M[row] = [(x - c * y) % mod for x, y in zip(M[row], M[piv])]
    x = [0] * n
    for col in range(n):
        x[col] = M[where[col]][n]
    return x


def vanishing_solve(beta, r, c, m, t, n, p, lset=None):
    """Smooth a class-supported integer family: alpha = beta mod p^t with all
    class sums vanishing mod p^n.

    ``beta`` maps multi-indices (supported on the class of c mod q-1) to
    integers; ``m`` bounds the derivative orders: sums are taken against
    prod binom(j_i, l_i) for l in the box prod [0, m_i] (or an explicit
    ``lset``, e.g. the simplex used by the witness constructions).  The
    correction is supported on the special indices c_i + k_i(q-1), k in the
    same index set.
    """
    f = len(r)
    q = p ** f
    cb = bracket(c, q)
    cd = digits(cb, p, f)
    ls = list(lset) if lset is not None else list(itertools.product(*(range(x + 1) for x in m)))
    for i in range(f):
        mi = max(k[i] for k in ls)
        if r[i] <= cd[i] + mi * (q - 1):
            raise HypothesisError(f"r[{i}] = {r[i]} too small for c_i + m_i(q-1)")
    for j in beta:
        if bracket(weight_of(j, p), q) != cb:
            raise HypothesisError(f"beta supported off the class: {j}")
    sums = {l: class_sum(beta, l) for l in ls}
    pt = p ** t
    for l, s in sums.items():
        if s % pt:
            raise HypothesisError(f"class sum at l={l} is {s} != 0 mod p^{t}")
    if t >= n:
        return dict(beta)
    # special support j_k = c_digits + k (q-1), one gamma per k in ls
    specials = [tuple(cd[i] + k[i] * (q - 1) for i in range(f)) for k in ls]
    A = []
    for l in ls:
        row = []
        for jk in specials:
            prod = 1
            for ji, li in zip(jk, l):
                prod *= comb(ji, li)
            row.append(prod)
        A.append(row)
    mod = p ** (n - t)
    b = [(-(sums[l] // pt)) % mod for l in ls]
    gam = _solve_unit_system(A, b, mod, p)
    alpha = dict(beta)
    for jk, g in zip(specials, gam):
        if g:
            alpha[jk] = alpha.get(jk, 0) + pt * g
            if alpha[jk] == 0:
                del alpha[jk]
    pn = p ** n
    for l in ls:
        assert class_sum(alpha, l) % pn == 0
    return alpha


def simplex_lset(f, total=1):
    """The index set {l : sum l_i <= total} used by the witness constructions."""
    out = []
    for l in itertools.product(range(total + 1), repeat=f):
        if sum(l) <= total:
            out.append(l)
    return sorted(out)

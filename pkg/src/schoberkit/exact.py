"""Exact integer and rational linear algebra.

Everything in the toolkit reduces to this module: Smith/Hermite forms,
integer kernels and solves, rational solves, and matrix rank over Q.
Matrices are plain lists/tuples of Python ints or Fractions; no floats
appear anywhere.

Rank is the hot kernel (every derived Hom, microstalk and Cech computation
is a handful of ranks of sparse integer matrices); a compiled Cython
implementation is selected at import time when available, with a
pure-Python twin as fallback.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd

try:  # compiled hot kernel, see setup.py
    from ._rankcore import BACKEND as RANK_BACKEND, rank_sparse
except ImportError:  # pragma: no cover - depends on build environment
    from ._rankpy import BACKEND as RANK_BACKEND, rank_sparse

IntMatrix = tuple[tuple[int, ...], ...]


# ---------------------------------------------------------------------------
# vectors


def vec_add(u, v):
    return tuple(a + b for a, b in zip(u, v))


def vec_sub(u, v):
    return tuple(a - b for a, b in zip(u, v))


def vec_scale(c, u):
    return tuple(c * a for a in u)


def dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def vec_gcd(u) -> int:
    g = 0
    for a in u:
        g = gcd(g, a)
    return g


def primitive(u):
    """Primitive integer vector on the same ray (zero stays zero)."""
    g = vec_gcd(u)
    return tuple(u) if g <= 1 else tuple(a // g for a in u)


def clear_denominators(u):
    """Rational vector -> primitive integer vector on the same ray."""
    fr = [Fraction(a) for a in u]
    if all(f == 0 for f in fr):
        return tuple(0 for _ in fr)
    den = 1
    for f in fr:
        den = den * f.denominator // gcd(den, f.denominator)
    return primitive(tuple(int(f * den) for f in fr))


# ---------------------------------------------------------------------------
# matrices


def identity(n: int) -> IntMatrix:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def transpose(m):
    return tuple(zip(*m)) if m else ()


def mat_mul(a, b):
    bt = list(zip(*b))
    return tuple(tuple(dot(row, col) for col in bt) for row in a)


def mat_vec(a, v):
    return tuple(dot(row, v) for row in a)


def mat_neg(a):
    return tuple(tuple(-x for x in row) for row in a)


def _swap_rows(m, i, j):
    m[i], m[j] = m[j], m[i]


def hermite_normal_form(mat):
    """Row-style HNF with transform: returns (H, U) with U*mat = H.

    U is unimodular; H is in row echelon form with positive pivots and
    entries above each pivot reduced into [0, pivot).
    """
    rows = [list(r) for r in mat]
    m = len(rows)
    n = len(rows[0]) if m else 0
    u = [list(r) for r in identity(m)]
    pr = 0
    for col in range(n):
        piv = None
        for i in range(pr, m):
            if rows[i][col] != 0:
                if piv is None or abs(rows[i][col]) < abs(rows[piv][col]):
                    piv = i
        if piv is None:
            continue
        _swap_rows(rows, pr, piv)
        _swap_rows(u, pr, piv)
        # clear the column below by gcd steps
        while True:
            done = True
            for i in range(pr + 1, m):
                if rows[i][col] == 0:
                    continue
                q = rows[i][col] // rows[pr][col]
                if q:
                    rows[i] = [a - q * b for a, b in zip(rows[i], rows[pr])]
                    u[i] = [a - q * b for a, b in zip(u[i], u[pr])]
                if rows[i][col] != 0:
                    _swap_rows(rows, pr, i)
                    _swap_rows(u, pr, i)
                    done = False
            if done:
                break
        if rows[pr][col] < 0:
            rows[pr] = [-a for a in rows[pr]]
            u[pr] = [-a for a in u[pr]]
        for i in range(pr):
            q = rows[i][col] // rows[pr][col]
            if q:
                rows[i] = [a - q * b for a, b in zip(rows[i], rows[pr])]
                u[i] = [a - q * b for a, b in zip(u[i], u[pr])]
        pr += 1
        if pr == m:
            break
    return tuple(tuple(r) for r in rows), tuple(tuple(r) for r in u)


def smith_normal_form(mat):
    """Smith normal form with transforms: (U, D, V) with U*mat*V = D.

    D is diagonal with a divisibility chain d1 | d2 | ...; U, V are
    unimodular.  Total on integer matrices, including empty ones.
    """
    rows = [list(r) for r in mat]
    m = len(rows)
    n = len(rows[0]) if m else 0
    u = [list(r) for r in identity(m)]
    v = [list(r) for r in identity(n)]

    def col_op(j, k, q):  # col_j -= q * col_k
        for r in rows:
            r[j] -= q * r[k]
        for r in v:
            r[j] -= q * r[k]

    def col_swap(j, k):
        for r in rows:
            r[j], r[k] = r[k], r[j]
        for r in v:
            r[j], r[k] = r[k], r[j]

    def row_op(i, k, q):  # row_i -= q * row_k
        rows[i] = [a - q * b for a, b in zip(rows[i], rows[k])]
        u[i] = [a - q * b for a, b in zip(u[i], u[k])]

    t = 0
    while t < min(m, n):
        piv = None
        for i in range(t, m):
            for j in range(t, n):
                if rows[i][j] != 0 and (
                    piv is None or abs(rows[i][j]) < abs(rows[piv[0]][piv[1]])
                ):
                    piv = (i, j)
        if piv is None:
            break
        _swap_rows(rows, t, piv[0])
        _swap_rows(u, t, piv[0])
        col_swap(t, piv[1])
        while True:
            # clear row and column t
            for i in range(t + 1, m):
                if rows[i][t]:
                    row_op(i, t, rows[i][t] // rows[t][t])
            for j in range(t + 1, n):
                if rows[t][j]:
                    col_op(j, t, rows[t][j] // rows[t][t])
            if any(rows[i][t] for i in range(t + 1, m)) or any(
                rows[t][j] for j in range(t + 1, n)
            ):
                # a gcd step reduced a neighbour below the pivot; retry
                piv = None
                for i in range(t, m):
                    for j in range(t, n):
                        if rows[i][j] != 0 and (
                            piv is None
                            or abs(rows[i][j]) < abs(rows[piv[0]][piv[1]])
                        ):
                            piv = (i, j)
                _swap_rows(rows, t, piv[0])
                _swap_rows(u, t, piv[0])
                col_swap(t, piv[1])
                continue
            # divisibility fix: pivot must divide the rest of the block
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if rows[i][j] % rows[t][t]:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            rows[t] = [a + b for a, b in zip(rows[t], rows[bad])]
            u[t] = [a + b for a, b in zip(u[t], u[bad])]
        if rows[t][t] < 0:
            rows[t] = [-a for a in rows[t]]
            u[t] = [-a for a in u[t]]
        t += 1
    return (
        tuple(tuple(r) for r in u),
        tuple(tuple(r) for r in rows),
        tuple(tuple(r) for r in v),
    )


def det(mat) -> int:
    """Determinant of a square integer matrix (fraction-free Bareiss)."""
    a = [list(r) for r in mat]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            piv = next((i for i in range(k + 1, n) if a[i][k]), None)
            if piv is None:
                return 0
            a[k], a[piv] = a[piv], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def rank_int(mat) -> int:
    """Rank over Q of a dense integer matrix."""
    rows = []
    for r in mat:
        d = {j: x for j, x in enumerate(r) if x}
        if d:
            rows.append(d)
    return rank_sparse(rows)


def rank_frac(mat) -> int:
    """Rank over Q of a matrix with Fraction/int entries."""
    rows = []
    for r in mat:
        den = 1
        fr = [Fraction(x) for x in r]
        for x in fr:
            den = den * x.denominator // gcd(den, x.denominator)
        d = {j: int(x * den) for j, x in enumerate(fr) if x}
        if d:
            rows.append(d)
    return rank_sparse(rows)


def kernel_basis_int(mat):
    """Basis of the saturated integer kernel {x : mat @ x = 0}.

    Returned as a tuple of integer row vectors spanning ker over Z (and Q).
    """
    mt = transpose(mat)
    if not mt:  # zero columns
        return ()
    h, u = hermite_normal_form(mt)
    out = []
    for hr, ur in zip(h, u):
        if all(x == 0 for x in hr):
            out.append(tuple(ur))
    return tuple(out)


def solve_frac(mat, rhs):
    """One rational solution x of mat @ x = rhs, or None."""
    m = len(mat)
    n = len(mat[0]) if m else 0
    a = [[Fraction(x) for x in row] + [Fraction(rhs[i])] for i, row in enumerate(mat)]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        pv = a[r][c]
        a[r] = [x / pv for x in a[r]]
        for i in range(m):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if a[i][n] != 0:
            return None
    x = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        x[c] = a[i][n]
    return tuple(x)


def solve_int(mat, rhs):
    """One integer solution x of mat @ x = rhs, or None."""
    u, d, v = smith_normal_form(mat)
    ub = mat_vec(u, rhs)
    m = len(mat)
    n = len(mat[0]) if m else 0
    y = [0] * n
    for i in range(m):
        di = d[i][i] if i < min(m, n) else 0
        if di == 0:
            if ub[i] != 0:
                return None
        else:
            if ub[i] % di:
                return None
            y[i] = ub[i] // di
    return mat_vec(v, tuple(y))


def invert_frac(mat):
    """Inverse of a square matrix over Q (entries Fraction), or None."""
    n = len(mat)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(mat)]
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c] != 0), None)
        if piv is None:
            return None
        a[c], a[piv] = a[piv], a[c]
        pv = a[c][c]
        a[c] = [x / pv for x in a[c]]
        for i in range(n):
            if i != c and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return tuple(tuple(row[n:]) for row in a)


def saturate_rows(rows, n):
    """Basis of the saturation (span_Q of rows) cap Z^n, as rows."""
    if not rows:
        return ()
    ann = kernel_basis_int(tuple(tuple(r) for r in rows))
    if not ann:
        return identity(n)
    return kernel_basis_int(ann)


def lattice_membership(rows, v):
    """Is v in the Z-span of the given integer rows?"""
    if not rows:
        return all(x == 0 for x in v)
    sol = solve_int(transpose(rows), v)
    return sol is not None

# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled sparse exact-rank kernel (hot loop of every derived-Hom call).

Semantics match ``schoberkit._rankpy.rank_sparse`` exactly; values are
arbitrary-precision Python ints, so only loop and dict overhead is
compiled away.
"""
from math import gcd

BACKEND = "compiled"


def rank_sparse(rows):
    """Rank over Q of a sparse integer matrix given as dict rows."""
    cdef list work = [dict(r) for r in rows if r]
    cdef Py_ssize_t rank = 0
    cdef Py_ssize_t i, best_i, rlen
    cdef object best_c, c, v, f, pval, w, g
    while work:
        best_key = None
        best_i = -1
        best_c = -1
        for i in range(len(work)):
            r = work[i]
            rlen = len(r)
            for c, v in (<dict>r).items():
                a = v if v >= 0 else -v
                key = (0 if a == 1 else 1, rlen, a)
                if best_key is None or key < best_key:
                    best_key = key
                    best_i = i
                    best_c = c
            if best_key is not None and best_key[0] == 0 and best_key[1] == 1:
                break
        prow = work.pop(best_i)
        pval = prow[best_c]
        rank += 1
        nxt = []
        for r in work:
            f = (<dict>r).get(best_c)
            if f is None:
                nxt.append(r)
                continue
            nr = {}
            for c, v in (<dict>r).items():
                if c != best_c:
                    nr[c] = pval * v
            for c, v in (<dict>prow).items():
                if c == best_c:
                    continue
                w = nr.get(c, 0) - f * v
                if w:
                    nr[c] = w
                elif c in nr:
                    del nr[c]
            if nr:
                g = 0
                for v in nr.values():
                    g = gcd(g, v)
                    if g == 1:
                        break
                if g > 1:
                    for c in nr:
                        nr[c] //= g
                nxt.append(nr)
        work = nxt
    return rank

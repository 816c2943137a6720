"""Pure-Python sparse exact-rank kernel.

Fallback twin of the compiled ``_rankcore`` extension; both expose
``rank_sparse`` with identical semantics.  Rows are dicts ``col -> value``
with nonzero integer values; the rank is taken over the rationals, so rows
may be rescaled freely during elimination (fraction-free with gcd
reduction, pivots chosen to favour units and sparse rows).
"""
from math import gcd

BACKEND = "python"


def rank_sparse(rows):
    """Rank over Q of a sparse integer matrix given as dict rows."""
    work = [dict(r) for r in rows if r]
    rank = 0
    while work:
        best_key = None
        best_i = -1
        best_c = -1
        for i, r in enumerate(work):
            rlen = len(r)
            for c, v in r.items():
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
            f = r.get(best_c)
            if f is None:
                nxt.append(r)
                continue
            nr = {}
            for c, v in r.items():
                if c != best_c:
                    nr[c] = pval * v
            for c, v in prow.items():
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

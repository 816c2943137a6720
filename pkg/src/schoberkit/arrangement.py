"""Polyhedral arrangements in a box, with their face posets.

Cells are relatively open convex polyhedra, enumerated exactly by splitting
the open box along each hyperplane while tracking closure vertices.  The
reported poset contains only cells interior to the box; closure order is
signwise dominance.
"""
from __future__ import annotations

from fractions import Fraction

from .exact import rank_int
from .polyhedra import BoundedCell, PlaneRegistry, split_cells


class DegenerateBox(ValueError):
    pass


class PointOnBoxBoundary(ValueError):
    pass


class NotSubordinate(ValueError):
    pass


class Arrangement:
    """Face poset of a hyperplane arrangement restricted to an open box."""

    def __init__(self, n, planes, bounds):
        if len(bounds) != n or any(lo >= hi for lo, hi in bounds):
            raise DegenerateBox(f"invalid box {bounds}")
        self.n = n
        self.bounds = tuple((Fraction(a), Fraction(b)) for a, b in bounds)
        self.registry = PlaneRegistry()
        self.plane_index = {}
        cells = [BoundedCell.box(self.bounds, self.registry)]
        for normal, const in planes:
            key = self._plane_key(normal, const)
            if key in self.plane_index:
                continue
            idx = self.registry.add(key[0], key[1])
            self.plane_index[key] = idx
            cells = split_cells(self.registry, cells, idx)
        self.cells = cells
        self.signs = [c.signs for c in cells]
        self.by_sign = {c.signs: i for i, c in enumerate(cells)}
        self._dims = [c.dim(self.registry) for c in cells]
        self._bary = [c.barycenter() for c in cells]
        self._leq_cache = {}

    @staticmethod
    def _plane_key(normal, const):
        from .exact import primitive, vec_gcd

        normal = tuple(normal)
        const = Fraction(const)
        g = vec_gcd(normal)
        if g > 1:
            normal = tuple(x // g for x in normal)
            const = const / g
        # orient deterministically
        for x in normal:
            if x < 0:
                normal = tuple(-y for y in normal)
                const = -const
                break
            if x > 0:
                break
        return normal, const

    def __len__(self):
        return len(self.cells)

    def dim(self, i):
        return self._dims[i]

    def barycenter(self, i):
        return self._bary[i]

    def leq(self, i, j) -> bool:
        """Is cell i contained in the closure of cell j?"""
        key = (i, j)
        hit = self._leq_cache.get(key)
        if hit is not None:
            return hit
        si, sj = self.signs[i], self.signs[j]
        out = all(a == 0 or a == b for a, b in zip(si, sj))
        self._leq_cache[key] = out
        return out

    def star(self, i):
        return [j for j in range(len(self.cells)) if self.leq(i, j)]

    def plane_sign(self, cell_idx, normal, const):
        """Exact sign of the cell against an arbitrary hyperplane.

        Requires the hyperplane to miss the open cell or contain it
        (guaranteed when it is one of the arrangement planes).
        """
        key = self._plane_key(normal, const)
        idx = self.plane_index.get(key)
        if idx is None:
            raise NotSubordinate(
                f"hyperplane {normal}={const} not in the arrangement"
            )
        s = self.signs[cell_idx][idx]
        # undo the orientation normalization
        if key[0] != tuple(normal) or key[1] != Fraction(const):
            # the stored key may be scaled or flipped relative to the input
            scale_flip = _orientation(normal, const, key)
            return s * scale_flip
        return s

    def cell_of_point(self, x):
        x = tuple(Fraction(v) for v in x)
        for i in range(self.n):
            lo, hi = self.bounds[i]
            if not (lo < x[i] < hi):
                raise PointOnBoxBoundary(f"{x} not interior to the box")
        sig = []
        for k in range(len(self.registry)):
            v = self.registry.value(k, x)
            sig.append(0 if v == 0 else (1 if v > 0 else -1))
        idx = self.by_sign.get(tuple(sig))
        if idx is None:
            raise KeyError(f"no cell for point {x}")
        return idx

    def region_cells(self, region) -> set:
        """Cells inside a half-open region subordinate to the arrangement."""
        out = set()
        for i in range(len(self.cells)):
            ok = True
            for normal, const, strict in region.constraints:
                s = self.plane_sign(i, normal, const)
                if s < 0 or (strict and s == 0):
                    ok = False
                    break
            if ok:
                out.add(i)
        return out


def _orientation(normal, const, key):
    from .exact import vec_gcd

    normal = tuple(normal)
    g = vec_gcd(normal)
    if g > 1:
        normal = tuple(x // g for x in normal)
    return 1 if normal == key[0] else -1


class HalfOpenRegion:
    """Intersection of weak/strict half-spaces <u,x> >= c (or > c)."""

    def __init__(self, constraints):
        self.constraints = tuple(
            (tuple(u), Fraction(c), bool(strict)) for u, c, strict in constraints
        )

    def translate(self, v):
        return HalfOpenRegion(
            [
                (u, c + sum(a * b for a, b in zip(u, v)), s)
                for u, c, s in self.constraints
            ]
        )

    def contains_point(self, x) -> bool:
        for u, c, strict in self.constraints:
            val = sum(a * b for a, b in zip(u, x)) - c
            if val < 0 or (strict and val == 0):
                return False
        return True

    def planes(self):
        return [(u, c) for u, c, _ in self.constraints]

    def __repr__(self):
        bits = [
            f"<{','.join(map(str, u))}> {'>' if s else '>='} {c}"
            for u, c, s in self.constraints
        ]
        return "Region(" + " & ".join(bits) + ")"

    @staticmethod
    def open_cone_dual(cone, shift=None):
        """Interior of the dual cone of a fan cone, optionally translated.

        The region {m : <m, r> > 0 for rays r} (+ equations for lower
        dimensional duals handled through weak pairs).
        """
        cons = []
        shift = tuple(shift) if shift is not None else tuple(
            0 for _ in range(cone.n)
        )
        for r in cone.rays:
            c = sum(a * b for a, b in zip(r, shift))
            cons.append((tuple(r), Fraction(c), True))
        for l in cone.lines:
            c = sum(a * b for a, b in zip(l, shift))
            cons.append((tuple(l), Fraction(c), False))
            cons.append((tuple(-x for x in l), Fraction(-c), False))
        return HalfOpenRegion(cons)

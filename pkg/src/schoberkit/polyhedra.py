"""Exact rational polyhedral geometry.

Two engines live here:

* a double-description algorithm converting between generator and facet
  descriptions of rational polyhedral cones (``Cone``), and
* bounded-cell machinery that splits box-bounded polytopes along
  hyperplanes while tracking vertices exactly (used by the arrangement /
  cell-sheaf layer and by conic covering tests).

All coordinates are Python ints or Fractions; nothing here is numeric.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import gcd

from .exact import (
    dot,
    hermite_normal_form,
    kernel_basis_int,
    primitive,
    rank_int,
    vec_scale,
    vec_sub,
)


# ---------------------------------------------------------------------------
# double description


def _extreme_filter(n, rays, lines, constraints):
    """Keep rays that are extreme for the processed constraint set."""
    nl = len(lines)
    out = []
    for r in rays:
        tight = [c for c in constraints if dot(c, r) == 0]
        if rank_int(tight) >= n - nl - 1:
            out.append(r)
    return out


def dd_from_inequalities(n, ineqs, eqs=()):
    """Generators (lines, rays) of {x : <a,x> >= 0, <e,x> = 0}.

    Classic double description with lineality handling; small inputs only.
    """
    lines = [tuple(r) for r in _identity_rows(n)]
    rays: list[tuple] = []
    processed: list[tuple] = []
    todo = [(tuple(e), True) for e in eqs] + [(tuple(a), False) for a in ineqs]
    for a, is_eq in todo:
        if all(x == 0 for x in a):
            continue
        if is_eq:
            steps = [a, tuple(-x for x in a)]
        else:
            steps = [a]
        for b in steps:
            processed.append(b)
            lv = [dot(b, l) for l in lines]
            pivot = next((i for i in range(len(lines)) if lv[i] != 0), None)
            if pivot is not None:
                l0 = lines[pivot]
                v0 = lv[pivot]
                if v0 < 0:
                    l0 = tuple(-x for x in l0)
                    v0 = -v0
                new_lines = []
                for i, l in enumerate(lines):
                    if i == pivot:
                        continue
                    w = primitive(
                        vec_sub(vec_scale(v0, l), vec_scale(lv[i], l0))
                    )
                    if any(w):
                        new_lines.append(w)
                lines = new_lines
                rays = [
                    primitive(vec_sub(vec_scale(v0, r), vec_scale(dot(b, r), l0)))
                    for r in rays
                ]
                rays = [r for r in rays if any(r)]
                rays.append(l0)
                rays = _dedupe(rays)
                continue
            pos = [r for r in rays if dot(b, r) > 0]
            zero = [r for r in rays if dot(b, r) == 0]
            neg = [r for r in rays if dot(b, r) < 0]
            if not neg:
                rays = pos + zero
                continue
            combined = []
            for p in pos:
                for q in neg:
                    if not _adjacent(n, p, q, lines, processed):
                        continue
                    w = primitive(
                        vec_sub(vec_scale(dot(b, p), q), vec_scale(dot(b, q), p))
                    )
                    if any(w):
                        combined.append(w)
            rays = _dedupe(pos + zero + combined)
    rays = _extreme_filter(n, rays, lines, processed)
    return _canon_lines(lines), tuple(sorted(_dedupe(rays)))


def _identity_rows(n):
    return [tuple(1 if i == j else 0 for j in range(n)) for i in range(n)]


def _dedupe(rays):
    seen = []
    have = set()
    for r in rays:
        if r not in have:
            have.add(r)
            seen.append(r)
    return seen


def _adjacent(n, p, q, lines, processed):
    tight = [c for c in processed if dot(c, p) == 0 and dot(c, q) == 0]
    return rank_int(tight) >= n - len(lines) - 2


def _canon_lines(lines):
    lines = [l for l in lines if any(l)]
    if not lines:
        return ()
    h, _ = hermite_normal_form(tuple(lines))
    return tuple(sorted(tuple(r) for r in h if any(r)))


# ---------------------------------------------------------------------------
# cones


@dataclass(frozen=True)
class Cone:
    """Rational polyhedral cone with both descriptions kept in sync.

    ``rays``/``lines`` generate the cone; ``facets``/``equations`` cut it
    out.  Construction canonicalizes both sides through double description,
    so equality and hashing are structural.
    """

    n: int
    rays: tuple
    lines: tuple
    facets: tuple
    equations: tuple

    @staticmethod
    def from_rays(n, rays, lines=()):
        rays = [primitive(tuple(r)) for r in rays]
        rays = [r for r in rays if any(r)]
        lines = [primitive(tuple(l)) for l in lines if any(l)]
        # dual description: facets/equations of the primal
        eqs, facets = dd_from_inequalities(n, rays, lines)
        # re-derive canonical generators from the facet description
        clines, crays = dd_from_inequalities(n, facets, eqs)
        return Cone(n, crays, clines, tuple(sorted(facets)), eqs)

    @staticmethod
    def from_inequalities(n, ineqs, eqs=()):
        lines, rays = dd_from_inequalities(n, ineqs, eqs)
        return Cone.from_rays(n, rays, lines)

    @staticmethod
    def zero(n):
        return Cone.from_rays(n, ())

    @staticmethod
    def full(n):
        return Cone.from_rays(n, _identity_rows(n), _identity_rows(n))

    # -- predicates

    @property
    def dim(self):
        return self.n - len(self.equations)

    @property
    def is_strongly_convex(self):
        return not self.lines

    @property
    def is_zero(self):
        return not self.rays and not self.lines

    def contains_point(self, x) -> bool:
        return all(dot(f, x) >= 0 for f in self.facets) and all(
            dot(e, x) == 0 for e in self.equations
        )

    def interior_contains_point(self, x) -> bool:
        """Relative-interior membership."""
        return all(dot(f, x) > 0 for f in self.facets) and all(
            dot(e, x) == 0 for e in self.equations
        )

    def contains_cone(self, other: "Cone") -> bool:
        gens = list(other.rays) + list(other.lines) + [
            tuple(-x for x in l) for l in other.lines
        ]
        return all(self.contains_point(g) for g in gens)

    # -- constructions

    def dual(self) -> "Cone":
        return Cone.from_inequalities(self.n, self.rays, self.lines)

    def intersection(self, other: "Cone") -> "Cone":
        return Cone.from_inequalities(
            self.n,
            tuple(self.facets) + tuple(other.facets),
            tuple(self.equations) + tuple(other.equations),
        )

    def minus(self) -> "Cone":
        return Cone.from_rays(
            self.n, [tuple(-x for x in r) for r in self.rays], self.lines
        )

    def perp_basis(self):
        """Integer basis of the annihilator of span(cone) in the dual."""
        gens = tuple(self.rays) + tuple(self.lines)
        if not gens:
            return tuple(_identity_rows(self.n))
        return kernel_basis_int(gens)

    def relint_point(self):
        if self.is_zero:
            return tuple(0 for _ in range(self.n))
        acc = [0] * self.n
        for r in self.rays:
            acc = [a + x for a, x in zip(acc, r)]
        if not any(acc) and self.lines:
            acc = list(self.lines[0])
        return tuple(acc)

    def faces(self):
        """All faces, including the cone itself and its minimal face."""
        seen = {}
        for k in range(len(self.facets) + 1):
            for subset in combinations(range(len(self.facets)), k):
                eqs = tuple(self.equations) + tuple(
                    self.facets[i] for i in subset
                )
                f = Cone.from_inequalities(self.n, self.facets, eqs)
                seen.setdefault((f.rays, f.lines), f)
        return sorted(seen.values(), key=lambda c: (c.dim, c.rays, c.lines))

    def facet_cones(self):
        out = []
        for f in self.faces():
            if f.dim == self.dim - 1:
                out.append(f)
        return out

    def is_face_of(self, other: "Cone") -> bool:
        if not other.contains_cone(self):
            return False
        return any(self == f for f in other.faces())

    def key(self):
        return (self.rays, self.lines)

    def __repr__(self):
        if self.is_zero:
            return f"Cone0(dim {self.n})"
        parts = [",".join(map(str, r)) for r in self.rays]
        if self.lines:
            parts += ["±" + ",".join(map(str, l)) for l in self.lines]
        return "Cone(" + "; ".join(parts) + ")"


def cone_hull(n, cones):
    rays = []
    lines = []
    for c in cones:
        rays.extend(c.rays)
        lines.extend(c.lines)
    return Cone.from_rays(n, rays, lines)


# ---------------------------------------------------------------------------
# bounded cells with exact vertex tracking


class PlaneRegistry:
    """Registered affine hyperplanes <u,x> = c, indexed by insertion order."""

    def __init__(self):
        self.normals = []
        self.consts = []
        self._cnum = []
        self._cden = []

    def add(self, normal, const) -> int:
        self.normals.append(tuple(normal))
        c = Fraction(const)
        self.consts.append(c)
        self._cnum.append(c.numerator)
        self._cden.append(c.denominator)
        return len(self.normals) - 1

    def value(self, idx, point):
        return (
            sum(a * x for a, x in zip(self.normals[idx], point))
            - self.consts[idx]
        )

    def scaled_value(self, idx, nums, den):
        """Integer with the sign of <u, nums/den> - c."""
        return self._cden[idx] * sum(
            a * x for a, x in zip(self.normals[idx], nums)
        ) - self._cnum[idx] * den

    def __len__(self):
        return len(self.normals)


class BoundedCell:
    """Open convex cell inside a box, carried as closure vertices.

    Each vertex is (nums, den, tightset): the point nums/den with den > 0
    and gcd-reduced, and tightset the registry planes through the point
    (negative ids encode box facets).  Splitting along a hyperplane is
    integer arithmetic; no linear programming anywhere.
    """

    __slots__ = ("verts", "signs")

    def __init__(self, verts, signs):
        self.verts = verts
        self.signs = signs  # tuple of -1/0/+1 per registered plane

    @staticmethod
    def box(bounds, registry):
        """Cell for the open box; box facets get ids -1, -2, ..."""
        n = len(bounds)
        den = 1
        for lo, hi in bounds:
            den = den * Fraction(lo).denominator // gcd(den, Fraction(lo).denominator)
            den = den * Fraction(hi).denominator // gcd(den, Fraction(hi).denominator)
        corners = []
        for mask in range(1 << n):
            nums = tuple(
                int(Fraction(bounds[i][1] if (mask >> i) & 1 else bounds[i][0]) * den)
                for i in range(n)
            )
            tight = set()
            for i in range(n):
                if (mask >> i) & 1:
                    tight.add(-(2 * i + 2))  # upper facet of axis i
                else:
                    tight.add(-(2 * i + 1))  # lower facet of axis i
            corners.append(_norm_vertex(nums, den, frozenset(tight)))
        return BoundedCell(corners, ())

    def barycenter(self):
        n = len(self.verts[0][0])
        k = len(self.verts)
        return tuple(
            sum(Fraction(v[0][i], v[1]) for v in self.verts) / k
            for i in range(n)
        )

    def dim(self, registry):
        zero_normals = [
            registry.normals[i] for i, s in enumerate(self.signs) if s == 0
        ]
        n = len(registry.normals[0]) if registry.normals else len(self.verts[0][0])
        return n - rank_int(zero_normals)

    def split(self, registry, plane_idx):
        """Split along registered plane; returns dict sign -> BoundedCell."""
        vals = [
            registry.scaled_value(plane_idx, nums, den)
            for nums, den, _ in self.verts
        ]
        verts = [
            (nums, den, (t | {plane_idx}) if v == 0 else t)
            for (nums, den, t), v in zip(self.verts, vals)
        ]
        has_pos = any(v > 0 for v in vals)
        has_neg = any(v < 0 for v in vals)
        if not (has_pos and has_neg):
            if not has_pos and not has_neg:
                sign = 0
            else:
                sign = 1 if has_pos else -1
            return {sign: BoundedCell(verts, self.signs + (sign,))}
        n = len(registry.normals[plane_idx])
        cuts = []
        m = len(verts)
        for i in range(m):
            for j in range(i + 1, m):
                si, sj = vals[i], vals[j]
                if not ((si > 0 and sj < 0) or (si < 0 and sj > 0)):
                    continue
                common = verts[i][2] & verts[j][2]
                if not self._edge_rank(common, registry, n):
                    continue
                nv, dv, _ = verts[i]
                nw, dw, _ = verts[j]
                # true values are si/(dv*cden), sj/(dw*cden); the cut
                # parameter t = vi/(vi - vj) = si*dw / (si*dw - sj*dv)
                tn = si * dw
                td = si * dw - sj * dv
                # p = v + t (w - v), over a common denominator
                den = dv * dw * td
                nums = tuple(
                    nw[k] * dv * tn + nv[k] * dw * (td - tn)
                    for k in range(n)
                )
                if den < 0:
                    den = -den
                    nums = tuple(-x for x in nums)
                tight = set(common)
                tight.add(plane_idx)
                for k in range(len(registry)):
                    if k != plane_idx and registry.scaled_value(k, nums, den) == 0:
                        tight.add(k)
                cuts.append(_norm_vertex(nums, den, frozenset(tight)))
        cuts = _dedupe_verts(cuts)
        on = [vt for vt, v in zip(verts, vals) if v == 0]
        posv = [vt for vt, v in zip(verts, vals) if v > 0]
        negv = [vt for vt, v in zip(verts, vals) if v < 0]
        return {
            1: BoundedCell(_dedupe_verts(posv + on + cuts), self.signs + (1,)),
            0: BoundedCell(_dedupe_verts(on + cuts), self.signs + (0,)),
            -1: BoundedCell(_dedupe_verts(negv + on + cuts), self.signs + (-1,)),
        }

    @staticmethod
    def _edge_rank(common_tight, registry, n):
        rows = []
        for idx in common_tight:
            if idx < 0:
                axis = (-idx - 1) // 2
                rows.append(
                    tuple(1 if i == axis else 0 for i in range(n))
                )
            else:
                rows.append(registry.normals[idx])
        return rank_int(rows) == n - 1

    def min_value(self, normal, const):
        """min of <normal,x> - const over the closure."""
        return min(
            Fraction(sum(a * x for a, x in zip(normal, nums)), den) - const
            for nums, den, _ in self.verts
        )

    def max_value(self, normal, const):
        return max(
            Fraction(sum(a * x for a, x in zip(normal, nums)), den) - const
            for nums, den, _ in self.verts
        )


def _norm_vertex(nums, den, tight):
    g = den
    for x in nums:
        g = gcd(g, x)
        if g == 1:
            break
    if g > 1:
        nums = tuple(x // g for x in nums)
        den //= g
    return (nums, den, tight)


def _dedupe_verts(verts):
    out = []
    seen = set()
    for nums, den, t in verts:
        key = (nums, den)
        if key not in seen:
            seen.add(key)
            out.append((nums, den, t))
    return out


def split_cells(registry, cells, plane_idx, keep_signs=(-1, 0, 1)):
    nxt = []
    for cell in cells:
        for sign, sub in cell.split(registry, plane_idx).items():
            if sign in keep_signs:
                nxt.append(sub)
    return nxt


def cone_difference_sample(cone: Cone, others, allow_zero=False):
    """A rational point of cone \\ union(others), or None if covered.

    Conic scaling lets us work inside the unit box.  When ``allow_zero`` is
    false the origin does not count as uncovered (used for comparisons away
    from the zero section).
    """
    n = cone.n
    registry = PlaneRegistry()
    seen_planes = set()
    cells = [BoundedCell.box([(-1, 1)] * n, registry)]
    for eq in cone.equations:
        seen_planes.add(tuple(eq))
        idx = registry.add(eq, 0)
        cells = split_cells(registry, cells, idx, keep_signs=(0,))
    for f in cone.facets:
        seen_planes.add(tuple(f))
        idx = registry.add(f, 0)
        cells = split_cells(registry, cells, idx, keep_signs=(0, 1))
    for other in others:
        for f in tuple(other.facets) + tuple(other.equations):
            f = tuple(f)
            if f in seen_planes or tuple(-x for x in f) in seen_planes:
                continue
            seen_planes.add(f)
            idx = registry.add(f, 0)
            cells = split_cells(registry, cells, idx)
    for cell in cells:
        p = cell.barycenter()
        if not allow_zero and all(x == 0 for x in p):
            continue
        if not cone.contains_point(p):
            continue
        if any(o.contains_point(p) for o in others):
            continue
        return p
    return None


def _registry_index(registry, normal):
    normal = tuple(normal)
    for i, u in enumerate(registry.normals):
        if u == normal and registry.consts[i] == 0:
            return i
    return registry.add(normal, 0)

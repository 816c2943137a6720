"""Arrangement-independent sheaf descriptions and the user-facing engine.

A ``FormalSheaf`` is a bounded complex whose terms are formal sums of
indicator sheaves of half-open convex regions, with differentials given by
scalar matrices of canonical inclusion maps.  Indicators, shifts and cones
stay in this class; realization on an arrangement produces the resolved
object of :mod:`cellsheaf` through a truncation-by-cones recursion, so all
realized differentials are strict.

On top of realization this module provides derived sections over open cell
unions, stalks, microstalks, singular-support strata, refinement, and the
per-character torus Homs with their two-box stabilization certificate.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .arrangement import Arrangement, HalfOpenRegion
from .cellsheaf import (
    ModComplex,
    Module,
    NonGenericCovector,
    NotASheafMap,
    Resolved,
    StabilizationFailed,
    _mat,
    cone_resolved,
    direct_sum_modules,
    indicator_module,
    resolve_module,
    rhom_resolved,
    shift_resolved,
    single_module_complex,
)
from .exact import primitive
from .polyhedra import Cone


class NotARefinement(ValueError):
    pass


@dataclass(frozen=True)
class FormalSheaf:
    """Bounded complex of formal sums of half-open indicator sheaves."""

    terms: tuple  # tuple of (degree, tuple[HalfOpenRegion, ...])
    diffs: tuple  # tuple of (degree, matrix) with scalar Fraction entries

    @staticmethod
    def indicator(region: HalfOpenRegion, degree=0) -> "FormalSheaf":
        return FormalSheaf(((degree, (region,)),), ())

    def term_map(self):
        return dict(self.terms)

    def diff_map(self):
        return dict(self.diffs)

    def degrees(self):
        return sorted(k for k, regs in self.terms if regs)

    def shift(self, s: int) -> "FormalSheaf":
        sign = -1 if s % 2 else 1
        terms = tuple((k - s, regs) for k, regs in self.terms)
        diffs = tuple(
            (k - s, tuple(tuple(sign * x for x in row) for row in m))
            for k, m in self.diffs
        )
        return FormalSheaf(terms, diffs)

    def translate(self, v) -> "FormalSheaf":
        terms = tuple(
            (k, tuple(r.translate(v) for r in regs)) for k, regs in self.terms
        )
        return FormalSheaf(terms, self.diffs)

    def planes(self):
        out = []
        for _, regs in self.terms:
            for r in regs:
                out.extend(r.planes())
        return out

    def truncate_below(self, top: int) -> "FormalSheaf":
        return FormalSheaf(
            tuple((k, regs) for k, regs in self.terms if k < top),
            tuple((k, m) for k, m in self.diffs if k + 1 < top),
        )


def formal_cone(phi, src: FormalSheaf, dst: FormalSheaf) -> FormalSheaf:
    """cone(phi)^k = src^{k+1} (+) dst^k, phi a dict degree -> scalar matrix.

    phi[k] has rows indexed by dst summands of degree k, columns by src
    summands of degree k.
    """
    smap, dmap = src.term_map(), dst.term_map()
    sdif, ddif = src.diff_map(), dst.diff_map()
    degs = sorted({k - 1 for k in smap} | set(dmap))
    terms = []
    for k in degs:
        terms.append((k, tuple(smap.get(k + 1, ())) + tuple(dmap.get(k, ()))))
    tmap = dict(terms)
    diffs = []
    for k in degs:
        if k + 1 not in tmap:
            continue
        na = len(smap.get(k + 1, ()))
        nb = len(dmap.get(k, ()))
        na2 = len(smap.get(k + 2, ()))
        nb2 = len(dmap.get(k + 1, ()))
        rows = [[Fraction(0)] * (na + nb) for _ in range(na2 + nb2)]
        da = sdif.get(k + 1)
        if da is not None:
            for i in range(na2):
                for j in range(na):
                    rows[i][j] = -Fraction(da[i][j])
        pk = phi.get(k + 1)
        if pk is not None:
            for i in range(nb2):
                for j in range(na):
                    rows[na2 + i][j] = Fraction(pk[i][j])
        db = ddif.get(k)
        if db is not None:
            for i in range(nb2):
                for j in range(nb):
                    rows[na2 + i][na + j] = Fraction(db[i][j])
        if any(any(r) for r in rows):
            diffs.append((k, _mat(rows)))
    return FormalSheaf(tuple(terms), tuple(diffs))


def cech_glued_complex(regions_by_subset, top_degree=0) -> FormalSheaf:
    """Alternating Cech complex of indicator sheaves.

    ``regions_by_subset`` maps frozensets of cover indices to regions; the
    |I|-term sits in degree |I| - 1 + top_degree, differentials are signed
    canonical inclusions (regions must grow with the subset).
    """
    sizes = sorted({len(s) for s in regions_by_subset})
    by_size = {
        p: sorted(
            (s for s in regions_by_subset if len(s) == p),
            key=lambda s: tuple(sorted(s)),
        )
        for p in sizes
    }
    terms = []
    for p in sizes:
        terms.append(
            (
                top_degree + p - 1,
                tuple(regions_by_subset[s] for s in by_size[p]),
            )
        )
    diffs = []
    for p in sizes:
        if p + 1 not in by_size:
            continue
        src = by_size[p]
        dst = by_size[p + 1]
        rows = [[Fraction(0)] * len(src) for _ in range(len(dst))]
        for i, big in enumerate(dst):
            ordered = tuple(sorted(big))
            for drop in range(len(ordered)):
                small = frozenset(ordered) - {ordered[drop]}
                if small in regions_by_subset:
                    j = src.index(small)
                    rows[i][j] = Fraction(-1 if drop % 2 else 1)
        diffs.append((top_degree + p - 1, _mat(rows)))
    return FormalSheaf(tuple(terms), tuple(diffs))


# ---------------------------------------------------------------------------
# realization


class SheafContext:
    """Realization cache on one arrangement."""

    def __init__(self, arr: Arrangement):
        self.arr = arr
        self._indicator_cache = {}
        self._formal_cache = {}

    def indicator_resolved(self, region: HalfOpenRegion, degree=0) -> Resolved:
        key = (region.constraints, degree)
        hit = self._indicator_cache.get(key)
        if hit is None:
            cells = self.arr.region_cells(region)
            mod = indicator_module(self.arr, cells)
            hit = resolve_module(self.arr, mod, degree)
            self._indicator_cache[key] = hit
        return hit

    def realize(self, fs: FormalSheaf) -> Resolved:
        key = (fs.terms, fs.diffs)
        hit = self._formal_cache.get(key)
        if hit is None:
            hit = self._realize(fs)
            self._formal_cache[key] = hit
        return hit

    def _realize_term(self, degree, regions) -> Resolved:
        if len(regions) == 1:
            return self.indicator_resolved(regions[0], degree)
        parts = [self.indicator_resolved(r, degree) for r in regions]
        mods = [p.complex.term(degree) for p in parts]
        total, offs = direct_sum_modules(self.arr, mods)
        gens = []
        eps = []
        for p, off in zip(parts, offs):
            for j, c in enumerate(p.proj.gens[degree]):
                gens.append(c)
                base = off.get(c, 0)
                vec = [Fraction(0)] * total.dim(c)
                src = p.eps[degree][j]
                for i, x in enumerate(src):
                    vec[base + i] = x
                eps.append(tuple(vec))
        # lower levels: block union with index offsets
        from .cellsheaf import ProjComplex

        all_gens = {degree: gens}
        all_eps = {degree: eps}
        diffs = {}
        lvl = 1
        while True:
            k = degree - lvl
            lists = [p.proj.gens.get(k, []) for p in parts]
            if not any(lists):
                break
            all_gens[k] = [c for lst in lists for c in lst]
            all_eps[k] = [() for lst in lists for _ in lst]
            rows_total = sum(len(p.proj.gens.get(k + 1, [])) for p in parts)
            cols_total = sum(len(lst) for lst in lists)
            rows = [[Fraction(0)] * cols_total for _ in range(rows_total)]
            roff = 0
            coff = 0
            for p in parts:
                nr = len(p.proj.gens.get(k + 1, []))
                nc = len(p.proj.gens.get(k, []))
                blk = p.proj.diffs.get(k)
                if blk is not None:
                    for i in range(nr):
                        for j in range(nc):
                            rows[roff + i][coff + j] = blk[i][j]
                roff += nr
                coff += nc
            diffs[k] = _mat(rows)
            lvl += 1
        return Resolved(
            single_module_complex(total, degree),
            ProjComplex(self.arr, all_gens, diffs),
            all_eps,
        )

    def _realize(self, fs: FormalSheaf) -> Resolved:
        degs = fs.degrees()
        tmap = fs.term_map()
        if not degs:
            empty = Module(self.arr, {}, {})
            from .cellsheaf import ProjComplex

            return Resolved(
                single_module_complex(empty, 0),
                ProjComplex(self.arr, {}, {}),
                {},
            )
        if len(degs) == 1:
            return self._realize_term(degs[0], tmap[degs[0]])
        b = degs[-1]
        trunc = self.realize(fs.truncate_below(b))
        top = self._realize_term(b, tmap[b])
        shifted = shift_resolved(trunc, -1)
        # strict chain map u: shifted -> top with only component in degree b,
        # namely the formal differential d^{b-1} as a module map
        dmat = fs.diff_map().get(b - 1)
        phi = {}
        if dmat is not None:
            comps = self._formal_matrix_components(
                tmap[b - 1], tmap[b], dmat,
                shifted.complex.term(b), top.complex.term(b),
            )
            phi = {b: comps}
        return cone_resolved(phi, shifted, top)

    def _formal_matrix_components(self, src_regs, dst_regs, dmat,
                                  src_mod: Module, dst_mod: Module):
        """Cellwise matrices of a scalar matrix of canonical inclusions."""
        arr = self.arr
        src_cells = [arr.region_cells(r) for r in src_regs]
        dst_cells = [arr.region_cells(r) for r in dst_regs]
        for i in range(len(dst_regs)):
            for j in range(len(src_regs)):
                if dmat[i][j] and not src_cells[j] <= dst_cells[i]:
                    raise NotASheafMap(
                        "canonical map requires source region inside target"
                    )
        comps = {}
        cells = set(src_mod.dims) | set(dst_mod.dims)
        # per-summand offsets inside the direct sums (indicators are rank 1)
        for c in cells:
            sidx = [j for j in range(len(src_regs)) if c in src_cells[j]]
            didx = [i for i in range(len(dst_regs)) if c in dst_cells[i]]
            if src_mod.dim(c) != len(sidx) or dst_mod.dim(c) != len(didx):
                raise RuntimeError("summand bookkeeping mismatch")
            rows = [
                [Fraction(dmat[i][j]) for j in sidx] for i in didx
            ]
            if any(any(r) for r in rows):
                comps[c] = _mat(rows)
        return comps


# ---------------------------------------------------------------------------
# derived functors


def rhom(ctx: SheafContext, f: FormalSheaf, g: FormalSheaf) -> dict:
    rf = ctx.realize(f)
    rg = ctx.realize(g)
    return rhom_resolved(rf, rg.complex)


def stalk(ctx: SheafContext, f: FormalSheaf, point) -> dict:
    c = ctx.arr.cell_of_point(point)
    return ctx.realize(f).complex.stalk_dims(c)


def _upward_closed(arr, cells):
    cells = set(cells)
    for c in cells:
        for d in range(len(arr)):
            if arr.leq(c, d) and d not in cells:
                return False
    return True


def sections(ctx: SheafContext, f: FormalSheaf, cells) -> dict:
    """RGamma over an open (upward closed) union of cells."""
    arr = ctx.arr
    if not _upward_closed(arr, cells):
        raise ValueError("sections need an open (upward closed) cell union")
    u = resolve_module(arr, indicator_module(arr, set(cells)))
    return rhom_resolved(u, ctx.realize(f).complex)


def open_star(arr: Arrangement, c) -> set:
    return {d for d in range(len(arr)) if arr.leq(c, d)}


def microstalk(ctx: SheafContext, f: FormalSheaf, point, covector) -> dict:
    """Graded dims of the local Morse group of f at (point, covector)."""
    arr = ctx.arr
    covector = tuple(covector)
    if not any(covector):
        raise NonGenericCovector("zero covector")
    c = arr.cell_of_point(point)
    t = sum(a * b for a, b in zip(covector, point))
    star = open_star(arr, c)
    sub = set()
    for d in star:
        cd = arr.cells[d]
        mn = cd.min_value(covector, t)
        mx = cd.max_value(covector, t)
        if d != c and mn == mx and arr.dim(d) > arr.dim(c):
            raise NonGenericCovector(
                "covector lies on a wall of the local covector fan"
            )
        if mn < 0:
            sub.add(d)
    assert _upward_closed(arr, sub)
    m_star = indicator_module(arr, star)
    m_sub = indicator_module(arr, sub)
    r_star = resolve_module(arr, m_star)
    r_sub = resolve_module(arr, m_sub)
    phi = {0: {d: _id(1) for d in sub}}
    cone = cone_resolved(phi, r_sub, r_star)
    return rhom_resolved(cone, ctx.realize(f).complex)


def _id(n):
    return tuple(
        tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n)
    )


def singular_support_strata(ctx: SheafContext, f: FormalSheaf):
    """Microstalk-nonvanishing report: list of (cell, covector cone, dims).

    For every cell, covectors conormal to the cell are probed one relative
    interior point per chamber of the local covector fan (spanned by the
    normals of the arrangement planes through the cell).
    """
    arr = ctx.arr
    n = arr.n
    out = []
    rf = ctx.realize(f)
    support = set()
    for k, mod in rf.complex.terms.items():
        support |= set(mod.dims)
    relevant = set()
    for c in support:
        for d in range(len(arr)):
            if arr.leq(d, c):
                relevant.add(d)
    for c in sorted(relevant):
        zero_normals = [
            arr.registry.normals[i]
            for i, s in enumerate(arr.signs[c])
            if s == 0
        ]
        if not zero_normals:
            continue  # top cell: conormal space is zero
        for chamber in _conormal_chambers(n, zero_normals):
            xi = chamber.relint_point()
            if not any(xi):
                continue
            try:
                dims = microstalk(ctx, f, arr.barycenter(c), xi)
            except NonGenericCovector:
                continue
            if dims:
                out.append((c, chamber, dims))
    return out


def _conormal_chambers(n, normals):
    """Full-dimensional cones of the fan the normals span, inside their span."""
    from .polyhedra import dd_from_inequalities

    span_eqs = _span_equations(normals, n)
    chambers = []
    seen = set()
    k = len(normals)
    for mask in range(1 << k):
        ineqs = []
        for i, u in enumerate(normals):
            if (mask >> i) & 1:
                ineqs.append(tuple(-x for x in u))
            else:
                ineqs.append(tuple(u))
        cone = Cone.from_inequalities(n, ineqs, span_eqs)
        if cone.dim != n - _rank(span_eqs):
            continue
        if cone.key() in seen:
            continue
        seen.add(cone.key())
        chambers.append(cone)
    return chambers


def _span_equations(normals, n):
    from .exact import kernel_basis_int

    return kernel_basis_int(tuple(tuple(u) for u in normals))


def _rank(rows):
    from .exact import rank_int

    return rank_int(rows)


def refine_check(coarse: Arrangement, finer: Arrangement):
    for key in coarse.plane_index:
        if key not in finer.plane_index:
            raise NotARefinement(f"missing plane {key}")


# ---------------------------------------------------------------------------
# per-character torus Homs


def auto_box(planes, pad=2):
    """A box guaranteed to contain every bounded feature of the planes."""
    m = Fraction(0)
    for u, c in planes:
        den = max(1, max(abs(x) for x in u))
        m = max(m, abs(Fraction(c)) / den)
    side = m + pad
    return side


def box_bounds(n, side):
    return [(-side, side)] * n


def hom_over_box(f: FormalSheaf, g: FormalSheaf, n, side) -> dict:
    planes = f.planes() + g.planes()
    arr = Arrangement(n, planes, box_bounds(n, side))
    ctx = SheafContext(arr)
    return rhom(ctx, f, g)


def stable_hom(f: FormalSheaf, g: FormalSheaf, n, side=None, attempts=4):
    """RHom with the two-box stabilization certificate.

    Conic data stabilizes once the box dominates every bounded feature;
    the certificate is agreement between the side-s and side-2s boxes,
    retried on a doubled scale while disagreement persists.
    """
    if side is None:
        side = auto_box(f.planes() + g.planes())
    a = hom_over_box(f, g, n, side)
    for _ in range(attempts):
        b = hom_over_box(f, g, n, 2 * side)
        if a == b:
            return a
        side, a = 2 * side, b
    raise StabilizationFailed(
        f"no agreement up to box side {side}: {a} vs last smaller box"
    )


def torus_hom_per_character(f: FormalSheaf, g: FormalSheaf, window, n) -> dict:
    """m |-> graded dims of Hom(f, translate(g, -m)), with certificates."""
    out = {}
    for m in window:
        gm = g.translate(tuple(-x for x in m))
        out[tuple(m)] = stable_hom(f, gm, n)
    return out

"""Coherent-side computations on toric (stacky) charts, per character.

Objects are bounded complexes whose terms are torus-equivariant line
bundles O(D) with an integer weight offset (the equivariant lift; for
quotient stacks the offset also encodes the finite-group character).
Sections on an affine chart at a character are 0/1 semigroup tests, Cech
complexes over the maximal cones give Ext between complexes, and invariant
parts of stacky Ext are read off by evaluating at image characters of the
coarse lattice.

The translation to the constructible side (kappa) sends such a complex to
a Cech-glued complex of indicator sheaves of translated open dual cones;
for stacky data the glueing composes with the cover map, which is what
produces the fractional translation classes.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .arrangement import HalfOpenRegion
from .exact import dot, mat_vec, transpose
from .fans import Fan, StackyFan
from .sheafops import FormalSheaf


class NonSmoothFan(ValueError):
    pass


class WindowNotStable(RuntimeError):
    pass


class NotADivisorRay(ValueError):
    pass


def _cover_fan(x):
    return x.fan if isinstance(x, StackyFan) else x


def _weight_matrix(x):
    """Matrix of the grading embedding M -> cover weights (f^T), or None."""
    if isinstance(x, StackyFan):
        return transpose(x.map.matrix)
    return None


@dataclass(frozen=True)
class LineTerm:
    degree: int
    coeffs: tuple  # per ray of the cover fan, in fan.rays() order
    weight: tuple  # equivariant lift in the cover weight lattice


@dataclass(frozen=True)
class BComplex:
    """Bounded complex of weighted line bundles on a (cover) fan."""

    space: object  # Fan or StackyFan
    terms: tuple  # LineTerm, listed in a fixed order
    diffs: tuple  # ((i, j, scalar), ...): component term[j] -> term[i]

    @property
    def fan(self) -> Fan:
        return _cover_fan(self.space)

    @staticmethod
    def line_bundle(space, coeffs, weight=None, degree=0) -> "BComplex":
        fan = _cover_fan(space)
        coeffs = tuple(coeffs)
        if len(coeffs) != len(fan.rays()):
            raise ValueError("one coefficient per ray required")
        if weight is None:
            weight = tuple(0 for _ in range(fan.n))
        return BComplex(
            space, (LineTerm(degree, coeffs, tuple(weight)),), ()
        )

    def shift(self, s: int) -> "BComplex":
        sign = -1 if s % 2 else 1
        terms = tuple(
            LineTerm(t.degree - s, t.coeffs, t.weight) for t in self.terms
        )
        diffs = tuple((i, j, sign * c) for i, j, c in self.diffs)
        return BComplex(self.space, terms, diffs)

    def twist(self, coeffs=None, weight=None) -> "BComplex":
        fan = self.fan
        coeffs = tuple(coeffs) if coeffs is not None else tuple(
            0 for _ in fan.rays()
        )
        weight = tuple(weight) if weight is not None else tuple(
            0 for _ in range(fan.n)
        )
        terms = tuple(
            LineTerm(
                t.degree,
                tuple(a + b for a, b in zip(t.coeffs, coeffs)),
                tuple(a + b for a, b in zip(t.weight, weight)),
            )
            for t in self.terms
        )
        return BComplex(self.space, terms, self.diffs)

    def validate(self):
        """Check d^2 = 0 and that every component is a canonical inclusion."""
        fan = self.fan
        rays = fan.rays()
        for i, j, c in self.diffs:
            ti, tj = self.terms[i], self.terms[j]
            if ti.degree != tj.degree + 1:
                raise ValueError("differential component has wrong degree")
            for k, r in enumerate(rays):
                lhs = ti.coeffs[k] + dot(ti.weight, r)
                rhs = tj.coeffs[k] + dot(tj.weight, r)
                if lhs < rhs:
                    raise ValueError(
                        "no canonical section supports this component"
                    )
        comp = {}
        for i, j, c in self.diffs:
            for i2, j2, c2 in self.diffs:
                if j2 == i:
                    comp[(i2, j)] = comp.get((i2, j), 0) + c2 * c
        if any(v for v in comp.values()):
            raise ValueError("differential does not square to zero")
        return self


def two_term(space, src: BComplex, dst: BComplex, scalar=1) -> BComplex:
    """[src -> dst] for single-term complexes, src in degree dst-1."""
    (s,) = src.terms
    (d,) = dst.terms
    s = LineTerm(d.degree - 1, s.coeffs, s.weight)
    return BComplex(space, (s, d), ((1, 0, scalar),)).validate()


def section_grade(fan: Fan, sigma, coeffs, weight, mtilde) -> int:
    """1 iff grade mtilde is occupied on the chart of sigma."""
    rays = fan.rays()
    amap = {tuple(r): a for r, a in zip(rays, coeffs)}
    for r in sigma.rays:
        if dot(mtilde, r) + dot(weight, r) < -amap[tuple(r)]:
            return 0
    return 1


def sections_per_character(space, coeffs, sigma, m, weight=None) -> int:
    """Occupied-grade test on a maximal chart, at a coarse character m.

    For stacky spaces the coarse character is lifted through the dual of
    the cover map; the optional weight is the equivariant/character lift.
    """
    fan = _cover_fan(space)
    if weight is None:
        weight = tuple(0 for _ in range(fan.n))
    wm = _weight_matrix(space)
    mtilde = mat_vec(wm, m) if wm is not None else tuple(m)
    return section_grade(fan, sigma, coeffs, weight, mtilde)


def _subset_cones(fan: Fan):
    """Nonempty subsets of maximal cones with their intersections."""
    from itertools import combinations

    mx = fan.maximal_cones()
    out = {}
    for p in range(1, len(mx) + 1):
        for pick in combinations(range(len(mx)), p):
            c = mx[pick[0]]
            for i in pick[1:]:
                c = c.intersection(mx[i])
            out[frozenset(pick)] = c
    return out


def cech_hom_dims(a: BComplex, b: BComplex, m) -> dict:
    """Graded dims of Ext(a, b) at a coarse character m (exact, no box).

    Computed from the Cech complex over the maximal-cone cover of the
    (smooth) cover fan; on stacky spaces this is the invariant part at the
    lifted grade.
    """
    fan = a.fan
    if fan is not b.fan and fan.cones != b.fan.cones:
        raise ValueError("complexes live on different fans")
    from .fans import fan_is_smooth

    ok, witness = fan_is_smooth(fan)
    if not ok:
        raise NonSmoothFan(f"chart cover not smooth at {witness}")
    wm = _weight_matrix(a.space)
    mtilde = mat_vec(wm, m) if wm is not None else tuple(m)
    subsets = _subset_cones(fan)
    order = sorted(subsets, key=lambda s: (len(s), tuple(sorted(s))))
    # basis: (subset, ai, bi) when the Hom-grade is occupied
    basis = {}
    for sub in order:
        sig = subsets[sub]
        for ai, ta in enumerate(a.terms):
            for bi, tb in enumerate(b.terms):
                hom_coeffs = tuple(
                    cb - ca for ca, cb in zip(ta.coeffs, tb.coeffs)
                )
                hom_w = tuple(wb - wa for wa, wb in zip(ta.weight, tb.weight))
                if section_grade(fan, sig, hom_coeffs, hom_w, mtilde):
                    deg = (len(sub) - 1) + (tb.degree - ta.degree)
                    basis.setdefault(deg, []).append((sub, ai, bi))
    index = {
        deg: {key: i for i, key in enumerate(lst)}
        for deg, lst in basis.items()
    }
    a_out = {j: [] for j in range(len(a.terms))}
    a_in = {}
    for i, j, c in a.diffs:
        a_out[j].append((i, c))
    b_out = {j: [] for j in range(len(b.terms))}
    for i, j, c in b.diffs:
        b_out[j].append((i, c))
    ranks = {}
    degs = sorted(basis)
    for deg in degs:
        rows = {}
        tgt = index.get(deg + 1, {})
        for col, (sub, ai, bi) in enumerate(basis[deg]):
            p = len(sub) - 1
            # Cech: extend the subset
            mxn = len(fan.maximal_cones())
            ordered = tuple(sorted(sub))
            for extra in range(mxn):
                if extra in sub:
                    continue
                big = frozenset(sub | {extra})
                pos = sorted(big).index(extra)
                sgn = -1 if pos % 2 else 1
                key = (big, ai, bi)
                t = tgt.get(key)
                if t is not None:
                    rows.setdefault(t, {})[col] = rows.get(t, {}).get(col, 0) + sgn
            # (-1)^p D_Hom with D_Hom(phi) = d_b.phi - (-1)^{n} phi.d_a
            sgn_p = -1 if p % 2 else 1
            n_hom = b.terms[bi].degree - a.terms[ai].degree
            sgn_a = -sgn_p * (-1 if n_hom % 2 else 1)
            for bi2, c in b_out.get(bi, []):
                key = (sub, ai, bi2)
                t = tgt.get(key)
                if t is not None:
                    rows.setdefault(t, {})[col] = (
                        rows.get(t, {}).get(col, 0) + sgn_p * c
                    )
            for ai0, c in _incoming(a.diffs, ai):
                key = (sub, ai0, bi)
                t = tgt.get(key)
                if t is not None:
                    rows.setdefault(t, {})[col] = (
                        rows.get(t, {}).get(col, 0) + sgn_a * c
                    )
        ranks[deg] = _int_rank_of(rows)
    out = {}
    for deg in degs:
        h = len(basis[deg]) - ranks.get(deg, 0) - ranks.get(deg - 1, 0)
        if h:
            out[deg] = h
    return out


def _incoming(diffs, ai):
    """Components of the differential landing in term ai."""
    return [(j, c) for i, j, c in diffs if i == ai]


def _int_rank_of(rows):
    from .exact import rank_sparse

    return rank_sparse([{c: v for c, v in r.items() if v} for r in rows.values()])


def cech_ext_per_character(space, d1_coeffs, d2_coeffs, m,
                           w1=None, w2=None) -> dict:
    a = BComplex.line_bundle(space, d1_coeffs, w1)
    b = BComplex.line_bundle(space, d2_coeffs, w2)
    return cech_hom_dims(a, b, m)


def ext_table(a: BComplex, b: BComplex, window) -> dict:
    return {tuple(m): cech_hom_dims(a, b, m) for m in window}


def table_euler_with_margin(table: dict, window, margin_window) -> int:
    """Sum of Euler numbers over the window; margin ring must vanish."""
    ring = [m for m in margin_window if tuple(m) not in set(map(tuple, window))]
    for m in ring:
        if table.get(tuple(m)):
            raise WindowNotStable(
                f"character {m} on the margin ring is nonzero"
            )
    chi = 0
    for m in window:
        for k, d in table.get(tuple(m), {}).items():
            chi += (-1) ** (k % 2) * d
    return chi


def grid_window(n, radius):
    from itertools import product

    return [tuple(t) for t in product(range(-radius, radius + 1), repeat=n)]


# ---------------------------------------------------------------------------
# Koszul pushforwards from invariant divisors


def koszul_divisor_pushforward(space, ray, target_class_coeffs) -> BComplex:
    """i_* of a line bundle on the divisor of a ray, as a two-term complex.

    ``target_class_coeffs`` are divisor coefficients on the star fan of the
    ray describing the desired restriction class; a bundle on the total
    space restricting to that class is derived through the divisor class
    group, and [O(-E) tensor L -> L] represents the pushforward.
    """
    from .fans import class_group_projection, restrict_divisor_to_star
    from .exact import primitive, solve_int

    fan = _cover_fan(space)
    ray = primitive(tuple(ray))
    rays = fan.rays()
    if ray not in [tuple(r) for r in rays]:
        raise NotADivisorRay(f"{ray} is not a ray of the fan")
    star, _ = restrict_divisor_to_star(fan, ray, [0] * len(rays))
    star_rays, star_proj = class_group_projection(star)
    target = star_proj(tuple(target_class_coeffs))
    # linear map: coefficients on X -> restriction class on the star
    cols = []
    for k in range(len(rays)):
        unit = [1 if i == k else 0 for i in range(len(rays))]
        _, rc = restrict_divisor_to_star(fan, ray, unit)
        cols.append(star_proj(rc))
    mat = transpose(tuple(cols))
    sol = solve_int(mat, tuple(target))
    if sol is None:
        raise ValueError("no integral divisor restricts to the target class")
    ltilde = tuple(sol)
    e_coeffs = tuple(1 if tuple(r) == ray else 0 for r in rays)
    lminus = tuple(a - e for a, e in zip(ltilde, e_coeffs))
    src = BComplex.line_bundle(space, lminus)
    dst = BComplex.line_bundle(space, ltilde)
    return two_term(space, src, dst)


def koszul_subvariety_structure(space, rays_of_tau, twist_coeffs=None,
                                weight=None) -> BComplex:
    """Koszul complex of the orbit closure V(tau), tau spanned by fan rays.

    Valid when the rays cut V(tau) transversally (smooth charts); twisted
    by an optional line bundle.
    """
    from itertools import combinations

    fan = _cover_fan(space)
    rays = fan.rays()
    ray_idx = []
    for r in rays_of_tau:
        r = tuple(r)
        ray_idx.append([tuple(x) for x in rays].index(r))
    k = len(ray_idx)
    if twist_coeffs is None:
        twist_coeffs = tuple(0 for _ in rays)
    if weight is None:
        weight = tuple(0 for _ in range(fan.n))
    subsets = []
    for p in range(k + 1):
        for pick in combinations(range(k), p):
            subsets.append(frozenset(pick))
    subsets.sort(key=lambda s: (len(s), tuple(sorted(s))))
    terms = []
    pos = {}
    for s in subsets:
        coeffs = list(twist_coeffs)
        for i in s:
            coeffs[ray_idx[i]] -= 1
        pos[s] = len(terms)
        terms.append(LineTerm(-len(s), tuple(coeffs), tuple(weight)))
    diffs = []
    for s in subsets:
        ordered = sorted(s)
        for drop_pos, gen in enumerate(ordered):
            small = frozenset(s) - {gen}
            sgn = -1 if drop_pos % 2 else 1
            diffs.append((pos[small], pos[s], sgn))
    return BComplex(space, tuple(terms), tuple(diffs)).validate()


# ---------------------------------------------------------------------------
# kappa: the constructible-side image


def kappa_formal(b: BComplex) -> FormalSheaf:
    """Cech-glued constructible image of a line-bundle complex.

    Each term contributes, for every nonempty subset I of maximal cones,
    the indicator of the open region
    {m : <m, f(u)> > -a_u - <w, u> for rays u of the intersection cone},
    in degree deg(term) + |I| - 1.  Differentials combine the alternating
    Cech maps with the complex's own components (Koszul sign on the
    latter).  For stacky data the composition with the cover map makes the
    translation classes fractional.
    """
    fan = b.fan
    fmat = b.space.map.matrix if isinstance(b.space, StackyFan) else None
    subsets = _subset_cones(fan)
    order = sorted(subsets, key=lambda s: (len(s), tuple(sorted(s))))
    rays = fan.rays()
    amaps = [
        {tuple(r): a for r, a in zip(rays, t.coeffs)} for t in b.terms
    ]
    entries = []  # (degree, subset, term index, region)
    for sub in order:
        sig = subsets[sub]
        for ti, t in enumerate(b.terms):
            cons = []
            for u in sig.rays:
                normal = mat_vec(fmat, u) if fmat is not None else tuple(u)
                thr = Fraction(-amaps[ti][tuple(u)] - dot(t.weight, u))
                cons.append((normal, thr, True))
            region = HalfOpenRegion(cons)
            deg = t.degree + len(sub) - 1
            entries.append((deg, sub, ti, region))
    by_deg = {}
    for e in entries:
        by_deg.setdefault(e[0], []).append(e)
    for lst in by_deg.values():
        lst.sort(key=lambda e: (tuple(sorted(e[1])), e[2]))
    index = {}
    terms = []
    for deg in sorted(by_deg):
        regs = []
        for i, e in enumerate(by_deg[deg]):
            index[(e[1], e[2])] = (deg, i)
            regs.append(e[3])
        terms.append((deg, tuple(regs)))
    mxn = len(fan.maximal_cones())
    dmats = {}
    for deg, regs in terms:
        if (deg + 1) not in by_deg:
            continue
        rows = [
            [Fraction(0)] * len(by_deg[deg]) for _ in by_deg[deg + 1]
        ]
        dmats[deg] = rows
    b_out = {}
    for i, j, c in b.diffs:
        b_out.setdefault(j, []).append((i, c))
    for deg, lst in by_deg.items():
        for col, (d0, sub, ti, _) in enumerate(lst):
            p = len(sub) - 1
            for extra in range(mxn):
                if extra in sub:
                    continue
                big = frozenset(sub | {extra})
                posn = sorted(big).index(extra)
                sgn = -1 if posn % 2 else 1
                t = index.get((big, ti))
                if t is not None and t[0] == deg + 1 and deg in dmats:
                    dmats[deg][t[1]][col] += sgn
            sgn_b = -1 if p % 2 else 1
            for ti2, c in b_out.get(ti, []):
                t = index.get((sub, ti2))
                if t is not None and t[0] == deg + 1 and deg in dmats:
                    dmats[deg][t[1]][col] += sgn_b * c
    diffs = tuple(
        (deg, tuple(tuple(r) for r in rows)) for deg, rows in dmats.items()
    )
    fs = FormalSheaf(tuple(terms), diffs)
    _assert_formal_d2(fs)
    return fs


def _assert_formal_d2(fs: FormalSheaf):
    dm = fs.diff_map()
    tm = fs.term_map()
    for k, m1 in dm.items():
        m2 = dm.get(k + 1)
        if m2 is None:
            continue
        rows = len(m2)
        cols = len(m1[0]) if m1 else 0
        for i in range(rows):
            for j in range(cols):
                s = sum(m2[i][t] * m1[t][j] for t in range(len(m1)))
                if s:
                    raise AssertionError("glued complex does not square to zero")


# ---------------------------------------------------------------------------
# Hom between chart pushforwards (the theta generators)


def theta_hom_per_character(space, sigma, tau, m) -> dict:
    """Graded Hom between the chart pushforwards of sigma and tau at m.

    The graded Hom of the localization module is a degreewise limit of an
    eventually-vanishing tower unless tau is a face of sigma, in which
    case it is the semigroup test on tau's chart.
    """
    fan = _cover_fan(space)
    wm = _weight_matrix(space)
    mtilde = mat_vec(wm, m) if wm is not None else tuple(m)
    meet = sigma.intersection(tau)
    if meet == tau:  # tau a face of sigma
        zero = tuple(0 for _ in fan.rays())
        if section_grade(fan, tau, zero, tuple(0 for _ in range(fan.n)),
                         mtilde):
            return {0: 1}
    return {}

"""FLTZ skeleta: conic Lagrangians pi(sigma-perp + shift) x (-sigma) in the
cotangent bundle of the torus T = M_R/M, and their exact set algebra.

A stratum is stored as a saturated sublattice of M (the direction space of
the base subtorus), a finite list of rational shift representatives, and a
fiber cone in N.  All operations (union, intersection, containment,
canonical form, infinity-part comparison) stay inside this class of sets
and are decided exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exact import (
    hermite_normal_form,
    kernel_basis_int,
    mat_vec,
    primitive,
    rank_int,
    smith_normal_form,
    solve_frac,
    solve_int,
    transpose,
)
from .fans import Fan, StackyFan
from .lattice import Lattice
from .polyhedra import Cone, cone_difference_sample


class InvalidShift(ValueError):
    pass


class HasNonzeroShifts(ValueError):
    pass


def _canon_basis(rows):
    rows = [tuple(r) for r in rows if any(r)]
    if not rows:
        return ()
    h, _ = hermite_normal_form(tuple(rows))
    return tuple(r for r in h if any(r))


def _frac_mod1(x):
    return tuple(Fraction(v) - (Fraction(v).numerator // Fraction(v).denominator) for v in x)


def _proj_matrix(base, n):
    """Integer projection with kernel span(base), surjective onto Z^codim."""
    if not base:
        return tuple(
            tuple(1 if i == j else 0 for j in range(n)) for i in range(n)
        )
    return kernel_basis_int(tuple(base))


@dataclass(frozen=True)
class Stratum:
    """One piece (subtorus translates) x (cone in N) of a skeleton."""

    base: tuple  # saturated sublattice of M, canonical HNF rows
    shifts: tuple  # canonical rational representatives, sorted
    fiber: Cone  # cone in N (already negated relative to the fan cone)

    @property
    def n(self):
        return self.fiber.n

    @property
    def base_dim(self):
        return len(self.base)

    def sort_key(self):
        return (
            self.fiber.rays,
            self.fiber.lines,
            self.base,
            tuple(tuple(s) for s in self.shifts),
        )

    def __repr__(self):
        sh = ",".join("(" + ",".join(map(str, s)) + ")" for s in self.shifts)
        return f"Stratum(base={self.base}, shifts=[{sh}], fiber={self.fiber})"


def make_stratum(n, base_rows, shifts, fiber: Cone) -> Stratum:
    base = _canon_basis(base_rows)
    proj = _proj_matrix(base, n)
    canon = set()
    for s in shifts:
        t = _frac_mod1(mat_vec(proj, tuple(Fraction(v) for v in s)))
        canon.add(t)
    reps = []
    for t in sorted(canon):
        if len(proj):
            rep = solve_frac(proj, t)
        else:
            rep = tuple(Fraction(0) for _ in range(n))
        reps.append(tuple(rep))
    return Stratum(base, tuple(reps), fiber)


def _base_leq(inner_base, inner_shift, outer: Stratum, n) -> bool:
    """Is the single translated subtorus inside one of outer's?"""
    for row in inner_base:
        if rank_int(tuple(outer.base) + (row,)) != len(outer.base):
            return False
    proj = _proj_matrix(outer.base, n)
    for s in outer.shifts:
        d = mat_vec(proj, tuple(Fraction(a) - Fraction(b) for a, b in zip(inner_shift, s)))
        if all(Fraction(v).denominator == 1 for v in d):
            return True
    return False


def _point_on_base(stratum: Stratum, x) -> bool:
    proj = _proj_matrix(stratum.base, stratum.n)
    for s in stratum.shifts:
        d = mat_vec(proj, tuple(Fraction(a) - Fraction(b) for a, b in zip(x, s)))
        if all(Fraction(v).denominator == 1 for v in d):
            return True
    return False


@dataclass(frozen=True)
class Skeleton:
    """Finite union of strata inside T x N_R; M and N both of rank n."""

    ambient: Lattice  # N; the base torus is the dual side
    strata: tuple

    @property
    def n(self):
        return self.ambient.rank

    def __repr__(self):
        return f"Skeleton({self.ambient!r}; {len(self.strata)} strata)"

    def contains_point(self, x, xi) -> bool:
        """Is (x mod M, xi) a point of the skeleton?  xi exact rational."""
        xi = tuple(xi)
        for st in self.strata:
            if not st.fiber.contains_point(xi):
                continue
            if _point_on_base(st, x):
                return True
        return False


def skeleton_canonicalize(skel: Skeleton) -> Skeleton:
    """Absorb strata contained in a single other stratum; sort; merge."""
    n = skel.n
    pieces = []  # (base, shift, fiber) single-shift pieces
    for st in skel.strata:
        for s in st.shifts:
            pieces.append((st.base, s, st.fiber))
    kept = []
    for i, (b, s, f) in enumerate(pieces):
        absorbed = False
        for j, (b2, s2, f2) in enumerate(pieces):
            if i == j:
                continue
            if not f2.contains_cone(f):
                continue
            other = make_stratum(n, b2, [s2], f2)
            if not _base_leq(b, s, other, n):
                continue
            if f2 == f and b2 == b and _frac_mod1(s) == _frac_mod1(s2) and j < i:
                absorbed = True  # exact duplicate, keep first copy
                break
            if f2 == f and b2 == b:
                continue
            absorbed = True
            break
        if not absorbed:
            kept.append((b, s, f))
    # canonical form keeps one shift per stratum (multi-shift inputs are
    # split); duplicates may remain after canonical shift reduction
    strata = sorted(
        {make_stratum(n, b, [s], f) for b, s, f in kept},
        key=Stratum.sort_key,
    )
    return Skeleton(skel.ambient, tuple(strata))


def fltz_skeleton(fan: Fan) -> Skeleton:
    """One stratum pi(sigma-perp) x (-sigma) per cone, shift zero."""
    n = fan.n
    strata = []
    for sigma in fan.cones:
        gens = tuple(sigma.rays) + tuple(sigma.lines)
        base = (
            kernel_basis_int(gens)
            if gens
            else tuple(
                tuple(1 if i == j else 0 for j in range(n)) for i in range(n)
            )
        )
        strata.append(
            make_stratum(n, base, [tuple(0 for _ in range(n))], sigma.minus())
        )
    return skeleton_canonicalize(Skeleton(fan.ambient, tuple(strata)))


def skeleton_translate(skel: Skeleton, shift) -> Skeleton:
    shift = tuple(Fraction(v) for v in shift)
    strata = [
        make_stratum(
            skel.n,
            st.base,
            [tuple(a + b for a, b in zip(s, shift)) for s in st.shifts],
            st.fiber,
        )
        for st in skel.strata
    ]
    return Skeleton(skel.ambient, tuple(strata))


def stacky_fltz_skeleton(sf: StackyFan, shifts) -> Skeleton:
    """Union of shift-translated copies of the image-fan skeleton.

    Each shift must pair integrally with every ray of every cone after
    scaling by the torsion order (the only stacky pattern exercised here).
    """
    order = sf.group().order
    image = sf.image_fan()
    for s in shifts:
        s = tuple(Fraction(v) for v in s)
        for sigma in image.cones:
            for r in sigma.rays:
                v = order * sum(a * b for a, b in zip(s, r))
                if Fraction(v).denominator != 1:
                    raise InvalidShift(
                        f"shift {s} does not pair integrally with ray {r} "
                        f"at torsion order {order}"
                    )
    base = fltz_skeleton(image)
    out = []
    for s in shifts:
        out.extend(skeleton_translate(base, s).strata)
    return skeleton_canonicalize(Skeleton(image.ambient, tuple(out)))


def skeleton_union(a: Skeleton, b: Skeleton) -> Skeleton:
    if a.ambient.rank != b.ambient.rank:
        raise ValueError("ambient mismatch")
    return skeleton_canonicalize(
        Skeleton(a.ambient, tuple(a.strata) + tuple(b.strata))
    )


def _quotient_coset_reps(sup_rows, sub_rows):
    """Coset representatives of span_Z(sup)/span_Z(sub), in ambient coords."""
    if not sup_rows:
        return [tuple()]
    k = len(sup_rows)
    coords = []
    for g in sub_rows:
        c = solve_int(transpose(sup_rows), g)
        if c is None:
            raise ValueError("sub not inside sup")
        coords.append(c)
    if not coords:
        raise ValueError("infinite quotient")
    u, d, _ = smith_normal_form(transpose(tuple(coords)))
    # Z^k / A Z^g with U A V = D: quotient via y = U x, y_i mod d_i
    diag = [
        d[i][i] if i < min(len(d), len(d[0])) else 0 for i in range(k)
    ]
    if any(x == 0 for x in diag):
        raise ValueError("infinite quotient")
    from .exact import invert_frac

    uinv = invert_frac(u)
    reps = []

    def rec(i, acc):
        if i == k:
            y = tuple(acc)
            x = mat_vec(uinv, y)
            reps.append(tuple(int(v) for v in x))
            return
        for j in range(diag[i]):
            rec(i + 1, acc + [j])

    rec(0, [])
    out = []
    n = len(sup_rows[0])
    for r in reps:
        amb = [0] * n
        for c, row in zip(r, sup_rows):
            amb = [a + c * v for a, v in zip(amb, row)]
        out.append(tuple(amb))
    return out


def _base_intersection(b1, shifts1, b2, shifts2, n):
    """All translates of the intersection of two shifted subtori.

    Returns (L, reps): direction sublattice and shift representatives.
    """
    vrows = tuple(b1) + tuple(b2)
    p1 = _proj_matrix(b1, n)
    p2 = _proj_matrix(b2, n)
    pcat = tuple(p1) + tuple(p2)
    if pcat:
        l_basis = _canon_basis(kernel_basis_int(pcat))
    else:
        l_basis = tuple(
            tuple(1 if i == j else 0 for j in range(n)) for i in range(n)
        )
    pv = _proj_matrix(_canon_basis(vrows), n) if vrows else _proj_matrix((), n)
    if len(pv):
        sat_v = kernel_basis_int(pv)  # M cap (V1+V2), saturated
    else:
        sat_v = tuple(
            tuple(1 if i == j else 0 for j in range(n)) for i in range(n)
        )
    sub = tuple(b1) + tuple(b2)
    reps_out = []
    for s1 in shifts1:
        for s2 in shifts2:
            delta = tuple(Fraction(a) - Fraction(b) for b, a in zip(s1, s2))
            t = mat_vec(pv, delta) if len(pv) else ()
            # need m in M with pv(m) = -t, i.e. t integral
            if any(Fraction(v).denominator != 1 for v in t):
                continue
            m0 = (
                solve_int(pv, tuple(-int(v) for v in t))
                if len(pv)
                else tuple(0 for _ in range(n))
            )
            if m0 is None:
                continue
            if sat_v and sub:
                try:
                    cosets = _quotient_coset_reps(sat_v, sub)
                except ValueError:
                    cosets = [tuple(0 for _ in range(n))]
            else:
                cosets = [tuple(0 for _ in range(n))]
            for mu in cosets:
                m = tuple(a + b for a, b in zip(m0, mu))
                # solve x = s1 + B1^T alpha = s2 + m + B2^T beta
                rhs = tuple(
                    Fraction(a) + Fraction(c) - Fraction(b)
                    for b, a, c in zip(s1, s2, m)
                )
                cols = list(zip(*b1)) if b1 else [() for _ in range(n)]
                cols2 = list(zip(*b2)) if b2 else [() for _ in range(n)]
                mat = tuple(
                    tuple(cols[i]) + tuple(-v for v in cols2[i])
                    for i in range(n)
                )
                sol = solve_frac(mat, rhs) if (b1 or b2) else (
                    None if any(rhs) else ()
                )
                if sol is None:
                    continue
                alpha = sol[: len(b1)]
                x = list(Fraction(v) for v in s1)
                for c, row in zip(alpha, b1):
                    x = [a + c * v for a, v in zip(x, row)]
                reps_out.append(tuple(x))
    return l_basis, reps_out


def skeleton_intersection(a: Skeleton, b: Skeleton) -> Skeleton:
    if a.ambient.rank != b.ambient.rank:
        raise ValueError("ambient mismatch")
    n = a.n
    pieces = []
    for sa in a.strata:
        for sb in b.strata:
            fiber = sa.fiber.intersection(sb.fiber)
            l_basis, reps = _base_intersection(
                sa.base, sa.shifts, sb.base, sb.shifts, n
            )
            if not reps:
                continue
            pieces.append(make_stratum(n, l_basis, reps, fiber))
    return skeleton_canonicalize(Skeleton(a.ambient, tuple(pieces)))


def _generic_base_point(st: Stratum, shift, salt=1):
    x = [Fraction(v) for v in shift]
    prime = 97 + 6 * salt
    for i, row in enumerate(st.base):
        c = Fraction(salt * (i + 2) ** 2 + 1, prime + i)
        x = [a + c * v for a, v in zip(x, row)]
    return tuple(x)


def skeleton_contains(outer: Skeleton, inner: Skeleton):
    """(verdict, witness): witness is an uncovered point (x, xi) if False."""
    n = inner.n
    for st in inner.strata:
        for s in st.shifts:
            eligible = [
                o.fiber
                for o in outer.strata
                if _base_leq(st.base, s, o, n)
            ]
            xi = cone_difference_sample(st.fiber, eligible, allow_zero=True)
            if xi is None:
                continue
            xi = primitive(
                tuple(
                    int(v * _lcm_den(xi))
                    for v in xi
                )
            ) if any(xi) else tuple(0 for _ in range(n))
            for salt in range(1, 12):
                x = _generic_base_point(st, s, salt)
                if st.fiber.contains_point(xi) and not outer.contains_point(
                    x, xi
                ):
                    return False, (x, xi)
            raise RuntimeError(
                "could not certify witness; base sampling exhausted"
            )
    return True, None


def _lcm_den(v):
    from math import gcd

    den = 1
    for x in v:
        d = Fraction(x).denominator
        den = den * d // gcd(den, d)
    return den


def skeleton_infinity_part(skel: Skeleton) -> Skeleton:
    """Formal part away from the zero section: drop zero-fiber strata."""
    return Skeleton(
        skel.ambient,
        tuple(st for st in skel.strata if not st.fiber.is_zero),
    )


def _contains_at_infinity(outer: Skeleton, inner: Skeleton) -> bool:
    n = inner.n
    strata_out = [st for st in outer.strata if not st.fiber.is_zero]
    for st in inner.strata:
        if st.fiber.is_zero:
            continue
        for s in st.shifts:
            eligible = [
                o.fiber for o in strata_out if _base_leq(st.base, s, o, n)
            ]
            xi = cone_difference_sample(st.fiber, eligible, allow_zero=False)
            if xi is None:
                continue
            xi_int = primitive(tuple(int(v * _lcm_den(xi)) for v in xi))
            for salt in range(1, 12):
                x = _generic_base_point(st, s, salt)
                hit = False
                for o in strata_out:
                    if o.fiber.contains_point(xi_int) and _point_on_base(o, x):
                        hit = True
                        break
                if not hit:
                    return False
            raise RuntimeError("witness sampling exhausted")
    return True


def infinity_equal(a: Skeleton, b: Skeleton) -> bool:
    """Do a and b agree away from the zero section?"""
    return _contains_at_infinity(a, b) and _contains_at_infinity(b, a)


def is_fltz_of_its_cones(skel: Skeleton):
    """Try to reconstruct the skeleton as Lambda_Sigma of its own cones.

    Returns (verdict, detail).  Raises on skeleta with nonzero shifts.
    """
    from .fans import NotAFan, fan_validate

    n = skel.n
    zero = tuple(Fraction(0) for _ in range(n))
    for st in skel.strata:
        for s in st.shifts:
            if _frac_mod1(s) != zero:
                raise HasNonzeroShifts(
                    "skeleton has shifted strata; FLTZ round trip undefined"
                )
    cones = [st.fiber.minus() for st in skel.strata]
    try:
        fan = fan_validate(skel.ambient, cones)
    except NotAFan as exc:
        return False, f"cone set is not a fan: {exc}"
    rebuilt = fltz_skeleton(fan)
    canon = skeleton_canonicalize(skel)
    if rebuilt.strata == canon.strata:
        return True, None
    return False, "fan round trip differs"


def lagrangian_dims_ok(skel: Skeleton) -> bool:
    return all(
        st.base_dim + st.fiber.dim == skel.n for st in skel.strata
    )

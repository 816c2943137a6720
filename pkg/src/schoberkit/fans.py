"""Fans, stacky fans, refinement and subdivision, and the builtin fans of
the two running examples (A1 surface and conifold).

Also hosts the toric utilities consumed by the coherent side: divisor class
groups, wall-curve intersection degrees, star-quotient fans and divisor
restriction to invariant divisors.
"""
from __future__ import annotations

from dataclasses import dataclass

from .exact import (
    dot,
    mat_vec,
    primitive,
    rank_int,
    smith_normal_form,
    solve_int,
    transpose,
)
from .lattice import Lattice, LatticeMap, cokernel_torsion
from .polyhedra import Cone


class NotAFan(ValueError):
    def __init__(self, msg, pair=None):
        super().__init__(msg)
        self.pair = pair


class RayOutsideSupport(ValueError):
    pass


class UnknownName(KeyError):
    pass


@dataclass(frozen=True)
class Fan:
    """Finite fan, stored with all faces present."""

    ambient: Lattice
    cones: tuple  # tuple[Cone], sorted, closed under faces

    @property
    def n(self):
        return self.ambient.rank

    def maximal_cones(self):
        out = []
        for c in self.cones:
            if not any(
                c is not d and d.contains_cone(c) for d in self.cones
            ):
                out.append(c)
        return out

    def rays(self):
        seen = []
        for c in self.cones:
            if c.dim == 1 and len(c.rays) == 1:
                r = c.rays[0]
                if r not in seen:
                    seen.append(r)
        return sorted(seen)

    def has_cone(self, cone: Cone) -> bool:
        return any(c == cone for c in self.cones)

    def support_contains(self, point) -> bool:
        return any(c.contains_point(point) for c in self.cones)

    def __repr__(self):
        mx = self.maximal_cones()
        return f"Fan({self.ambient!r}; {len(self.cones)} cones, max {len(mx)})"


def fan_validate(ambient: Lattice, cones) -> Fan:
    """Close the given cones under faces and check the fan axioms."""
    n = ambient.rank
    pool = {}
    for c in cones:
        if not isinstance(c, Cone):
            c = Cone.from_rays(n, c)
        if c.n != n:
            raise NotAFan("cone in wrong ambient dimension")
        if not c.is_strongly_convex:
            raise NotAFan("cone contains a line", pair=(c,))
        for f in c.faces():
            pool.setdefault(f.key(), f)
    cs = sorted(pool.values(), key=lambda c: (c.dim, c.rays))
    for i, a in enumerate(cs):
        for b in cs[i + 1:]:
            meet = a.intersection(b)
            if not (meet.is_face_of(a) and meet.is_face_of(b)):
                raise NotAFan(
                    f"intersection of {a} and {b} is not a common face",
                    pair=(a, b),
                )
    return Fan(ambient, tuple(cs))


def fan_from_max_cones(ambient: Lattice, ray_lists) -> Fan:
    return fan_validate(
        ambient, [Cone.from_rays(ambient.rank, rs) for rs in ray_lists]
    )


def fan_is_smooth(fan: Fan):
    """(verdict, witness): every cone's rays extend to a Z-basis."""
    for c in fan.cones:
        if c.is_zero:
            continue
        if len(c.rays) != c.dim:
            return False, c
        _, d, _ = smith_normal_form(c.rays)
        k = min(len(d), len(d[0]))
        if any(d[i][i] != 1 for i in range(k)):
            return False, c
    return True, None


def cone_index(c: Cone) -> int:
    """Multiplicity of a simplicial cone (1 = unimodular)."""
    _, d, _ = smith_normal_form(c.rays)
    k = min(len(d), len(d[0]))
    out = 1
    for i in range(k):
        out *= d[i][i]
    return out


def fan_refines(fine: Fan, coarse: Fan) -> bool:
    """Equal support and every fine cone inside some coarse cone."""
    if fine.ambient.rank != coarse.ambient.rank:
        return False
    for c in fine.cones:
        if not any(d.contains_cone(c) for d in coarse.cones):
            return False
    # coverage of each maximal coarse cone by the fine cones inside it
    for sigma in coarse.maximal_cones():
        d = sigma.dim
        inside = [
            c for c in fine.cones if c.dim == d and sigma.contains_cone(c)
        ]
        if not inside:
            return False
        sigma_facets = [f for f in sigma.faces() if f.dim == d - 1]
        for tau in inside:
            for facet in (f for f in tau.faces() if f.dim == d - 1):
                on_boundary = any(
                    sf.contains_cone(facet) for sf in sigma_facets
                )
                if on_boundary:
                    continue
                shared = any(
                    other is not tau and other.contains_cone(facet)
                    for other in inside
                )
                if not shared:
                    return False
    return True


def star_subdivide(fan: Fan, ray) -> Fan:
    """Star subdivision at a primitive ray in the support."""
    ray = primitive(tuple(ray))
    if not fan.support_contains(ray):
        raise RayOutsideSupport(f"ray {ray} outside the fan support")
    keep = []
    rebuilt = []
    for sigma in fan.cones:
        if sigma.contains_point(ray):
            for tau in sigma.faces():
                if not tau.contains_point(ray):
                    rebuilt.append(
                        Cone.from_rays(fan.n, tuple(tau.rays) + (ray,))
                    )
        else:
            keep.append(sigma)
    return fan_validate(fan.ambient, keep + rebuilt)


@dataclass(frozen=True)
class StackyFan:
    """A fan in a cover lattice together with an injective map to N."""

    fan: Fan
    map: LatticeMap

    def __post_init__(self):
        if self.map.source != self.fan.ambient:
            raise ValueError("map source must be the fan's lattice")
        if not self.map.is_injective():
            raise ValueError("stacky map must be injective")

    def group(self):
        return cokernel_torsion(self.map)

    def image_fan(self) -> Fan:
        """Image of the fan in N with primitivized rays."""
        n = self.map.target.rank
        cones = [
            Cone.from_rays(n, [primitive(self.map(r)) for r in c.rays])
            for c in self.fan.cones
        ]
        return fan_validate(self.map.target, cones)

    def __repr__(self):
        return f"StackyFan({self.fan!r} --{self.map.matrix}--> {self.map.target!r})"


# ---------------------------------------------------------------------------
# builtin example fans


def _surface_lattices():
    return Lattice(2, "N"), Lattice(2, "L")


def _conifold_lattice():
    return Lattice(3, "N")


_SURFACE_MAP_MATRIX = ((1, 1), (0, 2))  # g1 -> e1, g2 -> e1 + 2 e2


def builtin_example(name: str):
    """Fan / stacky fan data of the two running examples.

    Names: ``surf.sigma0|sigma+|sigma-|sigmaB`` and ``coni.*`` (the unicode
    spellings ``surf.Σ0`` etc. are accepted too).
    """
    key = (
        name.replace("Σ", "sigma")
        .replace("sigma_", "sigma")
        .strip()
        .lower()
    )
    n2, l2 = _surface_lattices()
    n3 = _conifold_lattice()
    f = LatticeMap(l2, n2, _SURFACE_MAP_MATRIX)
    e1, e2 = (1, 0), (0, 1)
    if key == "surf.sigma0":
        return fan_from_max_cones(n2, [[(1, 0), (1, 2)]])
    if key == "surf.sigma+":
        return fan_from_max_cones(n2, [[(1, 0), (1, 1)], [(1, 1), (1, 2)]])
    if key == "surf.sigma-":
        return StackyFan(fan_from_max_cones(l2, [[e1, e2]]), f)
    if key == "surf.sigmab":
        return StackyFan(
            fan_from_max_cones(l2, [[e1, (1, 1)], [(1, 1), e2]]), f
        )
    c0 = [(1, 0, 0), (0, 1, 0), (1, 0, 1), (0, 1, 1)]
    if key == "coni.sigma0":
        return fan_from_max_cones(n3, [c0])
    if key == "coni.sigma+":
        return fan_from_max_cones(
            n3,
            [
                [(1, 0, 0), (0, 1, 0), (1, 0, 1)],
                [(0, 1, 0), (1, 0, 1), (0, 1, 1)],
            ],
        )
    if key == "coni.sigma-":
        return fan_from_max_cones(
            n3,
            [
                [(1, 0, 0), (0, 1, 0), (0, 1, 1)],
                [(1, 0, 0), (1, 0, 1), (0, 1, 1)],
            ],
        )
    if key == "coni.sigmab":
        return star_subdivide(fan_from_max_cones(n3, [c0]), (1, 1, 1))
    raise UnknownName(name)


BUILTIN_NAMES = (
    "surf.sigma0",
    "surf.sigma+",
    "surf.sigma-",
    "surf.sigmaB",
    "coni.sigma0",
    "coni.sigma+",
    "coni.sigma-",
    "coni.sigmaB",
)


# ---------------------------------------------------------------------------
# toric utilities for the coherent side


def class_group_projection(fan: Fan):
    """Projection Z^rays -> Cl(X) for simplicial fans with free Cl.

    Returns (rays, proj) where proj maps a ray-coefficient vector to
    coordinates of its divisor class.  Raises if Cl has torsion (never the
    case for the cover fans used here).
    """
    rays = fan.rays()
    # Cl = coker(M -> Z^rays), m |-> (<m, ray_i>)_i: matrix rows = rays
    b = tuple(tuple(r) for r in rays)
    u, d, _ = smith_normal_form(b)
    r = len(rays)
    k = min(r, fan.n)
    diag = [d[i][i] for i in range(k)]
    if any(x not in (0, 1) for x in diag):
        raise ValueError("divisor class group has torsion; unsupported")
    free_rows = [i for i in range(r) if i >= k or diag[i] == 0]

    def proj(coeffs):
        ua = mat_vec(u, tuple(coeffs))
        return tuple(ua[i] for i in free_rows)

    return rays, proj


def _std_basis(n):
    return [tuple(1 if i == j else 0 for j in range(n)) for i in range(n)]


def wall_curve_degree(fan: Fan, wall: Cone, coeffs, rays=None) -> int:
    """Degree of O(sum a_rho D_rho) on the invariant curve of a wall.

    Requires the two maximal cones adjacent to the wall to be unimodular.
    """
    rays = rays if rays is not None else fan.rays()
    adj = [
        s
        for s in fan.maximal_cones()
        if s.dim == wall.dim + 1 and s.contains_cone(wall)
    ]
    if len(adj) != 2:
        raise ValueError("wall must separate exactly two maximal cones")
    extra = []
    for s in adj:
        extra.extend(r for r in s.rays if r not in wall.rays)
    ua, ub = extra
    # relation ua + ub = sum c_rho u_rho over the wall rays
    rhs = tuple(a + b for a, b in zip(ua, ub))
    cs = solve_int(transpose(wall.rays), rhs) if wall.rays else ()
    if cs is None:
        raise ValueError("wall relation is not integral (non-smooth cones?)")
    deg = 0
    amap = {r: a for r, a in zip(rays, coeffs)}
    deg += amap.get(tuple(ua), 0) + amap.get(tuple(ub), 0)
    for r, c in zip(wall.rays, cs):
        deg -= c * amap.get(tuple(r), 0)
    return deg


def quotient_projection(n, ray):
    """Unimodular projection Z^n -> Z^(n-1) with kernel Z*ray."""
    ray = primitive(tuple(ray))
    col = tuple((x,) for x in ray)
    u, d, _ = smith_normal_form(col)
    if d[0][0] != 1:
        raise ValueError("ray must be primitive")
    return tuple(u[1:])


def star_fan(fan: Fan, ray):
    """Quotient fan of the star of a ray: the fan of the divisor V(ray).

    Returns (quotient lattice, projection rows, star Fan, lift map) where
    lift maps each star-fan ray back to the fan ray it came from.
    """
    ray = primitive(tuple(ray))
    proj = quotient_projection(fan.n, ray)
    ray_cone = Cone.from_rays(fan.n, [ray])
    qlat = Lattice(fan.n - 1, fan.ambient.label + "/" + "".join(map(str, ray)))
    cones = []
    lift = {}
    for sigma in fan.cones:
        if not sigma.contains_point(ray) or sigma.dim < 1:
            continue
        if not ray_cone.is_face_of(sigma):
            continue
        imgs = []
        for r in sigma.rays:
            if tuple(r) == ray:
                continue
            img = primitive(mat_vec(proj, r))
            if mat_vec(proj, r) != img:
                raise ValueError("non-primitive star ray; unsupported fan")
            imgs.append(img)
            lift[img] = tuple(r)
        cones.append(Cone.from_rays(fan.n - 1, imgs))
    star = fan_validate(qlat, cones)
    return qlat, proj, star, lift


def restrict_divisor_to_star(fan: Fan, ray, coeffs, rays=None):
    """Coefficients of O(D)|_{V(ray)} on the star fan of the ray."""
    ray = primitive(tuple(ray))
    rays = rays if rays is not None else fan.rays()
    amap = {tuple(r): a for r, a in zip(rays, coeffs)}
    a_ray = amap.get(ray, 0)
    m = solve_int((ray,), (-a_ray,))
    if m is None:
        raise ValueError("no integral shift; divisor not Cartier along ray")
    _, proj, star, lift = star_fan(fan, ray)
    out = []
    for rbar in star.rays():
        r = lift[tuple(rbar)]
        out.append(amap.get(r, 0) + dot(m, r))
    return star, tuple(out)


def support_function_pullback(coarse: Fan, fine: Fan, coeffs, rays=None):
    """Coefficients of p^* O(D) on a refining fan (Cartier D)."""
    rays = rays if rays is not None else coarse.rays()
    amap = {tuple(r): a for r, a in zip(rays, coeffs)}
    m_of = {}
    for sigma in coarse.maximal_cones():
        rhs = tuple(-amap.get(tuple(r), 0) for r in sigma.rays)
        m = solve_int(sigma.rays, rhs)
        if m is None:
            raise ValueError("divisor is not Cartier on a maximal cone")
        m_of[sigma] = m
    out = []
    for r in fine.rays():
        sigma = next(
            s for s in coarse.maximal_cones() if s.contains_point(r)
        )
        out.append(-dot(m_of[sigma], r))
    return tuple(out)

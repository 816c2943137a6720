"""Representations of an arrangement's face poset and their derived Homs.

A sheaf constructible along the arrangement is a functor
cells -> complexes of Q-vector spaces (generization maps toward bigger
cells).  Objects are built from three constructions only - indicator
modules of half-open convex regions, shifts, and cones over strict maps -
and each carries a complex of projectives quasi-isomorphic to it
(projectives are the representables P_c, with Hom(P_c, F) = F(c)).
Resolutions of indicators are minimal; cones use a lift-with-homotopy of
the glueing map, which keeps all differentials strict.

Derived Homs, sections over open cell unions (RHom out of the indicator
of the union) and microstalks (RHom out of the cone of an inclusion of
open stars) then reduce to ranks of exact matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .arrangement import Arrangement
from .exact import rank_frac, solve_frac

MAX_RESOLUTION_DEPTH = 9


class NotASheafMap(ValueError):
    pass


class NonGenericCovector(ValueError):
    pass


class StabilizationFailed(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# small exact matrix helpers (rows = target, cols = source)


def _mat(rows):
    return tuple(tuple(Fraction(x) for x in r) for r in rows)


def _zeros(r, c):
    return tuple(tuple(Fraction(0) for _ in range(c)) for _ in range(r))


def _id(n):
    return tuple(
        tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n)
    )


def _mul(a, b):
    if not a or not b:
        return ()
    bt = list(zip(*b))
    return tuple(
        tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a
    )


def _apply(mat, vec):
    return tuple(sum(a * b for a, b in zip(row, vec)) for row in mat)


def _scale(mat, s):
    return tuple(tuple(s * x for x in row) for row in mat)


def _nullspace(rows, ncols):
    """Kernel basis (as vectors of length ncols) of the matrix over Q."""
    m = len(rows)
    a = [list(row) for row in rows]
    pivots = []
    r = 0
    for c in range(ncols):
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
    basis = []
    for fc in range(ncols):
        if fc in pivots:
            continue
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -a[i][fc]
        basis.append(tuple(v))
    return basis


# ---------------------------------------------------------------------------
# modules


@dataclass
class Module:
    arr: Arrangement
    dims: dict  # cell -> positive dim
    maps: dict  # (a, b), a < b in closure order -> matrix dims[b] x dims[a]

    def dim(self, c):
        return self.dims.get(c, 0)

    def map(self, a, b):
        if a == b:
            return _id(self.dim(a))
        m = self.maps.get((a, b))
        if m is None:
            return _zeros(self.dim(b), self.dim(a))
        return m

    def is_zero(self):
        return not self.dims


def indicator_module(arr: Arrangement, cells) -> Module:
    dims = {c: 1 for c in cells}
    maps = {}
    one = _id(1)
    for a in cells:
        for b in cells:
            if a != b and arr.leq(a, b):
                maps[(a, b)] = one
    return Module(arr, dims, maps)


def direct_sum_modules(arr, mods):
    dims = {}
    offs = []
    for m in mods:
        offs.append({})
        for c, d in m.dims.items():
            offs[-1][c] = dims.get(c, 0)
            dims[c] = dims.get(c, 0) + d
    maps = {}
    cells = list(dims)
    for a in cells:
        for b in cells:
            if a == b or not arr.leq(a, b):
                continue
            rows = [[Fraction(0)] * dims[a] for _ in range(dims[b])]
            nz = False
            for m, off in zip(mods, offs):
                blk = m.maps.get((a, b))
                if blk is None:
                    continue
                ra, ca = off.get(b, 0), off.get(a, 0)
                for i, row in enumerate(blk):
                    for j, x in enumerate(row):
                        if x:
                            rows[ra + i][ca + j] = x
                            nz = True
            if nz:
                maps[(a, b)] = _mat(rows)
    return Module(arr, dims, maps), offs


def minimal_generators(arr, mod: Module):
    """Minimal generating set: list of (cell, vector in mod(cell))."""
    out = []
    order = sorted(mod.dims, key=lambda c: (arr.dim(c), c))
    for c in order:
        d = mod.dim(c)
        img_rows = []
        for a in mod.dims:
            if a != c and arr.leq(a, c):
                for col in zip(*mod.map(a, c)):
                    img_rows.append(tuple(col))
        base = list(img_rows)
        rk = rank_frac(base)
        for j in range(d):
            e = tuple(Fraction(1 if i == j else 0) for i in range(d))
            if rank_frac(base + [e]) > rk:
                base.append(e)
                rk += 1
                out.append((c, e))
    return out


# ---------------------------------------------------------------------------
# complexes of modules


@dataclass
class ModComplex:
    arr: Arrangement
    terms: dict  # degree -> Module
    diffs: dict  # degree k -> {cell: matrix term(k+1)(c) x term(k)(c)}

    def degrees(self):
        return sorted(k for k, m in self.terms.items() if not m.is_zero())

    def term(self, k) -> Module:
        m = self.terms.get(k)
        return m if m is not None else Module(self.arr, {}, {})

    def diff_at(self, k, c):
        m = self.diffs.get(k, {}).get(c)
        if m is None:
            return _zeros(self.term(k + 1).dim(c), self.term(k).dim(c))
        return m

    def stalk_dims(self, c) -> dict:
        degs = self.degrees()
        out = {}
        for k in range(min(degs, default=0) - 1, max(degs, default=-1) + 2):
            dk = self.term(k).dim(c)
            if dk == 0:
                continue
            h = dk - rank_frac(self.diff_at(k, c)) - rank_frac(
                self.diff_at(k - 1, c)
            )
            if h:
                out[k] = h
        return out


def single_module_complex(mod: Module, degree=0) -> ModComplex:
    return ModComplex(mod.arr, {degree: mod}, {})


def shift_mod_complex(fc: ModComplex, s: int) -> ModComplex:
    sign = -1 if s % 2 else 1
    return ModComplex(
        fc.arr,
        {k - s: m for k, m in fc.terms.items()},
        {
            k - s: {c: _scale(m, sign) for c, m in d.items()}
            for k, d in fc.diffs.items()
        },
    )


def cone_mod_complex(phi, src: ModComplex, dst: ModComplex):
    """cone(phi)^k = src^{k+1} (+) dst^k; returns (complex, offsets)."""
    arr = src.arr
    degs = {k - 1 for k in src.terms} | set(dst.terms)
    terms = {}
    parts = {}
    for k in sorted(degs):
        total, offs = direct_sum_modules(arr, [src.term(k + 1), dst.term(k)])
        terms[k] = total
        parts[k] = offs
    diffs = {}
    for k in sorted(degs):
        if k + 1 not in terms:
            continue
        dd = {}
        cells = set(terms[k].dims) | set(terms[k + 1].dims)
        for c in cells:
            rows = [
                [Fraction(0)] * terms[k].dim(c)
                for _ in range(terms[k + 1].dim(c))
            ]
            _insert(rows, src.diff_at(k + 1, c), parts[k + 1][0].get(c, 0),
                    parts[k][0].get(c, 0), -1)
            blk = phi.get(k + 1, {}).get(c)
            if blk is not None:
                _insert(rows, blk, parts[k + 1][1].get(c, 0),
                        parts[k][0].get(c, 0), 1)
            _insert(rows, dst.diff_at(k, c), parts[k + 1][1].get(c, 0),
                    parts[k][1].get(c, 0), 1)
            if any(any(r) for r in rows):
                dd[c] = _mat(rows)
        if dd:
            diffs[k] = dd
    return ModComplex(arr, terms, diffs), parts


def _insert(rows, blk, roff, coff, sign):
    for i, row in enumerate(blk):
        for j, x in enumerate(row):
            if x:
                rows[roff + i][coff + j] = sign * x


def check_chain_map(phi, src: ModComplex, dst: ModComplex):
    """Validate naturality and commutation with differentials of phi."""
    arr = src.arr
    for k in set(src.terms) | set(dst.terms):
        fs, fd = src.term(k), dst.term(k)
        comps = phi.get(k, {})
        cells = set(fs.dims) | set(fd.dims)
        for a in cells:
            pa = comps.get(a, _zeros(fd.dim(a), fs.dim(a)))
            if len(pa) != fd.dim(a) or (pa and len(pa[0]) != fs.dim(a)):
                raise NotASheafMap(f"component shape mismatch at cell {a}")
            for b in cells:
                if a == b or not arr.leq(a, b):
                    continue
                pb = comps.get(b, _zeros(fd.dim(b), fs.dim(b)))
                if _mul(pb, fs.map(a, b)) != _mul(fd.map(a, b), pa):
                    raise NotASheafMap(
                        f"map not natural along {a} <= {b} in degree {k}"
                    )
        # chain condition d . phi = phi . d at each cell
        for c in cells:
            left = _mul(dst.diff_at(k, c), comps.get(c, _zeros(fd.dim(c), fs.dim(c))))
            up = phi.get(k + 1, {}).get(
                c, _zeros(dst.term(k + 1).dim(c), src.term(k + 1).dim(c))
            )
            right = _mul(up, src.diff_at(k, c))
            if left != right:
                raise NotASheafMap(f"map not a chain map at cell {c}, degree {k}")


# ---------------------------------------------------------------------------
# projective complexes


@dataclass
class ProjComplex:
    arr: Arrangement
    gens: dict  # degree -> list[cell]
    diffs: dict  # degree k -> matrix rows=len(gens[k+1]), cols=len(gens[k])


@dataclass
class Resolved:
    complex: ModComplex
    proj: ProjComplex
    eps: dict  # degree -> list of vectors eps[k][j] in term(k)(cell of gen j)


def resolve_module(arr: Arrangement, mod: Module, degree=0) -> Resolved:
    """Minimal projective resolution of a single module at the degree."""
    levels = []  # list of (gens cells, eps vectors or None, diff matrix to previous)
    gens0 = minimal_generators(arr, mod)
    levels.append(([c for c, _ in gens0], [v for _, v in gens0], None))
    cur_cells = [c for c, _ in gens0]
    cur_vecs = [v for _, v in gens0]
    target = mod
    depth = 0
    while True:
        ker = {}
        for c in sorted(target.dims, key=lambda c: (arr.dim(c), c)):
            elig = [i for i, g in enumerate(cur_cells) if arr.leq(g, c)]
            if not elig:
                continue
            tdim = target.dim(c)
            cols = [
                _apply(target.map(cur_cells[i], c), cur_vecs[i]) for i in elig
            ]
            matrix = tuple(
                tuple(cols[j][i] for j in range(len(elig)))
                for i in range(tdim)
            )
            null = _nullspace(matrix, len(elig))
            if null:
                ker[c] = (elig, null)
        if not ker:
            break
        depth += 1
        if depth > MAX_RESOLUTION_DEPTH:
            raise RuntimeError("resolution did not terminate")
        kdims = {c: len(b) for c, (_, b) in ker.items()}
        kmaps = {}
        for a, (elig_a, basis_a) in ker.items():
            for b, (elig_b, basis_b) in ker.items():
                if a == b or not arr.leq(a, b):
                    continue
                pos = {g: i for i, g in enumerate(elig_b)}
                bmat = tuple(
                    tuple(bb[i] for bb in basis_b)
                    for i in range(len(elig_b))
                )
                cols = []
                for v in basis_a:
                    w = [Fraction(0)] * len(elig_b)
                    for coeff, gi in zip(v, elig_a):
                        if coeff:
                            w[pos[gi]] = coeff
                    sol = solve_frac(bmat, tuple(w))
                    if sol is None:
                        raise RuntimeError("kernel not functorial")
                    cols.append(sol)
                kmaps[(a, b)] = tuple(
                    tuple(cols[j][i] for j in range(len(cols)))
                    for i in range(len(basis_b))
                )
        kmod = Module(arr, kdims, kmaps)
        kg = minimal_generators(arr, kmod)
        # differential entries: new gen -> vector over previous gens
        dmat_rows = []
        for c, v in kg:
            elig, basis = ker[c]
            w = [Fraction(0)] * len(cur_cells)
            for coeff, bvec in zip(v, basis):
                if coeff:
                    for x, gi in zip(bvec, elig):
                        w[gi] += coeff * x
            dmat_rows.append(tuple(w))
        dmat = tuple(
            tuple(dmat_rows[j][i] for j in range(len(kg)))
            for i in range(len(cur_cells))
        )
        levels.append(([c for c, _ in kg], None, dmat))
        cur_cells = [c for c, _ in kg]
        cur_vecs = [v for _, v in kg]
        target = kmod
    gens = {}
    diffs = {}
    eps = {}
    for lvl, (cells, vecs, dmat) in enumerate(levels):
        k = degree - lvl
        gens[k] = cells
        if lvl == 0:
            eps[k] = vecs
        else:
            eps[k] = [() for _ in cells]
        if dmat is not None:
            diffs[k] = dmat
    return Resolved(
        single_module_complex(mod, degree), ProjComplex(arr, gens, diffs), eps
    )


def shift_resolved(obj: Resolved, s: int) -> Resolved:
    sign = -1 if s % 2 else 1
    comp = shift_mod_complex(obj.complex, s)
    gens = {k - s: list(g) for k, g in obj.proj.gens.items()}
    diffs = {k - s: _scale(m, sign) for k, m in obj.proj.diffs.items()}
    eps = {k - s: list(v) for k, v in obj.eps.items()}
    return Resolved(comp, ProjComplex(obj.proj.arr, gens, diffs), eps)


def lift_with_homotopy(phi, src: Resolved, dst: Resolved):
    """Lift a strict chain map through the two resolutions.

    Returns (phi_t, homot): for the j-th degree-k generator of src.proj at
    cell c, phi_t[k][j] is a dict {dst gen index: coeff} (cells <= c) and
    homot[k][j] a vector in dst.complex.term(k-1)(c), satisfying
    d.phi_t = phi_t.d and eps.phi_t - phi.eps = d.homot + homot.d.
    """
    arr = src.proj.arr
    phi_t = {}
    homot = {}
    for k in sorted(src.proj.gens, reverse=True):
        phi_t[k] = []
        homot[k] = []
        dst_k = dst.proj.gens.get(k, [])
        dst_k1 = dst.proj.gens.get(k + 1, [])
        ddst = dst.proj.diffs.get(k)
        dsrc = src.proj.diffs.get(k)
        for j, c in enumerate(src.proj.gens[k]):
            elig = [i for i, g in enumerate(dst_k) if arr.leq(g, c)]
            elig_up = [i for i, g in enumerate(dst_k1) if arr.leq(g, c)]
            pos_up = {g: i for i, g in enumerate(elig_up)}
            tdim = dst.complex.term(k).dim(c)
            bdim = dst.complex.term(k - 1).dim(c)
            # u := phi_t^{k+1}(d_src g), in local coords on elig_up
            u = [Fraction(0)] * len(elig_up)
            if dsrc is not None and (k + 1) in phi_t:
                for i2 in range(len(src.proj.gens.get(k + 1, []))):
                    coeff = dsrc[i2][j]
                    if coeff:
                        for g2, c2 in phi_t[k + 1][i2].items():
                            u[pos_up[g2]] += coeff * c2
            # v := phi(eps_src g) + homot^{k+1}(d_src g), in dst^k(c)
            v = [Fraction(0)] * tdim
            sv = src.eps.get(k, [])
            svj = sv[j] if j < len(sv) else ()
            if svj:
                pc = phi.get(k, {}).get(c)
                if pc is not None:
                    for i, x in enumerate(_apply(pc, svj)):
                        v[i] += x
            if dsrc is not None and (k + 1) in homot:
                for i2, c2 in enumerate(src.proj.gens.get(k + 1, [])):
                    coeff = dsrc[i2][j]
                    if coeff:
                        hv = homot[k + 1][i2]
                        if hv:
                            w = _apply(dst.complex.term(k).map(c2, c), hv)
                            for i, x in enumerate(w):
                                v[i] += coeff * x
            # solve d.x = u ; eps(x) - d_G(y) = v
            nx, ny = len(elig), bdim
            rows, rhs = [], []
            for r_i, gu in enumerate(elig_up):
                row = [Fraction(0)] * (nx + ny)
                if ddst is not None:
                    for x_i, g in enumerate(elig):
                        row[x_i] = ddst[gu][g]
                rows.append(tuple(row))
                rhs.append(u[r_i])
            eps_cols = []
            ev = dst.eps.get(k, [])
            for g in elig:
                vec = ev[g] if g < len(ev) else ()
                if vec:
                    eps_cols.append(
                        _apply(dst.complex.term(k).map(dst_k[g], c), vec)
                    )
                else:
                    eps_cols.append(tuple(Fraction(0) for _ in range(tdim)))
            dg = dst.complex.diff_at(k - 1, c)
            for r_i in range(tdim):
                row = [Fraction(0)] * (nx + ny)
                for x_i in range(nx):
                    row[x_i] = eps_cols[x_i][r_i]
                for y_i in range(ny):
                    row[nx + y_i] = -dg[r_i][y_i]
                rows.append(tuple(row))
                rhs.append(v[r_i])
            if rows and (nx + ny):
                sol = solve_frac(tuple(rows), tuple(rhs))
                if sol is None:
                    raise RuntimeError("comparison lift failed")
            elif rows:
                if any(rhs):
                    raise RuntimeError("comparison lift failed (no unknowns)")
                sol = ()
            else:
                sol = tuple(Fraction(0) for _ in range(nx + ny))
            phi_t[k].append(
                {elig[i]: sol[i] for i in range(nx) if sol[i]}
            )
            homot[k].append(tuple(sol[nx:nx + ny]))
    return phi_t, homot


def cone_resolved(phi, src: Resolved, dst: Resolved, validate=False) -> Resolved:
    """Cone of a strict chain map phi: src.complex -> dst.complex."""
    if validate:
        check_chain_map(phi, src.complex, dst.complex)
    comp, parts = cone_mod_complex(phi, src.complex, dst.complex)
    phi_t, homot = lift_with_homotopy(phi, src, dst)
    gens = {}
    diffs = {}
    eps = {}
    degs = {k - 1 for k in src.proj.gens} | set(dst.proj.gens)
    for k in sorted(degs):
        ga = src.proj.gens.get(k + 1, [])
        gb = dst.proj.gens.get(k, [])
        gens[k] = list(ga) + list(gb)
        ea = src.eps.get(k + 1, [() for _ in ga])
        eb = dst.eps.get(k, [() for _ in gb])
        evec = []
        for j, c in enumerate(ga):
            va = ea[j] if j < len(ea) else ()
            hv = homot.get(k + 1, [])
            vh = hv[j] if j < len(hv) else ()
            adim = src.complex.term(k + 1).dim(c)
            bdim = dst.complex.term(k).dim(c)
            va = va if va else tuple(Fraction(0) for _ in range(adim))
            vh = vh if vh else tuple(Fraction(0) for _ in range(bdim))
            evec.append(tuple(va) + tuple(vh))
        for j, c in enumerate(gb):
            adim = src.complex.term(k + 1).dim(c)
            vb = eb[j] if j < len(eb) else ()
            bdim = dst.complex.term(k).dim(c)
            vb = vb if vb else tuple(Fraction(0) for _ in range(bdim))
            evec.append(tuple(Fraction(0) for _ in range(adim)) + tuple(vb))
        eps[k] = evec
    for k in sorted(degs):
        if k + 1 not in gens:
            continue
        na, nb = len(src.proj.gens.get(k + 1, [])), len(
            dst.proj.gens.get(k, [])
        )
        na2, nb2 = len(src.proj.gens.get(k + 2, [])), len(
            dst.proj.gens.get(k + 1, [])
        )
        rows = [
            [Fraction(0)] * (na + nb) for _ in range(na2 + nb2)
        ]
        da = src.proj.diffs.get(k + 1)
        if da is not None:
            for i in range(na2):
                for j in range(na):
                    rows[i][j] = -da[i][j]
        pt = phi_t.get(k + 1, [])
        for j in range(na):
            dct = pt[j] if j < len(pt) else {}
            for g2, coeff in dct.items():
                rows[na2 + g2][j] = coeff
        db = dst.proj.diffs.get(k)
        if db is not None:
            for i in range(nb2):
                for j in range(nb):
                    rows[na2 + i][na + j] = db[i][j]
        if any(any(r) for r in rows):
            diffs[k] = _mat(rows)
    return Resolved(comp, ProjComplex(src.proj.arr, gens, diffs), eps)


# ---------------------------------------------------------------------------
# derived Hom


def rhom_resolved(fobj: Resolved, g: ModComplex) -> dict:
    """Graded dims of RHom(fobj, g) over the common arrangement."""
    arr = fobj.proj.arr
    proj = fobj.proj
    gdegs = g.degrees()
    if not gdegs or not proj.gens:
        return {}
    kmin = min(proj.gens)
    kmax = max(proj.gens)
    nmin = min(gdegs) - kmax
    nmax = max(gdegs) - kmin
    # basis of T^n: (k, j, t) for gens j of degree k, t < dim g^{k+n}(c_j)
    bases = {}
    for n in range(nmin, nmax + 2):
        basis = []
        for k, cells in proj.gens.items():
            tm = g.term(k + n)
            for j, c in enumerate(cells):
                d = tm.dim(c)
                for t in range(d):
                    basis.append((k, j, t))
        bases[n] = basis
    index = {
        n: {key: i for i, key in enumerate(b)} for n, b in bases.items()
    }
    dims_out = {}
    ranks = {}
    for n in range(nmin, nmax + 1):
        rows = []
        src_basis = bases.get(n, [])
        tgt_index = index.get(n + 1, {})
        tgt_len = len(bases.get(n + 1, []))
        cols = {}
        for i_src, (k, j, t) in enumerate(src_basis):
            c = proj.gens[k][j]
            col = {}
            # d_G . psi
            dgc = g.diffs.get(k + n, {}).get(c)
            if dgc is not None:
                for r, row in enumerate(dgc):
                    if row[t]:
                        key = (k, j, r)
                        col[tgt_index[key]] = col.get(tgt_index[key], 0) + row[t]
            # -(-1)^n psi . d_R : contributes to target blocks (k-1, h)
            sgn = -1 if n % 2 == 0 else 1
            dmat = proj.diffs.get(k - 1)
            if dmat is not None:
                for h in range(len(proj.gens.get(k - 1, []))):
                    coeff = dmat[j][h]
                    if coeff:
                        ch = proj.gens[k - 1][h]
                        gm = g.term(k + n).map(c, ch)
                        for r in range(len(gm)):
                            val = gm[r][t]
                            if val:
                                key = (k - 1, h, r)
                                idx = tgt_index[key]
                                col[idx] = col.get(idx, 0) + sgn * coeff * val
            cols[i_src] = col
        # convert to sparse rows for ranks
        sp = {}
        for i_src, col in cols.items():
            for r, val in col.items():
                if val:
                    sp.setdefault(r, {})[i_src] = val
        ranks[n] = _sparse_rank(sp)
    for n in range(nmin, nmax + 1):
        dn = len(bases.get(n, []))
        h = dn - ranks.get(n, 0) - ranks.get(n - 1, 0)
        if h:
            dims_out[n] = h
    return dims_out


def _sparse_rank(row_dict):
    from .exact import rank_sparse
    from math import gcd

    rows = []
    for r in row_dict.values():
        den = 1
        for v in r.values():
            f = Fraction(v)
            den = den * f.denominator // gcd(den, f.denominator)
        rows.append({c: int(Fraction(v) * den) for c, v in r.items()})
    return rank_sparse(rows)


def euler_of_dims(dims: dict) -> int:
    return sum((-1) ** (k % 2) * d for k, d in dims.items())

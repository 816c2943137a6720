"""Lattices, lattice maps and finite cokernels.

Lattices are Z^rank with a fixed ordered basis and carry labels only; maps
between distinct labels never unify coordinates silently.  The dual-pairing
convention used everywhere: covectors act on vectors through the plain dot
product.
"""
from __future__ import annotations

from dataclasses import dataclass

from .exact import (
    identity,
    mat_mul,
    mat_vec,
    rank_int,
    smith_normal_form,
    transpose,
)


class NonInjective(ValueError):
    """Raised when a lattice map expected to be injective is rank deficient."""


@dataclass(frozen=True)
class Lattice:
    rank: int
    label: str = "Z"

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("lattice rank must be >= 0")

    def dual(self) -> "Lattice":
        return Lattice(self.rank, self.label + "^")

    def __repr__(self):
        return f"{self.label}^{self.rank}"


@dataclass(frozen=True)
class LatticeMap:
    """Map of lattices given by an integer matrix acting on columns.

    ``matrix`` has shape (target.rank x source.rank); composition is matrix
    product.
    """

    source: Lattice
    target: Lattice
    matrix: tuple

    def __post_init__(self):
        rows = len(self.matrix)
        if rows != self.target.rank:
            raise ValueError("matrix rows must match target rank")
        for r in self.matrix:
            if len(r) != self.source.rank:
                raise ValueError("matrix cols must match source rank")

    @staticmethod
    def from_columns(source, target, columns):
        return LatticeMap(source, target, transpose(tuple(tuple(c) for c in columns)))

    @staticmethod
    def identity_map(lat: Lattice) -> "LatticeMap":
        return LatticeMap(lat, lat, identity(lat.rank))

    def __call__(self, v):
        return mat_vec(self.matrix, v)

    def compose(self, other: "LatticeMap") -> "LatticeMap":
        """self after other."""
        if other.target != self.source:
            raise ValueError("composition mismatch")
        return LatticeMap(other.source, self.target, mat_mul(self.matrix, other.matrix))

    def is_injective(self) -> bool:
        return rank_int(self.matrix) == self.source.rank


@dataclass(frozen=True)
class FiniteAbelianGroup:
    """Finite abelian group as a divisibility chain d1 | d2 | ... (each >= 2)."""

    invariant_factors: tuple

    def __post_init__(self):
        fs = self.invariant_factors
        for a, b in zip(fs, fs[1:]):
            if b % a:
                raise ValueError("invariant factors must form a chain")
        if any(f < 2 for f in fs):
            raise ValueError("invariant factors must be >= 2")

    @property
    def order(self) -> int:
        n = 1
        for f in self.invariant_factors:
            n *= f
        return n

    @property
    def is_trivial(self) -> bool:
        return not self.invariant_factors

    def __repr__(self):
        if self.is_trivial:
            return "0"
        return " x ".join(f"Z/{f}" for f in self.invariant_factors)


def dual_map(f: LatticeMap) -> LatticeMap:
    """Transpose on matrices; contravariant on duals."""
    return LatticeMap(f.target.dual(), f.source.dual(), transpose(f.matrix))


def cokernel_torsion(f: LatticeMap) -> FiniteAbelianGroup:
    """Torsion of coker(f) for injective f.

    For an injective f with finite cokernel this is the character group of
    the kernel of the induced map of algebraic tori.
    """
    if not f.is_injective():
        raise NonInjective("lattice map is rank deficient")
    _, d, _ = smith_normal_form(f.matrix)
    facs = [d[i][i] for i in range(min(len(d), len(d[0]) if d else 0)) if d[i][i] > 1]
    return FiniteAbelianGroup(tuple(facs))

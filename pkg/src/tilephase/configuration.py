"""Configurations of tiles on tori, finite windows, or the infinite plane.

A placement is ``(site, species_index, orientation_index)``.  Admissibility
means pairwise disjoint tile interiors; the energy of an admissible
configuration is ``-sum mu_x`` and overlapping configurations get the
distinguished ``INFINITY``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, NamedTuple

from .exactmath import (
    INFINITY,
    Basis,
    Scaled,
    Vec,
    lattice_cosets,
    lattice_det,
    lattice_reduce,
)
from .system import TileSystem


class Placement(NamedTuple):
    site: Vec
    species: int
    orient: int


@dataclass(frozen=True)
class Torus:
    """Z^2 modulo a full-rank sublattice given by its HNF basis."""

    basis: Basis

    @cached_property
    def det(self) -> int:
        return lattice_det(self.basis)

    @cached_property
    def sites(self) -> tuple:
        return tuple(lattice_cosets(self.basis))

    def reduce(self, v: Vec) -> Vec:
        return lattice_reduce(self.basis, v)

    def __str__(self):
        (a, _), (b, c) = self.basis
        return f"torus {a} {b} {c}"


@dataclass(frozen=True)
class Window:
    """A finite set of anchor sites with no wraparound.

    Tiles anchored in the window may stick out of it; the window only limits
    where anchors live.
    """

    sites: frozenset

    @staticmethod
    def rectangle(x0: int, y0: int, x1: int, y1: int) -> "Window":
        return Window(frozenset((x, y) for x in range(x0, x1) for y in range(y0, y1)))

    @cached_property
    def bbox(self):
        xs = [s[0] for s in self.sites]
        ys = [s[1] for s in self.sites]
        return (min(xs), min(ys), max(xs), max(ys))

    def reduce(self, v: Vec) -> Vec:
        return v

    def __str__(self):
        x0, y0, x1, y1 = self.bbox
        return f"window {x0} {y0} {x1 + 1} {y1 + 1}"


PLANE = None  # domain value for "finitely many tiles on the infinite plane"


class Configuration:
    """An immutable set of placements over a domain."""

    def __init__(self, system: TileSystem, domain, placements: Iterable[Placement]):
        self.system = system
        self.domain = domain
        if isinstance(domain, Torus):
            placements = (
                Placement(domain.reduce(p[0]), p[1], p[2]) for p in placements
            )
        self.placements = frozenset(
            p if isinstance(p, Placement) else Placement(*p) for p in placements
        )

    # ------------------------------------------------------------------

    def units(self, p: Placement):
        """Covered units of one placement, reduced into the domain if toroidal."""
        base = self.system.units_of(p.species, p.orient)
        ux, uy = p.site
        if isinstance(self.domain, Torus):
            red = self.domain.reduce
            if self.system.is_polyomino:
                return [red((x + ux, y + uy)) for x, y in base]
            return [red((x + ux, y + uy)) + (k,) for x, y, k in base]
        if self.system.is_polyomino:
            return [(x + ux, y + uy) for x, y in base]
        return [(x + ux, y + uy, k) for x, y, k in base]

    @cached_property
    def unit_map(self) -> dict:
        """unit -> placement, or None if some unit is covered twice."""
        out: dict = {}
        for p in self.placements:
            for u in self.units(p):
                if u in out:
                    return None
                out[u] = p
        return out

    @cached_property
    def is_admissible(self) -> bool:
        if len({p.site for p in self.placements}) != len(self.placements):
            return False
        return self.unit_map is not None

    @cached_property
    def weight_sum(self) -> int:
        return sum(self.system.species[p.species].weight for p in self.placements)

    def hamiltonian(self):
        """-sum of chemical potentials, or INFINITY on overlap."""
        if not self.is_admissible:
            return INFINITY
        return Scaled(Fraction(-self.weight_sum), self.system.norm2)

    # ------------------------------------------------------------------

    def with_placement(self, p: Placement) -> "Configuration":
        return Configuration(self.system, self.domain, self.placements | {p})

    def without_placement(self, p: Placement) -> "Configuration":
        return Configuration(self.system, self.domain, self.placements - {p})

    def translated(self, d: Vec) -> "Configuration":
        moved = [
            Placement((p.site[0] + d[0], p.site[1] + d[1]), p.species, p.orient)
            for p in self.placements
        ]
        return Configuration(self.system, self.domain, moved)

    def sorted_placements(self) -> list:
        return sorted(self.placements)

    def __len__(self):
        return len(self.placements)

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and self.placements == other.placements
            and self.domain == other.domain
        )

    def __hash__(self):
        return hash((self.domain, self.placements))

    def __repr__(self):
        return f"Configuration({self.domain}, {len(self.placements)} tiles)"

"""Tile systems: species, orientation expansion, and exact overlap tables.

A system is a finite list of weighted tile species on Z^2 together with a
symmetry policy saying which lattice rotations/reflections of each shape may
be placed.  Chemical potentials are ``mu_i = w_i / sqrt(sum w_j^2)`` for the
integer weight vector ``w``; everything downstream carries the common
``norm2 = sum w_j^2`` tag so comparisons stay rational.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .exactmath import Scaled
from .geometry import (
    TileShape,
    closed_polygons_intersect,
    group_elements,
)

POLICIES = ("none", "rotations", "rotations+reflections")


@dataclass(frozen=True)
class Species:
    name: str
    weight: int
    shape: TileShape


class TileSystem:
    """Weighted hard-core tile species with their allowed orientations.

    Parameters
    ----------
    name : str
    species : sequence of Species
    symmetry : one of ``POLICIES``; which images of each base shape are
        placeable.  Distinct images are deduplicated up to translation.
    """

    def __init__(self, name: str, species, symmetry: str = "none"):
        if symmetry not in POLICIES:
            raise ValueError(f"unknown symmetry policy {symmetry!r}")
        species = tuple(species)
        if not species:
            raise ValueError("a tile system needs at least one species")
        kinds = {sp.shape.is_polyomino for sp in species}
        if len(kinds) != 1:
            raise ValueError("mixing polyomino and polygon species is not supported")
        names = [sp.name for sp in species]
        if len(set(names)) != len(names):
            raise ValueError("species names must be unique")
        for sp in species:
            if sp.weight <= 0:
                raise ValueError(f"species {sp.name!r} needs a positive integer weight")

        self.name = name
        self.species = species
        self.symmetry = symmetry
        self.is_polyomino = species[0].shape.is_polyomino
        self.dim = 2

        nrot = 1 if symmetry == "none" else 4
        refl = symmetry == "rotations+reflections"
        self._group = group_elements(refl)[: (8 if refl else nrot)]

        # orientation expansion, deduplicated up to translation
        self.oriented: list[list[TileShape]] = []
        self._orient_lookup: dict = {}
        for i, sp in enumerate(species):
            shapes: list[TileShape] = []
            for gname, mat in self._group:
                img = sp.shape.transformed(mat)
                key, _ = img.translation_key()
                if (i, key) in self._orient_lookup:
                    continue
                self._orient_lookup[(i, key)] = (i, len(shapes))
                shapes.append(img)
            self.oriented.append(shapes)

        # cross-species shape lookup (reflections can swap enantiomer species)
        self._shape_lookup: dict = {}
        for i, shapes in enumerate(self.oriented):
            for o, sh in enumerate(shapes):
                key, off = sh.translation_key()
                self._shape_lookup.setdefault(key, (i, o, off))

        self.oriented_ids = [
            (i, o) for i, shapes in enumerate(self.oriented) for o in range(len(shapes))
        ]

        # The activity vector has one component per oriented image, all at the
        # species weight; its squared Euclidean norm sets the normalisation of
        # every per-tile chemical potential.
        self.norm2 = sum(
            len(shapes) * sp.weight * sp.weight
            for shapes, sp in zip(self.oriented, species)
        )

        self._conflicts: dict = {}
        self._touching: dict = {}
        self._build_conflict_tables()

    # ------------------------------------------------------------------
    # basic quantities
    # ------------------------------------------------------------------

    def mu(self, i: int) -> Scaled:
        return Scaled(Fraction(self.species[i].weight), self.norm2)

    def shape(self, i: int, o: int) -> TileShape:
        return self.oriented[i][o]

    @property
    def areas(self) -> list[Fraction]:
        return [sp.shape.area for sp in self.species]

    @property
    def unit_size(self) -> int:
        """Units per area 1: 1 for cell systems, 4 for quarter systems."""
        return 1 if self.is_polyomino else 4

    def units_of(self, i: int, o: int) -> frozenset:
        """Covered units (cells or quarters) of the oriented shape at anchor 0."""
        sh = self.oriented[i][o]
        return sh.cells if self.is_polyomino else sh.quarters

    @property
    def outer_radius2(self) -> int:
        return max(sh.outer_radius2 for shapes in self.oriented for sh in shapes)

    # ------------------------------------------------------------------
    # overlap / touch displacement tables
    # ------------------------------------------------------------------

    def _build_conflict_tables(self) -> None:
        units = {io: self.units_of(*io) for io in self.oriented_ids}
        for io, jp in itertools.product(self.oriented_ids, repeat=2):
            a, b = units[io], units[jp]
            if self.is_polyomino:
                deltas = set(
                    (ax - bx, ay - by) for ax, ay in a for bx, by in b
                )
            else:
                by_kind_b: dict = {}
                for bx, by, k in b:
                    by_kind_b.setdefault(k, []).append((bx, by))
                deltas = set()
                for ax, ay, k in a:
                    for bx, by in by_kind_b.get(k, ()):
                        deltas.add((ax - bx, ay - by))
            # a configuration assigns at most one tile to each anchor site,
            # so coinciding anchors always conflict even for disjoint shapes
            deltas.add((0, 0))
            self._conflicts[(io, jp)] = frozenset(deltas)

        # closed-tile contact displacements (needed for locality radii)
        for io, jp in itertools.product(self.oriented_ids, repeat=2):
            sha, shb = self.shape(*io), self.shape(*jp)
            touch = set()
            if self.is_polyomino:
                for ax, ay in sha.cells:
                    for bx, by in shb.cells:
                        for ex in (-1, 0, 1):
                            for ey in (-1, 0, 1):
                                touch.add((ax - bx + ex, ay - by + ey))
            else:
                xs_a = [v[0] for v in sha.vertices]
                ys_a = [v[1] for v in sha.vertices]
                xs_b = [v[0] for v in shb.vertices]
                ys_b = [v[1] for v in shb.vertices]
                for dx in range(min(xs_a) - max(xs_b), max(xs_a) - min(xs_b) + 1):
                    for dy in range(min(ys_a) - max(ys_b), max(ys_a) - min(ys_b) + 1):
                        moved = tuple((x + dx, y + dy) for x, y in shb.vertices)
                        if closed_polygons_intersect(sha.vertices, moved):
                            touch.add((dx, dy))
            self._touching[(io, jp)] = frozenset(touch)

    def conflict_deltas(self, io, jp) -> frozenset:
        """Anchor displacements u_b - u_a at which the two tiles overlap."""
        return self._conflicts[(io, jp)]

    def touch_deltas(self, io, jp) -> frozenset:
        return self._touching[(io, jp)]

    @property
    def interaction_radius2(self) -> int:
        return max(
            (dx * dx + dy * dy for ds in self._conflicts.values() for dx, dy in ds),
            default=0,
        )

    @property
    def touch_radius2(self) -> int:
        return max(
            (dx * dx + dy * dy for ds in self._touching.values() for dx, dy in ds),
            default=0,
        )

    def overlap(self, p1, p2) -> bool:
        """Do two placements (site, species, orient) have intersecting interiors?"""
        (u1, i1, o1), (u2, i2, o2) = p1, p2
        return (u2[0] - u1[0], u2[1] - u1[1]) in self._conflicts[((i1, o1), (i2, o2))]

    # ------------------------------------------------------------------
    # group action on oriented shapes
    # ------------------------------------------------------------------

    def group(self, reflections: bool):
        return group_elements(reflections)

    @lru_cache(maxsize=None)
    def orientation_action(self, gname: str, mat: tuple):
        """Map (i, o) -> (i', o', shift) under the group element, or None.

        ``g(shape_{i,o}) == shape_{i',o'} + shift``.  Returns None when some
        image is not a placeable shape of the system (group not closed, e.g.
        a mirror applied to a single-enantiomer system).
        """
        out = {}
        for (i, o) in self.oriented_ids:
            img = self.shape(i, o).transformed(mat, normalize=False)
            key, off_img = img.translation_key()
            hit = self._shape_lookup.get(key)
            if hit is None:
                return None
            i2, o2, off_st = hit
            if self.species[i].weight != self.species[i2].weight:
                return None
            shift = (off_img[0] - off_st[0], off_img[1] - off_st[1])
            out[(i, o)] = (i2, o2, shift)
        return out

    def __repr__(self):
        return f"TileSystem({self.name!r}, {len(self.species)} species, {self.symmetry})"

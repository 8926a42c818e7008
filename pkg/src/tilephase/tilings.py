"""Periodic tiling enumeration and classification.

Plane tilings with period lattice L correspond to exact covers of the torus
Z^2/L, so the enumerator sweeps Hermite-normal sublattices up to an index
bound, solves an exact-cover problem per torus (bitmask backtracking on
first-uncovered units), and deduplicates across tori by a canonical key of
the unwrapped plane tiling: the minimum, over the acting symmetry group and
over coset translations, of the tiling's decoration on the fundamental
domain of its own periodicity lattice.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

from .configuration import Configuration, Placement, Torus
from .exactmath import (
    Basis,
    Vec,
    hnf2,
    lattice_cosets,
    lattice_det,
    lattice_reduce,
    lattice_transform,
    solvable_unit_counts,
    sublattices_of_index,
)
from .geometry import group_elements, mat_apply
from .system import TileSystem

GROUPS = ("t", "t+r", "t+r+m")


def group_for(name: str):
    if name == "t":
        return group_elements(False)[:1]
    if name == "t+r":
        return group_elements(False)
    if name == "t+r+m":
        return group_elements(True)
    raise ValueError(f"unknown classification group {name!r} (want one of {GROUPS})")


# ---------------------------------------------------------------------------
# exact cover on one torus
# ---------------------------------------------------------------------------

def torus_placements(system: TileSystem, torus: Torus):
    """All placements whose covered units do not self-collide on the torus.

    Returns (placements, unit masks, candidate lists per unit, unit count).
    """
    if system.is_polyomino:
        units = list(torus.sites)
    else:
        units = [s + (k,) for s in torus.sites for k in range(4)]
    uidx = {u: n for n, u in enumerate(units)}

    placements: list[Placement] = []
    masks: list[int] = []
    cands: list[list[int]] = [[] for _ in units]
    for site in torus.sites:
        for (i, o) in system.oriented_ids:
            cover = []
            for u in system.units_of(i, o):
                if system.is_polyomino:
                    red = torus.reduce((u[0] + site[0], u[1] + site[1]))
                else:
                    red = torus.reduce((u[0] + site[0], u[1] + site[1])) + (u[2],)
                cover.append(uidx[red])
            if len(set(cover)) != len(cover):
                continue  # wraps onto itself
            m = 0
            for n in cover:
                m |= 1 << n
            idx = len(placements)
            placements.append(Placement(site, i, o))
            masks.append(m)
            for n in cover:
                cands[n].append(idx)
    return placements, masks, cands, len(units)


def enumerate_torus_tilings(system: TileSystem, torus: Torus) -> Iterator[frozenset]:
    """Yield every exact cover of the torus as a frozenset of placements."""
    placements, masks, cands, nunits = torus_placements(system, torus)
    full = (1 << nunits) - 1
    acc: list[Placement] = []

    def rec(covered: int) -> Iterator[frozenset]:
        if covered == full:
            yield frozenset(acc)
            return
        free = ~covered & full
        u = (free & -free).bit_length() - 1
        for idx in cands[u]:
            m = masks[idx]
            if m & covered:
                continue
            acc.append(placements[idx])
            yield from rec(covered | m)
            acc.pop()

    yield from rec(0)


def count_torus_tilings(system: TileSystem, torus: Torus) -> int:
    return sum(1 for _ in enumerate_torus_tilings(system, torus))


# ---------------------------------------------------------------------------
# unwrapping and canonical keys
# ---------------------------------------------------------------------------

def periodicity_lattice(system: TileSystem, torus: Torus, placements) -> Basis:
    """Full translation-invariance lattice of the unwrapped plane tiling."""
    pls = frozenset(placements)
    gens = [torus.basis[0], torus.basis[1]]
    for t in torus.sites:
        if t == (0, 0):
            continue
        shifted = frozenset(
            Placement(torus.reduce((p.site[0] + t[0], p.site[1] + t[1])), p.species, p.orient)
            for p in pls
        )
        if shifted == pls:
            gens.append(t)
    return hnf2(gens)


def decoration(period: Basis, placements) -> frozenset:
    """Distinct placements modulo the period lattice."""
    return frozenset(
        Placement(lattice_reduce(period, p.site), p.species, p.orient) for p in placements
    )


def class_key(system: TileSystem, torus: Torus, placements, group):
    """Canonical key of the plane tiling under translations x the given group.

    Raises ValueError if some group element does not act on the system's
    placeable shapes (e.g. mirrors on a single-enantiomer system).
    """
    period = periodicity_lattice(system, torus, placements)
    deco = decoration(period, placements)
    best = None
    for gname, mat in group:
        act = system.orientation_action(gname, mat)
        if act is None:
            raise ValueError(
                f"group element {gname} does not act on system {system.name!r}"
            )
        pg = lattice_transform(period, mat)
        moved = []
        for p in deco:
            i2, o2, shift = act[(p.species, p.orient)]
            v = mat_apply(mat, p.site)
            moved.append(((v[0] + shift[0], v[1] + shift[1]), i2, o2))
        for s in lattice_cosets(pg):
            cand = tuple(
                sorted(
                    (lattice_reduce(pg, (v[0] + s[0], v[1] + s[1])), i2, o2)
                    for v, i2, o2 in moved
                )
            )
            item = (pg, cand)
            if best is None or item < best:
                best = item
    return best


@dataclass(frozen=True)
class TilingClass:
    """One equivalence class of periodic plane tilings."""

    periodicity: Basis
    key: tuple
    representative: tuple  # canonical decoration on the periodicity lattice

    @property
    def index(self) -> int:
        return lattice_det(self.periodicity)

    def configuration(self, system: TileSystem, torus: Torus = None) -> Configuration:
        """Realise the class on a torus.

        With no argument the torus is one periodicity cell; any other torus
        works as long as its lattice is a sublattice of the periodicity, so
        the decoration extends to it without seams.
        """
        if torus is None:
            torus = Torus(self.periodicity)
        placements = []
        anchors = {}
        for s, i, o in self.representative:
            anchors[lattice_reduce(self.periodicity, s)] = (i, o)
        for site in torus.sites:
            hit = anchors.get(lattice_reduce(self.periodicity, site))
            if hit is not None:
                placements.append(Placement(site, hit[0], hit[1]))
        config = Configuration(system, torus, placements)
        if not config.is_admissible:
            raise ValueError("torus is not commensurate with the class periodicity")
        return config


def _scan_torus(system: TileSystem, basis: Basis, group):
    torus = Torus(basis)
    found = {}
    for tiling in enumerate_torus_tilings(system, torus):
        key = class_key(system, torus, tiling, group)
        if key in found:
            continue
        period, deco = key
        found[key] = TilingClass(periodicity=period, key=key, representative=deco)
    return found


def enumerate_tiling_classes(
    system: TileSystem,
    max_index: int,
    group: str = "t+r",
    threads: int = 1,
) -> list[TilingClass]:
    """All tiling classes whose periodicity index is at most ``max_index``.

    The sweep visits every sublattice of index up to the bound whose covered
    area is expressible in tile areas, so the listing is complete for that
    bound: a class with periodicity index N appears iff N <= max_index.
    """
    gelems = group_for(group)
    unit_goal = system.unit_size
    sizes = [len(system.units_of(i, 0)) for i in range(len(system.species))]

    tori = []
    for n in range(1, max_index + 1):
        if not solvable_unit_counts(n * unit_goal, sizes):
            continue
        tori.extend(sublattices_of_index(n))

    classes: dict = {}
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_scan_torus, system, b, gelems) for b in tori]
            results = [f.result() for f in futures]
    else:
        results = [_scan_torus(system, b, gelems) for b in tori]
    for found in results:
        for key, cls in found.items():
            classes.setdefault(key, cls)
    out = list(classes.values())
    out.sort(key=lambda c: (c.index, c.key))
    return out

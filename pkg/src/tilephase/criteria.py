"""Ground-state structure certificates for tile systems.

The machinery here turns an enumerated family of periodic tilings into
verified statements about *every* admissible configuration:

* a common supercell lattice on which all the tilings are periodic, with
  cells large enough to screen tile interactions;
* cell labels — a cell is correct when the configuration agrees exactly with
  some perfect configuration on the surrounding 3x3 block of cells — and
  contours, the connected components of incorrect cells;
* the global optimization certificate: on perfect configurations every
  tile's allocated volume equals its area exactly;
* the local optimization certificate: near any incorrect cell the tiles
  carry at least a fixed total volume surplus ``delta``, established by
  exact margin arithmetic plus an exhaustive search over coverings of a
  margin-protected safe zone;
* the resulting contour-energy constant ``tau = delta / (2n+1)^d``.

Everything is exact: lattice arithmetic is integer, margins compare squared
Euclidean distances through radical-free inequalities, and surpluses are
rationals attached to an explicit normalisation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .allocation import AllocationRule, discrete_voronoi, region_measure
from .allocation import screening_radius as allocation_screening_radius
from .configuration import Configuration, Torus, Window
from .exactmath import (
    Basis,
    Scaled,
    Vec,
    hnf2,
    lattice_cosets,
    lattice_det,
    lattice_intersect,
    lattice_reduce,
)
from .geometry import dist2_point_polygon
from .system import TileSystem
from .tilings import class_key, enumerate_torus_tilings, group_for


class NoGroundStateError(ValueError):
    """Raised when a system has no periodic tilings to build cells from."""


def lattice_intersection(lattices) -> Basis:
    """Common sublattice of a list of lattices (pairwise intersection)."""
    lattices = list(lattices)
    if not lattices:
        raise ValueError("need at least one lattice")
    basis = hnf2(list(lattices[0]))
    for other in lattices[1:]:
        basis = lattice_intersect(basis, other)
    return basis


def sqrt_sum_le(a2, b2, c2) -> bool:
    """Exact test for sqrt(a2) + sqrt(b2) <= sqrt(c2), all inputs rational."""
    rest = c2 - a2 - b2
    if rest < 0:
        return False
    return rest * rest >= 4 * a2 * b2


# ----------------------------------------------------------------------
# supercell grid
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SupercellGrid:
    """The common supercell lattice of a family of tilings.

    ``basis`` rows are the lattice generators in Hermite normal form; cells
    are the half-open parallelepipeds it spans, indexed by integer pairs.
    ``classes`` must be the complete list of translation classes: cell
    labels compare configurations against these and nothing else.
    """

    system: TileSystem
    basis: Basis
    classes: tuple
    interaction_ok: bool
    scaling: int

    @property
    def det(self) -> int:
        return lattice_det(self.basis)

    def cell_of(self, site: Vec) -> Vec:
        (a, _), (b, c) = self.basis
        x, y = site
        j = y // c
        i = (c * x - b * y) // (a * c)
        return (i, j)

    def cell_origin(self, cell: Vec) -> Vec:
        (a, _), (b, c) = self.basis
        i, j = cell
        return (i * a + j * b, j * c)

    def sites_of_cell(self, cell: Vec) -> list:
        (a, _), (b, c) = self.basis
        ox, oy = self.cell_origin(cell)
        out = []
        for dy in range(c):
            y = oy + dy
            x0 = ox + (b * dy) // c
            for dx in range(a + 1):
                if self.cell_of((x0 + dx, y)) == cell:
                    out.append((x0 + dx, y))
        return out

    @property
    def _decorations(self):
        cached = self.__dict__.get("_deco")
        if cached is None:
            cached = []
            for cls in self.classes:
                anchors = {}
                for s, i, o in cls.representative:
                    anchors[lattice_reduce(cls.periodicity, s)] = (i, o)
                cached.append((cls.periodicity, anchors))
            object.__setattr__(self, "_deco", cached)
        return cached

    def perfect_at(self, class_idx: int, shift: Vec, site: Vec):
        """Perfect class ``class_idx`` translated by ``shift``, queried at
        one site: the (species, orient) anchored there, or None."""
        period, anchors = self._decorations[class_idx]
        return anchors.get(
            lattice_reduce(period, (site[0] - shift[0], site[1] - shift[1]))
        )

    def perfect_variants(self):
        """All (class index, shift) pairs, shifts modulo the class lattice."""
        out = []
        for ci, cls in enumerate(self.classes):
            for shift in lattice_cosets(cls.periodicity):
                out.append((ci, shift))
        return out


def build_supercell(system: TileSystem, classes) -> SupercellGrid:
    """Intersect the periodicity lattices of the perfect classes and scale
    the result, if needed, until only placements in adjacent cells can
    overlap (checked exactly against the conflict tables)."""
    classes = tuple(classes)
    if not classes:
        raise NoGroundStateError(
            f"system {system.name!r} has no periodic tilings: no ground state"
        )
    basis = lattice_intersection([cls.periodicity for cls in classes])
    for k in itertools.count(1):
        scaled = hnf2([(k * v[0], k * v[1]) for v in basis])
        if _interaction_fits(system, scaled):
            return SupercellGrid(system, scaled, classes, True, k)
        if k >= 16:
            return SupercellGrid(system, basis, classes, False, 1)


def _interaction_fits(system: TileSystem, basis: Basis) -> bool:
    (a, _), (b, c) = basis
    for io in system.oriented_ids:
        for jp in system.oriented_ids:
            for (dx, dy) in system.conflict_deltas(io, jp):
                if abs(dy) > c or abs(c * dx - b * dy) > a * c:
                    return False
    return True


# ----------------------------------------------------------------------
# cell labels and contours
# ----------------------------------------------------------------------

CORRECT = "correct"
INCORRECT = "incorrect"
UNKNOWN = "unknown"


@dataclass
class CellLabels:
    grid: SupercellGrid
    config: Configuration
    quotient: Optional[Basis]  # torus lattice in cell-index space
    labels: dict  # cell index -> (status, (class, shift) or None)

    def cells(self):
        return sorted(self.labels)

    def status(self, cell: Vec) -> str:
        return self.labels[self.reduce_cell(cell)][0]

    def count(self, status: str) -> int:
        return sum(1 for v in self.labels.values() if v[0] == status)

    def reduce_cell(self, cell: Vec) -> Vec:
        if self.quotient is None:
            return cell
        return lattice_reduce(self.quotient, cell)

    def correct_fraction(self, class_idx: Optional[int] = None) -> Fraction:
        """Correct cells over *known* cells (windows have unknown collars)."""
        hits = sum(
            1
            for status, match in self.labels.values()
            if status == CORRECT and (class_idx is None or match[0] == class_idx)
        )
        known = sum(1 for status, _ in self.labels.values() if status != UNKNOWN)
        return Fraction(hits, known) if known else Fraction(0)


def torus_cell_quotient(grid: SupercellGrid, torus: Torus) -> Basis:
    """The torus lattice written in supercell coordinates; errors out when
    the torus is not commensurate with the supercell lattice."""
    (a, _), (b, c) = grid.basis
    rows = []
    for (vx, vy) in torus.basis:
        beta, rem = divmod(vy, c)
        alpha, rem2 = divmod(c * vx - b * vy, a * c)
        if rem or rem2:
            raise ValueError("torus does not respect the supercell lattice")
        rows.append((alpha, beta))
    return hnf2(rows)


def label_cells(config: Configuration, grid: SupercellGrid) -> CellLabels:
    """Label every cell of the domain correct/incorrect/unknown.

    A cell is correct when the configuration restricted (by anchor) to the
    3x3 block of cells around it coincides with some translate of some
    perfect class.  On a window, cells whose block is not entirely inside
    the window are unknown.
    """
    if isinstance(config.domain, Torus):
        quotient = torus_cell_quotient(grid, config.domain)
        cell_ids = list(lattice_cosets(quotient))
        known_sites = None
        reduce = config.domain.reduce
    elif isinstance(config.domain, Window):
        quotient = None
        known_sites = config.domain.sites
        cell_ids = sorted({grid.cell_of(s) for s in known_sites})
        reduce = lambda v: v
    else:
        raise ValueError("cell labels need a torus or window domain")

    by_site = {p.site: p for p in config.placements}
    variants = grid.perfect_variants()
    labels = {}
    for cell in cell_ids:
        region = []
        complete = True
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                sites = grid.sites_of_cell((cell[0] + di, cell[1] + dj))
                if known_sites is not None and not all(
                    s in known_sites for s in sites
                ):
                    complete = False
                    break
                region.extend(sites)
            if not complete:
                break
        if not complete:
            labels[cell] = (UNKNOWN, None)
            continue
        actual = {}
        for site in region:
            p = by_site.get(reduce(site))
            actual[site] = None if p is None else (p.species, p.orient)
        for ci, shift in variants:
            if all(grid.perfect_at(ci, shift, s) == actual[s] for s in region):
                labels[cell] = (CORRECT, (ci, shift))
                break
        else:
            labels[cell] = (INCORRECT, None)
    return CellLabels(grid, config, quotient, labels)


@dataclass(frozen=True)
class Contour:
    """A connected component of incorrect cells, with the pockets of
    correct cells it encloses."""

    cells: frozenset
    interior: frozenset = frozenset()

    @property
    def size(self) -> int:
        return len(self.cells)

    @property
    def volume(self) -> frozenset:
        return self.cells | self.interior


def extract_contours(labels: CellLabels, grid: SupercellGrid = None) -> list:
    """Chebyshev-connected components of the incorrect cells.

    Windows must present a clean picture: an incorrect cell adjacent to an
    unlabeled one means the defect may continue out of view, which is an
    error rather than a silently truncated contour.  Complement pockets not
    reaching the exterior are attributed to the contour enclosing them.
    """
    incorrect = {c for c, v in labels.labels.items() if v[0] == INCORRECT}
    unknown = {c for c, v in labels.labels.items() if v[0] == UNKNOWN}
    components = []
    remaining = set(incorrect)
    while remaining:
        seed = remaining.pop()
        comp = {seed}
        frontier = [seed]
        while frontier:
            cur = frontier.pop()
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == dj == 0:
                        continue
                    n = labels.reduce_cell((cur[0] + di, cur[1] + dj))
                    if n in unknown:
                        raise ValueError(
                            "contour touches unlabeled cells: "
                            "window collar is not constant"
                        )
                    if n in remaining:
                        remaining.discard(n)
                        comp.add(n)
                        frontier.append(n)
        components.append(frozenset(comp))

    # complement pockets: 4-connected components of non-incorrect cells;
    # those reaching the collar (or, on a torus, the largest one) form the
    # exterior, the rest are interiors of whichever contour surrounds them
    pockets = []
    remaining = {c for c in labels.labels if c not in incorrect}
    while remaining:
        seed = remaining.pop()
        comp = {seed}
        frontier = [seed]
        touches_rim = seed in unknown
        while frontier:
            cur = frontier.pop()
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                n = labels.reduce_cell((cur[0] + di, cur[1] + dj))
                if n not in labels.labels:
                    touches_rim = True
                    continue
                if n in remaining:
                    remaining.discard(n)
                    comp.add(n)
                    frontier.append(n)
                if n in unknown:
                    touches_rim = True
        pockets.append((comp, touches_rim))
    if pockets and not any(rim for _, rim in pockets):
        big = max(range(len(pockets)), key=lambda i: len(pockets[i][0]))
        pockets[big] = (pockets[big][0], True)

    interiors = {i: set() for i in range(len(components))}
    for pocket, rim in pockets:
        if rim:
            continue
        touching = set()
        for cell in pocket:
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    n = labels.reduce_cell((cell[0] + di, cell[1] + dj))
                    for i, comp in enumerate(components):
                        if n in comp:
                            touching.add(i)
        if len(touching) != 1:
            raise ValueError("entangled contours: pocket with several owners")
        interiors[touching.pop()].update(pocket)

    out = [
        Contour(comp, frozenset(interiors[i]))
        for i, comp in enumerate(components)
    ]
    return sorted(out, key=lambda g: (g.size, sorted(g.cells)))


# ----------------------------------------------------------------------
# global optimization
# ----------------------------------------------------------------------


@dataclass
class GlobalOptReport:
    ok: bool
    rho: Optional[Fraction]
    p_star: Optional[Scaled]
    volume_checks: list
    completeness: str
    counterexample: Optional[str] = None


def verify_global_optimization(system: TileSystem, rule: AllocationRule,
                               classes,
                               completeness_budget: int = 150) -> GlobalOptReport:
    """Certify that the perfect configurations attain the volume bound with
    equality and that nothing else periodic does.

    Checks, in order: the weight-per-area ratio is the same for every
    species (otherwise the denser species provides a counterexample); every
    tile of every class is allocated volume exactly equal to its area; and,
    as a completeness cross-check, tilings re-enumerated on the common
    supercell torus all belong to the supplied class list.  (Non-tiling
    periodic patterns leave unclaimed probes whose measure lands on some
    tile, which then exceeds its area strictly, so tile-volume equality
    singles out exactly the tilings.)
    """
    ratios = [Fraction(sp.weight) / sp.shape.area for sp in system.species]
    if len(set(ratios)) > 1:
        worst = max(range(len(ratios)), key=lambda i: ratios[i])
        best = min(range(len(ratios)), key=lambda i: ratios[i])
        return GlobalOptReport(
            ok=False, rho=None, p_star=None, volume_checks=[],
            completeness="skipped",
            counterexample=(
                f"weight/area differs: {system.species[worst].name} at "
                f"{ratios[worst]} vs {system.species[best].name} at "
                f"{ratios[best]}; pure {system.species[worst].name} "
                f"configurations beat every mixed one"
            ),
        )
    rho = ratios[0]
    p_star = Scaled(rho, system.norm2)

    checks = []
    ok = True
    counterexample = None
    for idx, cls in enumerate(classes):
        config = cls.configuration(system)
        vols = discrete_voronoi(config, rule).volumes()
        bad = [
            p for p in config.placements
            if vols.get(p) != system.species[p.species].shape.area
        ]
        checks.append((idx, not bad))
        if bad and counterexample is None:
            p = bad[0]
            counterexample = (
                f"class {idx}: tile at {p.site} has volume "
                f"{vols.get(p)} != area"
            )
        ok = ok and not bad

    completeness = "skipped (supercell torus too large)"
    basis = lattice_intersection([cls.periodicity for cls in classes])
    if lattice_det(basis) <= completeness_budget:
        torus = Torus(basis)
        keys = {cls.key for cls in classes}
        extra = sum(
            1
            for tiling in enumerate_torus_tilings(system, torus)
            if class_key(system, torus, tiling, group_for("t")) not in keys
        )
        completeness = (
            "complete on the supercell torus" if extra == 0
            else f"INCOMPLETE: {extra} tilings outside the class list"
        )
        ok = ok and extra == 0
    return GlobalOptReport(ok, rho, p_star, checks, completeness,
                           counterexample)


# ----------------------------------------------------------------------
# local optimization: margins plus safe-zone covering search
# ----------------------------------------------------------------------


@dataclass
class LocalOptReport:
    """Outcome of the defect-surplus search at one onion radius ``n``.

    ``delta_weight`` is the certified constant in weight units: in any
    admissible configuration, around any incorrect cell whose 3x3
    neighbourhood holds at least one tile, the tiles anchored within the
    n-onion of the cell carry a total volume surplus (p* v - mu, summed) of
    at least this much.  ``tau = delta/(2n+1)^d`` is the contour-energy
    constant per support cell that the surplus yields.
    """

    status: str
    certified: bool
    n: int
    delta_weight: Optional[Fraction] = None
    delta: Optional[Scaled] = None
    tau: Optional[Scaled] = None
    nodes: int = 0
    coverings: int = 0
    zone_units: int = 0
    detail: str = ""

    def lines(self) -> list:
        out = [
            f"local-optimization: {self.status}",
            f"certified: {'yes' if self.certified else 'no'}",
            f"onion-radius: {self.n}",
        ]
        if self.certified:
            out += [
                f"delta-weight: {self.delta_weight}",
                f"delta: {self.delta}",
                f"tau: {self.tau}",
            ]
        out.append(f"search-nodes: {self.nodes}")
        out.append(f"zone-units: {self.zone_units}")
        if self.detail:
            out.append(f"detail: {self.detail}")
        return out


def verify_local_optimization(system: TileSystem, rule: AllocationRule,
                              grid: SupercellGrid, n: int,
                              budget: int = 2_000_000,
                              zone_cap: int = 40_000) -> LocalOptReport:
    """Try to certify the defect-surplus constant at onion radius ``n``.

    The argument is a dichotomy over any admissible configuration making
    the centre cell incorrect while anchoring at least one tile in its 3x3
    neighbourhood:

    * if, inside a margin-protected safe zone, some probe sits on the
      boundary of exactly one tile, or some probe is uncovered with a
      covered unit a step away, that probe's measure (or half of it) lands
      as surplus on tiles which the margins pin inside the region — a fixed
      surplus quantum;
    * otherwise the safe zone is completely covered, and an exhaustive
      backtracking enumeration of all its coverings shows each one agrees
      with a perfect configuration around the centre cell, contradicting
      incorrectness.

    Margins, zone connectivity, and zone containment of every tile
    anchorable near the centre are all checked exactly; failures are
    honest: margins too tight for this radius, a covering with a
    non-perfect core (a defect pattern the dichotomy cannot exclude), or an
    exhausted node budget.
    """
    if not grid.interaction_ok:
        return LocalOptReport(
            "unverified: interaction radius exceeds the cell", False, n)
    expected = (2 * n + 1) ** 2 * grid.det
    if expected > zone_cap:
        return LocalOptReport(
            f"unverified at n={n}: region of {expected} sites "
            f"exceeds the search cap", False, n,
            detail=f"zone cap {zone_cap} sites")
    if system.is_polyomino:
        search = _SiteSearch(system, grid, rule, n)
    else:
        search = _QuarterSearch(system, grid, rule, n)
    report = search.run(budget)
    if report.certified:
        rho = Fraction(system.species[0].weight) / system.species[0].shape.area
        quantum = search.surplus_quantum() * rho
        report.delta_weight = quantum
        report.delta = Scaled(quantum, system.norm2)
        report.tau = Scaled(quantum / (2 * n + 1) ** system.dim, system.norm2)
    return report


def verify_local_sweep(system: TileSystem, rule: AllocationRule,
                       grid: SupercellGrid, max_n: int,
                       budget: int = 2_000_000):
    """Scan onion radii 1..max_n; the first certified radius carries the
    best constant (the quantum is radius-independent while (2n+1)^d grows),
    so the scan stops there.  Returns (best report or None, all reports)."""
    best = None
    reports = []
    for n in range(1, max_n + 1):
        rep = verify_local_optimization(system, rule, grid, n, budget)
        reports.append(rep)
        if rep.certified:
            best = rep
            break
    return best, reports


class _BudgetExhausted(Exception):
    pass


@dataclass
class _Candidate:
    placement: tuple
    emask: int
    zmask: int
    core_add: frozenset


class _CoverSearch:
    """Exact-cover search over the safe zone, shared by both geometries.

    Subclasses supply the unit universe (sites or quarter triangles), the
    margin tests, and the surplus quantum; this class runs the covering
    enumeration with the perfect-core prune.
    """

    def __init__(self, system, grid, rule, n):
        self.system = system
        self.grid = grid
        self.rule = rule
        self.n = n
        self.region_in, self.region_out = self._region_sites()
        self.onion1 = [
            s for s in self.region_in
            if max(abs(c) for c in grid.cell_of(s)) <= 1
        ]

    def _region_sites(self):
        grid, n = self.grid, self.n
        (a, _), (b, c) = grid.basis
        corners = [
            (i * a + j * b, j * c)
            for i in (-n, n + 1) for j in (-n, n + 1)
        ]
        xs = [p[0] for p in corners]
        ys = [p[1] for p in corners]
        pad = self.margin_pad()
        inside, outside = [], []
        for x in range(min(xs) - pad, max(xs) + pad + 1):
            for y in range(min(ys) - pad, max(ys) + pad + 1):
                i, j = grid.cell_of((x, y))
                if -n <= i <= n and -n <= j <= n:
                    inside.append((x, y))
                else:
                    outside.append((x, y))
        return inside, outside

    def run(self, budget: int) -> LocalOptReport:
        ok, detail = self.margins_ok()
        if not ok:
            return LocalOptReport(
                f"margins insufficient at n={self.n}", False, self.n,
                detail=detail, zone_units=len(getattr(self, "zone", ())))
        self.build_masks()
        restrictions = self.perfect_cores()
        full = (1 << len(self.zone)) - 1
        by_bit = self.by_bit
        core_mask = self.core_mask
        nodes = 0
        coverings = 0
        witness = None

        import sys
        limit = max(10000, 40 * len(self.zone))
        old_limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, old_limit))

        def dfs(used, zcov, core, checked):
            nonlocal nodes, coverings, witness
            if witness is not None:
                return
            nodes += 1
            if nodes > budget:
                raise _BudgetExhausted
            if not checked and (zcov & core_mask) == core_mask:
                if core in restrictions:
                    return  # centre cell provably correct on this branch
                checked = True
            if zcov == full:
                coverings += 1
                witness = core
                return
            rest = ~zcov & full
            bit = (rest & -rest).bit_length() - 1
            for cand in by_bit[bit]:
                if cand.emask & used:
                    continue
                dfs(used | cand.emask, zcov | cand.zmask,
                    core | cand.core_add, checked)

        try:
            dfs(0, 0, frozenset(), False)
        except _BudgetExhausted:
            return LocalOptReport(
                f"unverified at n={self.n}: node budget exhausted",
                False, self.n, nodes=nodes, zone_units=len(self.zone),
                detail=f"budget {budget} nodes")
        finally:
            sys.setrecursionlimit(old_limit)
        if witness is not None:
            return LocalOptReport(
                f"unverified at n={self.n}: zone covering with a "
                f"non-perfect core", False, self.n, nodes=nodes,
                coverings=coverings, zone_units=len(self.zone),
                detail=f"witness core of {len(witness)} tiles")
        return LocalOptReport(
            f"certified at n={self.n}", True, self.n, nodes=nodes,
            coverings=coverings, zone_units=len(self.zone))

    def _assemble(self, unit_lists):
        """Build candidate masks from (placement, covered units) pairs.

        Unit bits beyond the zone keep overlaps excluded even where
        coverage is not demanded; a per-anchor bit enforces one tile per
        anchor site.
        """
        zindex = self.zindex
        extended = dict(zindex)
        cands = []
        for placement, units in unit_lists:
            zbits = [zindex[u] for u in units if u in zindex]
            if not zbits:
                continue
            emask = 0
            for u in units:
                if u not in extended:
                    extended[u] = len(extended)
                emask |= 1 << extended[u]
            akey = ("anchor", placement[0])
            if akey not in extended:
                extended[akey] = len(extended)
            emask |= 1 << extended[akey]
            zmask = 0
            for bit in zbits:
                zmask |= 1 << bit
            core = (
                frozenset([placement])
                if placement[0] in self.onion1_set else frozenset()
            )
            cands.append(_Candidate(placement, emask, zmask, core))
        self.by_bit = [[] for _ in self.zone]
        for cand in cands:
            m = cand.zmask
            while m:
                bit = (m & -m).bit_length() - 1
                self.by_bit[bit].append(cand)
                m &= m - 1

    def perfect_cores(self):
        out = set()
        for ci, shift in self.grid.perfect_variants():
            core = []
            for u in self.onion1:
                hit = self.grid.perfect_at(ci, shift, u)
                if hit is not None:
                    core.append((u, hit[0], hit[1]))
            out.add(frozenset(core))
        return out

    def _connected(self, units, neighbors) -> bool:
        if not units:
            return False
        unit_set = set(units)
        seen = {units[0]}
        frontier = [units[0]]
        while frontier:
            cur = frontier.pop()
            for nb in neighbors(cur):
                if nb in unit_set and nb not in seen:
                    seen.add(nb)
                    frontier.append(nb)
        return len(seen) == len(unit_set)


class _SiteSearch(_CoverSearch):
    """Safe-zone covering search for polyomino systems under a site metric."""

    def metric(self, a: Vec, b: Vec) -> int:
        if self.rule.metric == "linf":
            return max(abs(a[0] - b[0]), abs(a[1] - b[1]))
        return abs(a[0] - b[0]) + abs(a[1] - b[1])

    def reach(self) -> int:
        return max(
            self.metric((0, 0), cell)
            for shapes in self.system.oriented for sh in shapes
            for cell in sh.cells
        )

    def margin_pad(self) -> int:
        return self.reach() + 3

    def surplus_quantum(self) -> Fraction:
        # an uncovered site's full measure lands on region-anchored tiles
        return Fraction(1)

    def margins_ok(self):
        if self.rule.metric_fn is not None:
            return False, "surplus certification needs a named metric"
        r = self.reach()
        band = 2 * (r + 2)
        self.zone = []
        for s in self.region_in:
            near = [e for e in self.region_out
                    if abs(e[0] - s[0]) + abs(e[1] - s[1]) <= band]
            if all(self.metric(s, e) > r + 1 for e in near):
                self.zone.append(s)
        zset = set(self.zone)
        self.onion1_set = set(self.onion1)
        # every cell reachable from a 1-onion anchor must lie in the zone …
        core_units = set()
        for u in self.onion1:
            for i, o in self.system.oriented_ids:
                for (cx, cy) in self.system.oriented[i][o].cells:
                    cell = (u[0] + cx, u[1] + cy)
                    if cell not in zset:
                        return False, f"1-onion tiles leave the safe zone at {u}"
                    core_units.add(cell)
        self._core_units = core_units
        # … and the zone must be connected at metric step 1, so an
        # uncovered probe always finds a covered unit one step away
        offsets = (
            ((1, 0), (-1, 0), (0, 1), (0, -1))
            if self.rule.metric != "linf" else
            tuple((dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)
                  if (dx, dy) != (0, 0))
        )
        neighbors = lambda s: [(s[0] + dx, s[1] + dy) for dx, dy in offsets]
        if not self._connected(self.zone, neighbors):
            return False, "safe zone is disconnected"
        self.zone.sort(
            key=lambda s: (max(abs(c) for c in self.grid.cell_of(s)),
                           s[0] * s[0] + s[1] * s[1], s))
        return True, ""

    def build_masks(self):
        self.zindex = {s: i for i, s in enumerate(self.zone)}
        unit_lists = []
        for u in self.region_in:
            for i, o in self.system.oriented_ids:
                cells = [(u[0] + cx, u[1] + cy)
                         for cx, cy in self.system.oriented[i][o].cells]
                unit_lists.append(((u, i, o), cells))
        self._assemble(unit_lists)
        self.core_mask = 0
        for cell in self._core_units:
            self.core_mask |= 1 << self.zindex[cell]


def _quarter_triangle(square: Vec, kind: int, s: int):
    """Vertices of one quarter of the unit square at ``square``, scaled by
    the even factor ``s`` so everything stays integer.  Kinds follow the
    shape convention: 0 east, 1 north, 2 west, 3 south."""
    x0, y0 = square[0] * s, square[1] * s
    cx, cy = x0 + s // 2, y0 + s // 2
    if kind == 0:
        return ((x0 + s, y0), (x0 + s, y0 + s), (cx, cy))
    if kind == 1:
        return ((x0 + s, y0 + s), (x0, y0 + s), (cx, cy))
    if kind == 2:
        return ((x0, y0 + s), (x0, y0), (cx, cy))
    return ((x0, y0), (x0 + s, y0), (cx, cy))


def _edge_neighbors(square: Vec, kind: int):
    """The three quarters sharing an edge with the given one: two across
    the half-diagonals of the same square, one across the square wall."""
    x, y = square
    intra = {
        0: [((x, y), 1), ((x, y), 3)],
        1: [((x, y), 0), ((x, y), 2)],
        2: [((x, y), 1), ((x, y), 3)],
        3: [((x, y), 2), ((x, y), 0)],
    }[kind]
    outer = {
        0: ((x + 1, y), 2),
        1: ((x, y + 1), 3),
        2: ((x - 1, y), 0),
        3: ((x, y - 1), 1),
    }[kind]
    return intra + [outer]


class _QuarterSearch(_CoverSearch):
    """Safe-zone covering search for polygon systems on the refined grid.

    Tiles are unions of quarter-square triangles (enforced at shape
    construction), and at refinement m=2 each probe lies on the shared
    half-diagonal of exactly two quarters.  Coverage, boundary sharing, and
    nearest-tile distances of probes are therefore decided by which
    quarters are used, which is what the covering search enumerates.
    """

    def margin_pad(self) -> int:
        return int(self.system.outer_radius2 ** 0.5) + 5

    def surplus_quantum(self) -> Fraction:
        # a tile boundary probe shared with nobody yields half a probe
        # measure; an uncovered probe a full one
        return Fraction(1, 2 * self.rule.m * self.rule.m)

    def _dloc2(self) -> int:
        """Worst squared distance (scaled) from a probe to a vertex of a
        quarter edge-adjacent to one of the probe's two incident quarters:
        an uncovered probe in a covered neighbourhood has a tile within
        this distance."""
        s = self.s
        worst = 0
        for px, py in ((1, 1), (s - 1, 1), (1, s - 1), (s - 1, s - 1)):
            incident = [
                k for k in range(4)
                if dist2_point_polygon(
                    (px, py), _quarter_triangle((0, 0), k, s)) == 0
            ]
            for kind in incident:
                for nsq, nkind in _edge_neighbors((0, 0), kind):
                    for v in _quarter_triangle(nsq, nkind, s):
                        worst = max(worst, (px - v[0]) ** 2 + (py - v[1]) ** 2)
        return worst

    def margins_ok(self):
        if self.rule.m != 2:
            return False, "the probe-on-diagonal dichotomy needs m=2"
        self.s = 2 * self.rule.m
        s = self.s
        dloc2 = self._dloc2()
        r2s = self.system.outer_radius2 * s * s
        cut = (self.margin_pad() * s) ** 2
        out_pts = [(e[0] * s, e[1] * s) for e in self.region_out]
        zone = []
        for (x, y) in self.region_in:
            for kind in range(4):
                tri = _quarter_triangle((x, y), kind, s)
                ok = True
                for e in out_pts:
                    if (e[0] - tri[2][0]) ** 2 + (e[1] - tri[2][1]) ** 2 > cut:
                        continue
                    if not sqrt_sum_le(dloc2, r2s, dist2_point_polygon(e, tri)):
                        ok = False
                        break
                if ok:
                    zone.append(((x, y), kind))
        self.zone = zone
        zset = set(zone)
        self.onion1_set = set(self.onion1)
        core_units = set()
        for u in self.onion1:
            for i, o in self.system.oriented_ids:
                for (qx, qy, k) in self.system.units_of(i, o):
                    q = ((u[0] + qx, u[1] + qy), k)
                    if q not in zset:
                        return False, f"1-onion tiles leave the safe zone at {u}"
                    core_units.add(q)
        self._core_units = core_units
        neighbors = lambda q: _edge_neighbors(q[0], q[1])
        if not self._connected(self.zone, neighbors):
            return False, "safe zone is disconnected"
        self.zone.sort(
            key=lambda q: (max(abs(c) for c in self.grid.cell_of(q[0])),
                           (2 * q[0][0] + 1) ** 2 + (2 * q[0][1] + 1) ** 2,
                           q))
        return True, ""

    def build_masks(self):
        self.zindex = {q: i for i, q in enumerate(self.zone)}
        unit_lists = []
        for u in self.region_in:
            for i, o in self.system.oriented_ids:
                quarters = [((u[0] + qx, u[1] + qy), k)
                            for qx, qy, k in self.system.units_of(i, o)]
                unit_lists.append(((u, i, o), quarters))
        self._assemble(unit_lists)
        self.core_mask = 0
        for q in self._core_units:
            self.core_mask |= 1 << self.zindex[q]


# ----------------------------------------------------------------------
# contour energy
# ----------------------------------------------------------------------


def peierls_constant(report: LocalOptReport) -> Scaled:
    """tau = delta / (2n+1)^d from a certified surplus report."""
    if not report.certified or not report.delta or report.delta.value <= 0:
        raise ValueError(
            "contour-energy constant unavailable: no certified delta > 0")
    d = 2
    return Scaled(report.delta.value / (2 * report.n + 1) ** d,
                  report.delta.norm2)


def contour_exterior_variant(labels: CellLabels, contour: Contour):
    """The (class, shift) of the perfect configuration surrounding the
    contour, read off any adjacent correct cell outside its volume."""
    for cell in sorted(contour.cells):
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                n = labels.reduce_cell((cell[0] + di, cell[1] + dj))
                entry = labels.labels.get(n)
                if entry and entry[0] == CORRECT and n not in contour.volume:
                    return entry[1]
    raise ValueError("contour has no correct neighbouring cell")


def contour_gap(config: Configuration, grid: SupercellGrid, contour: Contour,
                labels: CellLabels, rule: AllocationRule):
    """Summed surplus ``p* v(x|X) - mu_x`` over tiles anchored in the
    contour support, plus the summed allocated volume and the tile count."""
    system = grid.system
    rho = Fraction(system.species[0].weight) / system.species[0].shape.area
    vols = discrete_voronoi(config, rule).volumes()
    cells = set(contour.cells)
    total_v = Fraction(0)
    total_w = 0
    count = 0
    for p in config.placements:
        if labels.reduce_cell(grid.cell_of(p.site)) in cells:
            total_v += vols.get(p, Fraction(0))
            total_w += system.species[p.species].weight
            count += 1
    return Scaled(rho * total_v - total_w, system.norm2), total_v, count


def peierls_spot_check(config: Configuration, grid: SupercellGrid,
                       contour: Contour, labels: CellLabels,
                       rule: AllocationRule, tau: Scaled) -> dict:
    """Check one contour against the certified energy bound.

    Three exactly-equal routes to the excess energy are compared: the
    volume surplus of the support tiles, the energy difference against the
    surrounding perfect configuration restricted to the support, and the
    support measure at density p* minus the support tiles' weights.  The
    verdict requires the routes to agree and the excess to reach ``tau``
    per support cell.
    """
    system = grid.system
    gap, total_v, count = contour_gap(config, grid, contour, labels, rule)
    cell_measure = region_measure(grid.basis, rule)
    identity_ok = total_v == cell_measure * contour.size

    ci, shift = contour_exterior_variant(labels, contour)
    perfect_w = 0
    for cell in contour.cells:
        for site in grid.sites_of_cell(cell):
            hit = grid.perfect_at(ci, shift, site)
            if hit is not None:
                perfect_w += system.species[hit[0]].weight
    config_w = 0
    cells = set(contour.cells)
    for p in config.placements:
        if labels.reduce_cell(grid.cell_of(p.site)) in cells:
            config_w += system.species[p.species].weight
    energy_gap = Scaled(Fraction(perfect_w - config_w), system.norm2)

    bound = tau * contour.size
    ok = identity_ok and energy_gap == gap and not (energy_gap < bound)
    return {
        "ok": ok,
        "gap": energy_gap,
        "surplus": gap,
        "identity_ok": identity_ok,
        "volume": total_v,
        "bound": bound,
        "support": contour.size,
        "tiles": count,
    }


# ----------------------------------------------------------------------
# whole-system verification
# ----------------------------------------------------------------------


@dataclass
class VerificationReport:
    system_name: str
    rule: AllocationRule
    classes: tuple
    grid: SupercellGrid
    screening_radius: Optional[int]  # None: skipped, domain too large
    screening_ok: Optional[bool]
    global_report: GlobalOptReport
    local_reports: list
    best: Optional[LocalOptReport]

    @property
    def certified(self) -> bool:
        return bool(
            self.grid.interaction_ok
            and self.screening_ok
            and self.global_report.ok
            and self.best is not None
        )

    def lines(self) -> list:
        g = self.grid
        out = [
            f"system: {self.system_name}",
            f"allocation: {self.rule}",
            f"perfect-classes: {len(self.classes)}",
            f"supercell: {g.basis[0][0]} {g.basis[0][1]} "
            f"{g.basis[1][0]} {g.basis[1][1]}",
            f"supercell-index: {g.det}",
            f"interaction-fits: {'yes' if g.interaction_ok else 'no'}",
            f"screening-radius: "
            f"{'not computed' if self.screening_radius is None else self.screening_radius}",
            f"screening-certified: "
            f"{'not computed (domain too large)' if self.screening_ok is None else 'yes' if self.screening_ok else 'no'}",
            f"p-star: {self.global_report.p_star}",
            f"global-optimization: "
            f"{'ok' if self.global_report.ok else 'FAILED'}",
            f"class-completeness: {self.global_report.completeness}",
        ]
        if self.global_report.counterexample:
            out.append(f"counterexample: {self.global_report.counterexample}")
        for rep in self.local_reports:
            out.append(f"n={rep.n}: {rep.status}")
        if self.best is not None:
            out += [
                f"delta: {self.best.delta}",
                f"delta-weight: {self.best.delta_weight}",
                f"n: {self.best.n}",
                f"tau: {peierls_constant(self.best)}",
            ]
        else:
            out.append("tau: unavailable (surplus not certified)")
        out.append(f"certified: {'yes' if self.certified else 'no'}")
        return out


def verify_system(system: TileSystem, classes, rule: AllocationRule = None,
                  max_n: int = 4, budget: int = 2_000_000,
                  screening_cap: int = 2000) -> VerificationReport:
    """Run the whole certificate chain for one system.

    ``classes`` must be the complete list of translation classes of
    tilings from the enumeration; the allocation rule defaults to the
    natural one for the tile kind.  Screening is skipped — reported as not
    computed, leaving the system uncertified — when the common supercell
    index exceeds ``screening_cap``.
    """
    if rule is None:
        rule = (AllocationRule.lattice_sites() if system.is_polyomino
                else AllocationRule.refined_grid())
    classes = tuple(classes)
    grid = build_supercell(system, classes)
    if grid.det > screening_cap:
        radius, screening_ok = None, None
    else:
        radius, certified, _witness = allocation_screening_radius(
            system, classes, rule)
        screening_ok = certified and radius <= 1
    global_report = verify_global_optimization(system, rule, classes)
    best, local_reports = verify_local_sweep(system, rule, grid, max_n, budget)
    return VerificationReport(
        system_name=system.name,
        rule=rule,
        classes=classes,
        grid=grid,
        screening_radius=radius,
        screening_ok=screening_ok,
        global_report=global_report,
        local_reports=local_reports,
        best=best,
    )

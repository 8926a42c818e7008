"""Discrete Voronoi volume allocation with exact rational shares.

Every placement of a hard-core configuration is assigned a region of space:
a probe point (a lattice site, or a refined-grid pixel centre) belongs to the
placements whose occupied set is nearest, and its measure is split evenly
among the ties.  All distances and shares are exact — integers, ``Fraction``
values, or squared Euclidean distances — so allocated volumes are rationals,
never floats.

Two probe families are supported:

* ``lattice-sites`` — probes are the sites of the anchor lattice itself,
  measure 1 each, with an l1 (graph) or l-infinity metric.
* ``refined-grid`` — probes are the centres of an ``m`` times refined pixel
  grid, offset by half a pixel so that no probe ever lies on a tile vertex,
  measure ``1/m^2`` each, squared-Euclidean metric.  Probe coordinates are
  kept as odd integers at scale ``2*m`` so they hash and compare exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import floor
from typing import Callable, Iterable, Optional

from .configuration import Configuration, Placement, Torus, Window
from .exactmath import lattice_intersect, lattice_transform
from .geometry import Vec, dist2_point_polygon, group_elements
from .system import TileSystem

Probe = tuple[int, int]

_SITE_METRICS = ("l1", "linf", "graph")


@dataclass(frozen=True)
class AllocationRule:
    """How probe points are generated and measured against placements.

    ``metric_fn``, when given, replaces the site metric with an arbitrary
    ``(probe, site) -> int`` function.  Its purpose is negative testing: a
    position-dependent metric must make the covariance check fail.
    """

    kind: str = "lattice-sites"
    metric: str = "l1"
    m: int = 2
    metric_fn: Optional[Callable[[Probe, Vec], int]] = None

    def __post_init__(self) -> None:
        if self.kind not in ("lattice-sites", "refined-grid"):
            raise ValueError(f"unknown allocation rule kind: {self.kind!r}")
        if self.kind == "lattice-sites" and self.metric not in _SITE_METRICS:
            raise ValueError(f"unknown site metric: {self.metric!r}")
        if self.kind == "refined-grid" and self.m < 1:
            raise ValueError("refinement m must be >= 1")

    @classmethod
    def lattice_sites(cls, metric: str = "l1") -> "AllocationRule":
        return cls(kind="lattice-sites", metric=metric)

    @classmethod
    def refined_grid(cls, m: int = 2) -> "AllocationRule":
        return cls(kind="refined-grid", m=m)

    @property
    def scale(self) -> int:
        """Integer coordinate scale probes are stored at."""
        return 1 if self.kind == "lattice-sites" else 2 * self.m

    @property
    def measure(self) -> Fraction:
        if self.kind == "lattice-sites":
            return Fraction(1)
        return Fraction(1, self.m * self.m)

    def __str__(self) -> str:
        if self.kind == "lattice-sites":
            return f"lattice-sites[{self.metric}]"
        return f"refined-grid[m={self.m}]"


class DistanceEngine:
    """Exact probe-to-placement distances for one system under one rule.

    Distances are memoised per (species, orientation, relative offset); the
    tables are shared by every configuration of the same system.
    """

    def __init__(self, system: TileSystem, rule: AllocationRule):
        if rule.kind == "refined-grid" and system.is_polyomino:
            # Polyomino occupied sets are site sets; the refined grid wants
            # closed regions.  Treating each cell as a closed unit square
            # would work, but the shipped polyomino systems all use the
            # site rule, so keep the pairing strict and predictable.
            raise ValueError("refined-grid rule requires polygon tiles")
        if rule.kind == "lattice-sites" and not system.is_polyomino:
            raise ValueError("lattice-sites rule requires polyomino tiles")
        self.system = system
        self.rule = rule
        self._cache: dict = {}
        if system.is_polyomino:
            self._cells = [
                [sh.cells for sh in shapes] for shapes in system.oriented
            ]
        else:
            s = rule.scale
            self._polys = [
                [tuple((x * s, y * s) for x, y in sh.vertices) for sh in shapes]
                for shapes in system.oriented
            ]
        # Upper bound on the metric distance from an anchor to any point of
        # its own tile, used to prune the candidate-anchor search.
        self.reach = self._compute_reach()

    def _compute_reach(self) -> int:
        r = 0
        if self.system.is_polyomino:
            for shapes in self._cells:
                for cells in shapes:
                    for (x, y) in cells:
                        r = max(r, abs(x) + abs(y) + 2)
        else:
            for shapes in self._polys:
                for poly in shapes:
                    for (x, y) in poly:
                        # ceil of the Euclidean norm, in scaled units
                        n = max(abs(x), abs(y)) + min(abs(x), abs(y))
                        r = max(r, n)
        return r

    def distance(self, probe: Probe, anchor: Vec, species: int, orient: int):
        """Exact distance (sites) or squared distance (grid), comparable."""
        if self.rule.metric_fn is not None:
            return self.rule.metric_fn(probe, anchor, species, orient)
        rel = (probe[0] - anchor[0] * self.rule.scale,
               probe[1] - anchor[1] * self.rule.scale)
        key = (species, orient, rel)
        d = self._cache.get(key)
        if d is None:
            d = self._distance_rel(rel, species, orient)
            self._cache[key] = d
        return d

    def _distance_rel(self, rel: Vec, species: int, orient: int):
        if self.system.is_polyomino:
            px, py = rel
            if self.rule.metric == "linf":
                return min(max(abs(px - x), abs(py - y))
                           for x, y in self._cells[species][orient])
            return min(abs(px - x) + abs(py - y)
                       for x, y in self._cells[species][orient])
        return dist2_point_polygon(rel, self._polys[species][orient])

    def beats_bound(self, gap: int, best) -> bool:
        """True when an anchor whose l-inf gap to the probe (in scaled
        coordinates) is at least ``gap`` could still improve on ``best``."""
        if best is None:
            return True
        if self.system.is_polyomino:
            # site metrics: d(probe, u + T) >= |probe - u|_inf - reach
            return gap - self.reach <= best
        # grid: ``best`` is a squared Euclidean distance in scaled
        # coordinates, and |probe - u|_2 >= |probe - u|_inf >= gap, so the
        # tile is at squared distance >= (gap - reach)^2 when positive.
        margin = gap - self.reach
        if margin <= 0:
            return True
        return Fraction(margin * margin) <= best


class _AnchorIndex:
    """Occupancy lookup: which placement (if any) is anchored at a site."""

    def __init__(self, config: Configuration):
        self.config = config
        self.by_site = {p.site: p for p in config.placements}
        self.torus = config.domain if isinstance(config.domain, Torus) else None

    def at(self, site: Vec) -> Optional[Placement]:
        if self.torus is not None:
            site = self.torus.reduce(site)
        return self.by_site.get(site)


def nearest_shares(config: Configuration, probe: Probe,
                   engine: DistanceEngine) -> tuple:
    """Argmin placements and the common distance for one probe.

    Returns ``(distance, ((placement, share), ...))`` with shares summing to
    one, or ``(None, ())`` for an empty configuration.  On a torus the search
    walks anchor rings in the universal cover and folds lifts of the same
    placement onto their minimum distance; on windows and the plane every
    placement is examined directly.
    """
    if not config.placements:
        return None, ()
    index = _AnchorIndex(config)
    best = None
    holders: dict[Placement, object] = {}
    if index.torus is None:
        for p in config.placements:
            d = engine.distance(probe, p.site, p.species, p.orient)
            if best is None or d < best:
                best, holders = d, {p: d}
            elif d == best:
                holders[p] = d
    else:
        s = engine.rule.scale
        cx = probe[0] // s
        cy = probe[1] // s
        for radius in itertools.count():
            gap0 = (radius - 1) * s  # l-inf gap lower bound for this ring
            if best is not None and radius > 0 and not engine.beats_bound(gap0, best):
                break
            for site in _ring(cx, cy, radius):
                p = index.at(site)
                if p is None:
                    continue
                d = engine.distance(probe, site, p.species, p.orient)
                if best is None or d < best:
                    best, holders = d, {p: d}
                elif d == best and p not in holders:
                    holders[p] = d
    if best is None:
        return None, ()
    share = Fraction(1, len(holders))
    return best, tuple(sorted(((p, share) for p in holders),
                              key=lambda t: (t[0].site, t[0].species, t[0].orient)))


def _ring(cx: int, cy: int, r: int) -> Iterable[Vec]:
    if r == 0:
        yield (cx, cy)
        return
    for x in range(cx - r, cx + r + 1):
        yield (x, cy - r)
        yield (x, cy + r)
    for y in range(cy - r + 1, cy + r):
        yield (cx - r, y)
        yield (cx + r, y)


def torus_probes(torus: Torus, rule: AllocationRule) -> list[Probe]:
    """All probes of one fundamental domain of the torus."""
    (a1, b1), (a2, b2) = torus.basis
    s = rule.scale
    out = []
    if rule.kind == "lattice-sites":
        return [tuple(site) for site in torus.sites]
    # scaled parallelepiped corners; collect odd-odd points inside
    corners = [(0, 0), (a1 * s, b1 * s), (a2 * s, b2 * s),
               ((a1 + a2) * s, (b1 + b2) * s)]
    xs = [c[0] for c in corners]
    ys = [c[1] for c in corners]
    det = a1 * b2 - a2 * b1
    for px in range(min(xs) - 1, max(xs) + 2):
        if px % 2 == 0:
            continue
        for py in range(min(ys) - 1, max(ys) + 2):
            if py % 2 == 0:
                continue
            # inside the half-open parallelepiped spanned by the scaled basis
            u = Fraction(px * b2 - py * a2, det * s)
            v = Fraction(py * a1 - px * b1, det * s)
            if 0 <= u < 1 and 0 <= v < 1:
                out.append((px, py))
    assert len(out) == rule.m * rule.m * abs(det)
    return out


def window_probes(window: Window, rule: AllocationRule) -> list[Probe]:
    """Probes belonging to a window: its sites, or the pixel centres of the
    closed unit squares rooted at its sites."""
    if rule.kind == "lattice-sites":
        return sorted(window.sites)
    s = rule.scale
    out = set()
    for (x, y) in window.sites:
        for ox in range(1, s, 2):
            for oy in range(1, s, 2):
                out.add((x * s + ox, y * s + oy))
    return sorted(out)


def _default_probes(config: Configuration, rule: AllocationRule):
    if isinstance(config.domain, Torus):
        return torus_probes(config.domain, rule)
    if isinstance(config.domain, Window):
        return window_probes(config.domain, rule)
    raise ValueError("plane configurations need an explicit probe window")


def exterior_gap2(probe: Probe, window: Window, rule: AllocationRule) -> int:
    """Squared Euclidean distance (scaled units) from a probe to the nearest
    anchor site outside the window; infinite windows never call this."""
    s = rule.scale
    best = None
    # scan outward in l-inf rings of anchor sites until provably minimal
    cx, cy = probe[0] // s, probe[1] // s
    for r in itertools.count():
        if best is not None and (r - 1) * (r - 1) * s * s > best:
            break
        for site in _ring(cx, cy, r):
            if site in window.sites:
                continue
            dx = probe[0] - site[0] * s
            dy = probe[1] - site[1] * s
            d2 = dx * dx + dy * dy
            if best is None or d2 < best:
                best = d2
    return best


@dataclass
class ShareField:
    """Shares of every probe of a domain, plus per-placement volume totals."""

    config: Configuration
    rule: AllocationRule
    probes: list
    shares: dict
    certified: Optional[dict] = None

    def volume(self, placement: Placement) -> Fraction:
        return self.volumes().get(placement, Fraction(0))

    def volumes(self) -> dict:
        if not hasattr(self, "_volumes"):
            vols: dict[Placement, Fraction] = {}
            for probe in self.probes:
                for p, share in self.shares[probe]:
                    vols[p] = vols.get(p, Fraction(0)) + share * self.rule.measure
            self._volumes = vols
        return self._volumes

    def table(self) -> list[str]:
        lines = []
        for probe in self.probes:
            parts = ",".join(
                f"({p.site[0]},{p.site[1]})#{p.species}.{p.orient}={share}"
                for p, share in self.shares[probe]
            )
            lines.append(f"{probe[0]},{probe[1]}: {parts}")
        return lines


def discrete_voronoi(config: Configuration, rule: AllocationRule,
                     window=None) -> ShareField:
    """Allocate every probe of the domain (or of ``window``) exactly.

    For window and plane domains each probe also gets a certification flag:
    True when no placement anchored outside the known region could have tied
    or beaten the recorded argmin, so the share is valid in any admissible
    extension of the configuration.
    """
    engine = DistanceEngine(config.system, rule)
    if window is None:
        probes = _default_probes(config, rule)
    elif isinstance(window, Window):
        probes = window_probes(window, rule)
    else:
        probes = list(window)
    shares = {}
    certified = None
    on_torus = isinstance(config.domain, Torus)
    if not on_torus and isinstance(config.domain, Window):
        certified = {}
    for probe in probes:
        d, holders = nearest_shares(config, probe, engine)
        shares[probe] = holders
        if certified is not None:
            certified[probe] = _probe_certified(probe, d, config.domain,
                                                engine)
    return ShareField(config, rule, probes, shares, certified)


def _probe_certified(probe: Probe, d, window: Window,
                     engine: DistanceEngine) -> bool:
    if d is None:
        return False
    gap2 = exterior_gap2(probe, window, engine.rule)
    s = engine.rule.scale
    # An unknown tile anchored outside reaches no closer than
    # sqrt(gap2)/s - reach_true; require d < that, i.e. strictly.
    if engine.system.is_polyomino:
        return _site_gap_ok(probe, window, engine, d)
    del s
    reach = engine.reach
    # All quantities squared and scaled: an exterior tile sits at squared
    # distance >= (sqrt(gap2) - reach)^2, and it suffices that this exceeds
    # d.  Using (a - b)^2 >= a^2/2 - b^2 the check below is conservative.
    return Fraction(gap2, 2) - reach * reach > d


def _site_gap_ok(probe: Probe, window: Window, engine: DistanceEngine,
                 d: int) -> bool:
    best = None
    for r in itertools.count():
        if best is not None and r - 1 > best:
            break
        if best is None and r > d + engine.reach + 2:
            return True
        for site in _ring(probe[0], probe[1], r):
            if site in window.sites:
                continue
            g = (max(abs(probe[0] - site[0]), abs(probe[1] - site[1]))
                 if engine.rule.metric == "linf"
                 else abs(probe[0] - site[0]) + abs(probe[1] - site[1]))
            if best is None or g < best:
                best = g
    return best - engine.reach > d


@dataclass
class VolumeCertificate:
    closed: bool
    reason: str = ""
    boundary: int = 0


def allocated_volume(placement: Placement, config: Configuration,
                     rule: AllocationRule, window=None):
    """Exact allocated volume of one placement plus a closure certificate.

    The Voronoi cell is grown breadth-first from the probes of the
    placement's own occupied region.  The certificate is ``closed`` when the
    whole cell was seen and every probe just outside it is strictly closer
    to some other placement — on a torus this always holds once the search
    terminates; on a window it additionally requires that no probe of the
    cell or its collar could be contested by an unknown exterior tile.
    """
    engine = DistanceEngine(config.system, rule)
    on_torus = isinstance(config.domain, Torus)
    torus = config.domain if on_torus else None
    in_window = None
    if isinstance(config.domain, Window):
        wprobes = set(window_probes(config.domain, rule))
        in_window = lambda q: q in wprobes
    s = rule.scale

    def reduce_probe(q: Probe) -> Probe:
        if torus is None:
            return q
        # reduce at anchor resolution, keeping the sub-cell offset
        bx, by = q[0] // s, q[1] // s
        rx, ry = torus.reduce((bx, by))
        return (q[0] + (rx - bx) * s, q[1] + (ry - by) * s)

    seeds = _seed_probes(placement, engine)
    seen = set()
    volume = Fraction(0)
    closed = True
    reason = ""
    boundary = 0
    # On the open plane an isolated tile owns an unbounded cell; cap the
    # search and report the cell as not closed instead of walking forever.
    cap = None
    if torus is None and in_window is None:
        cap = 64 * (engine.reach + 4 * s) ** 2 * max(1, len(config.placements))
    queue = [reduce_probe(q) for q in seeds]
    while queue:
        q = queue.pop()
        if q in seen:
            continue
        if cap is not None and len(seen) >= cap:
            closed, reason = False, "cell not bounded within the search cap"
            break
        seen.add(q)
        if in_window is not None and not in_window(q):
            closed = False
            reason = "cell reaches the window boundary"
            continue
        d, holders = nearest_shares(config, q, engine)
        share = dict(holders).get(placement)
        if share is None:
            boundary += 1
            continue
        if in_window is not None and not _probe_certified(q, d, config.domain, engine):
            closed = False
            reason = "cell share not determined by the window"
        volume += share * rule.measure
        for dx, dy in ((2, 0), (-2, 0), (0, 2), (0, -2)) if s > 1 else \
                ((1, 0), (-1, 0), (0, 1), (0, -1)):
            queue.append(reduce_probe((q[0] + dx, q[1] + dy)))
    if closed and not seen:
        closed, reason = False, "no probes"
    return volume, VolumeCertificate(closed=closed, reason=reason,
                                     boundary=boundary)


def _seed_probes(placement: Placement, engine: DistanceEngine) -> list[Probe]:
    (ux, uy) = placement.site
    system = engine.system
    rule = engine.rule
    if system.is_polyomino:
        return [(ux + x, uy + y)
                for x, y in system.oriented[placement.species][placement.orient].cells]
    s = rule.scale
    out = []
    shape = system.oriented[placement.species][placement.orient]
    for (qx, qy, k) in shape.quarters:
        # any probe of the quarter's bounding cell that lies in the tile
        for ox in range(1, s, 2):
            for oy in range(1, s, 2):
                probe = ((ux + qx) * s + ox, (uy + qy) * s + oy)
                if engine.distance(probe, placement.site, placement.species,
                                   placement.orient) == 0:
                    out.append(probe)
    return out


def check_partition_of_unity(config: Configuration, rule: AllocationRule,
                             window=None):
    """Exact check that shares at every probe sum to 1 (nonempty config)."""
    field = discrete_voronoi(config, rule, window)
    bad = []
    for probe in field.probes:
        total = sum((share for _, share in field.shares[probe]), Fraction(0))
        if total != 1:
            bad.append((probe, total))
    return (not bad), bad


def check_translation_covariance(config: Configuration, rule: AllocationRule,
                                 shift: Vec, window=None) -> bool:
    """Shares must commute with translating the configuration and probes."""
    field = discrete_voronoi(config, rule, window)
    moved = config.translated(shift)
    s = rule.scale
    probes2 = [(p[0] + shift[0] * s, p[1] + shift[1] * s)
               for p in field.probes]
    field2 = discrete_voronoi(moved, rule, probes2)
    for probe, probe2 in zip(field.probes, probes2):
        want = {
            (_shift_placement(p, shift, moved), share)
            for p, share in field.shares[probe]
        }
        got = set(field2.shares[probe2])
        if want != got:
            return False
    return True


def _shift_placement(p: Placement, shift: Vec, moved: Configuration) -> Placement:
    site = (p.site[0] + shift[0], p.site[1] + shift[1])
    if isinstance(moved.domain, Torus):
        site = moved.domain.reduce(site)
    return Placement(site, p.species, p.orient)


def screening_radius(system: TileSystem, perfect_classes, rule: AllocationRule):
    """Largest cell offset any Voronoi cell of a perfect configuration
    reaches, measured in common-supercell steps from the anchor's cell.

    Returns ``(r, certified, witness)`` where ``certified`` means ``r <= 1``:
    every allocation decision is then local to one ring of supercells, which
    is what the correctness machinery assumes.
    """
    basis = None
    for cls in perfect_classes:
        for _, mat in group_elements(True):
            img = lattice_transform(cls.periodicity, mat)
            basis = img if basis is None else lattice_intersect(basis, img)
    (a1, b1), (a2, b2) = basis
    det = a1 * b2 - a2 * b1

    def cell_of(px: Fraction, py: Fraction) -> Vec:
        u = (px * b2 - py * a2) / det
        v = (py * a1 - px * b1) / det
        return (floor(u), floor(v))

    worst = 0
    witness = None
    for cls in perfect_classes:
        torus = Torus(basis)
        config = cls.configuration(system, torus)
        field = discrete_voronoi(config, rule)
        s = rule.scale
        for probe in field.probes:
            for p, share in field.shares[probe]:
                pc = cell_of(Fraction(probe[0], s), Fraction(probe[1], s))
                ac = cell_of(Fraction(p.site[0]), Fraction(p.site[1]))
                r = max(abs(pc[0] - ac[0]), abs(pc[1] - ac[1]))
                if r > worst:
                    worst = r
                    witness = (cls.key, p, probe)
    return worst, worst <= 1, witness


def region_measure(basis, rule: AllocationRule, origin: Vec = (0, 0)) -> Fraction:
    """Exact probe measure of a half-open fundamental parallelepiped."""
    (a1, b1), (a2, b2) = basis
    det = a1 * b2 - a2 * b1
    s = rule.scale
    corners = [(0, 0), (a1, b1), (a2, b2), (a1 + a2, b1 + b2)]
    xs = [origin[0] + c[0] for c in corners]
    ys = [origin[1] + c[1] for c in corners]
    total = Fraction(0)
    for px in range(min(xs) * s - 1, max(xs) * s + 2):
        for py in range(min(ys) * s - 1, max(ys) * s + 2):
            if s > 1 and (px % 2 == 0 or py % 2 == 0):
                continue
            u = Fraction((px - origin[0] * s) * b2 - (py - origin[1] * s) * a2, det * s)
            v = Fraction((py - origin[1] * s) * a1 - (px - origin[0] * s) * b1, det * s)
            if 0 <= u < 1 and 0 <= v < 1:
                total += rule.measure
    return total


def anchors_within(probe: Probe, bound, system: TileSystem,
                   rule: AllocationRule) -> set:
    """Anchor sites whose tiles could lie within ``bound`` of the probe —
    the locality ball that determines the share at the probe."""
    engine = DistanceEngine(system, rule)
    out = set()
    s = rule.scale
    cx, cy = probe[0] // s, probe[1] // s
    for r in itertools.count():
        if not engine.beats_bound((r - 1) * s, bound):
            break
        for site in _ring(cx, cy, r):
            for i, o in system.oriented_ids:
                if engine.distance(probe, site, i, o) <= bound:
                    out.add(site)
                    break
    return out

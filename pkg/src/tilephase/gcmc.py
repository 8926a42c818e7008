"""Grand-canonical Monte Carlo for hard-core tile systems, with exact
reference distributions for small domains.

One elementary move toggles a single slot ``(site, species, orientation)``:
an insertion into an empty, non-conflicting slot is accepted with
probability ``min(1, z_i)``, a deletion of exactly that slot's tile with
``min(1, 1/z_i)``, where ``z_i = exp(beta * mu_i)`` is the species activity.
Hard-core overlaps reject outright, so every visited state is admissible and
the chain is reversible for the grand-canonical weight
``exp(beta * sum mu_x)`` over admissible configurations.

The irrational normalisation of the chemical potentials is folded into beta
once — ``beta_eff = beta / sqrt(norm2)`` — so each acceptance exponent is
``beta_eff`` times an integer weight, and the detailed-balance identity
``min(0, x) - min(0, -x) == x`` holds exactly even in floating point.

The exact companion (`exact_oracle`) enumerates every admissible
configuration of a small torus or a pinned window by depth-first search and
carries the full Gibbs distribution; the chain is validated against it in
total variation.  `PinnedWindow` packages the boundary-pinned version whose
defect probability can be re-weighted cheaply across a whole range of beta.
"""

from __future__ import annotations

import math
import random
import statistics
from dataclasses import dataclass
from typing import Optional

from .configuration import Configuration, Placement, Torus, Window
from .criteria import (
    CORRECT,
    SupercellGrid,
    extract_contours,
    label_cells,
    torus_cell_quotient,
)
from .exactmath import lattice_reduce
from .system import TileSystem


class OracleCapError(RuntimeError):
    """Raised when exhaustive enumeration would exceed the state-space cap."""


# ---------------------------------------------------------------------------
# slots and conflict lookup
# ---------------------------------------------------------------------------


def slot_table(system: TileSystem, domain) -> tuple:
    """Every (site, species, orientation) placement of the domain, sorted.

    The chain, the enumerator and the bitmask state keys all index slots
    through this one table, so their state spaces coincide bit for bit.
    """
    return tuple(
        Placement(site, i, o)
        for site in sorted(domain.sites)
        for (i, o) in system.oriented_ids
    )


def _conflict_table(system: TileSystem) -> dict:
    """io -> tuple of (dx, dy, j, q): anchors whose tile would overlap."""
    table = {}
    for io in system.oriented_ids:
        rows = []
        for jp in system.oriented_ids:
            for dx, dy in system.conflict_deltas(io, jp):
                rows.append((dx, dy) + jp)
        table[io] = tuple(rows)
    return table


class _Occupancy:
    """Anchor-site map with overlap queries shared by chain and enumerator."""

    def __init__(self, system: TileSystem, domain, pinned=()):
        self.system = system
        self.domain = domain
        self.reduce = domain.reduce
        self.conflicts = _conflict_table(system)
        self.anchors: dict = {}
        for p in pinned:
            site = self.reduce(p.site)
            if site in self.anchors:
                raise ValueError("pinned collar anchors the same site twice")
            self.anchors[site] = Placement(site, p.species, p.orient)

    def blocked(self, p: Placement) -> bool:
        """Would inserting ``p`` overlap anything present (incl. itself)?"""
        x, y = p.site
        get = self.anchors.get
        red = self.reduce
        for dx, dy, j, q in self.conflicts[(p.species, p.orient)]:
            occ = get(red((x + dx, y + dy)))
            if occ is not None and occ.species == j and occ.orient == q:
                return True
        return False

    def add(self, p: Placement) -> None:
        self.anchors[p.site] = p

    def remove(self, p: Placement) -> None:
        del self.anchors[p.site]


def _validate_pinned(system, domain, pinned) -> frozenset:
    pinned = frozenset(pinned)
    if any(p.site in domain.sites for p in pinned):
        raise ValueError("pinned anchors must lie outside the sampled domain")
    collar = Configuration(system, None, pinned)
    if not collar.is_admissible:
        raise ValueError("pinned collar is not an admissible configuration")
    return pinned


# ---------------------------------------------------------------------------
# the chain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimParams:
    """One chain: what to sample and for how long.

    ``sweeps`` count |slots| elementary moves each; observables are emitted
    every ``sample_interval`` sweeps once ``burn_in`` sweeps have passed.
    ``swap_moves`` additionally proposes same-anchor species replacement
    (Metropolis on the weight difference) — experimental, for mixtures.
    """

    system: TileSystem
    domain: object
    beta: float
    sweeps: int
    burn_in: int = 0
    sample_interval: int = 1
    seed: int = 0
    swap_moves: bool = False
    pinned: frozenset = frozenset()
    grid: Optional[SupercellGrid] = None
    label_window: Optional[Window] = None  # labelling domain for pinned runs

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")


class Sampler:
    """The Metropolis chain itself, advanced one elementary move at a time.

    State is both an anchor map and a slot bitmask (`mask`), the latter
    giving O(1) state keys for histogramming against the exact oracle.
    """

    def __init__(self, system, domain, beta, seed=0, pinned=(), start=(),
                 swap_moves=False):
        self.system = system
        self.domain = domain
        self.beta = beta
        self.beta_eff = beta / math.sqrt(system.norm2)
        self.swap_moves = swap_moves
        self.rng = random.Random(seed)
        self.slots = slot_table(system, domain)
        self.slot_bit = {p: 1 << k for k, p in enumerate(self.slots)}
        self.pinned = _validate_pinned(system, domain, pinned)
        self.occ = _Occupancy(system, domain, self.pinned)
        self.weights = tuple(sp.weight for sp in system.species)
        self.mask = 0
        self.counts = [0] * len(self.weights)
        for p in start:
            p = Placement(domain.reduce(p.site), p.species, p.orient)
            if self.occ.blocked(p):
                raise ValueError(f"start configuration overlaps at {p.site}")
            self.occ.add(p)
            self.mask |= self.slot_bit[p]
            self.counts[p.species] += 1
        self.steps = 0
        self.attempts = {"insert": 0, "delete": 0, "swap": 0}
        self.accepts = {"insert": 0, "delete": 0, "swap": 0}

    # -- elementary move ---------------------------------------------------

    def step(self) -> None:
        slot = self.slots[self.rng.randrange(len(self.slots))]
        self.steps += 1
        here = self.occ.anchors.get(slot.site)
        if here == slot:
            self.attempts["delete"] += 1
            x = self.beta_eff * self.weights[slot.species]
            if x <= 0.0 or self.rng.random() < math.exp(-x):
                self.occ.remove(slot)
                self.mask &= ~self.slot_bit[slot]
                self.counts[slot.species] -= 1
                self.accepts["delete"] += 1
        elif here is not None and self.swap_moves:
            self.attempts["swap"] += 1
            self.occ.remove(here)
            if self.occ.blocked(slot):
                self.occ.add(here)
                return
            x = self.beta_eff * (
                self.weights[slot.species] - self.weights[here.species]
            )
            if x >= 0.0 or self.rng.random() < math.exp(x):
                self.occ.add(slot)
                self.mask ^= self.slot_bit[here] | self.slot_bit[slot]
                self.counts[here.species] -= 1
                self.counts[slot.species] += 1
                self.accepts["swap"] += 1
            else:
                self.occ.add(here)
        else:
            # insertion attempt; occupied or overlapping slots hard-reject
            self.attempts["insert"] += 1
            if self.occ.blocked(slot):
                return
            x = self.beta_eff * self.weights[slot.species]
            if x >= 0.0 or self.rng.random() < math.exp(x):
                self.occ.add(slot)
                self.mask |= self.slot_bit[slot]
                self.counts[slot.species] += 1
                self.accepts["insert"] += 1

    def run_steps(self, n: int) -> None:
        for _ in range(n):
            self.step()

    # -- views ---------------------------------------------------------------

    def acceptance_rate(self, kind: str) -> float:
        a = self.attempts[kind]
        return self.accepts[kind] / a if a else 0.0

    def configuration(self) -> Configuration:
        placements = set(self.occ.anchors.values())
        if self.pinned or not isinstance(self.domain, Torus):
            sites = frozenset(self.domain.sites) | {p.site for p in self.pinned}
            return Configuration(self.system, Window(sites), placements)
        return Configuration(self.system, self.domain, placements)


@dataclass(frozen=True)
class Observables:
    """One sampled row of a trajectory."""

    sweep: int
    counts: tuple
    density: float
    fractions: tuple  # correct-cell fraction per perfect class
    contours: Optional[int]
    contour_support: Optional[int]
    acceptance: tuple  # (insert, delete, swap) rates so far

    FIELDS = ("sweep", "counts", "density", "fractions", "contours",
              "contour_support", "acceptance")


@dataclass(frozen=True)
class RunResult:
    params: SimParams
    trajectory: list
    snapshot: Configuration
    sampler: Sampler


def _observe(sampler: Sampler, sweep: int, grid, label_window=None) -> Observables:
    fractions: tuple = ()
    contours = support = None
    if grid is not None:
        config = sampler.configuration()
        if label_window is not None:
            config = Configuration(
                sampler.system, label_window, config.placements
            )
        labels = label_cells(config, grid)
        fractions = tuple(
            float(labels.correct_fraction(ci)) for ci in range(len(grid.classes))
        )
        try:
            found = extract_contours(labels, grid)
            contours = len(found)
            support = sum(c.size for c in found)
        except ValueError:
            pass  # incorrect cells touch the unlabeled collar of a window
    n_sites = len(sampler.domain.sites)
    return Observables(
        sweep=sweep,
        counts=tuple(sampler.counts),
        density=sum(sampler.counts) / n_sites,
        fractions=fractions,
        contours=contours,
        contour_support=support,
        acceptance=tuple(
            sampler.acceptance_rate(k) for k in ("insert", "delete", "swap")
        ),
    )


def run(params: SimParams, start=()) -> RunResult:
    """Run one chain; deterministic for fixed params and seed."""
    sampler = Sampler(
        params.system,
        params.domain,
        params.beta,
        seed=params.seed,
        pinned=params.pinned,
        start=start,
        swap_moves=params.swap_moves,
    )
    sweep_len = len(sampler.slots)
    trajectory = []
    for sweep in range(1, params.sweeps + 1):
        sampler.run_steps(sweep_len)
        if sweep > params.burn_in and (sweep - params.burn_in) % params.sample_interval == 0:
            trajectory.append(
                _observe(sampler, sweep, params.grid, params.label_window)
            )
    return RunResult(params, trajectory, sampler.configuration(), sampler)


def measure_correctness(snapshot: Configuration, grid: SupercellGrid) -> Observables:
    """Label a snapshot and report the same row format as a trajectory."""
    labels = label_cells(snapshot, grid)
    contours = support = None
    try:
        found = extract_contours(labels, grid)
        contours = len(found)
        support = sum(c.size for c in found)
    except ValueError:
        pass
    counts = [0] * len(snapshot.system.species)
    for p in snapshot.placements:
        counts[p.species] += 1
    n_sites = len(snapshot.domain.sites)
    return Observables(
        sweep=0,
        counts=tuple(counts),
        density=sum(counts) / n_sites,
        fractions=tuple(
            float(labels.correct_fraction(ci)) for ci in range(len(grid.classes))
        ),
        contours=contours,
        contour_support=support,
        acceptance=(0.0, 0.0, 0.0),
    )


def acceptance_table(system: TileSystem, beta: float) -> list:
    """Per-species acceptance exponents (x, log a_insert, log a_delete).

    Detailed balance at the ratio level is the exact float identity
    ``min(0, x) - min(0, -x) == x``.
    """
    beta_eff = beta / math.sqrt(system.norm2)
    rows = []
    for i, sp in enumerate(system.species):
        x = beta_eff * sp.weight
        rows.append((i, x, min(0.0, x), min(0.0, -x)))
    return rows


# ---------------------------------------------------------------------------
# exact enumeration
# ---------------------------------------------------------------------------


def enumerate_admissible(system, domain, pinned=(), cap=10_000_000):
    """All admissible fillings of the domain's anchor sites.

    Returns ``(slots, masks, weight_sums)`` where each mask indexes into
    ``slots`` (the shared table) and ``weight_sums`` carries the integer
    total weight of each configuration.  Depth-first over sites, so the
    count is checked against ``cap`` as it grows, not after.
    """
    pinned = _validate_pinned(system, domain, pinned)
    slots = slot_table(system, domain)
    bit = {p: 1 << k for k, p in enumerate(slots)}
    occ = _Occupancy(system, domain, pinned)
    sites = sorted(domain.sites)
    oriented = list(system.oriented_ids)
    weights = tuple(sp.weight for sp in system.species)
    masks: list = []
    weight_sums: list = []

    def rec(k: int, mask: int, wsum: int) -> None:
        if k == len(sites):
            if len(masks) >= cap:
                raise OracleCapError(
                    f"admissible state space exceeds the cap of {cap} "
                    f"configurations (reached {len(masks) + 1})"
                )
            masks.append(mask)
            weight_sums.append(wsum)
            return
        site = sites[k]
        rec(k + 1, mask, wsum)
        for i, o in oriented:
            p = Placement(site, i, o)
            if not occ.blocked(p):
                occ.add(p)
                rec(k + 1, mask | bit[p], wsum + weights[i])
                occ.remove(p)

    rec(0, 0, 0)
    return slots, masks, weight_sums


@dataclass(frozen=True)
class OracleDistribution:
    """The exact Gibbs distribution over every admissible configuration."""

    system: TileSystem
    domain: object
    beta: float
    pinned: frozenset
    slots: tuple
    masks: tuple
    weight_sums: tuple
    probs: tuple

    @property
    def size(self) -> int:
        return len(self.masks)

    def configuration(self, mask: int) -> Configuration:
        chosen = [p for k, p in enumerate(self.slots) if mask >> k & 1]
        if self.pinned or not isinstance(self.domain, Torus):
            sites = frozenset(self.domain.sites) | {p.site for p in self.pinned}
            return Configuration(self.system, Window(sites), chosen + list(self.pinned))
        return Configuration(self.system, self.domain, chosen)

    def probability(self, mask: int) -> float:
        try:
            return self.probs[self.masks.index(mask)]
        except ValueError:
            return 0.0

    def species_densities(self) -> tuple:
        n_sites = len(self.domain.sites)
        totals = [0.0] * len(self.system.species)
        for mask, p in zip(self.masks, self.probs):
            m = mask
            while m:
                low = m & -m
                totals[self.slots[low.bit_length() - 1].species] += p
                m ^= low
        return tuple(t / n_sites for t in totals)

    def expectation(self, values) -> float:
        """Mean of a per-configuration sequence aligned with ``masks``."""
        return sum(v * p for v, p in zip(values, self.probs))

    def tv_distance(self, counts: dict) -> float:
        """Total variation against an empirical histogram of masks."""
        n = sum(counts.values())
        if n == 0:
            raise ValueError("empty histogram")
        seen = 0.0
        tv = 0.0
        for mask, p in zip(self.masks, self.probs):
            c = counts.get(mask, 0)
            seen += c
            tv += abs(p - c / n)
        tv += (n - seen) / n  # states outside the oracle's support
        return tv / 2.0

    def cell_correct_probability(self, grid, cell, variant=None) -> float:
        """Exact P(cell is correct), optionally for one specific variant."""
        want = _normalize_variant(grid, variant) if variant is not None else None
        total = 0.0
        for mask, p in zip(self.masks, self.probs):
            labels = label_cells(self.configuration(mask), grid)
            status, match = labels.labels[labels.reduce_cell(cell)]
            if status == CORRECT and (want is None or match == want):
                total += p
        return total


def exact_oracle(system, domain, beta, pinned=(), cap=10_000_000) -> OracleDistribution:
    """Enumerate the domain and attach Gibbs weights exp(beta_eff * weight)."""
    slots, masks, weight_sums = enumerate_admissible(system, domain, pinned, cap)
    beta_eff = beta / math.sqrt(system.norm2)
    top = max(weight_sums)
    raw = [math.exp(beta_eff * (w - top)) for w in weight_sums]
    z = sum(raw)
    return OracleDistribution(
        system=system,
        domain=domain,
        beta=beta,
        pinned=frozenset(pinned),
        slots=slots,
        masks=tuple(masks),
        weight_sums=tuple(weight_sums),
        probs=tuple(r / z for r in raw),
    )


# ---------------------------------------------------------------------------
# boundary-pinned windows
# ---------------------------------------------------------------------------


def _normalize_variant(grid: SupercellGrid, variant):
    ci, shift = variant
    return ci, lattice_reduce(grid.classes[ci].periodicity, shift)


@dataclass(frozen=True)
class PinnedWindow:
    """A window of whole cells pinned to one perfect variant on its collar.

    Enumeration happens once; `correct_probability` just re-weights the
    stored weight sums, so scanning many beta values is cheap.
    """

    system: TileSystem
    grid: SupercellGrid
    variant: tuple
    cells: tuple
    track: tuple
    window: Window
    pinned: frozenset
    slots: tuple
    weight_sums: tuple
    track_correct: tuple

    @staticmethod
    def build(system, grid, cells, variant=(0, (0, 0)), track=None,
              cap=10_000_000) -> "PinnedWindow":
        cells = tuple(sorted(cells))
        if track is None:
            # the cell whose whole 3x3 block stays inside cells + collar is
            # any of them; prefer the most central one
            def spread(c):
                return max(
                    max(abs(c[0] - d[0]), abs(c[1] - d[1])) for d in cells
                )
            track = min(cells, key=lambda c: (spread(c), c))
        elif track not in cells:
            raise ValueError("tracked cell must be one of the window cells")
        variant = _normalize_variant(grid, variant)
        ci, shift = variant
        collar = set()
        for cx, cy in cells:
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    collar.add((cx + dx, cy + dy))
        collar -= set(cells)
        pinned = []
        collar_sites = set()
        for cell in sorted(collar):
            for site in grid.sites_of_cell(cell):
                collar_sites.add(site)
                io = grid.perfect_at(ci, shift, site)
                if io is not None:
                    pinned.append(Placement(site, io[0], io[1]))
        free = frozenset(
            site for cell in cells for site in grid.sites_of_cell(cell)
        )
        window = Window(free)
        slots, masks, weight_sums = enumerate_admissible(
            system, window, pinned, cap
        )
        # the labelling window needs every site of the collar cells, not
        # just the anchored ones, or the tracked cell's block is incomplete
        label_sites = free | collar_sites
        flags = []
        for mask in masks:
            chosen = [p for k, p in enumerate(slots) if mask >> k & 1]
            cfg = Configuration(
                system, Window(label_sites), chosen + pinned
            )
            status, match = label_cells(cfg, grid).labels[track]
            flags.append(status == CORRECT and match == variant)
        return PinnedWindow(
            system=system,
            grid=grid,
            variant=variant,
            cells=cells,
            track=track,
            window=window,
            pinned=frozenset(pinned),
            slots=slots,
            weight_sums=tuple(weight_sums),
            track_correct=tuple(flags),
        )

    def distribution(self, beta: float) -> list:
        beta_eff = beta / math.sqrt(self.system.norm2)
        top = max(self.weight_sums)
        raw = [math.exp(beta_eff * (w - top)) for w in self.weight_sums]
        z = sum(raw)
        return [r / z for r in raw]

    def correct_probability(self, beta: float) -> float:
        """Exact P(tracked cell is correct for the pinned variant)."""
        probs = self.distribution(beta)
        return sum(p for p, ok in zip(probs, self.track_correct) if ok)

    def defect_probability(self, beta: float) -> float:
        return 1.0 - self.correct_probability(beta)


def activity(system: TileSystem, beta: float) -> float:
    """z = exp(beta * min_i mu_i), the scale of the dilute-defect regime."""
    w_min = min(sp.weight for sp in system.species)
    return math.exp(beta * w_min / math.sqrt(system.norm2))


def scaling_points(model: PinnedWindow, betas) -> list:
    """(log z, log defect probability) pairs for a log-log slope fit."""
    pts = []
    for beta in betas:
        defect = model.defect_probability(beta)
        if defect <= 0.0:
            raise ValueError(f"defect probability vanished at beta={beta}")
        pts.append((math.log(activity(model.system, beta)), math.log(defect)))
    return pts


def fit_slope(points) -> float:
    xs = [x for x, _ in points]
    ys = [y for _, y in points]
    return statistics.linear_regression(xs, ys).slope


# ---------------------------------------------------------------------------
# random admissible configurations
# ---------------------------------------------------------------------------


def random_admissible(system, domain, rng: random.Random, fill=0.6) -> Configuration:
    """A random admissible configuration by one greedy insertion sweep.

    Visits every slot once in random order and occupies it with probability
    ``fill`` whenever the hard core allows, so the result ranges from near
    empty to maximal packings as ``fill`` varies.
    """
    slots = list(slot_table(system, domain))
    rng.shuffle(slots)
    occ = _Occupancy(system, domain)
    for p in slots:
        if rng.random() < fill and not occ.blocked(p):
            occ.add(p)
    return Configuration(system, domain, occ.anchors.values())

"""Supercell grids, cell labels, contours, and the certificate chain."""

from decimal import Decimal, getcontext
from fractions import Fraction

import pytest

from tilephase.allocation import AllocationRule, region_measure
from tilephase.configuration import PLANE, Configuration, Placement, Torus, Window
from tilephase.criteria import (
    LocalOptReport,
    NoGroundStateError,
    build_supercell,
    contour_gap,
    extract_contours,
    label_cells,
    peierls_constant,
    peierls_spot_check,
    sqrt_sum_le,
    torus_cell_quotient,
    verify_global_optimization,
    verify_system,
)
from tilephase.exactmath import Scaled, lattice_det
from tilephase.gcmc import enumerate_admissible
from tilephase.system import Species, TileSystem
from tilephase.tilings import enumerate_tiling_classes

DIAMOND_TAU = Scaled(Fraction(1, 648), 4)
MONO_TAU = Scaled(Fraction(1, 25), 1)


def t_classes(system, bound):
    return enumerate_tiling_classes(system, bound, group="t")


def perfect_config(system, grid, domain, ci=0, shift=(0, 0)):
    placements = []
    for site in domain.sites:
        hit = grid.perfect_at(ci, shift, site)
        if hit is not None:
            placements.append(Placement(site, *hit))
    return Configuration(system, domain, placements)


# ----------------------------------------------------------------------
# exact radical comparison helper
# ----------------------------------------------------------------------


def test_sqrt_sum_le_known_triples():
    assert sqrt_sum_le(1, 1, 4)  # 2 <= 2
    assert sqrt_sum_le(2, 2, 8)  # equality at 2*sqrt(2)
    assert not sqrt_sum_le(2, 2, 7)
    assert sqrt_sum_le(0, 5, 5)
    assert not sqrt_sum_le(9, 0, 4)
    assert sqrt_sum_le(Fraction(1, 4), Fraction(1, 4), 1)


def test_sqrt_sum_le_against_decimal():
    getcontext().prec = 60
    for a2 in range(0, 13):
        for b2 in range(0, 13):
            for c2 in range(0, 26):
                lhs = Decimal(a2).sqrt() + Decimal(b2).sqrt()
                rhs = Decimal(c2).sqrt()
                if abs(lhs - rhs) < Decimal("1e-40"):
                    expected = True  # exact tie counts as <=
                else:
                    expected = lhs < rhs
                assert sqrt_sum_le(a2, b2, c2) == expected, (a2, b2, c2)


# ----------------------------------------------------------------------
# common supercell
# ----------------------------------------------------------------------


def test_supercell_monomino(monomino):
    grid = build_supercell(monomino, t_classes(monomino, 2))
    assert grid.basis == ((1, 0), (0, 1))
    assert grid.det == 1
    assert grid.interaction_ok
    assert grid.scaling == 1


def test_supercell_diamond(diamond):
    grid = build_supercell(diamond, t_classes(diamond, 4))
    assert grid.basis == ((2, 0), (1, 1))
    assert grid.det == 2
    assert grid.interaction_ok


def test_supercell_diamond_octagon(diamond_octagon):
    classes = t_classes(diamond_octagon, 9)
    assert len(classes) == 2
    grid = build_supercell(diamond_octagon, classes)
    assert grid.basis == ((6, 0), (3, 3))
    assert grid.det == 18
    assert grid.interaction_ok
    # one variant per shift of each class lattice: 2 + 9
    variants = grid.perfect_variants()
    assert len(variants) == 11
    assert sum(1 for ci, _ in variants if ci == 0) == lattice_det(
        classes[0].periodicity
    )


def test_supercell_needs_a_tiling(z_pentomino):
    # the smallest torus carrying this shape has index 5
    assert t_classes(z_pentomino, 4) == []
    with pytest.raises(NoGroundStateError, match="no ground state"):
        build_supercell(z_pentomino, ())


def test_cell_geometry_roundtrip(diamond, diamond_octagon):
    for system, bound in ((diamond, 4), (diamond_octagon, 9)):
        grid = build_supercell(system, t_classes(system, bound))
        for cell in [(0, 0), (1, 0), (0, 1), (-1, -1), (2, -3)]:
            sites = grid.sites_of_cell(cell)
            assert len(sites) == grid.det
            assert all(grid.cell_of(s) == cell for s in sites)
            assert grid.cell_of(grid.cell_origin(cell)) == cell
        # cells partition the sites of a patch of the plane
        seen = {}
        for x in range(-6, 7):
            for y in range(-6, 7):
                seen.setdefault(grid.cell_of((x, y)), []).append((x, y))
        inner = [c for c, s in seen.items() if len(s) == grid.det]
        assert len(inner) >= 4


def test_perfect_at_matches_representatives(diamond_octagon):
    classes = t_classes(diamond_octagon, 9)
    grid = build_supercell(diamond_octagon, classes)
    for ci, cls in enumerate(classes):
        config = cls.configuration(diamond_octagon)
        anchored = {
            p.site: (p.species, p.orient) for p in config.placements
        }
        for site in config.domain.sites:
            assert grid.perfect_at(ci, (0, 0), site) == anchored.get(site)


def test_torus_cell_quotient(diamond_octagon):
    grid = build_supercell(diamond_octagon, t_classes(diamond_octagon, 9))
    assert torus_cell_quotient(grid, Torus(((6, 0), (3, 3)))) == ((1, 0), (0, 1))
    assert torus_cell_quotient(grid, Torus(((12, 0), (6, 6)))) == ((2, 0), (0, 2))
    with pytest.raises(ValueError, match="supercell"):
        torus_cell_quotient(grid, Torus(((3, 0), (0, 3))))


# ----------------------------------------------------------------------
# cell labels
# ----------------------------------------------------------------------


def test_labels_perfect_diamond_torus(diamond):
    grid = build_supercell(diamond, t_classes(diamond, 4))
    torus = Torus(((6, 0), (0, 6)))
    cfg = perfect_config(diamond, grid, torus)
    assert len(cfg.placements) == 18 and cfg.is_admissible
    labels = label_cells(cfg, grid)
    assert len(labels.labels) == 18
    assert labels.count("correct") == 18
    assert labels.count("incorrect") == 0
    assert labels.correct_fraction() == 1
    assert labels.correct_fraction(0) == 1
    assert extract_contours(labels, grid) == []


def test_labels_need_torus_or_window(monomino):
    cfg = Configuration(monomino, PLANE, [Placement((0, 0), 0, 0)])
    grid = build_supercell(monomino, t_classes(monomino, 2))
    with pytest.raises(ValueError, match="torus or window"):
        label_cells(cfg, grid)


def test_deletion_contour_diamond_torus(diamond):
    grid = build_supercell(diamond, t_classes(diamond, 4))
    cfg = perfect_config(diamond, grid, Torus(((6, 0), (0, 6))))
    cfg = cfg.without_placement(Placement((2, 2), 0, 0))
    labels = label_cells(cfg, grid)
    assert labels.count("incorrect") == 9
    assert labels.count("correct") == 9
    contours = extract_contours(labels, grid)
    assert [c.size for c in contours] == [9]
    assert contours[0].interior == frozenset()
    spot = peierls_spot_check(
        cfg, grid, contours[0], labels, AllocationRule.refined_grid(), DIAMOND_TAU
    )
    assert spot["ok"] and spot["identity_ok"]
    # deleting one tile costs exactly its chemical potential
    assert spot["gap"] == diamond.mu(0) == Scaled(Fraction(2), 4)
    assert spot["volume"] == region_measure(grid.basis, AllocationRule.refined_grid()) * 9
    assert spot["tiles"] == 8
    assert spot["bound"] == Scaled(Fraction(1, 72), 4)


def test_window_collar_is_unknown(monomino):
    grid = build_supercell(monomino, t_classes(monomino, 2))
    window = Window.rectangle(0, 0, 9, 9)
    cfg = perfect_config(monomino, grid, window)
    labels = label_cells(cfg, grid)
    assert labels.count("correct") == 49  # 7x7 interior
    assert labels.count("unknown") == 32  # boundary ring
    assert labels.correct_fraction() == 1  # unknowns are not counted

    holed = cfg.without_placement(Placement((4, 4), 0, 0))
    labels = label_cells(holed, grid)
    assert labels.count("incorrect") == 9
    assert labels.count("correct") == 40
    assert labels.correct_fraction() == Fraction(40, 49)
    contours = extract_contours(labels, grid)
    assert [c.size for c in contours] == [9]
    spot = peierls_spot_check(
        holed, grid, contours[0], labels, AllocationRule.lattice_sites(), MONO_TAU
    )
    assert spot["ok"]
    assert spot["gap"] == monomino.mu(0) == Scaled(Fraction(1), 1)
    assert spot["tiles"] == 8 and spot["volume"] == 9
    assert spot["bound"] == Scaled(Fraction(9, 25), 1)


def test_contour_touching_collar_is_an_error(diamond):
    grid = build_supercell(diamond, t_classes(diamond, 4))
    window = Window.rectangle(0, 0, 10, 10)
    cfg = perfect_config(diamond, grid, window)
    labels = label_cells(cfg, grid)
    assert labels.count("correct") == 12
    assert labels.count("unknown") == 43
    assert labels.correct_fraction() == 1

    holed = cfg.without_placement(Placement((4, 4), 0, 0))
    labels = label_cells(holed, grid)
    assert labels.count("incorrect") == 5
    with pytest.raises(ValueError, match="unlabeled"):
        extract_contours(labels, grid)


def test_ring_contour_encloses_a_pocket(monomino):
    grid = build_supercell(monomino, t_classes(monomino, 2))
    cfg = perfect_config(monomino, grid, Torus(((9, 0), (0, 9))))
    holes = [
        (x, y)
        for x in range(9)
        for y in range(9)
        if max(abs(x - 4), abs(y - 4)) == 2
    ]
    assert len(holes) == 16
    for h in holes:
        cfg = cfg.without_placement(Placement(h, 0, 0))
    labels = label_cells(cfg, grid)
    assert labels.count("incorrect") == 48
    assert labels.count("correct") == 33
    contours = extract_contours(labels, grid)
    assert len(contours) == 1
    assert contours[0].size == 48
    # the intact centre cell is enclosed, not exterior
    assert contours[0].interior == frozenset({(4, 4)})
    assert len(contours[0].volume) == 49
    spot = peierls_spot_check(
        cfg, grid, contours[0], labels, AllocationRule.lattice_sites(), MONO_TAU
    )
    assert spot["ok"] and spot["identity_ok"]
    assert spot["gap"] == Scaled(Fraction(16), 1)
    assert spot["volume"] == 48 and spot["tiles"] == 32


def test_two_contours_split_the_total_surplus(diamond):
    grid = build_supercell(diamond, t_classes(diamond, 4))
    cfg = perfect_config(diamond, grid, Torus(((8, 0), (0, 8))))
    for site in ((0, 0), (4, 4)):
        cfg = cfg.without_placement(Placement(site, 0, 0))
    labels = label_cells(cfg, grid)
    assert labels.count("incorrect") == 18
    contours = extract_contours(labels, grid)
    assert [c.size for c in contours] == [9, 9]
    rule = AllocationRule.refined_grid()
    total = Scaled(Fraction(0), 4)
    for contour in contours:
        gap, _, _ = contour_gap(cfg, grid, contour, labels, rule)
        assert gap == diamond.mu(0)
        total = total + gap
    # partition of unity: the contours account for the whole excess
    assert total == Scaled(Fraction(64) - cfg.weight_sum, 4)


# ----------------------------------------------------------------------
# surplus bound swept over every admissible state of a small torus
# ----------------------------------------------------------------------


def test_surplus_dominates_defects_diamond(diamond):
    grid = build_supercell(diamond, t_classes(diamond, 4))
    torus = Torus(((4, 0), (0, 4)))
    slots, masks, weights = enumerate_admissible(diamond, torus)
    assert len(masks) == 743
    tau_w = Fraction(1, 648)  # tau in weight units: 1/648 / sqrt(4) = 1/1296
    perfect = 0
    for mask, w in zip(masks, weights):
        chosen = [slots[i] for i in range(len(slots)) if mask >> i & 1]
        labels = label_cells(Configuration(diamond, torus, chosen), grid)
        incorrect = labels.count("incorrect")
        surplus = Fraction(16 - w)  # rho * |torus| - total weight
        assert surplus >= tau_w * incorrect
        if incorrect == 0:
            assert surplus == 0
            perfect += 1
        else:
            assert surplus > 0
    # exactly the two translates of the perfect tiling saturate the bound
    assert perfect == 2


def test_surplus_dominates_defects_monomino(monomino):
    grid = build_supercell(monomino, t_classes(monomino, 2))
    torus = Torus(((3, 0), (0, 3)))
    slots, masks, weights = enumerate_admissible(monomino, torus)
    assert len(masks) == 512
    perfect = 0
    for mask, w in zip(masks, weights):
        chosen = [slots[i] for i in range(len(slots)) if mask >> i & 1]
        labels = label_cells(Configuration(monomino, torus, chosen), grid)
        incorrect = labels.count("incorrect")
        assert Fraction(9 - w) >= Fraction(incorrect, 25)
        perfect += incorrect == 0
    assert perfect == 1


def test_ground_states_on_odd_torus(diamond_octagon):
    # an index-9 torus admits the square-lattice class but not the pure
    # diamond lattice, so the maximisers are exactly its nine translates
    torus = Torus(((3, 0), (0, 3)))
    slots, masks, weights = enumerate_admissible(diamond_octagon, torus)
    assert len(masks) == 52
    assert max(weights) == 9
    top = [m for m, w in zip(masks, weights) if w == 9]
    assert len(top) == 9
    for mask in top:
        chosen = [slots[i] for i in range(len(slots)) if mask >> i & 1]
        cfg = Configuration(diamond_octagon, torus, chosen)
        assert cfg.is_admissible
        assert sorted(p.species for p in cfg.placements) == [0, 1]


# ----------------------------------------------------------------------
# optimization reports
# ----------------------------------------------------------------------


def test_global_optimization_diamond_octagon(diamond_octagon):
    classes = t_classes(diamond_octagon, 9)
    report = verify_global_optimization(
        diamond_octagon, AllocationRule.refined_grid(), classes
    )
    assert report.ok
    assert report.rho == 1
    assert report.p_star == Scaled(Fraction(1), 53)
    assert report.volume_checks == [(0, True), (1, True)]
    assert report.completeness == "complete on the supercell torus"
    assert report.counterexample is None


def test_global_optimization_rejects_unequal_density(diamond_octagon):
    lopsided = TileSystem(
        diamond_octagon.name,
        [
            Species(sp.name, 2, sp.shape)
            for sp in diamond_octagon.species
        ],
        diamond_octagon.symmetry,
    )
    report = verify_global_optimization(
        lopsided, AllocationRule.refined_grid(), t_classes(diamond_octagon, 9)
    )
    assert not report.ok
    assert "weight/area differs" in report.counterexample
    assert "pure" in report.counterexample
    assert report.p_star is None
    assert report.completeness == "skipped"


def test_peierls_constant_needs_certification():
    report = LocalOptReport("margins insufficient at n=1", False, 1)
    with pytest.raises(ValueError, match="certified"):
        peierls_constant(report)


# ----------------------------------------------------------------------
# whole-system verification, exact frozen outcomes
# ----------------------------------------------------------------------


def test_verify_monomino(monomino):
    report = verify_system(monomino, t_classes(monomino, 2), max_n=3)
    assert report.certified is True
    assert report.screening_radius == 0 and report.screening_ok
    assert report.grid.basis == ((1, 0), (0, 1))
    assert report.global_report.ok
    assert [(r.n, r.status, r.nodes) for r in report.local_reports] == [
        (1, "margins insufficient at n=1", 0),
        (2, "certified at n=2", 10),
    ]
    assert report.best.delta_weight == 1
    assert str(report.best.delta) == "1"
    tau = peierls_constant(report.best)
    assert tau == Scaled(Fraction(1, 25), 1)
    assert str(tau) == "1/25"
    lines = report.lines()
    assert "certified: yes" in lines
    assert "tau: 1/25" in lines


def test_verify_diamond(diamond):
    report = verify_system(diamond, t_classes(diamond, 8), max_n=4)
    assert report.certified is True
    assert report.screening_radius == 0 and report.screening_ok
    assert report.grid.basis == ((2, 0), (1, 1))
    assert [r.certified for r in report.local_reports] == [
        False,
        False,
        False,
        True,
    ]
    assert all(
        r.status == f"margins insufficient at n={r.n}"
        for r in report.local_reports[:3]
    )
    assert report.best.n == 4
    assert report.best.nodes == 41
    assert report.best.delta_weight == Fraction(1, 8)
    assert str(report.best.delta) == "1/16"
    tau = peierls_constant(report.best)
    assert tau == DIAMOND_TAU
    assert str(tau) == "1/1296"


def test_verify_diamond_octagon(diamond_octagon):
    report = verify_system(diamond_octagon, t_classes(diamond_octagon, 9), max_n=3)
    assert report.certified is True
    assert report.screening_radius == 1 and report.screening_ok
    assert report.grid.basis == ((6, 0), (3, 3))
    assert report.global_report.p_star == Scaled(Fraction(1), 53)
    assert report.best.n == 3
    assert report.best.nodes == 26539
    assert report.best.delta_weight == Fraction(1, 8)
    tau = peierls_constant(report.best)
    assert tau == Scaled(Fraction(1, 392), 53)
    assert str(tau) == "1/392/sqrt(53)"
    assert "certified: yes" in report.lines()


def test_verify_skips_screening_over_cap(diamond):
    report = verify_system(
        diamond, t_classes(diamond, 4), max_n=1, screening_cap=1
    )
    assert report.screening_radius is None and report.screening_ok is None
    assert report.certified is False
    assert report.best is None
    lines = report.lines()
    assert "screening-certified: not computed (domain too large)" in lines
    assert "tau: unavailable (surplus not certified)" in lines
    assert "certified: no" in lines


def test_verify_reports_budget_exhaustion(monomino):
    report = verify_system(monomino, t_classes(monomino, 2), max_n=2, budget=3)
    assert report.certified is False
    last = report.local_reports[-1]
    assert last.status == "unverified at n=2: node budget exhausted"
    assert last.detail == "budget 3 nodes"

from fractions import Fraction

from tilephase.configuration import PLANE, Configuration, Placement, Torus, Window
from tilephase.exactmath import INFINITY, Scaled


def test_torus_sites_and_reduce():
    t = Torus(((3, 0), (1, 2)))
    assert t.det == 6
    assert len(t.sites) == 6
    for s in t.sites:
        assert t.reduce(s) == s
    # reducing by a basis vector is the identity on the quotient
    assert t.reduce((3, 0)) == (0, 0)
    assert t.reduce((1, 2)) == (0, 0)
    assert t.reduce((4, 2)) == (0, 0)
    assert str(t) == "torus 3 1 2"


def test_window_rectangle_half_open():
    w = Window.rectangle(0, 0, 4, 3)
    assert len(w.sites) == 12
    assert (3, 2) in w.sites and (4, 2) not in w.sites
    assert w.bbox == (0, 0, 3, 2)
    assert str(w) == "window 0 0 4 3"
    assert w.reduce((17, -5)) == (17, -5)


def test_monomino_admissibility(monomino):
    t = Torus(((2, 0), (0, 2)))
    full = Configuration(monomino, t, [Placement(s, 0, 0) for s in t.sites])
    assert full.is_admissible
    assert full.weight_sum == 4
    assert full.hamiltonian() == Scaled(Fraction(-4), 1)
    # same site twice is inadmissible even for a 1-cell tile
    dup = Configuration(monomino, t, [Placement((0, 0), 0, 0), Placement((2, 2), 0, 0)])
    assert len(dup) == 1  # torus reduction identifies the two anchors


def test_overlap_detected_on_torus_wraparound(z_pentomino):
    # a 5-site torus tiled by one Z covers everything; adding any tile overlaps
    t = Torus(((5, 0), (2, 1)))
    one = Configuration(z_pentomino, t, [Placement((0, 0), 0, 0)])
    assert one.is_admissible
    assert len(set(one.units(one.sorted_placements()[0]))) == 5
    two = one.with_placement(Placement((2, 0), 0, 0))
    assert not two.is_admissible
    assert two.hamiltonian() is INFINITY


def test_plane_configuration_and_translation(z_pentomino):
    a = Configuration(
        z_pentomino, PLANE, [Placement((0, 0), 0, 0), Placement((3, 0), 0, 0)]
    )
    assert a.is_admissible
    b = a.translated((-7, 11))
    assert b.is_admissible
    assert {p.site for p in b.placements} == {(-7, 11), (-4, 11)}
    assert a.hamiltonian() == b.hamiltonian()


def test_without_placement_roundtrip(monomino):
    w = Window.rectangle(0, 0, 3, 1)
    p, q = Placement((0, 0), 0, 0), Placement((2, 0), 0, 0)
    c = Configuration(monomino, w, [p, q])
    assert c.without_placement(q).placements == frozenset({p})
    assert c.without_placement(q).with_placement(q) == c


def test_equality_includes_domain(monomino):
    p = [Placement((0, 0), 0, 0)]
    on_torus = Configuration(monomino, Torus(((2, 0), (0, 2))), p)
    on_window = Configuration(monomino, Window.rectangle(0, 0, 2, 2), p)
    assert on_torus != on_window
    assert on_torus == Configuration(monomino, Torus(((2, 0), (0, 2))), p)
    assert hash(on_torus) == hash(Configuration(monomino, Torus(((2, 0), (0, 2))), p))


def test_quarter_units_disjointness(diamond_octagon):
    # octagon at (0,0) and diamond at (2,2) share an edge but not interiors
    c = Configuration(
        diamond_octagon, PLANE, [Placement((0, 0), 1, 0), Placement((2, 2), 0, 0)]
    )
    assert c.is_admissible
    # moving the diamond one step down pokes it into the octagon
    bad = Configuration(
        diamond_octagon, PLANE, [Placement((0, 0), 1, 0), Placement((2, 1), 0, 0)]
    )
    assert not bad.is_admissible

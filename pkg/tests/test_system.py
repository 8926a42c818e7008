from fractions import Fraction

import pytest

from tilephase.exactmath import Scaled
from tilephase.geometry import TileShape
from tilephase.system import POLICIES, Species, TileSystem

Z_CELLS = [(0, 0), (1, 0), (1, 1), (1, 2), (2, 2)]


def test_policies_are_the_documented_three():
    assert POLICIES == ("none", "rotations", "rotations+reflections")
    with pytest.raises(ValueError, match="symmetry"):
        TileSystem("bad", [Species("A", 1, TileShape.from_cells([(0, 0)]))], "mirror")


def test_constructor_validation():
    mono = Species("A", 1, TileShape.from_cells([(0, 0)]))
    with pytest.raises(ValueError, match="at least one species"):
        TileSystem("empty", [])
    with pytest.raises(ValueError, match="unique"):
        TileSystem("dup", [mono, mono])
    with pytest.raises(ValueError, match="weight"):
        TileSystem("w", [Species("A", 0, TileShape.from_cells([(0, 0)]))])
    poly = Species("P", 1, TileShape.from_polygon([(1, 0), (0, 1), (-1, 0), (0, -1)]))
    with pytest.raises(ValueError, match="mixing"):
        TileSystem("mix", [mono, poly])


def test_orientation_counts(monomino, z_pentomino, z_mixture, diamond_octagon):
    # monomino: square symmetry collapses everything to one image
    assert [len(s) for s in monomino.oriented] == [1]
    # chiral Z has C2 symmetry: four rotations collapse to two images
    assert [len(s) for s in z_pentomino.oriented] == [2]
    # both enantiomers: two images each
    assert [len(s) for s in z_mixture.oriented] == [4]
    # diamond and octagon are both C4 about their centroids: one image each
    assert [len(s) for s in diamond_octagon.oriented] == [1, 1]


def test_norm2_counts_every_oriented_image(z_pentomino, z_mixture, diamond_octagon):
    assert z_pentomino.norm2 == 2 * 5 * 5 == 50
    assert z_mixture.norm2 == 4 * 5 * 5 == 100
    assert diamond_octagon.norm2 == 1 * 2 * 2 + 1 * 7 * 7 == 53


def test_mu_is_weight_over_root_norm2(diamond_octagon):
    assert diamond_octagon.mu(0) == Scaled(Fraction(2), 53)
    assert diamond_octagon.mu(1) == Scaled(Fraction(7), 53)
    # p* v = mu for the perfect density p* = 1/sqrt(53), v = (2, 7)
    p_star = Scaled(Fraction(1), 53)
    assert p_star * 2 == diamond_octagon.mu(0)
    assert p_star * 7 == diamond_octagon.mu(1)


def test_conflict_deltas_symmetry(z_pentomino):
    ids = z_pentomino.oriented_ids
    for io in ids:
        for jp in ids:
            fwd = z_pentomino.conflict_deltas(io, jp)
            rev = z_pentomino.conflict_deltas(jp, io)
            assert fwd == frozenset((-dx, -dy) for dx, dy in rev)
            assert (0, 0) in fwd  # coinciding anchors always conflict


def test_overlap_matches_cell_intersection(z_pentomino):
    p0 = ((0, 0), 0, 0)
    # a translate by (3, 0) misses the Z; (1, 0) hits it
    assert z_pentomino.overlap(p0, ((1, 0), 0, 0))
    assert not z_pentomino.overlap(p0, ((3, 0), 0, 0))
    cells0 = z_pentomino.units_of(0, 0)
    for dx in range(-4, 5):
        for dy in range(-4, 5):
            moved = {(x + dx, y + dy) for x, y in cells0}
            hit = bool(moved & cells0) or (dx, dy) == (0, 0)
            assert z_pentomino.overlap(p0, ((dx, dy), 0, 0)) == hit


def test_interaction_radius_covers_conflicts(diamond_octagon):
    r2 = diamond_octagon.interaction_radius2
    for io in diamond_octagon.oriented_ids:
        for jp in diamond_octagon.oriented_ids:
            for dx, dy in diamond_octagon.conflict_deltas(io, jp):
                assert dx * dx + dy * dy <= r2


def test_unit_size(monomino, diamond_octagon):
    assert monomino.unit_size == 1
    assert diamond_octagon.unit_size == 4
    assert len(diamond_octagon.units_of(1, 0)) == 28  # 4 quarters per unit area


def test_reflected_z_is_not_placeable_in_single_enantiomer(z_pentomino, z_mixture):
    mirror = TileShape.from_cells(Z_CELLS).transformed((-1, 0, 0, 1))
    key, _ = mirror.translation_key()
    placeable = {
        z_pentomino.shape(i, o).translation_key()[0]
        for i, o in z_pentomino.oriented_ids
    }
    assert key not in placeable
    placeable_both = {
        z_mixture.shape(i, o).translation_key()[0]
        for i, o in z_mixture.oriented_ids
    }
    assert key in placeable_both


def test_orientation_action_closure(z_pentomino, z_mixture):
    rot = z_pentomino.group(False)[1]
    act = z_pentomino.orientation_action(rot[0], rot[1])
    assert act is not None
    assert sorted(act) == sorted(z_pentomino.oriented_ids)
    # a mirror is not an action of the single-enantiomer system ...
    mirror = z_pentomino.group(True)[4]
    assert z_pentomino.orientation_action(mirror[0], mirror[1]) is None
    # ... but is one of the full mixture
    assert z_mixture.orientation_action(mirror[0], mirror[1]) is not None

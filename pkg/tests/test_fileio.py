"""Round-trips and located errors for the delimited file formats."""

import random
from fractions import Fraction

import pytest

from tilephase.configuration import Configuration, Placement, Torus, Window
from tilephase.fileio import (
    ParseError,
    format_value,
    load_tile_system,
    parse_snapshot,
    parse_tile_system,
    render_snapshot,
    render_tile_system,
    trajectory_header,
    trajectory_row,
    write_report,
    write_trajectory,
)
from tilephase.gcmc import Observables, random_admissible
from tests.conftest import TILES

T44 = Torus(((4, 0), (0, 4)))


@pytest.mark.parametrize(
    "name",
    ["monomino", "diamond", "diamond-octagon", "z-pentomino", "z-mixture"],
)
def test_tile_system_roundtrip(name):
    system = load_tile_system(TILES / f"{name}.tiles")
    text = render_tile_system(system)
    again = parse_tile_system(text, source="rendered")
    assert again.name == system.name
    assert again.symmetry == system.symmetry
    assert again.norm2 == system.norm2
    assert [sp.name for sp in again.species] == [sp.name for sp in system.species]
    assert [sp.weight for sp in again.species] == [sp.weight for sp in system.species]
    for a, b in zip(again.species, system.species):
        if a.shape.is_polyomino:
            assert a.shape.cells == b.shape.cells
        else:
            assert a.shape.vertices == b.shape.vertices
    assert list(again.oriented_ids) == list(system.oriented_ids)


def expect_parse_error(text, line, fragment, parse=parse_tile_system, **kw):
    with pytest.raises(ParseError) as err:
        parse(text, source="probe", **kw)
    assert err.value.line == line, err.value
    assert fragment in err.value.message
    assert str(err.value).startswith(f"probe:{err.value.line}:")


def test_tile_system_parse_errors():
    expect_parse_error("", 1, "empty tile file")
    expect_parse_error("tile-system t\nspecies A weight 1\n#", 2, "symmetry")
    expect_parse_error("tile-system t\nsymmetry all\n", 2, "unknown symmetry")
    expect_parse_error(
        "tile-system t\nsymmetry none\nspecies A weight two\n#", 3, "integer"
    )
    expect_parse_error(
        "tile-system t\nsymmetry none\nspecies A weight 0\n#", 3, "positive"
    )
    expect_parse_error(
        "tile-system t\nsymmetry none\nspecies A weight 1\n#x", 4, "'#' and '.'"
    )
    expect_parse_error(
        "tile-system t\nsymmetry none\nspecies A weight 1", 3, "no shape"
    )
    expect_parse_error(
        "tile-system t\nsymmetry none\nspecies A weight 1\npolygon 0,0 1",
        4,
        "bad vertex",
    )
    duplicated = (
        "tile-system t\nsymmetry none\n"
        "species A weight 1\n#\n\nspecies A weight 1\n#"
    )
    expect_parse_error(duplicated, 7, "species names must be unique")


def test_snapshot_roundtrip_torus(diamond):
    config = random_admissible(diamond, T44, random.Random(1))
    text = render_snapshot(config)
    assert text.splitlines()[1] == "torus 4 0 4"
    again, labels = parse_snapshot(text, diamond)
    assert again == config
    assert labels is None


def test_snapshot_roundtrip_with_labels(monomino):
    window = Window.rectangle(0, 0, 4, 3)
    config = Configuration(
        monomino, window, [Placement((0, 0), 0, 0), Placement((2, 1), 0, 0)]
    )
    labels = {(0, 0): "correct", (1, 0): ("incorrect", None)}
    text = render_snapshot(config, labels)
    assert "window 0 0 4 3" in text
    again, parsed = parse_snapshot(text, monomino)
    assert again == config
    assert parsed == {(0, 0): "correct", (1, 0): "incorrect"}


def test_snapshot_needs_rectangular_window(monomino):
    ragged = Configuration(
        monomino, Window(frozenset({(0, 0), (2, 2)})), [Placement((0, 0), 0, 0)]
    )
    with pytest.raises(ValueError, match="rectangular"):
        render_snapshot(ragged)


def test_snapshot_parse_errors(monomino, diamond):
    def expect(text, line, fragment, system=monomino):
        expect_parse_error(text, line, fragment, parse=parse_snapshot, system=system)

    expect("", 1, "empty snapshot file")
    expect("snapshot other\ntorus 2 0 2", 1, "is for system 'other'")
    expect("snapshot monomino", 1, "missing domain record")
    expect("snapshot monomino\ntorus 2 2", 2, "expected 'torus a b c'")
    expect("snapshot monomino\ntorus 0 0 2", 2, "positive diagonal")
    expect("snapshot monomino\nwindow 3 0 3 5", 2, "empty")
    expect("snapshot monomino\ntorus 2 0 2\nanchor 0 0 X 0", 3, "unknown species 'X'")
    expect(
        "snapshot monomino\ntorus 2 0 2\nanchor 0 0 A 1", 3, "orientations 0..0"
    )
    expect(
        "snapshot monomino\nwindow 0 0 2 2\nanchor 5 5 A 0", 3, "outside the window"
    )
    expect(
        "snapshot monomino\ntorus 2 0 2\nanchor 0 0 A 0\nanchor 2 2 A 0",
        4,
        "repeats an earlier anchor site",
    )
    expect(
        "snapshot diamond\ntorus 4 0 4\nanchor 0 0 diamond 0\nanchor 1 0 diamond 0",
        4,
        "overlaps an earlier placement",
        system=diamond,
    )
    expect("snapshot monomino\ntorus 2 0 2\nfoo 1 2", 3, "unknown record 'foo'")
    expect(
        "snapshot monomino\ntorus 2 0 2\nlabel 0 0 maybe",
        3,
        "correct|incorrect|unknown",
    )


def test_format_value():
    assert format_value(None) == "-"
    assert format_value(Fraction(3, 2)) == "3/2"
    assert format_value(0.1) == "0.1"
    assert format_value(7) == "7"
    # floats survive the text round trip bit for bit
    x = 2 / 3
    assert float(format_value(x)) == x


def test_trajectory_io(tmp_path, diamond):
    header = trajectory_header(diamond, 1)
    assert header.split("\t") == [
        "sweep",
        "count[diamond]",
        "density",
        "correct[0]",
        "contours",
        "contour-support",
        "acc-insert",
        "acc-delete",
        "acc-swap",
    ]
    rows = [
        Observables(
            sweep=10,
            counts=(3,),
            density=3 / 16,
            fractions=(0.5,),
            contours=1,
            contour_support=4,
            acceptance=(0.25, 0.5, 0.0),
        ),
        Observables(
            sweep=20,
            counts=(4,),
            density=4 / 16,
            fractions=(),  # padded with '-' to the declared class count
            contours=None,
            contour_support=None,
            acceptance=(0.25, 0.5, 0.0),
        ),
    ]
    assert trajectory_row(rows[1], 1).split("\t")[3] == "-"
    path = tmp_path / "run.tsv"
    write_trajectory(path, diamond, rows, n_classes=1)
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    assert all(len(line.split("\t")) == len(header.split("\t")) for line in lines)
    assert float(lines[1].split("\t")[2]) == 3 / 16


def test_write_report(tmp_path):
    path = tmp_path / "report.txt"
    write_report(path, ["certified: yes", "tau: 1/25"])
    assert path.read_text() == "certified: yes\ntau: 1/25\n"

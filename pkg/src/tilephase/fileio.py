"""Plain-text file formats: tile systems, snapshots, trajectories, reports.

Tile files describe a system::

    tile-system diamond-octagon
    symmetry rotations

    species diamond weight 2
    polygon 1,0 0,1 -1,0 0,-1

    species octagon weight 7
    polygon 2,0 2,1 1,2 0,2 -1,1 -1,0 0,-1 1,-1

Polyomino species use an ASCII grid instead of a vertex list, rows printed
top to bottom ('#' = cell, '.' = empty)::

    species Z weight 5
    .##
    .#.
    ##.

Snapshot files carry a domain, one anchor record per placement, and an
optional layer of cell labels::

    snapshot diamond-octagon
    torus 6 3 3
    anchor 0 0 octagon 0
    anchor 2 2 diamond 0
    label 0 0 correct

Windows are rectangles with half-open bounds: ``window x0 y0 x1 y1``.
Anything unparseable raises `ParseError` carrying ``path:line``; a snapshot
whose placements overlap is rejected the same way, pointing at the first
offending anchor record.

Reports are line-oriented ``key: value`` text; trajectories are delimited
records, one row per sample, with ``-`` for fields that were not measured.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from .configuration import Configuration, Placement, Torus, Window
from .criteria import CORRECT, INCORRECT, UNKNOWN
from .geometry import TileShape
from .system import POLICIES, Species, TileSystem

_STATUSES = (CORRECT, INCORRECT, UNKNOWN)


class ParseError(ValueError):
    """A located syntax or consistency error in an input file."""

    def __init__(self, source: str, line: int, message: str):
        super().__init__(f"{source}:{line}: {message}")
        self.source = source
        self.line = line
        self.message = message


# ---------------------------------------------------------------------------
# tile systems
# ---------------------------------------------------------------------------


def render_tile_system(system: TileSystem) -> str:
    out = [f"tile-system {system.name}", f"symmetry {system.symmetry}"]
    for sp in system.species:
        out.append("")
        out.append(f"species {sp.name} weight {sp.weight}")
        if sp.shape.is_polyomino:
            xs = [x for x, _ in sp.shape.cells]
            ys = [y for _, y in sp.shape.cells]
            for y in range(max(ys), min(ys) - 1, -1):
                out.append(
                    "".join(
                        "#" if (x, y) in sp.shape.cells else "."
                        for x in range(min(xs), max(xs) + 1)
                    )
                )
        else:
            out.append(
                "polygon " + " ".join(f"{x},{y}" for x, y in sp.shape.vertices)
            )
    return "\n".join(out) + "\n"


def parse_tile_system(text: str, source: str = "<string>") -> TileSystem:
    lines = text.splitlines()
    pos = 0

    def err(line, message):
        raise ParseError(source, line, message)

    def next_content():
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        return lines[pos].strip() if pos < len(lines) else None

    head = next_content()
    if head is None:
        err(1, "empty tile file")
    if not head.startswith("tile-system "):
        err(pos + 1, "expected 'tile-system <name>'")
    name = head.split(None, 1)[1]
    pos += 1

    line = next_content()
    if line is None or not line.startswith("symmetry "):
        err(pos + 1, "expected 'symmetry <policy>'")
    symmetry = line.split(None, 1)[1]
    if symmetry not in POLICIES:
        err(pos + 1, f"unknown symmetry policy {symmetry!r}; "
                     f"one of {', '.join(POLICIES)}")
    pos += 1

    species = []
    while True:
        line = next_content()
        if line is None:
            break
        if not line.startswith("species "):
            err(pos + 1, "expected 'species <name> weight <w>'")
        parts = line.split()
        if len(parts) != 4 or parts[2] != "weight":
            err(pos + 1, "expected 'species <name> weight <w>'")
        sp_name = parts[1]
        try:
            weight = int(parts[3])
        except ValueError:
            err(pos + 1, f"weight must be an integer, got {parts[3]!r}")
        if weight <= 0:
            err(pos + 1, f"weight must be positive, got {weight}")
        header_line = pos + 1
        pos += 1

        body = next_content()
        if body is None:
            err(header_line, f"species {sp_name!r} has no shape")
        if body.startswith("polygon"):
            vertices = []
            for tok in body.split()[1:]:
                try:
                    x, y = tok.split(",")
                    vertices.append((int(x), int(y)))
                except ValueError:
                    err(pos + 1, f"bad vertex {tok!r}; expected 'x,y'")
            try:
                shape = TileShape.from_polygon(vertices)
            except ValueError as exc:
                err(pos + 1, str(exc))
            pos += 1
        else:
            rows = []
            first_row = pos + 1
            while pos < len(lines) and lines[pos].strip():
                row = lines[pos].strip()
                if set(row) - {"#", "."}:
                    err(pos + 1, f"grid rows use only '#' and '.', got {row!r}")
                rows.append(row)
                pos += 1
            cells = [
                (x, len(rows) - 1 - r)
                for r, row in enumerate(rows)
                for x, ch in enumerate(row)
                if ch == "#"
            ]
            if not cells:
                err(first_row, f"species {sp_name!r} has an empty grid")
            shape = TileShape.from_cells(cells)
        species.append(Species(sp_name, weight, shape))

    try:
        return TileSystem(name, species, symmetry)
    except ValueError as exc:
        err(len(lines), str(exc))


def load_tile_system(path) -> TileSystem:
    path = Path(path)
    return parse_tile_system(path.read_text(), source=str(path))


def save_tile_system(path, system: TileSystem) -> None:
    Path(path).write_text(render_tile_system(system))


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------


def render_snapshot(config: Configuration, labels: dict = None) -> str:
    out = [f"snapshot {config.system.name}"]
    domain = config.domain
    if isinstance(domain, Window):
        x0, y0, x1, y1 = domain.bbox
        if len(domain.sites) != (x1 - x0 + 1) * (y1 - y0 + 1):
            raise ValueError("only rectangular windows can be saved")
        out.append(str(domain))
    elif isinstance(domain, Torus):
        out.append(str(domain))
    else:
        raise ValueError("only torus or window snapshots can be saved")
    names = [sp.name for sp in config.system.species]
    for p in config.sorted_placements():
        out.append(f"anchor {p.site[0]} {p.site[1]} {names[p.species]} {p.orient}")
    if labels:
        for cell in sorted(labels):
            status = labels[cell]
            if isinstance(status, tuple):  # accept CellLabels.labels values
                status = status[0]
            out.append(f"label {cell[0]} {cell[1]} {status}")
    return "\n".join(out) + "\n"


def parse_snapshot(text: str, system: TileSystem, source: str = "<string>"):
    """Returns (Configuration, labels dict or None); rejects overlaps."""
    lines = text.splitlines()

    def err(line, message):
        raise ParseError(source, line, message)

    content = [
        (k + 1, ln.strip()) for k, ln in enumerate(lines) if ln.strip()
    ]
    if not content:
        err(1, "empty snapshot file")
    no, head = content[0]
    if not head.startswith("snapshot "):
        err(no, "expected 'snapshot <system name>'")
    sys_name = head.split(None, 1)[1]
    if sys_name != system.name:
        err(no, f"snapshot is for system {sys_name!r}, not {system.name!r}")
    if len(content) < 2:
        err(no, "missing domain record")

    no, dom = content[1]
    parts = dom.split()
    try:
        if parts[0] == "torus" and len(parts) == 4:
            a, b, c = map(int, parts[1:])
            if a <= 0 or c <= 0:
                err(no, "torus basis must have positive diagonal")
            domain = Torus(((a, 0), (b, c)))
        elif parts[0] == "window" and len(parts) == 5:
            x0, y0, x1, y1 = map(int, parts[1:])
            if x1 <= x0 or y1 <= y0:
                err(no, "window bounds are empty")
            domain = Window.rectangle(x0, y0, x1, y1)
        else:
            err(no, f"expected 'torus a b c' or 'window x0 y0 x1 y1', got {dom!r}")
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        err(no, f"bad domain record {dom!r}")

    index = {sp.name: i for i, sp in enumerate(system.species)}
    orient_count = [len(images) for images in system.oriented]
    placements = []
    anchor_lines = []
    anchor_sites: set = set()
    labels: dict = {}
    for no, line in content[2:]:
        parts = line.split()
        if parts[0] == "anchor":
            if len(parts) != 5:
                err(no, "expected 'anchor x y species orient'")
            try:
                x, y, o = int(parts[1]), int(parts[2]), int(parts[4])
            except ValueError:
                err(no, f"bad anchor record {line!r}")
            if parts[3] not in index:
                err(no, f"unknown species {parts[3]!r}")
            i = index[parts[3]]
            if not 0 <= o < orient_count[i]:
                err(no, f"species {parts[3]!r} has orientations "
                        f"0..{orient_count[i] - 1}, got {o}")
            if isinstance(domain, Window) and (x, y) not in domain.sites:
                err(no, f"anchor ({x}, {y}) lies outside the window")
            key = domain.reduce((x, y))
            if key in anchor_sites:
                err(no, f"anchor ({x}, {y}) repeats an earlier anchor site")
            anchor_sites.add(key)
            placements.append(Placement((x, y), i, o))
            anchor_lines.append(no)
        elif parts[0] == "label":
            if len(parts) != 4 or parts[3] not in _STATUSES:
                err(no, "expected 'label cx cy correct|incorrect|unknown'")
            try:
                labels[(int(parts[1]), int(parts[2]))] = parts[3]
            except ValueError:
                err(no, f"bad label record {line!r}")
        else:
            err(no, f"unknown record {parts[0]!r}")

    config = Configuration(system, domain, placements)
    if not config.is_admissible:
        # replay to locate the first anchor that collides
        seen: set = set()
        partial: list = []
        for p, no in zip(placements, anchor_lines):
            trial = Configuration(system, domain, partial + [p])
            key = domain.reduce(p.site)
            if key in seen or not trial.is_admissible:
                err(no, f"anchor ({p.site[0]}, {p.site[1]}) overlaps an "
                        f"earlier placement")
            seen.add(key)
            partial.append(p)
        err(anchor_lines[-1] if anchor_lines else no,
            "snapshot is not an admissible configuration")
    return config, (labels or None)


def load_snapshot(path, system: TileSystem):
    path = Path(path)
    return parse_snapshot(path.read_text(), system, source=str(path))


def save_snapshot(path, config: Configuration, labels: dict = None) -> None:
    Path(path).write_text(render_snapshot(config, labels))


# ---------------------------------------------------------------------------
# trajectories and reports
# ---------------------------------------------------------------------------


def format_value(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, Fraction):
        return str(v)  # p/q
    if isinstance(v, float):
        return repr(v)
    return str(v)


def trajectory_header(system: TileSystem, n_classes: int) -> str:
    cols = ["sweep"]
    cols += [f"count[{sp.name}]" for sp in system.species]
    cols.append("density")
    cols += [f"correct[{q}]" for q in range(n_classes)]
    cols += ["contours", "contour-support", "acc-insert", "acc-delete",
             "acc-swap"]
    return "\t".join(cols)


def trajectory_row(obs, n_classes: int = None) -> str:
    fractions = obs.fractions
    if n_classes is not None and len(fractions) != n_classes:
        fractions = fractions + (None,) * (n_classes - len(fractions))
    cells = [obs.sweep, *obs.counts, obs.density, *fractions,
             obs.contours, obs.contour_support, *obs.acceptance]
    return "\t".join(format_value(c) for c in cells)


def write_trajectory(path, system: TileSystem, rows, n_classes: int = 0) -> None:
    lines = [trajectory_header(system, n_classes)]
    lines += [trajectory_row(o, n_classes) for o in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def write_report(path, lines) -> None:
    Path(path).write_text("\n".join(lines) + "\n")

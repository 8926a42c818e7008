"""Command-line surface: enumerate, verify, simulate, analyze.

Exit codes: 0 success (and, for `verify`, fully certified); 2 uncertified;
3 unusable input (parse errors, invalid pin labels); 4 a search or
enumeration budget was exhausted before an answer was reached.

All commands are deterministic given their inputs and seed.  When `--seed`
is omitted, `simulate` draws one and prints it to stderr so the run can be
replayed.  Reports are line-oriented ``key: value`` text with exact
rationals; trajectories are tab-delimited records.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from . import fileio, gcmc, render
from .allocation import AllocationRule
from .configuration import Configuration, Placement, Torus, Window
from .criteria import (
    NoGroundStateError,
    build_supercell,
    extract_contours,
    label_cells,
    torus_cell_quotient,
    verify_system,
)
from .fileio import ParseError
from .system import TileSystem
from .tilings import enumerate_tiling_classes, enumerate_torus_tilings

OK, UNCERTIFIED, BAD_INPUT, BUDGET = 0, 2, 3, 4

_GROUP_NAMES = {
    "t": "translations",
    "t+r": "translations+rotations",
    "t+r+m": "translations+rotations+reflections",
}

_RULES = {
    "sites-l1": lambda: AllocationRule.lattice_sites("l1"),
    "sites-linf": lambda: AllocationRule.lattice_sites("linf"),
    "grid": lambda: AllocationRule.refined_grid(),
}


def _load_system(path) -> TileSystem:
    return fileio.load_tile_system(path)


def _parse_torus(values) -> Torus:
    a, b, c = values
    if a <= 0 or c <= 0:
        raise ValueError("torus basis must have positive diagonal entries")
    return Torus(((a, 0), (b, c)))


# ---------------------------------------------------------------------------
# enumerate
# ---------------------------------------------------------------------------


def cmd_enumerate(args) -> int:
    system = _load_system(args.tilefile)
    if args.torus is not None:
        torus = _parse_torus(args.torus)
        count = sum(1 for _ in enumerate_torus_tilings(system, torus))
        print(f"{count} tilings of {torus}")
        return OK
    classes = enumerate_tiling_classes(
        system, args.size_bound, group=args.group, threads=args.threads
    )
    print(f"{len(classes)} classes ({_GROUP_NAMES[args.group]})")
    for k, cls in enumerate(classes):
        (a, _), (b, c) = cls.periodicity
        print(f"class {k}: periodicity {a} {b} {c} index {cls.index}")
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        for k, cls in enumerate(classes):
            cfg = cls.configuration(system)
            fileio.save_snapshot(outdir / f"class-{k}.snapshot", cfg)
        print(f"wrote {len(classes)} snapshots to {outdir}")
    return OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(args) -> int:
    system = _load_system(args.tilefile)
    rule = _RULES[args.rule]() if args.rule else None
    classes = enumerate_tiling_classes(
        system, args.size_bound, group="t", threads=args.threads
    )
    try:
        report = verify_system(
            system, classes, rule=rule, max_n=args.n_max, budget=args.budget
        )
    except NoGroundStateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return UNCERTIFIED
    lines = report.lines()
    print("\n".join(lines))
    if args.report:
        fileio.write_report(args.report, lines)
    if report.certified:
        return OK
    hit_budget = report.screening_ok is None or any(
        "cap" in rep.status or "budget" in rep.status
        for rep in report.local_reports
    )
    return BUDGET if hit_budget else UNCERTIFIED


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _pinned_setup(system, grid, variant, x0, y0, x1, y1):
    """Free rectangle plus a perfect collar wide enough to screen it.

    Incorrect cells can only appear within one ring of the cells holding
    free sites; growing that set by three rings (in cell coordinates, which
    absorbs the shear of the cell lattice) keeps every possibly-incorrect
    cell fully labeled, so contour extraction stays well defined.
    """
    free = Window.rectangle(x0, y0, x1, y1)
    cells = {grid.cell_of(s) for s in free.sites}
    region = {
        (cx + dx, cy + dy)
        for cx, cy in cells
        for dx in range(-3, 4)
        for dy in range(-3, 4)
    }
    sites = [s for cell in region for s in grid.sites_of_cell(cell)]
    bx0 = min(x for x, _ in sites)
    bx1 = max(x for x, _ in sites) + 1
    by0 = min(y for _, y in sites)
    by1 = max(y for _, y in sites) + 1
    bbox = Window.rectangle(bx0, by0, bx1, by1)
    ci, shift = variant
    pinned = []
    for x in range(bx0, bx1):
        for y in range(by0, by1):
            if (x, y) in free.sites:
                continue
            io = grid.perfect_at(ci, shift, (x, y))
            if io is not None:
                pinned.append(Placement((x, y), io[0], io[1]))
    return free, pinned, bbox


def cmd_simulate(args) -> int:
    system = _load_system(args.tilefile)
    seed = args.seed
    if seed is None:
        seed = random.SystemRandom().randrange(1 << 63)
        print(f"seed: {seed}", file=sys.stderr)

    grid = None
    if args.pinned is not None or args.grid:
        classes = enumerate_tiling_classes(
            system, args.size_bound, group="t", threads=args.threads
        )
        try:
            grid = build_supercell(system, classes)
        except NoGroundStateError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return BAD_INPUT

    pinned: tuple = ()
    bbox = None
    if args.pinned is not None:
        if not 0 <= args.pinned < len(grid.classes):
            print(
                f"error: pin label {args.pinned} out of range "
                f"(0..{len(grid.classes) - 1})",
                file=sys.stderr,
            )
            return BAD_INPUT
        w, h = args.window
        free, pinned, bbox = _pinned_setup(
            system, grid, (args.pinned, (0, 0)), 0, 0, w, h
        )
        domain = free
    else:
        domain = _parse_torus(args.torus)
        if grid is not None:
            try:
                torus_cell_quotient(grid, domain)
            except ValueError:
                print(
                    "note: torus is not commensurate with the supercell grid; "
                    "correctness fractions are not measured",
                    file=sys.stderr,
                )
                grid = None

    params = gcmc.SimParams(
        system=system,
        domain=domain,
        beta=args.beta,
        sweeps=args.sweeps,
        burn_in=args.burn_in,
        sample_interval=args.sample_interval,
        seed=seed,
        swap_moves=args.swap_moves,
        pinned=frozenset(pinned),
        grid=grid,
        label_window=bbox,
    )
    result = gcmc.run(params)

    n_classes = len(grid.classes) if grid is not None else 0
    rows = [fileio.trajectory_header(system, n_classes)]
    rows += [fileio.trajectory_row(o, n_classes) for o in result.trajectory]
    text = "\n".join(rows) + "\n"
    if args.trajectory:
        Path(args.trajectory).write_text(text)
    else:
        sys.stdout.write(text)

    snapshot = result.snapshot
    if bbox is not None:
        # persist the whole pinned picture on its rectangular bounding box
        snapshot = Configuration(
            system, bbox, set(snapshot.placements) | set(pinned)
        )
    labels = None
    if grid is not None:
        labels = label_cells(snapshot, grid)
    if args.snapshot:
        fileio.save_snapshot(
            args.snapshot, snapshot, labels.labels if labels else None
        )
    if args.svg:
        render.save_snapshot_svg(args.svg, snapshot, labels, grid)
    if args.figure:
        render.trajectory_figure(args.figure, system, result.trajectory, n_classes)
    return OK


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    system = _load_system(args.tilefile)
    config, _stored = fileio.load_snapshot(args.snapshotfile, system)
    classes = enumerate_tiling_classes(
        system, args.size_bound, group="t", threads=args.threads
    )
    try:
        grid = build_supercell(system, classes)
    except NoGroundStateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT
    if isinstance(config.domain, Torus):
        try:
            torus_cell_quotient(grid, config.domain)
        except ValueError:
            print(
                "error: snapshot torus is not commensurate with the "
                "supercell grid",
                file=sys.stderr,
            )
            return BAD_INPUT
    labels = label_cells(config, grid)
    lines = [
        f"system: {system.name}",
        f"domain: {config.domain}",
        f"anchors: {len(config)}",
        f"cells: {len(labels.labels)}",
    ]
    for status in ("correct", "incorrect", "unknown"):
        lines.append(f"{status}: {labels.count(status)}")
    for ci in range(len(grid.classes)):
        lines.append(f"correct-fraction[{ci}]: {labels.correct_fraction(ci)}")
    try:
        contours = extract_contours(labels, grid)
        lines.append(f"contours: {len(contours)}")
        lines.append(f"contour-support: {sum(c.size for c in contours)}")
        for j, contour in enumerate(contours):
            lines.append(
                f"contour[{j}]: size {contour.size} "
                f"interior {len(contour.interior)}"
            )
    except ValueError as exc:
        contours = None
        lines.append(f"contours: not separable ({exc})")
    print("\n".join(lines))
    if args.report:
        fileio.write_report(args.report, lines)
    if args.svg:
        render.save_snapshot_svg(args.svg, config, labels, grid)
    if args.figure:
        counts = {
            s: labels.count(s) for s in ("correct", "incorrect", "unknown")
        }
        sizes = [c.size for c in contours] if contours else []
        render.analysis_figure(args.figure, counts, sizes)
    return OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tilephase",
        description="Hard-core tile systems: tiling enumeration, volume "
        "allocation certificates, and grand-canonical Monte Carlo.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="count tiling classes of a system")
    p.add_argument("tilefile")
    p.add_argument("--torus", type=int, nargs=3, metavar=("A", "B", "C"),
                   help="count exact covers of one torus ((a,0),(b,c)) instead")
    p.add_argument("--size-bound", type=int, default=36,
                   help="max periodicity index for the class sweep")
    p.add_argument("--group", choices=sorted(_GROUP_NAMES), default="t+r")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="directory for class representative snapshots")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("verify", help="run the full certificate chain")
    p.add_argument("tilefile")
    p.add_argument("--rule", choices=sorted(_RULES),
                   help="allocation rule (default: natural for the tile kind)")
    p.add_argument("--n-max", type=int, default=4)
    p.add_argument("--size-bound", type=int, default=36)
    p.add_argument("--budget", type=int, default=2_000_000,
                   help="node budget for the covering search")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--report", help="also write the report to this path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="grand-canonical Monte Carlo")
    p.add_argument("tilefile")
    p.add_argument("--beta", type=float, required=True)
    dom = p.add_mutually_exclusive_group(required=True)
    dom.add_argument("--torus", type=int, nargs=3, metavar=("A", "B", "C"))
    dom.add_argument("--pinned", type=int, metavar="Q",
                     help="pin a window's collar to perfect class Q")
    p.add_argument("--window", type=int, nargs=2, default=(12, 12),
                   metavar=("W", "H"), help="free window size for --pinned")
    p.add_argument("--sweeps", type=int, default=200)
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--sample-interval", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--swap-moves", action="store_true",
                   help="experimental same-anchor species swaps")
    p.add_argument("--grid", action="store_true",
                   help="measure correctness fractions on torus runs")
    p.add_argument("--size-bound", type=int, default=36)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--trajectory", help="write delimited records here "
                                        "(default: stdout)")
    p.add_argument("--snapshot", help="write the final snapshot here")
    p.add_argument("--svg", help="render the final snapshot to SVG")
    p.add_argument("--figure", help="render trajectory curves to this image")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="label cells and extract contours")
    p.add_argument("snapshotfile")
    p.add_argument("tilefile")
    p.add_argument("--size-bound", type=int, default=36)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--report", help="also write the report to this path")
    p.add_argument("--svg", help="render the labeled snapshot to SVG")
    p.add_argument("--figure", help="render label/contour statistics")
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Snapshot drawings (SVG) and report figures (PNG via matplotlib).

The SVG writer is plain string assembly — no drawing library — so identical
inputs give byte-identical files.  Tiles are colored by oriented species;
cells marked incorrect are overlaid with a diagonal hatch.  Torus snapshots
draw wrapped copies of every tile and clip to the fundamental domain, so
the picture tiles seamlessly.

The matplotlib figures accompany the delimited trajectory/report output of
the command-line tools; they use the object-oriented Agg canvas directly
and never touch pyplot state.
"""

from __future__ import annotations

from .configuration import Configuration, Torus, Window
from .criteria import INCORRECT, SupercellGrid

_PALETTE = (
    "#4878a8", "#e49444", "#6aa56e", "#d1605e",
    "#9067a7", "#a87c9f", "#c8b974", "#7fa8c9",
)


def _fmt(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


def _polygon_points(vertices) -> str:
    return " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in vertices)


def _tile_vertices(system, p):
    shape = system.shape(p.species, p.orient)
    if shape.is_polyomino:
        return None  # drawn cell by cell
    return [(x + p.site[0], y + p.site[1]) for x, y in shape.vertices]


def _cell_squares(system, p):
    shape = system.shape(p.species, p.orient)
    return [(x + p.site[0], y + p.site[1]) for x, y in shape.cells]


def snapshot_svg(config: Configuration, labels=None, grid: SupercellGrid = None,
                 scale: int = 24) -> str:
    """Render a configuration (torus or window) as an SVG document.

    ``labels`` may be a `CellLabels` or a plain dict cell -> status; with a
    ``grid`` supplied, incorrect cells get a hatched overlay.
    """
    system = config.system
    domain = config.domain
    wraps = [(0, 0)]
    if isinstance(domain, Torus):
        (a, _), (b, c) = domain.basis
        corners = [(0, 0), (a, 0), (a + b, c), (b, c)]
        for s in (-1, 0, 1):
            for t in (-1, 0, 1):
                if (s, t) != (0, 0):
                    wraps.append((s * a + t * b, t * c))
    elif isinstance(domain, Window):
        x0, y0, x1, y1 = domain.bbox
        corners = [(x0, y0), (x1 + 1, y0), (x1 + 1, y1 + 1), (x0, y1 + 1)]
        if not system.is_polyomino:
            # polygon tiles extend around their anchors
            corners = [(x0 - 2, y0 - 2), (x1 + 2, y0 - 2),
                       (x1 + 2, y1 + 2), (x0 - 2, y1 + 2)]
    else:
        raise ValueError("only torus or window snapshots can be drawn")

    minx = min(x for x, _ in corners)
    maxx = max(x for x, _ in corners)
    miny = min(y for _, y in corners)
    maxy = max(y for _, y in corners)
    width = (maxx - minx) * scale
    height = (maxy - miny) * scale

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        "<defs>",
        '<pattern id="hatch" patternUnits="userSpaceOnUse" width="0.4" '
        'height="0.4" patternTransform="rotate(45)">'
        '<rect width="0.4" height="0.16" fill="#202020" opacity="0.45"/>'
        "</pattern>",
        f'<clipPath id="domain"><polygon points='
        f'"{_polygon_points(corners)}"/></clipPath>',
        "</defs>",
        # the clip lives on an inner group: user-space clip coordinates
        # resolve in the space the referencing element inherits, so the
        # transform must already be in effect
        f'<g transform="translate({_fmt(-minx * scale)},{_fmt(maxy * scale)}) '
        f'scale({scale},-{scale})">',
        '<g clip-path="url(#domain)">',
        f'<polygon points="{_polygon_points(corners)}" fill="#f4f1ea"/>',
    ]

    oriented_index = {io: k for k, io in enumerate(system.oriented_ids)}
    for p in config.sorted_placements():
        color = _PALETTE[oriented_index[(p.species, p.orient)] % len(_PALETTE)]
        for dx, dy in wraps:
            if system.is_polyomino:
                for x, y in _cell_squares(system, p):
                    out.append(
                        f'<rect x="{_fmt(x + dx)}" y="{_fmt(y + dy)}" '
                        f'width="1" height="1" fill="{color}" '
                        f'stroke="#30302c" stroke-width="0.05"/>'
                    )
            else:
                pts = [(x + dx, y + dy) for x, y in _tile_vertices(system, p)]
                out.append(
                    f'<polygon points="{_polygon_points(pts)}" '
                    f'fill="{color}" stroke="#30302c" stroke-width="0.05"/>'
                )

    if labels is not None and grid is not None:
        items = labels.labels.items() if hasattr(labels, "labels") else labels.items()
        (r1x, r1y), (r2x, r2y) = grid.basis
        shift = 0.0 if system.is_polyomino else -0.5
        for cell, value in sorted(items):
            status = value[0] if isinstance(value, tuple) else value
            if status != INCORRECT:
                continue
            ox, oy = grid.cell_origin(cell)
            ox += shift
            oy += shift
            cell_pts = [
                (ox, oy), (ox + r1x, oy + r1y),
                (ox + r1x + r2x, oy + r1y + r2y), (ox + r2x, oy + r2y),
            ]
            for dx, dy in wraps:
                pts = [(x + dx, y + dy) for x, y in cell_pts]
                out.append(
                    f'<polygon points="{_polygon_points(pts)}" '
                    f'fill="url(#hatch)" stroke="#9a2f2f" '
                    f'stroke-width="0.08"/>'
                )

    out.append("</g>")
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save_snapshot_svg(path, config, labels=None, grid=None, scale=24) -> None:
    from pathlib import Path

    Path(path).write_text(snapshot_svg(config, labels, grid, scale))


# ---------------------------------------------------------------------------
# matplotlib report figures
# ---------------------------------------------------------------------------


def _new_figure(size):
    from matplotlib.backends.backend_agg import FigureCanvasAgg
    from matplotlib.figure import Figure

    fig = Figure(figsize=size)
    FigureCanvasAgg(fig)
    return fig


def trajectory_figure(path, system, rows, n_classes: int = 0) -> None:
    """Density/count traces and, when measured, correctness fractions."""
    fig = _new_figure((7.0, 5.0))
    ax1, ax2 = fig.subplots(2, 1, sharex=True)
    sweeps = [o.sweep for o in rows]
    ax1.plot(sweeps, [o.density for o in rows], color="#30302c",
             label="anchor density")
    for i, sp in enumerate(system.species):
        top = max((o.counts[i] for o in rows), default=0)
        ax1.plot(sweeps, [o.counts[i] / top if top else 0.0 for o in rows],
                 color=_PALETTE[i % len(_PALETTE)], alpha=0.7,
                 label=f"{sp.name} count (scaled)")
    ax1.set_ylabel("density")
    ax1.legend(loc="best", fontsize=8)
    drew = False
    for q in range(n_classes):
        series = [o.fractions[q] if len(o.fractions) > q else None for o in rows]
        if any(v is not None for v in series):
            ax2.plot(sweeps, [v if v is not None else float("nan") for v in series],
                     color=_PALETTE[q % len(_PALETTE)], label=f"correct[{q}]")
            drew = True
    if not drew:
        ax2.text(0.5, 0.5, "no cell labels (no grid)", ha="center",
                 va="center", transform=ax2.transAxes, fontsize=9)
    ax2.set_xlabel("sweep")
    ax2.set_ylabel("correct fraction")
    if drew:
        ax2.set_ylim(-0.05, 1.05)
        ax2.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def analysis_figure(path, label_counts: dict, contour_sizes) -> None:
    """Cell-status totals and the contour support-size histogram."""
    fig = _new_figure((7.0, 3.2))
    ax1, ax2 = fig.subplots(1, 2)
    names = sorted(label_counts)
    ax1.bar(range(len(names)), [label_counts[n] for n in names],
            color="#4878a8")
    ax1.set_xticks(range(len(names)), names)
    ax1.set_ylabel("cells")
    contour_sizes = list(contour_sizes)
    if contour_sizes:
        top = max(contour_sizes)
        ax2.hist(contour_sizes, bins=range(1, top + 2), color="#d1605e",
                 rwidth=0.9)
    else:
        ax2.text(0.5, 0.5, "no contours", ha="center", va="center",
                 transform=ax2.transAxes, fontsize=9)
    ax2.set_xlabel("contour support size")
    ax2.set_ylabel("contours")
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def scaling_figure(path, points, slope: float) -> None:
    """Log-log defect probability against activity with the fitted slope."""
    fig = _new_figure((4.8, 3.6))
    ax = fig.subplots()
    xs = [x for x, _ in points]
    ys = [y for _, y in points]
    ax.plot(xs, ys, "o", color="#4878a8")
    x0, x1 = min(xs), max(xs)
    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    ax.plot([x0, x1], [ybar + slope * (x0 - xbar), ybar + slope * (x1 - xbar)],
            "-", color="#d1605e", label=f"slope {slope:.3f}")
    ax.set_xlabel("log z")
    ax.set_ylabel("log P(defect)")
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)

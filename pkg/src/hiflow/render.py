"""Static SVG rendering of curve snapshots."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .diagnostics import fit_circle
from .errors import DegenerateCurveError
from .geometry import DiscreteCurve, read_snapshot

MARGIN = 0.05


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def svg_document(curve: DiscreteCurve, *, stroke: str = "black", stroke_width: float | None = None,
                 overlay_circle: bool = False, size: int = 512) -> str:
    """SVG text for one closed curve, y axis pointing up.

    The viewBox spans the vertex bounds plus a 5% margin on each side. With
    ``overlay_circle`` the least-squares circle is drawn dashed on top.
    """
    pts = np.column_stack([curve.vertices[:, 0], -curve.vertices[:, 1]])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = MARGIN * max(float(np.max(hi - lo)), 1e-300)
    x0, y0 = lo - pad
    w, h = hi - lo + 2 * pad
    if stroke_width is None:
        stroke_width = 0.004 * max(w, h)
    d = "M " + " L ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in pts) + " Z"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(w)} {_fmt(h)}">',
        f'<path d="{d}" fill="none" stroke="{stroke}" stroke-width="{_fmt(stroke_width)}"/>',
    ]
    if overlay_circle:
        try:
            center, radius, _ = fit_circle(curve)
        except DegenerateCurveError:
            pass
        else:
            parts.append(
                f'<circle class="fit" cx="{_fmt(center[0])}" cy="{_fmt(-center[1])}" r="{_fmt(radius)}" '
                f'fill="none" stroke="red" stroke-width="{_fmt(stroke_width)}" '
                f'stroke-dasharray="{_fmt(4 * stroke_width)} {_fmt(3 * stroke_width)}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_svg(snapshot, out, *, stroke: str = "black", stroke_width: float | None = None,
               overlay_circle: bool = False, size: int = 512) -> Path:
    """Render a snapshot file to ``out``. Raises SnapshotParseError on bad input."""
    curve, _ = read_snapshot(snapshot)
    out = Path(out)
    out.write_text(svg_document(curve, stroke=stroke, stroke_width=stroke_width,
                                overlay_circle=overlay_circle, size=size), newline="\n")
    return out

"""Dependency-free SVG rendering of reconstruction overlays.

The figure is drawn in millimeter coordinates (y up) on a 10 mm grid:
ground-truth markers and their polyline in gray, the interpolated body shape
as a blue path, predicted markers as red circles.  Output is a pure function
of the inputs, so identical scans produce byte-identical files.
"""

from __future__ import annotations

import numpy as np

_SCALE = 4.0  # px per mm
_GRID_MM = 10.0


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    """Maps mm world coordinates onto the flipped SVG pixel frame."""

    def __init__(self, points: np.ndarray, pad_mm: float = 12.0):
        x_min, y_min = points.min(axis=0) - pad_mm
        x_max, y_max = points.max(axis=0) + pad_mm
        self.x0 = np.floor(x_min / _GRID_MM) * _GRID_MM
        self.y0 = np.floor(y_min / _GRID_MM) * _GRID_MM
        self.x1 = np.ceil(x_max / _GRID_MM) * _GRID_MM
        self.y1 = np.ceil(y_max / _GRID_MM) * _GRID_MM
        self.width = (self.x1 - self.x0) * _SCALE
        self.height = (self.y1 - self.y0) * _SCALE

    def px(self, point) -> tuple[float, float]:
        x, y = float(point[0]), float(point[1])
        return (x - self.x0) * _SCALE, (self.y1 - y) * _SCALE

    def path(self, points) -> str:
        coords = [self.px(p) for p in points]
        steps = [f"{'M' if i == 0 else 'L'} {_fmt(x)} {_fmt(y)}" for i, (x, y) in enumerate(coords)]
        return " ".join(steps)


def reconstruction_svg(
    predicted_markers,
    shape_points,
    truth_markers=None,
    base=(0.0, 0.0),
    title: str = "CDM shape reconstruction",
) -> str:
    """Render the overlay and return the SVG document as a string."""
    predicted = np.asarray(predicted_markers, dtype=float).reshape(-1, 2)
    shape = np.asarray(shape_points, dtype=float).reshape(-1, 2)
    base_pt = np.asarray(base, dtype=float).reshape(1, 2)
    everything = [predicted, shape, base_pt]
    truth = None
    if truth_markers is not None:
        truth = np.asarray(truth_markers, dtype=float).reshape(-1, 2)
        everything.append(truth)
    canvas = _Canvas(np.vstack(everything))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(canvas.width)}" '
        f'height="{_fmt(canvas.height)}" viewBox="0 0 {_fmt(canvas.width)} {_fmt(canvas.height)}">',
        f"<title>{title}</title>",
        '<rect width="100%" height="100%" fill="white"/>',
    ]

    # 10 mm grid with axis labels on the gridline intersections of the border.
    grid = ['<g stroke="#dddddd" stroke-width="1">']
    labels = ['<g font-family="monospace" font-size="10" fill="#888888">']
    x = canvas.x0
    while x <= canvas.x1 + 1e-9:
        px, _ = canvas.px((x, canvas.y0))
        grid.append(f'<line x1="{_fmt(px)}" y1="0" x2="{_fmt(px)}" y2="{_fmt(canvas.height)}"/>')
        labels.append(f'<text x="{_fmt(px + 2)}" y="{_fmt(canvas.height - 3)}">{x:.0f}</text>')
        x += _GRID_MM
    y = canvas.y0
    while y <= canvas.y1 + 1e-9:
        _, py = canvas.px((canvas.x0, y))
        grid.append(f'<line x1="0" y1="{_fmt(py)}" x2="{_fmt(canvas.width)}" y2="{_fmt(py)}"/>')
        labels.append(f'<text x="3" y="{_fmt(py - 2)}">{y:.0f}</text>')
        y += _GRID_MM
    grid.append("</g>")
    labels.append("</g>")
    parts += grid + labels

    if truth is not None:
        truth_line = np.vstack([base_pt, truth])
        parts.append(
            f'<path d="{canvas.path(truth_line)}" fill="none" stroke="#777777" '
            'stroke-width="2" stroke-dasharray="6 4"/>'
        )
        for p in truth:
            px, py = canvas.px(p)
            parts.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="4" fill="none" stroke="#777777" stroke-width="2"/>')

    shape_line = np.vstack([base_pt, shape])
    parts.append(
        f'<path d="{canvas.path(shape_line)}" fill="none" stroke="#1f6fdf" stroke-width="2"/>'
    )
    for p in predicted:
        px, py = canvas.px(p)
        parts.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="3" fill="#d62728"/>')
    bx, by = canvas.px(base_pt[0])
    parts.append(f'<rect x="{_fmt(bx - 4)}" y="{_fmt(by - 4)}" width="8" height="8" fill="#222222"/>')

    legend = [
        ("#777777", "ground truth markers"),
        ("#1f6fdf", "reconstructed shape"),
        ("#d62728", "predicted markers"),
    ]
    for i, (color, text) in enumerate(legend):
        ly = 16 + 14 * i
        parts.append(f'<rect x="{_fmt(canvas.width - 190)}" y="{ly - 8}" width="10" height="10" fill="{color}"/>')
        parts.append(
            f'<text x="{_fmt(canvas.width - 175)}" y="{ly}" font-family="monospace" '
            f'font-size="11" fill="#333333">{text}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

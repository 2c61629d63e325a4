"""Plot-ready datasets for the four preset figure views.

Views 6, 7 and 8 are per-angle sixteen-bar outcome tables (6: theta = 45;
7: theta in {0, 20, 40}; 8: theta in {50, 70, 90}).  View 9 is the scatter
of observed probability against flip probability for the four minimal
outcomes over a theta grid, together with its straight-line fit.  Output is
CSV data or a small self-contained SVG; both are deterministic for a fixed
configuration and seed.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .core import TwoQubitState, VisibilityPair
from .sim import (
    ALL_OUTCOMES,
    Outcome,
    b_value,
    joint_distribution,
    probabilities_from_counts,
    sample_counts,
)
from .analysis import MINIMAL_OUTCOMES, FitResult, fit_bell_magnitude, pbflip_outcome

FIGURE_THETAS: dict[int, tuple[float, ...]] = {
    6: (45.0,),
    7: (0.0, 20.0, 40.0),
    8: (50.0, 70.0, 90.0),
}

FIT_GRID: tuple[float, ...] = tuple(float(t) for t in range(0, 91, 10))


def _vis(theta_deg: float) -> VisibilityPair:
    t = math.radians(theta_deg)
    return VisibilityPair(vx=abs(math.cos(t)), vy=abs(math.sin(t)))


def distribution_rows(
    state: TwoQubitState,
    theta_deg: float,
    mean_total: float | None = None,
    seed: int | None = None,
) -> list[dict]:
    """Sixteen outcome rows at one trade-off angle, optionally with sampled
    counts and count-derived probabilities."""
    dist = joint_distribution(state, theta_deg, theta_deg)
    counts = None
    observed = None
    if seed is not None and mean_total is not None:
        table = sample_counts(dist, mean_total, seed=seed)
        counts = table.counts
        observed, _ = probabilities_from_counts(table)
    rows = []
    for m in ALL_OUTCOMES:
        row = {
            "theta_deg": theta_deg,
            "x_a": m.x_a,
            "y_a": m.y_a,
            "x_b": m.x_b,
            "y_b": m.y_b,
            "b": b_value(m),
            "probability": dist.probs[m],
        }
        if counts is not None:
            row["counts"] = counts[m]
            row["p_obs"] = observed.probs[m]
        rows.append(row)
    return rows


def line_points(
    state: TwoQubitState,
    thetas: tuple[float, ...] = FIT_GRID,
    mean_total: float | None = None,
    seed: int | None = None,
) -> tuple[list[dict], FitResult]:
    """(p_bflip, probability) points for the minimal outcomes plus their
    straight-line fit (view 9)."""
    points = []
    for index, theta in enumerate(thetas):
        vis = _vis(theta)
        dist = joint_distribution(state, theta, theta)
        table = None
        if seed is not None and mean_total is not None:
            table = sample_counts(dist, mean_total, seed=seed ^ index)
            observed, errors = probabilities_from_counts(table)
        for m in MINIMAL_OUTCOMES:
            point = {
                "theta_deg": theta,
                "x_a": m.x_a,
                "y_a": m.y_a,
                "x_b": m.x_b,
                "y_b": m.y_b,
                "p_bflip": pbflip_outcome(m, vis, vis),
                "probability": dist.probs[m],
            }
            if table is not None:
                point["p_obs"] = observed.probs[m]
                point["std_err"] = errors[m]
            points.append(point)
    if points and "p_obs" in points[0]:
        fit = fit_bell_magnitude(
            [(p["p_bflip"], p["p_obs"], p["std_err"]) for p in points]
        )
    else:
        fit = fit_bell_magnitude([(p["p_bflip"], p["probability"]) for p in points])
    return points, fit


# ---------------------------------------------------------------------------
# Minimal deterministic SVG rendering (bars and scatter).
# ---------------------------------------------------------------------------

_W, _H = 640, 400
_MARGIN = 55
_BAR_FILL = {2: "#e6b800", -2: "#3a9d46"}  # b=+2 amber, b=-2 green


def _svg_document(body: list[str], title: str) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">'
    )
    caption = (
        f'<text x="{_W / 2}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{escape(title)}</text>'
    )
    return "\n".join([head, caption, *body, "</svg>"]) + "\n"


def _axes(x_label: str, y_label: str) -> list[str]:
    return [
        f'<line x1="{_MARGIN}" y1="{_H - _MARGIN}" x2="{_W - 15}" y2="{_H - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_H - _MARGIN}" x2="{_MARGIN}" y2="30" stroke="black"/>',
        f'<text x="{_W / 2}" y="{_H - 8}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{escape(x_label)}</text>',
        f'<text x="14" y="{_H / 2}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 14 {_H / 2})">{escape(y_label)}</text>',
    ]


def bars_svg(rows: list[dict], title: str) -> str:
    values = [row.get("p_obs", row["probability"]) for row in rows]
    top = max(max(values), 1e-12)
    plot_w = _W - _MARGIN - 15
    plot_h = _H - _MARGIN - 30
    slot = plot_w / len(rows)
    body = _axes("outcome (x_A, y_A; x_B, y_B)", "probability")
    body.append(
        f'<text x="{_MARGIN - 5}" y="34" text-anchor="end" font-family="sans-serif" '
        f'font-size="10">{top:.4g}</text>'
    )
    for i, (row, value) in enumerate(zip(rows, values)):
        h = max(value, 0.0) / top * plot_h
        x = _MARGIN + i * slot + 0.15 * slot
        y = _H - _MARGIN - h
        label = Outcome(row["x_a"], row["y_a"], row["x_b"], row["y_b"]).label()
        body.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{0.7 * slot:.2f}" height="{h:.2f}" '
            f'fill="{_BAR_FILL[row["b"]]}"><title>{escape(label)}</title></rect>'
        )
        cx = _MARGIN + (i + 0.5) * slot
        body.append(
            f'<text x="{cx:.2f}" y="{_H - _MARGIN + 10}" text-anchor="end" '
            f'font-family="sans-serif" font-size="8" '
            f'transform="rotate(-60 {cx:.2f} {_H - _MARGIN + 10})">{escape(label)}</text>'
        )
    return _svg_document(body, title)


def scatter_svg(points: list[dict], fit: FitResult, title: str) -> str:
    xs = [p["p_bflip"] for p in points]
    ys = [p.get("p_obs", p["probability"]) for p in points]
    x_lo, x_hi = 0.0, max(xs) * 1.05
    y_lo, y_hi = min(0.0, min(ys), fit.intercept) * 1.1, max(ys) * 1.1
    plot_w = _W - _MARGIN - 15
    plot_h = _H - _MARGIN - 30

    def px(x: float) -> float:
        return _MARGIN + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return _H - _MARGIN - (y - y_lo) / (y_hi - y_lo) * plot_h

    body = _axes("p_bflip", "probability")
    for x, label in ((x_lo, f"{x_lo:.2g}"), (x_hi, f"{x_hi:.3g}")):
        body.append(
            f'<text x="{px(x):.2f}" y="{_H - _MARGIN + 14}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{escape(label)}</text>'
        )
    for y in (y_lo, 0.0, y_hi):
        body.append(
            f'<text x="{_MARGIN - 5}" y="{py(y):.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{y:.3g}</text>'
        )
    if y_lo < 0.0 < y_hi:
        body.append(
            f'<line x1="{_MARGIN}" y1="{py(0.0):.2f}" x2="{_W - 15}" y2="{py(0.0):.2f}" '
            f'stroke="#999999" stroke-dasharray="4 3"/>'
        )
    body.append(
        f'<line x1="{px(x_lo):.2f}" y1="{py(fit.intercept + fit.slope * x_lo):.2f}" '
        f'x2="{px(x_hi):.2f}" y2="{py(fit.intercept + fit.slope * x_hi):.2f}" '
        f'stroke="#1f5bd8" stroke-width="1.5"/>'
    )
    for x, y in zip(xs, ys):
        body.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="#c03028"/>')
    body.append(
        f'<text x="{_W - 20}" y="40" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">slope {fit.slope:.5f}, intercept {fit.intercept:.5f}</text>'
    )
    return _svg_document(body, title)

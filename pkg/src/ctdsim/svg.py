"""Plain-SVG renderings of simulation data: the contact-matrix heatmap and
per-segment snapshots of the map. Output is deterministic text."""

from __future__ import annotations

from .device import AnonymousId
from .mobility import MINUTES_PER_DAY, Scenario, place, segment_for_time
from .registry import HealthStatus
from .tracing import RiskLabeling

STATUS_COLOURS = {
    HealthStatus.NOT_AT_RISK: "#2ca02c",
    HealthStatus.AT_RISK: "#1f77b4",
    HealthStatus.INFECTED: "#d62728",
}


def _clock(minute: int) -> str:
    day, m = divmod(minute, MINUTES_PER_DAY)
    return f"day {day + 1} {m // 60:02d}:{m % 60:02d}"


def _ramp(frac: float) -> str:
    # light yellow (early) to dark red (late)
    r = round(255 - 100 * frac)
    g = round(237 - 220 * frac)
    b = round(160 - 140 * frac)
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(ids: list[AnonymousId], matrix: list[list[int | None]], cell: int = 24) -> str:
    n = len(ids)
    margin = 90
    size = margin + n * cell + 10
    values = [v for row in matrix for v in row if v is not None]
    lo, hi = (min(values), max(values)) if values else (0, 1)
    span = max(hi - lo, 1)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 20}" '
           f'font-family="monospace" font-size="9">',
           f'<text x="4" y="12">first-contact minute: {lo} (light) .. {hi} (dark)</text>']
    for i, a in enumerate(ids):
        y = margin + i * cell
        out.append(f'<text x="4" y="{y + cell * 0.65:.1f}">{a[:8]}</text>')
        out.append(f'<text x="{margin + i * cell + 2}" y="{margin - 6}" '
                   f'transform="rotate(-60 {margin + i * cell + 2} {margin - 6})">{a[:8]}</text>')
    out.append(f'<rect x="{margin}" y="{margin}" width="{n * cell}" height="{n * cell}" '
               f'fill="#ffffff" stroke="#999999"/>')
    for i, row in enumerate(matrix):
        for j, v in enumerate(row):
            if v is None:
                continue
            out.append(f'<rect x="{margin + j * cell}" y="{margin + i * cell}" width="{cell}" '
                       f'height="{cell}" fill="{_ramp((v - lo) / span)}"><title>{v}</title></rect>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _status_at(labels: RiskLabeling, pid: AnonymousId, minute: int) -> HealthStatus:
    lab = labels.get(pid)
    if lab is None or lab.step is None or lab.step > minute:
        return HealthStatus.NOT_AT_RISK
    return lab.status


def snapshots_svg(scenario: Scenario, labels: RiskLabeling, day_index: int = 0,
                  minutes: tuple[int, ...] = (10 * 60, 18 * 60 + 30, 22 * 60),
                  width: int = 480) -> str:
    """One panel per time snap: walls in black, people coloured by status."""
    xs = [v for z in scenario.zones for v in (z.bounds[0], z.bounds[2])] or [0.0, 1.0]
    ys = [v for z in scenario.zones for v in (z.bounds[1], z.bounds[3])] or [0.0, 1.0]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    scale = width / max(x1 - x0, y1 - y0, 1e-9)
    height = round((y1 - y0) * scale)
    panel_h = height + 30
    people = scenario.people_on(day_index)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + 20}" '
           f'height="{panel_h * len(minutes) + 10}" font-family="monospace" font-size="11">']
    for k, minute in enumerate(minutes):
        t = day_index * MINUTES_PER_DAY + minute
        top = k * panel_h + 20
        seg = segment_for_time(minute, scenario.schedule)
        out.append(f'<text x="10" y="{top - 6}">{_clock(t)} ({seg.value})</text>')
        out.append(f'<g transform="translate(10 {top})">')
        for z in scenario.zones:
            zx0, zy0, zx1, zy1 = z.bounds
            stroke = "#000000" if z.walled else "#bbbbbb"
            out.append(f'<rect x="{(zx0 - x0) * scale:.2f}" y="{(y1 - zy1) * scale:.2f}" '
                       f'width="{(zx1 - zx0) * scale:.2f}" height="{(zy1 - zy0) * scale:.2f}" '
                       f'fill="none" stroke="{stroke}"><title>{z.name}</title></rect>')
        for p in people:
            px, py = place(p, seg, t, scenario.seed)
            colour = STATUS_COLOURS[_status_at(labels, p.id, t)]
            out.append(f'<circle cx="{(px - x0) * scale:.2f}" cy="{(y1 - py) * scale:.2f}" r="3" '
                       f'fill="{colour}"><title>person {p.index}</title></circle>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"

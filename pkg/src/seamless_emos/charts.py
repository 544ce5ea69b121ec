"""Plain SVG line charts drawn from score tables.

Charts are a read-only view: they take a :class:`ScoreTable` (usually read
back from the CSVs) and never touch the numbers beyond formatting them into
coordinates. Output is a deterministic string for identical input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .verification import MEAN, POOLED, ScoreTable

WIDTH = 900
PANEL_H = 280
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 190, 40, 45
LEAD_TICKS = tuple(range(0, 133, 12))

# fixed colours so a mode looks the same in every chart
PALETTE = {
    "persistence": "#d62728",
    "reference": "#1f77b4",
    "transition1": "#2ca02c",
    "transition2": "#9467bd",
    "single_aro": "#ff7f0e",
    "single_det": "#8c564b",
    "single_ensmu": "#7f7f7f",
    "reference_no_aro": "#17becf",
}
FALLBACK = ("#bcbd22", "#e377c2", "#393b79", "#637939")
# derived modes coincide with the reference over most leads; dash them so it shows through
DASHED = ("transition1", "transition2")


@dataclass
class Series:
    label: str
    x: list
    y: list
    color: str = "#000000"
    dashed: bool = False


@dataclass
class Panel:
    title: str
    series: list[Series]
    ylabel: str
    xlabel: str = "lead time (h)"
    vlines: tuple = ()
    hline: float | None = None


def _color(name: str, i: int) -> str:
    return PALETTE.get(name, FALLBACK[i % len(FALLBACK)])


def nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    """Round tick values covering ``[lo, hi]``."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return [0.0]
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + step * 1e-9:
        ticks.append(round(t, 10))
        t += step
    if ticks[-1] < hi:
        ticks.append(round(t, 10))
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _panel_svg(panel: Panel, top: float, x_max: float) -> list[str]:
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = PANEL_H - MARGIN_T - MARGIN_B
    y0 = top + MARGIN_T
    ys = [v for s in panel.series for v in s.y if math.isfinite(v)]
    if panel.hline is not None:
        ys.append(panel.hline)
    yt = nice_ticks(min(ys), max(ys)) if ys else [0.0, 1.0]
    ylo, yhi = yt[0], yt[-1]

    def px(x):
        return MARGIN_L + pw * x / x_max

    def py(y):
        return y0 + ph * (1 - (y - ylo) / (yhi - ylo))

    out = [
        '<g class="panel">',
        f'<text x="{MARGIN_L}" y="{_fmt(top + 24)}" font-size="15" font-weight="bold">{escape(panel.title)}</text>',
    ]
    out.append(
        f'<rect x="{MARGIN_L}" y="{_fmt(y0)}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>'
    )
    for t in LEAD_TICKS:
        if t > x_max:
            break
        out.append(f'<line x1="{_fmt(px(t))}" y1="{_fmt(y0 + ph)}" x2="{_fmt(px(t))}" y2="{_fmt(y0 + ph + 4)}" stroke="#444"/>')
        out.append(f'<text x="{_fmt(px(t))}" y="{_fmt(y0 + ph + 17)}" font-size="11" text-anchor="middle">{t}</text>')
    for t in yt:
        out.append(f'<line x1="{MARGIN_L}" y1="{_fmt(py(t))}" x2="{MARGIN_L + pw}" y2="{_fmt(py(t))}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{_fmt(py(t) + 4)}" font-size="11" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="{_fmt(y0 + ph + 34)}" font-size="12" text-anchor="middle">{escape(panel.xlabel)}</text>')
    out.append(
        f'<text x="18" y="{_fmt(y0 + ph / 2)}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 18 {_fmt(y0 + ph / 2)})">{escape(panel.ylabel)}</text>'
    )
    for v in panel.vlines:
        out.append(f'<line x1="{_fmt(px(v))}" y1="{_fmt(y0)}" x2="{_fmt(px(v))}" y2="{_fmt(y0 + ph)}" stroke="#888" stroke-dasharray="4 3"/>')
    if panel.hline is not None:
        out.append(f'<line x1="{MARGIN_L}" y1="{_fmt(py(panel.hline))}" x2="{MARGIN_L + pw}" y2="{_fmt(py(panel.hline))}" stroke="#000"/>')
    for i, s in enumerate(panel.series):
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(s.x, s.y) if math.isfinite(y))
        dash = ' stroke-dasharray="6 3"' if s.dashed else ""
        out.append(
            f'<polyline fill="none" stroke="{s.color}" stroke-width="1.6"{dash} points="{pts}">'
            f"<title>{escape(s.label)}</title></polyline>"
        )
        ly = y0 + 12 + 18 * i
        lx = MARGIN_L + pw + 12
        out.append(f'<line x1="{lx}" y1="{_fmt(ly)}" x2="{lx + 22}" y2="{_fmt(ly)}" stroke="{s.color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 28}" y="{_fmt(ly + 4)}" font-size="11">{escape(s.label)}</text>')
    out.append("</g>")
    return out


def render(panels: list[Panel], title: str, x_max: float = 132) -> str:
    height = 30 + PANEL_H * len(panels)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {height}" '
        f'width="{WIDTH}" height="{height}" font-family="sans-serif">',
        f'<rect width="{WIDTH}" height="{height}" fill="#fff"/>',
        f'<text x="{WIDTH / 2:.0f}" y="22" font-size="17" text-anchor="middle">{escape(title)}</text>',
    ]
    for i, p in enumerate(panels):
        out.extend(_panel_svg(p, 30 + i * PANEL_H, x_max))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _station_order(names) -> list[str]:
    names = set(names)
    aggregates = [n for n in (POOLED, MEAN) if n in names]
    return sorted(names - set(aggregates)) + aggregates


def mae_chart(table: ScoreTable, markers=(36, 84)) -> str:
    """MAE against lead, one panel per station and one line per mode."""
    rows = table.mae_rows
    panels = []
    for st in _station_order(rows.station):
        sub = rows[rows.station == st]
        series = []
        for i, mode in enumerate(sorted(set(sub["mode"]))):
            r = sub[sub["mode"] == mode]
            series.append(
                Series(mode, r.lead_h.tolist(), r.mae.tolist(), _color(mode, i), mode in DASHED)
            )
        panels.append(Panel(f"MAE at {st}", series, "MAE (°C)", vlines=tuple(markers)))
    x_max = float(rows.lead_h.max()) if len(rows) else 132
    return render(panels, "Mean absolute error by lead time", x_max)


def skill_chart(table: ScoreTable, markers=(36, 84)) -> str | None:
    """Skill of persistence mode over each comparison mode; ``None`` if nothing to compare."""
    rows = table.skill_rows
    if rows.empty:
        return None
    panels = []
    for st in _station_order(rows.station):
        sub = rows[rows.station == st]
        series = []
        for i, ref in enumerate(sorted(set(sub.reference_mode))):
            r = sub[sub.reference_mode == ref]
            series.append(
                Series(f"vs {ref}", r.lead_h.tolist(), r.skill_pct.tolist(), _color(ref, i), ref in DASHED)
            )
        panels.append(Panel(f"MAE skill of persistence mode at {st}", series, "skill (%)", vlines=tuple(markers), hline=0.0))
    return render(panels, "MAE skill score of persistence mode", float(rows.lead_h.max()))

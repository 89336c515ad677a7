"""Minimal native SVG line charts (log or linear axes).

Figures are derived views of the CSV artifacts, so this renderer stays
deliberately small: polylines, tick labels, a legend, no interactivity.
"""

import math

__all__ = ["line_chart"]

_COLORS = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
]

_W, _H = 860, 520
_ML, _MR, _MT, _MB = 70, 170, 40, 55


def _finite_positive(vals, log):
    return [v for v in vals if math.isfinite(v) and (not log or v > 0.0)]


def _ticks_log(lo, hi):
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    step = max(1, (hi_e - lo_e) // 8)
    return [10.0**e for e in range(lo_e, hi_e + 1, step)]


def _ticks_linear(lo, hi):
    span = hi - lo or 1.0
    raw = span / 6
    mag = 10 ** math.floor(math.log10(raw))
    step = mag * min(s for s in (1, 2, 5, 10) if raw / mag <= s)
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * span:
        out.append(t)
        t += step
    return out


def line_chart(series, path, title="", xlabel="", ylabel="", xlog=False, ylog=False):
    """Write an SVG chart; series is a list of (label, xs, ys)."""
    xs_all, ys_all = [], []
    for _, xs, ys in series:
        pts = [(x, y) for x, y in zip(xs, ys)
               if math.isfinite(x) and math.isfinite(y)
               and (not xlog or x > 0) and (not ylog or y > 0)]
        xs_all.extend(p[0] for p in pts)
        ys_all.extend(p[1] for p in pts)
    if not xs_all:
        xs_all, ys_all = [1.0], [1.0]
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if xlog:
        x_hi = max(x_hi, x_lo * 1.0001)
    elif x_hi == x_lo:
        x_hi = x_lo + 1.0
    if ylog:
        y_hi = max(y_hi, y_lo * 1.0001)
    elif y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x):
        if xlog:
            f = (math.log10(x) - math.log10(x_lo)) / (math.log10(x_hi) - math.log10(x_lo))
        else:
            f = (x - x_lo) / (x_hi - x_lo)
        return _ML + f * (_W - _ML - _MR)

    def sy(y):
        if ylog:
            f = (math.log10(y) - math.log10(y_lo)) / (math.log10(y_hi) - math.log10(y_lo))
        else:
            f = (y - y_lo) / (y_hi - y_lo)
        return _H - _MB - f * (_H - _MT - _MB)

    out = []
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
               f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">')
    out.append(f'<rect width="{_W}" height="{_H}" fill="white"/>')
    if title:
        out.append(f'<text x="{_W / 2}" y="22" text-anchor="middle" font-size="15">{title}</text>')
    # frame
    out.append(f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
               f'fill="none" stroke="#444"/>')
    xticks = _ticks_log(x_lo, x_hi) if xlog else _ticks_linear(x_lo, x_hi)
    for t in xticks:
        if t < x_lo * (0.999 if xlog else 1) or t > x_hi * 1.001:
            continue
        px = sx(max(t, x_lo))
        out.append(f'<line x1="{px:.1f}" y1="{_H - _MB}" x2="{px:.1f}" y2="{_H - _MB + 5}" stroke="#444"/>')
        label = f"{t:g}"
        out.append(f'<text x="{px:.1f}" y="{_H - _MB + 18}" text-anchor="middle">{label}</text>')
    yticks = _ticks_log(y_lo, y_hi) if ylog else _ticks_linear(y_lo, y_hi)
    for t in yticks:
        if t < y_lo * (0.999 if ylog else 1) or t > y_hi * 1.001:
            continue
        py = sy(max(t, y_lo))
        out.append(f'<line x1="{_ML - 5}" y1="{py:.1f}" x2="{_ML}" y2="{py:.1f}" stroke="#444"/>')
        out.append(f'<text x="{_ML - 8}" y="{py + 4:.1f}" text-anchor="end">{t:g}</text>')
    if xlabel:
        out.append(f'<text x="{(_ML + _W - _MR) / 2}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="18" y="{(_MT + _H - _MB) / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 18 {(_MT + _H - _MB) / 2})">{ylabel}</text>')
    for i, (label, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = [(sx(x), sy(y)) for x, y in zip(xs, ys)
               if math.isfinite(x) and math.isfinite(y)
               and (not xlog or x > 0) and (not ylog or y > 0)]
        if pts:
            d = " ".join(f"{px:.2f},{py:.2f}" for px, py in pts)
            out.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        ly = _MT + 16 + 16 * i
        out.append(f'<line x1="{_W - _MR + 10}" y1="{ly - 4}" x2="{_W - _MR + 34}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_W - _MR + 40}" y="{ly}">{label}</text>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(out) + "\n")

"""Minimal standalone SVG line plots of band structures."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2")


def _nice_ticks(lo, hi, n=5):
    if not np.isfinite(lo) or not np.isfinite(hi) or hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return list(np.arange(start, hi + 0.5 * step, step))


class _Panel:
    def __init__(self, x0, y0, w, h, xlim, ylim):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.xlim, self.ylim = xlim, ylim

    def px(self, x):
        lo, hi = self.xlim
        return self.x0 + (x - lo) / (hi - lo) * self.w

    def py(self, y):
        lo, hi = self.ylim
        return self.y0 + self.h - (y - lo) / (hi - lo) * self.h

    def frame(self, out, ylabel, xticks=None):
        out.append(f'<rect x="{self.x0}" y="{self.y0}" width="{self.w}" height="{self.h}" '
                   'fill="none" stroke="black"/>')
        for t in _nice_ticks(*self.ylim):
            y = self.py(t)
            out.append(f'<line x1="{self.x0 - 4}" y1="{y:.1f}" x2="{self.x0}" y2="{y:.1f}" stroke="black"/>')
            out.append(f'<text x="{self.x0 - 6}" y="{y + 4:.1f}" font-size="11" text-anchor="end">{t:.3g}</text>')
        ticks = xticks if xticks else [(f"{t:.3g}", t) for t in _nice_ticks(*self.xlim)]
        for name, t in ticks:
            x = self.px(t)
            out.append(f'<line x1="{x:.1f}" y1="{self.y0}" x2="{x:.1f}" y2="{self.y0 + self.h}" '
                       'stroke="#ddd"/>')
            out.append(f'<text x="{x:.1f}" y="{self.y0 + self.h + 15}" font-size="11" '
                       f'text-anchor="middle">{escape(str(name))}</text>')
        cy = self.y0 + self.h / 2
        out.append(f'<text x="{self.x0 - 48}" y="{cy}" font-size="12" text-anchor="middle" '
                   f'transform="rotate(-90 {self.x0 - 48} {cy})">{escape(ylabel)}</text>')

    def line(self, out, x, y, color):
        # break the polyline at NaNs and at jumps across the zone edge
        seg = []
        for xi, yi in zip(x, y):
            if not (np.isfinite(xi) and np.isfinite(yi)):
                self._flush(out, seg, color)
                seg = []
                continue
            seg.append((self.px(xi), self.py(yi)))
        self._flush(out, seg, color)

    @staticmethod
    def _flush(out, seg, color):
        if len(seg) == 1:
            x, y = seg[0]
            out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="1.2" fill="{color}"/>')
        elif seg:
            pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in seg)
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.3"/>')


def _split_wraps(x, y, period):
    """Insert NaNs where a folded branch jumps by more than half a period."""
    xs, ys = [x[0]], [y[0]]
    for k in range(1, len(x)):
        if abs(y[k] - y[k - 1]) > period / 2:
            xs.append(np.nan)
            ys.append(np.nan)
        xs.append(x[k])
        ys.append(y[k])
    return np.array(xs), np.array(ys)


def band_plot(bs, path, title: str = "") -> None:
    """Write ``Re omega`` and ``Im omega`` against arc length as an SVG file."""
    W, H = 720, 560
    arc = np.asarray(bs.arc, dtype=float)
    om = np.asarray(bs.omegas, dtype=complex)
    # failed samples are stored as nan + 0j; blank both parts
    om = np.where(np.isfinite(om), om, np.nan + 1j * np.nan)
    xlim = (float(np.nanmin(arc)), float(np.nanmax(arc)))
    if xlim[1] <= xlim[0]:
        xlim = (xlim[0] - 1, xlim[0] + 1)
    Om = bs.Omega
    im = om.imag
    imax = float(np.nanmax(np.abs(im))) if np.isfinite(im).any() else 0.0
    imax = max(imax, 1e-6) * 1.1
    top = _Panel(80, 40, W - 110, 300, xlim, (-Om / 2, Om / 2))
    bottom = _Panel(80, 390, W - 110, 130, xlim, (-imax, imax))
    ticks = [(n, v) for n, v in getattr(bs, "ticks", [])] or None
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'font-family="sans-serif">', f'<rect width="{W}" height="{H}" fill="white"/>']
    if title:
        out.append(f'<text x="{W / 2}" y="22" font-size="14" text-anchor="middle">{escape(title)}</text>')
    top.frame(out, "Re ω", ticks)
    bottom.frame(out, "Im ω", ticks)
    for b in range(om.shape[1]):
        c = COLORS[b % len(COLORS)]
        x, y = _split_wraps(arc, om[:, b].real, Om)
        top.line(out, x, y, c)
        bottom.line(out, arc, om[:, b].imag, c)
    out.append(f'<text x="{80 + (W - 110) / 2}" y="{H - 8}" font-size="12" text-anchor="middle">'
               'quasimomentum path</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out))

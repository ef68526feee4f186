"""Minimal self-contained SVG line/scatter plots.

No external assets, scripts, or fonts beyond a generic font-family; the
byte output is a pure function of the data, so plots from identical runs
compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_WIDTH, _HEIGHT = 640, 420
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 62, 16, 34, 46
_COLORS = ["#1f6fb2", "#d1495b", "#3c8d53", "#8d6b94", "#c9822e"]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


@dataclass
class Series:
    xs: np.ndarray
    ys: np.ndarray
    label: str = ""
    kind: str = "line"  # "line" or "scatter"


@dataclass
class Plot:
    title: str
    xlabel: str
    ylabel: str
    series: list[Series] = field(default_factory=list)

    def add(self, xs, ys, label: str = "", kind: str = "line") -> "Plot":
        self.series.append(
            Series(np.asarray(xs, float), np.asarray(ys, float), label, kind)
        )
        return self

    def render(self) -> str:
        if not self.series:
            raise ValueError("plot has no data series")
        all_x = np.concatenate([s.xs for s in self.series])
        all_y = np.concatenate([s.ys for s in self.series])
        x0, x1 = float(all_x.min()), float(all_x.max())
        y0, y1 = float(all_y.min()), float(all_y.max())
        if x1 == x0:
            x0, x1 = x0 - 1.0, x1 + 1.0
        if y1 == y0:
            y0, y1 = y0 - 1.0, y1 + 1.0
        pad_y = 0.05 * (y1 - y0)
        y0, y1 = y0 - pad_y, y1 + pad_y

        iw = _WIDTH - _MARGIN_L - _MARGIN_R
        ih = _HEIGHT - _MARGIN_T - _MARGIN_B

        def px(x):
            return _MARGIN_L + (x - x0) / (x1 - x0) * iw

        def py(y):
            return _MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ih

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
            f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
            f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
            f'<text x="{_WIDTH / 2:.1f}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{_escape(self.title)}</text>',
        ]
        # axes
        parts.append(
            f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
            f'y2="{_HEIGHT - _MARGIN_B}" stroke="black"/>'
        )
        parts.append(
            f'<line x1="{_MARGIN_L}" y1="{_HEIGHT - _MARGIN_B}" '
            f'x2="{_WIDTH - _MARGIN_R}" y2="{_HEIGHT - _MARGIN_B}" stroke="black"/>'
        )
        for i in range(5):
            tx = x0 + (x1 - x0) * i / 4
            ty = y0 + (y1 - y0) * i / 4
            xpix, ypix = px(tx), py(ty)
            parts.append(
                f'<line x1="{xpix:.1f}" y1="{_HEIGHT - _MARGIN_B}" x2="{xpix:.1f}" '
                f'y2="{_HEIGHT - _MARGIN_B + 4}" stroke="black"/>'
            )
            parts.append(
                f'<text x="{xpix:.1f}" y="{_HEIGHT - _MARGIN_B + 17}" '
                f'text-anchor="middle" font-family="sans-serif" font-size="11">'
                f"{_fmt(tx)}</text>"
            )
            parts.append(
                f'<line x1="{_MARGIN_L - 4}" y1="{ypix:.1f}" x2="{_MARGIN_L}" '
                f'y2="{ypix:.1f}" stroke="black"/>'
            )
            parts.append(
                f'<text x="{_MARGIN_L - 7}" y="{ypix + 4:.1f}" text-anchor="end" '
                f'font-family="sans-serif" font-size="11">{_fmt(ty)}</text>'
            )
        parts.append(
            f'<text x="{_MARGIN_L + iw / 2:.1f}" y="{_HEIGHT - 8}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="12">'
            f"{_escape(self.xlabel)}</text>"
        )
        parts.append(
            f'<text x="16" y="{_MARGIN_T + ih / 2:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 16 {_MARGIN_T + ih / 2:.1f})">'
            f"{_escape(self.ylabel)}</text>"
        )
        for idx, s in enumerate(self.series):
            color = _COLORS[idx % len(_COLORS)]
            if s.kind == "line":
                pts = " ".join(
                    f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s.xs, s.ys)
                )
                parts.append(
                    f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                    f'points="{pts}"/>'
                )
            else:
                for x, y in zip(s.xs, s.ys):
                    parts.append(
                        f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.2" '
                        f'fill="{color}" fill-opacity="0.75"/>'
                    )
            if s.label:
                ly = _MARGIN_T + 14 + 15 * idx
                parts.append(
                    f'<rect x="{_WIDTH - _MARGIN_R - 150}" y="{ly - 9}" width="10" '
                    f'height="10" fill="{color}"/>'
                )
                parts.append(
                    f'<text x="{_WIDTH - _MARGIN_R - 136}" y="{ly}" '
                    f'font-family="sans-serif" font-size="11">{_escape(s.label)}</text>'
                )
        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.render(), encoding="utf-8")

"""Minimal SVG scatter plots of real against generated samples."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np


def project_2d(real, gen):
    """Project both clouds onto the top two principal axes of the real cloud (identity for d <= 2)."""
    real, gen = np.asarray(real, float), np.asarray(gen, float)
    if real.shape[1] == 1:
        return np.c_[real, np.zeros(len(real))], np.c_[gen, np.zeros(len(gen))]
    if real.shape[1] == 2:
        return real, gen
    mu = real.mean(0)
    _, _, vt = np.linalg.svd(real - mu, full_matrices=False)
    axes = vt[:2].T
    return (real - mu) @ axes, (gen - mu) @ axes


def scatter_svg(real, gen, title: str = "", size: int = 480, max_points: int = 2000) -> str:
    r2, g2 = project_2d(real, gen)
    r2, g2 = r2[:max_points], g2[:max_points]
    both = np.vstack([r2, g2])
    both = both[np.all(np.isfinite(both), axis=1)]
    lo, hi = (both.min(0), both.max(0)) if len(both) else (np.zeros(2), np.ones(2))
    span = float(np.max(hi - lo)) or 1.0
    pad = 40
    scale = (size - 2 * pad) / span
    centre = 0.5 * (lo + hi)

    def xy(p):
        return pad + (size - 2 * pad) / 2 + (p[0] - centre[0]) * scale, \
            pad + (size - 2 * pad) / 2 - (p[1] - centre[1]) * scale

    out = [f'<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
           f'<line x1="{pad}" y1="{size - pad}" x2="{size - pad}" y2="{size - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{size - pad}" stroke="black"/>',
           f'<text x="{size / 2}" y="{pad / 2}" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<text x="{size - pad}" y="{size - pad / 3}" text-anchor="end" font-size="11">'
           f'blue: real, red: generated</text>']
    for pts, colour in ((r2, "#1f4e9c"), (g2, "#c0392b")):
        out.append(f'<g fill="{colour}" fill-opacity="0.5">')
        for p in pts:
            if np.all(np.isfinite(p)):
                x, y = xy(p)
                out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.6"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"

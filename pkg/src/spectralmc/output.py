"""Deterministic CSV and SVG emission for experiment results.

All floating point values are printed with 17 significant digits so a CSV
round-trips bit-exactly and two runs with the same (config, seed) produce
byte-identical files.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class ResultRow:
    """One replicate of one method in one domain."""

    experiment: str
    d: int
    params: str
    method: str
    domain: str
    replicate: int
    estimate: float
    rel_error: float
    std_error: float


ESTIMATES_HEADER = ("experiment,d,alpha_or_params,method,domain,"
                    "replicate,estimate,rel_error,std_error")


def write_estimates_csv(rows, path) -> None:
    lines = [ESTIMATES_HEADER]
    for r in rows:
        lines.append(",".join([
            r.experiment, str(r.d), r.params, r.method, r.domain,
            str(r.replicate), fmt(r.estimate), fmt(r.rel_error), fmt(r.std_error),
        ]))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def parse_estimates_csv(path):
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != ESTIMATES_HEADER:
        raise ValueError("unexpected estimates.csv header")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        rows.append(ResultRow(cells[0], int(cells[1]), cells[2], cells[3],
                              cells[4], int(cells[5]), float(cells[6]),
                              float(cells[7]), float(cells[8])))
    return rows


def _quartiles(values):
    v = np.sort(np.asarray(values, dtype=float))
    return (float(np.quantile(v, 0.25)), float(np.quantile(v, 0.5)),
            float(np.quantile(v, 0.75)))


def write_summary_csv(rows, path) -> None:
    """Per (experiment, d, params, method, domain) quartiles of estimates
    and absolute relative errors, in first-appearance order."""
    groups = {}
    order = []
    for r in rows:
        key = (r.experiment, r.d, r.params, r.method, r.domain)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r)
    lines = ["experiment,d,alpha_or_params,method,domain,count,"
             "est_q1,est_median,est_q3,abs_rel_err_q1,abs_rel_err_median,abs_rel_err_q3"]
    for key in order:
        grp = groups[key]
        eq = _quartiles([r.estimate for r in grp])
        rq = _quartiles([abs(r.rel_error) for r in grp])
        lines.append(",".join([key[0], str(key[1]), key[2], key[3], key[4],
                               str(len(grp))] + [fmt(v) for v in eq + rq]))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


# ---------------------------------------------------------------------------
# Minimal standalone SVG boxplots (kept dependency-free and byte-stable)
# ---------------------------------------------------------------------------

_W, _H = 640, 420
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 20, 40, 80


def _box_stats(values):
    v = np.sort(np.asarray(values, dtype=float))
    q1, med, q3 = _quartiles(v)
    return float(v[0]), q1, med, q3, float(v[-1])


def svg_boxplot(groups, path, title: str = "", ylabel: str = "") -> None:
    """Write a boxplot panel: `groups` is an ordered list of (label, values)."""
    stats = [(label, _box_stats(vals)) for label, vals in groups if len(vals) > 0]
    if not stats:
        raise ValueError("nothing to plot")
    lo = min(s[1][0] for s in stats)
    hi = max(s[1][4] for s in stats)
    if hi <= lo:
        hi = lo + 1.0
    pad = 0.08 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    plot_w = _W - _MARGIN_L - _MARGIN_R
    plot_h = _H - _MARGIN_T - _MARGIN_B

    def ypix(v):
        return _MARGIN_T + plot_h * (1.0 - (v - lo) / (hi - lo))

    k = len(stats)
    slot = plot_w / k
    box_w = 0.5 * slot

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W/2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    # y axis with 5 ticks
    parts.append(f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
                 f'y2="{_MARGIN_T + plot_h}" stroke="black"/>')
    for i in range(5):
        v = lo + (hi - lo) * i / 4.0
        y = ypix(v)
        parts.append(f'<line x1="{_MARGIN_L - 4}" y1="{y:.2f}" x2="{_MARGIN_L}" '
                     f'y2="{y:.2f}" stroke="black"/>')
        parts.append(f'<text x="{_MARGIN_L - 8}" y="{y + 4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{v:.4g}</text>')
    if ylabel:
        parts.append(f'<text x="16" y="{_MARGIN_T + plot_h/2:.1f}" '
                     f'font-family="sans-serif" font-size="12" text-anchor="middle" '
                     f'transform="rotate(-90 16 {_MARGIN_T + plot_h/2:.1f})">{ylabel}</text>')

    for i, (label, (vmin, q1, med, q3, vmax)) in enumerate(stats):
        cx = _MARGIN_L + (i + 0.5) * slot
        x0, x1 = cx - box_w / 2, cx + box_w / 2
        parts.extend([
            f'<line x1="{cx:.2f}" y1="{ypix(vmin):.2f}" x2="{cx:.2f}" '
            f'y2="{ypix(q1):.2f}" stroke="black"/>',
            f'<line x1="{cx:.2f}" y1="{ypix(q3):.2f}" x2="{cx:.2f}" '
            f'y2="{ypix(vmax):.2f}" stroke="black"/>',
            f'<line x1="{cx - box_w/4:.2f}" y1="{ypix(vmin):.2f}" '
            f'x2="{cx + box_w/4:.2f}" y2="{ypix(vmin):.2f}" stroke="black"/>',
            f'<line x1="{cx - box_w/4:.2f}" y1="{ypix(vmax):.2f}" '
            f'x2="{cx + box_w/4:.2f}" y2="{ypix(vmax):.2f}" stroke="black"/>',
            f'<rect x="{x0:.2f}" y="{ypix(q3):.2f}" width="{box_w:.2f}" '
            f'height="{max(ypix(q1) - ypix(q3), 0.5):.2f}" fill="#9ecae1" stroke="black"/>',
            f'<line x1="{x0:.2f}" y1="{ypix(med):.2f}" x2="{x1:.2f}" '
            f'y2="{ypix(med):.2f}" stroke="black" stroke-width="2"/>',
            f'<text x="{cx:.2f}" y="{_MARGIN_T + plot_h + 18:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11" '
            f'transform="rotate(30 {cx:.2f} {_MARGIN_T + plot_h + 18:.1f})">{label}</text>',
        ])
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", newline="\n")


def boxplot_figures(rows, out_dir, experiment: str) -> list:
    """One SVG per (d, params) panel; boxes are method/domain groups."""
    out_dir = Path(out_dir)
    panels = {}
    order = []
    for r in rows:
        key = (r.d, r.params)
        if key not in panels:
            panels[key] = {}
            order.append(key)
        panels[key].setdefault(f"{r.method}/{r.domain}", []).append(r.rel_error)
    written = []
    for idx, key in enumerate(order):
        d, params = key
        groups = list(panels[key].items())
        name = f"{experiment}_panel{idx:02d}.svg"
        svg_boxplot(groups, out_dir / name,
                    title=f"{experiment} d={d} {params}",
                    ylabel="relative error")
        written.append(out_dir / name)
    return written

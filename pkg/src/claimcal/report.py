"""CSV summaries and hand-rendered SVG charts.

SVGs are built from primitive elements with fixed-precision coordinates
and contain no timestamps or environment details, so identical inputs
give identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Mapping, Sequence

from .evaluation import EvalReport, _t_ci

_W, _H = 640, 400
_ML, _MR, _MT, _MB = 70, 20, 20, 50


def _fmt(x: float) -> str:
    return f"{x:.2f}"


class SvgCanvas:
    """Tiny primitive-only SVG builder."""

    def __init__(self, width: int = _W, height: int = _H):
        self.width = width
        self.height = height
        self.parts: list[str] = []

    def line(self, x1, y1, x2, y2, stroke="#333", width=1.0) -> None:
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}"'
            f' y2="{_fmt(y2)}" stroke="{stroke}"'
            f' stroke-width="{_fmt(width)}"/>')

    def polyline(self, pts: Sequence[tuple[float, float]], stroke="#1f77b4",
                 width=1.5) -> None:
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{stroke}"'
            f' stroke-width="{_fmt(width)}"/>')

    def rect(self, x, y, w, h, fill="#1f77b4") -> None:
        self.parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}"'
            f' height="{_fmt(h)}" fill="{fill}"/>')

    def text(self, x, y, s, size=12, anchor="middle", rotate=None) -> None:
        tr = (f' transform="rotate({_fmt(rotate)} {_fmt(x)} {_fmt(y)})"'
              if rotate is not None else "")
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}"'
            f' font-family="sans-serif" text-anchor="{anchor}"{tr}>{s}</text>')

    def save(self, path: str | Path) -> None:
        body = "\n".join(self.parts)
        svg = (f'<svg xmlns="http://www.w3.org/2000/svg"'
               f' width="{self.width}" height="{self.height}"'
               f' viewBox="0 0 {self.width} {self.height}">\n'
               f'<rect width="{self.width}" height="{self.height}"'
               f' fill="white"/>\n{body}\n</svg>\n')
        Path(path).write_text(svg, encoding="utf-8")


def _scale(lo: float, hi: float, px_lo: float, px_hi: float):
    span = hi - lo if hi > lo else 1.0

    def f(v: float) -> float:
        return px_lo + (v - lo) / span * (px_hi - px_lo)

    return f


def _axes(svg: SvgCanvas, xlabel: str, ylabel: str, xlo, xhi, ylo, yhi,
          ticks: int = 5):
    sx = _scale(xlo, xhi, _ML, _W - _MR)
    sy = _scale(ylo, yhi, _H - _MB, _MT)
    svg.line(_ML, _H - _MB, _W - _MR, _H - _MB)
    svg.line(_ML, _H - _MB, _ML, _MT)
    for i in range(ticks + 1):
        xv = xlo + (xhi - xlo) * i / ticks
        yv = ylo + (yhi - ylo) * i / ticks
        svg.line(sx(xv), _H - _MB, sx(xv), _H - _MB + 4)
        svg.text(sx(xv), _H - _MB + 18, f"{xv:.3g}", size=10)
        svg.line(_ML - 4, sy(yv), _ML, sy(yv))
        svg.text(_ML - 8, sy(yv) + 4, f"{yv:.3g}", size=10, anchor="end")
    svg.text((_ML + _W - _MR) / 2, _H - 12, xlabel)
    svg.text(16, (_MT + _H - _MB) / 2, ylabel, rotate=-90.0)
    return sx, sy


def line_chart(path: str | Path, xlabel: str, ylabel: str,
               series: Mapping[str, Sequence[tuple[float, float]]]) -> None:
    """Multi-series line chart; series maps name -> [(x, y), ...]."""
    pts = [p for s in series.values() for p in s]
    if not pts:
        raise ValueError("cannot chart empty series")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts if not math.isnan(p[1])] or [0.0]
    pad = (max(ys) - min(ys)) * 0.05 or 0.05
    svg = SvgCanvas()
    sx, sy = _axes(svg, xlabel, ylabel, min(xs), max(xs),
                   min(ys) - pad, max(ys) + pad)
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"]
    for i, (name, s) in enumerate(sorted(series.items())):
        color = palette[i % len(palette)]
        svg.polyline([(sx(x), sy(y)) for x, y in s
                      if not math.isnan(y)], stroke=color)
        svg.text(_W - _MR - 4, _MT + 14 * (i + 1), name, anchor="end",
                 size=11)
    svg.save(path)


def importance_chart(path: str | Path,
                     rows: Sequence[tuple[str, float, float, float]]) -> None:
    """Horizontal bars of family importance with CI whiskers."""
    svg = SvgCanvas()
    if not rows:
        svg.text(_W / 2, _H / 2, "no importances")
        svg.save(path)
        return
    vmax = max(max(m, hi if not math.isnan(hi) else m)
               for _, m, _, hi in rows) or 1.0
    sx = _scale(0.0, vmax * 1.05, _ML, _W - _MR)
    band = (_H - _MT - _MB) / len(rows)
    svg.line(_ML, _H - _MB, _W - _MR, _H - _MB)
    svg.line(_ML, _H - _MB, _ML, _MT)
    for i, (name, mean, lo, hi) in enumerate(rows):
        yc = _MT + band * (i + 0.5)
        svg.rect(_ML, yc - band * 0.3, sx(mean) - _ML, band * 0.6)
        if not (math.isnan(lo) or math.isnan(hi)):
            svg.line(sx(lo), yc, sx(hi), yc, stroke="#d62728", width=1.5)
            svg.line(sx(lo), yc - 4, sx(lo), yc + 4, stroke="#d62728")
            svg.line(sx(hi), yc - 4, sx(hi), yc + 4, stroke="#d62728")
        svg.text(_ML - 8, yc + 4, name, anchor="end", size=10)
    svg.text((_ML + _W - _MR) / 2, _H - 12, "importance share")
    svg.save(path)


# ---------------------------------------------------------------------------
# CSV emitters

def write_auc_samples(path: str | Path, reports: Sequence[EvalReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["task", "model_kind", "sample_index", "auc", "ig"])
        for rep in reports:
            for i, (a, g) in enumerate(zip(rep.auc_samples, rep.ig_samples)):
                w.writerow([rep.task, rep.model_kind, i, repr(a), repr(g)])


def write_summary(path: str | Path, reports: Sequence[EvalReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["task", "model_kind", "n_samples", "auc_mean",
                    "auc_ci_lo", "auc_ci_hi", "ig_mean", "n_skipped"])
        for rep in reports:
            w.writerow([rep.task, rep.model_kind, len(rep.auc_samples),
                        repr(rep.auc_mean), repr(rep.auc_ci95[0]),
                        repr(rep.auc_ci95[1]), repr(rep.ig_mean),
                        rep.n_skipped])


def write_importances(path: str | Path, report: EvalReport) -> None:
    """Family importance CSV; valid (header-only) even when empty."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "mean", "ci_lo", "ci_hi"])
        for name in sorted(report.family_importances):
            m, lo, hi = report.family_importances[name]
            w.writerow([name, repr(m), repr(lo), repr(hi)])


def importance_rows(report: EvalReport
                    ) -> list[tuple[str, float, float, float]]:
    rows = [(name, m, lo, hi)
            for name, (m, lo, hi) in report.family_importances.items()]
    return sorted(rows, key=lambda r: -r[1])


def write_policy_csv(path: str | Path,
                     rows: Sequence[Mapping[str, float]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "auc_mean", "auc_sd", "ig_mean", "ig_sd"])
        for r in rows:
            w.writerow([repr(r["beta"]), repr(r["auc_mean"]),
                        repr(r["auc_sd"]), repr(r["ig_mean"]),
                        repr(r["ig_sd"])])


def write_curves_csv(path: str | Path, diagnostics: Mapping) -> None:
    """Threshold-scan curves from the optimizer diagnostics.

    Emits the negative curve block followed by the positive one; theta holds
    the scanned boundary (lower threshold / lower cut of the top class).
    delta columns are filled only at jump points of the matching curve.
    """
    from .partition import relative_discontinuity

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "W", "count", "delta_left", "delta_right"])
        for side, jump_side in (("negative", "left"), ("positive", "right")):
            curve = diagnostics[f"{side}_curve"]
            deltas = dict(relative_discontinuity(curve, jump_side)[0])
            for theta, val, cnt in zip(curve.grid, curve.values,
                                       curve.counts):
                d = deltas.get(theta)
                cell = "" if d is None else repr(d)
                left, right = (cell, "") if jump_side == "left" else ("", cell)
                w.writerow([repr(theta), repr(val), cnt, left, right])


def curves_chart(path: str | Path, curves_csv: str | Path) -> None:
    """Render the scan curves; axes labeled theta and W.

    The curve blocks carry no side marker; a drop in theta between
    consecutive rows starts the second (positive) block.
    """
    series: dict[str, list[tuple[float, float]]] = {}
    names = iter(("negative", "positive"))
    current = next(names)
    last_theta = None
    with open(curves_csv, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            theta = float(row["theta"])
            if last_theta is not None and theta < last_theta:
                current = next(names)
            last_theta = theta
            series.setdefault(current, []).append((theta, float(row["W"])))
    line_chart(path, "theta", "W", series)


def policy_chart(path: str | Path, policy_csv: str | Path) -> None:
    rows = []
    with open(policy_csv, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.DictReader(fh)]
    if not rows:
        raise ValueError("empty policy table")
    auc = [(float(r["beta"]), float(r["auc_mean"])) for r in rows]
    ig = [(float(r["beta"]), float(r["ig_mean"])) for r in rows]
    line_chart(path, "beta", "mean score", {"auc": auc, "ig": ig})


def summarize_auc(samples: Sequence[float]) -> dict[str, float]:
    mean, lo, hi = _t_ci(samples)
    return {"n": len(samples), "mean": mean, "ci_lo": lo, "ci_hi": hi}


def write_eval_json(path: str | Path, reports: Sequence[EvalReport]) -> None:
    payload = {rep.task: json.loads(rep.to_json()) for rep in reports}
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2),
                          encoding="utf-8")

"""Figure data (potentials, levels, offset eigenfunctions), CSV writing and a
small deterministic SVG plotter.

Layout of every SVG: panels of 360x270 px on a rows x cols grid, 60 px left
and 40 px bottom margins for tick labels, frame, five ticks per axis,
eigenvalue rules as thin grey horizontal lines, curves as polylines clipped
to the panel.  All coordinates are written with two decimals.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import models as M
from .spectral import ConstantMassProblem, refine

__all__ = [
    "FIGURE_IDS",
    "CSV_FORMAT",
    "Curve",
    "Panel",
    "Figure",
    "max_workers",
    "parallel_map",
    "format_number",
    "csv_text",
    "read_csv",
    "build_figure",
    "figure_csvs",
    "render_svg",
    "write_figure",
]

FIGURE_IDS = ("f1", "f2", "f3", "f4", "f5", "f6", "f7a", "f7b")
CSV_FORMAT = "deformed-spectra/csv/1"
SVG_FORMAT = "deformed-spectra/svg/1"

_MAX_CSV_ROWS = 1200
_PANEL_W, _PANEL_H = 360, 270
_MARGIN_L, _MARGIN_B, _MARGIN_T, _MARGIN_R = 60, 40, 30, 20

_DASH = {"solid": None, "dashed": "6,4", "dotted": "1.5,3", "dashdot": "6,3,1.5,3", "longdash": "12,4"}


def max_workers() -> int:
    """Worker cap from DEFORMED_SPECTRA_THREADS (default: CPU count)."""
    raw = os.environ.get("DEFORMED_SPECTRA_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Order-preserving map over a thread pool capped by max_workers()."""
    items = list(items)
    n = min(max_workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

def format_number(v) -> str:
    """17 significant digits; empty for None; 'inf'/'-inf'/'nan' spelled out."""
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def csv_text(kind: str, header: Sequence[str], rows: Sequence[Sequence]) -> str:
    """CSV body preceded by a '# format=...' line naming the file kind."""
    buf = io.StringIO()
    buf.write(f"# format={CSV_FORMAT} kind={kind}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([c if isinstance(c, str) else format_number(c) for c in r])
    return buf.getvalue()


def read_csv(path) -> tuple[dict, list[str], list[list]]:
    """(meta, header, rows) with numeric cells parsed to float (empty -> None)."""
    text = Path(path).read_text()
    lines = text.splitlines()
    meta = {}
    if lines and lines[0].startswith("#"):
        for tok in lines[0][1:].split():
            k, _, v = tok.partition("=")
            meta[k] = v
        lines = lines[1:]
    reader = csv.reader(lines)
    header = next(reader)
    rows = []
    for r in reader:
        out = []
        for c in r:
            if c == "":
                out.append(None)
            else:
                try:
                    out.append(float(c))
                except ValueError:
                    out.append(c)
        rows.append(out)
    return meta, header, rows


# --------------------------------------------------------------------------
# Figure data
# --------------------------------------------------------------------------

@dataclass
class Curve:
    label: str
    x: np.ndarray
    y: np.ndarray
    style: str = "solid"
    color: str = "#000000"
    kind: str = "potential"  # potential | eigenfunction | series


@dataclass
class Panel:
    name: str
    title: str
    curves: list
    levels: list = field(default_factory=list)  # plotted eigenvalue rules
    amplitude: float = 0.0  # eigenfunction scale factor
    xlim: tuple = (0.0, 1.0)
    ylim: tuple = (0.0, 1.0)
    xlabel: str = "y"
    ylabel: str = "U"
    logy: bool = False


@dataclass
class Figure:
    fig_id: str
    title: str
    panels: list
    rows: int
    cols: int


def _subsample(n: int) -> np.ndarray:
    step = max(1, int(math.ceil(n / _MAX_CSV_ROWS)))
    return np.arange(0, n, step)


def _levels_panel(name: str, title: str, y: np.ndarray, U: np.ndarray, energies, states,
                  scale: float = 1.0, mirror: bool = False, xlim=None, ylim=None) -> Panel:
    """Potential, eigenvalue rules and eigenfunctions offset by their levels.

    ``scale`` multiplies potential and energies (plot units); ``mirror``
    extends half-line data evenly to negative y.
    """
    idx = _subsample(len(y))
    y, U, states = y[idx], U[idx], np.asarray(states)[:, idx]
    if mirror:
        y = np.concatenate([-y[::-1], y])
        U = np.concatenate([U[::-1], U])
        states = np.concatenate([states[:, ::-1], states], axis=1)
    E = np.asarray(energies, dtype=float) * scale
    gap = float(np.min(np.diff(E))) if len(E) > 1 else 1.0
    gap = gap if gap > 0 else 1.0
    amp = 0.4 * gap / float(np.max(np.abs(states)))
    curves = [Curve("U", y, U * scale, "solid", "#000000", "potential")]
    palette = ("#1f4e9c", "#b22222", "#2e7d32", "#6a1b9a", "#ef6c00", "#00838f")
    for k, psi in enumerate(states):
        curves.append(Curve(f"psi_{k}", y, E[k] + amp * psi, "solid", palette[k % len(palette)], "eigenfunction"))
    if xlim is None:
        xlim = (float(y[0]), float(y[-1]))
    if ylim is None:
        lo = float(np.min(U * scale))
        hi = float(E[-1] + 1.5 * gap)
        ylim = (lo - 0.1 * (hi - lo), hi)
    return Panel(name, title, curves, [float(e) for e in E], amp, xlim, ylim)


def _solve(prob: ConstantMassProblem, n: int, tol: float):
    spec = refine(prob, n, tol)
    return spec.y, prob.U(spec.y), spec.energies, spec.states


def _fig123(fig_id: str, mu0: float, tol: float) -> Figure:
    tag = {"f1": "fig1", "f2": "fig2", "f3": "fig3"}[fig_id]

    def panel(side):
        pre = M.get_preset(f"example1-{tag}-{side}")
        p = pre.model_params()
        y, U, E, S = _solve(M.example1_potential(p), 4, tol)
        s = 2.0 / (p.mu_minus * p.z)
        return _levels_panel(side, f"mu+ = {p.mu_plus:g}", y, U, E, S, scale=s, mirror=True,
                             xlim=(-math.pi / 2, math.pi / 2))

    panels = parallel_map(panel, ("left", "center", "right"))
    for pn in panels:
        pn.ylabel = "2U/(mu- z)"
    return Figure(fig_id, f"example 1, lambda = 2, mu0 = {mu0:g}", panels, 1, 3)


F4_Z = np.linspace(10.0, 100.0, 46)


def _fig4() -> Figure:
    styles = ("dotted", "dashed", "dashdot", "longdash")

    def panel(tag):
        p = M.get_preset(f"fig4-{tag}").model_params()
        curves = []
        for n in range(4):
            d = np.array(M.fig4_difference(p, n, F4_Z))
            curves.append(Curve(f"n={n}", F4_Z.copy(), d, styles[n], "#000000", "series"))
        allv = np.concatenate([c.y for c in curves])
        pos = allv[allv > 0]
        ylim = (float(np.min(pos)), float(np.max(pos))) if pos.size else (1e-12, 1.0)
        return Panel(tag, f"({tag}) mu0 = {p.mu_zero:g}, mu+ = {p.mu_plus:g}", curves, [], 0.0,
                     (10.0, 100.0), ylim, "z", "|E_n - E_k^FD|", True)

    return Figure("f4", "difference to finite-dimensional levels", parallel_map(panel, "abcd"), 2, 2)


F5_Z = (0.0, 0.4, 0.6, math.inf)
F6_Z = (0.0, 0.25, 0.5, math.inf)


def _fig5() -> Figure:
    p = M.get_preset("example3-fig5").model_params()
    y = np.linspace(-4.0, 4.0, 801)
    y = y[y != 0.0]
    looks = (("dashed", "#000000"), ("solid", "#1f4e9c"), ("solid", "#b22222"), ("solid", "#000000"))
    curves = []
    for z, (st, col) in zip(F5_Z, looks):
        U = M.example3_potential(p.replace(z=z), y)
        curves.append(Curve(f"z={z:g}", y, U, st, col, "potential"))
    finite = np.concatenate([c.y[np.isfinite(c.y)] for c in curves])
    ylim = (float(np.min(finite)) - 0.5, float(np.min(finite)) + 12.0)
    return Figure("f5", "example 3 potential versus z",
                  [Panel("main", "mu0 = 3/2, mu- = mu+ = 1", curves, [], 0.0, (-4.0, 4.0), ylim)], 1, 1)


def _fig6(tol: float) -> Figure:
    base = M.get_preset("example3-fig6").model_params()
    names = ("upper-left", "upper-right", "lower-left", "lower-right")

    def panel(args):
        name, z = args
        p = base.replace(z=z)
        prob = M.example3_problem(p)
        y, U, E, S = _solve(prob, 4, tol)
        return _levels_panel(name, f"z = {z:g}", y, U, E, S, mirror=prob.y_min == 0.0, xlim=(-4.0, 4.0))

    return Figure("f6", "example 3 levels, mu0 = mu- = mu+ = 1", parallel_map(panel, list(zip(names, F6_Z))), 2, 2)


def _fig7a() -> Figure:
    d = M.get_preset("dwt-khco3").dwt()
    spec = M.dwt_heun_spectrum(d, 5)
    pn = _levels_panel("a", "a_s = 23, b_s = 360, c_s = 2 sqrt 35, d_s = 70", spec.y,
                       M.dwt_potential(d, spec.y), spec.energies, spec.states, xlim=(-math.pi / 2, math.pi / 2))
    pn.ylabel = "u"
    return Figure("f7a", "asymmetric double well (Heun)", [pn], 1, 1)


def _fig7b() -> Figure:
    d = M.get_preset("dwt-zundel").dwt()
    m = math.sqrt(d.d_s + 0.25)
    y = np.linspace(-math.pi / 2, math.pi / 2, 2002)[1:-1]
    E = [M.dwt_symmetric_spectrum(d.b_s, m, n) for n in range(6)]
    S = np.array([M.dwt_symmetric_eigenfunction(d.b_s, m, n, y) for n in range(6)])
    pn = _levels_panel("b", "a_s = 0, b_s = 110^2, c_s = 0, d_s = 2(65^2 - 1/4)", y,
                       M.dwt_potential(d, y), E, S, xlim=(-0.6, 0.6))
    pn.ylabel = "u"
    return Figure("f7b", "symmetric double well (spheroidal)", [pn], 1, 1)


def build_figure(fig_id: str, tol: float = 1e-8) -> Figure:
    if fig_id == "f1":
        return _fig123("f1", 2.0, tol)
    if fig_id == "f2":
        return _fig123("f2", 1.5, tol)
    if fig_id == "f3":
        return _fig123("f3", 1.0, tol)
    if fig_id == "f4":
        return _fig4()
    if fig_id == "f5":
        return _fig5()
    if fig_id == "f6":
        return _fig6(tol)
    if fig_id == "f7a":
        return _fig7a()
    if fig_id == "f7b":
        return _fig7b()
    raise KeyError(f"unknown figure {fig_id!r}; available: {', '.join(FIGURE_IDS)}")


def figure_csvs(fig: Figure) -> dict[str, str]:
    """File name -> CSV text: one curve file and one levels file per panel."""
    out = {}
    for pn in fig.panels:
        x = pn.curves[0].x
        same = all(c.x.shape == x.shape and np.array_equal(c.x, x) for c in pn.curves)
        if same:
            header = [pn.xlabel.split()[0]] + [c.label for c in pn.curves]
            rows = [[x[i]] + [c.y[i] for c in pn.curves] for i in range(len(x))]
            out[f"{fig.fig_id}_{pn.name}.csv"] = csv_text("curves", header, rows)
        else:  # pragma: no cover - all builders share x per panel
            rows = [[c.label, xi, yi] for c in pn.curves for xi, yi in zip(c.x, c.y)]
            out[f"{fig.fig_id}_{pn.name}.csv"] = csv_text("curves-long", ["curve", "x", "value"], rows)
        if pn.levels:
            rows = [[k, e, pn.amplitude] for k, e in enumerate(pn.levels)]
            out[f"{fig.fig_id}_{pn.name}_levels.csv"] = csv_text("levels", ["n", "E_plot", "amplitude"], rows)
    return out


# --------------------------------------------------------------------------
# SVG
# --------------------------------------------------------------------------

def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    span = hi - lo
    if not span > 0:
        return [lo]
    raw = span / (n - 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    if v != 0 and (abs(v) >= 1e4 or abs(v) < 1e-3):
        return f"{v:.1e}"
    return f"{v:.6g}"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _panel_svg(pn: Panel, ox: float, oy: float, clip_id: str) -> list[str]:
    x0, x1 = pn.xlim
    ylo, yhi = pn.ylim
    tr = (lambda v: np.log10(v)) if pn.logy else (lambda v: v)
    with np.errstate(divide="ignore", invalid="ignore"):
        t0, t1 = float(tr(ylo)), float(tr(yhi))
    if t1 <= t0:
        t1 = t0 + 1.0
    L, T = ox + _MARGIN_L, oy + _MARGIN_T
    W = _PANEL_W - _MARGIN_L - _MARGIN_R
    H = _PANEL_H - _MARGIN_T - _MARGIN_B

    def px(x):
        return L + (x - x0) / (x1 - x0) * W

    def py(v):
        return T + H - (v - t0) / (t1 - t0) * H

    out = [f'<clipPath id="{clip_id}"><rect x="{_fmt(L)}" y="{_fmt(T)}" width="{_fmt(W)}" height="{_fmt(H)}"/></clipPath>',
           f'<rect x="{_fmt(L)}" y="{_fmt(T)}" width="{_fmt(W)}" height="{_fmt(H)}" fill="none" stroke="#000000" stroke-width="1"/>',
           f'<text x="{_fmt(L + W / 2)}" y="{_fmt(oy + 18)}" text-anchor="middle" font-size="12">{_esc(pn.title)}</text>']
    for t in _nice_ticks(x0, x1):
        out.append(f'<line x1="{_fmt(px(t))}" y1="{_fmt(T + H)}" x2="{_fmt(px(t))}" y2="{_fmt(T + H + 4)}" stroke="#000000"/>')
        out.append(f'<text x="{_fmt(px(t))}" y="{_fmt(T + H + 16)}" text-anchor="middle" font-size="10">{_tick_label(t)}</text>')
    for t in _nice_ticks(t0, t1):
        lab = _tick_label(10.0**t) if pn.logy else _tick_label(t)
        out.append(f'<line x1="{_fmt(L - 4)}" y1="{_fmt(py(t))}" x2="{_fmt(L)}" y2="{_fmt(py(t))}" stroke="#000000"/>')
        out.append(f'<text x="{_fmt(L - 6)}" y="{_fmt(py(t) + 3)}" text-anchor="end" font-size="10">{lab}</text>')
    out.append(f'<text x="{_fmt(L + W / 2)}" y="{_fmt(T + H + 32)}" text-anchor="middle" font-size="11">{_esc(pn.xlabel)}</text>')
    out.append(f'<g clip-path="url(#{clip_id})" fill="none">')
    for e in pn.levels:
        v = float(tr(e))
        out.append(f'<line class="level" x1="{_fmt(L)}" y1="{_fmt(py(v))}" x2="{_fmt(L + W)}" y2="{_fmt(py(v))}" '
                   f'stroke="#9e9e9e" stroke-width="0.75"/>')
    for c in pn.curves:
        with np.errstate(divide="ignore", invalid="ignore"):
            v = tr(np.asarray(c.y, dtype=float))
        ok = np.isfinite(v)
        # cap far-off values so clipped segments keep their direction
        v = np.clip(v, t0 - 10 * (t1 - t0), t1 + 10 * (t1 - t0))
        dash = _DASH[c.style]
        attrs = f'stroke="{c.color}" stroke-width="1.2"' + (f' stroke-dasharray="{dash}"' if dash else "")
        segs, cur = [], []
        for xi, vi, good in zip(c.x, v, ok):
            if good:
                cur.append(f"{_fmt(px(xi))},{_fmt(py(vi))}")
            elif cur:
                segs.append(cur)
                cur = []
        if cur:
            segs.append(cur)
        out.append(f'<g class="curve" data-label="{_esc(c.label)}" data-kind="{c.kind}">')
        for s in segs:
            out.append(f'<polyline points="{" ".join(s)}" {attrs}/>')
        out.append("</g>")
    out.append("</g>")
    return out


def render_svg(fig: Figure) -> str:
    width = fig.cols * _PANEL_W
    height = fig.rows * _PANEL_H + 30
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" data-format="{SVG_FORMAT}" data-figure="{fig.fig_id}">',
             f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
             f'<text x="{width / 2:.2f}" y="20.00" text-anchor="middle" font-size="14">{_esc(fig.title)}</text>']
    for k, pn in enumerate(fig.panels):
        r, c = divmod(k, fig.cols)
        lines.append(f'<g class="panel" data-name="{_esc(pn.name)}">')
        lines += _panel_svg(pn, c * _PANEL_W, 30 + r * _PANEL_H, f"clip-{fig.fig_id}-{k}")
        lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_figure(fig: Figure, out_dir, formats=("csv", "svg")) -> list[Path]:
    """Write panel CSVs and/or the SVG into ``out_dir``; returns the paths in write order."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        for name, text in figure_csvs(fig).items():
            path = out_dir / name
            path.write_text(text)
            written.append(path)
    if "svg" in formats:
        path = out_dir / f"{fig.fig_id}.svg"
        path.write_text(render_svg(fig))
        written.append(path)
    return written

"""Acceptance criteria C1..C12; each records one PASS/FAIL line for the terminal summary."""

import functools
import math
import time
import xml.etree.ElementTree as ET

import numpy as np
from scipy.integrate import quad, trapezoid

from conftest import ACCEPTANCE_RESULTS
from deformed_spectra.algebra import residual_battery
from deformed_spectra.figures import build_figure, figure_csvs, render_svg
from deformed_spectra.models import (
    ModelParams,
    dwt_heun_spectrum,
    dwt_problem,
    dwt_symmetric_eigenfunction,
    dwt_symmetric_params,
    dwt_symmetric_spectrum,
    example1_eigenfunction,
    example1_perturbation_e1,
    example1_potential,
    example1_second_order,
    example1_spectrum_exact,
    example2_box_limit,
    example2_box_problem,
    example2_problem,
    example2_spectrum,
    example3_barrier_coefficient,
    example3_limits,
    example3_potential,
    fig4_difference,
    finite_dim_eigenvalues,
    fd_k_values,
    get_preset,
    pipeline_potential,
    sl2_problem,
    sl2_spectrum,
)
from deformed_spectra.spectral import Grid, refine, solve_dirichlet

SVG_NS = "{http://www.w3.org/2000/svg}"


def criterion(key):
    """Run a check returning (ok, detail), record it, then assert."""
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                ok, detail = fn(*args, **kwargs)
            except Exception as exc:
                ACCEPTANCE_RESULTS[key] = (False, f"{type(exc).__name__}: {exc}")
                raise
            ACCEPTANCE_RESULTS[key] = (bool(ok), detail)
            assert ok, detail
        return wrapper
    return deco


def rel(a, b):
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    return float(np.max(np.abs(a - b) / np.abs(b)))


def sup_diff_up_to_sign(a, b):
    return float(min(np.max(np.abs(a - b)), np.max(np.abs(a + b))))


def pointwise(U, ref, y):
    a, b = np.asarray(U(y), dtype=float), np.asarray(ref(y), dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


@criterion("C1")
def test_c1_algebra_residuals():
    t0 = time.perf_counter()
    rep = residual_battery(zs=(0.1, 0.5, 1.0, 2.0), lams=(0.0, 1.0, 2.0, 3.7), n_x=20)
    dt = time.perf_counter() - t0
    worst = max(rep["commutation"], rep["casimir"])
    return (worst < 1e-8 and dt < 5.0 and rep["cases"] == 32,
            f"max residual {worst:.2e} over {rep['cases']} cases in {dt:.2f} s")


@criterion("C2")
def test_c2_example1_closed_form():
    t0 = time.perf_counter()
    p = ModelParams(z=1.0, lam=2.0, mu_minus=1.0, mu_zero=2.0)
    spec = refine(example1_potential(p), 4, 1e-8)
    dt = time.perf_counter() - t0
    exact = [example1_spectrum_exact(p, n) for n in range(4)]
    err = rel(spec.energies, [16.0, 30.0, 48.0, 70.0])
    return (exact == [16.0, 30.0, 48.0, 70.0] and err < 1e-5 and dt < 30.0,
            f"E = {np.round(spec.energies, 8).tolist()}, max rel err {err:.1e}, {dt:.2f} s")


@criterion("C3")
def test_c3_sl2_warmup():
    p = ModelParams(lam=0.0, mu_minus=1.0, mu_zero=0.0, mu_plus=1.0)
    spec = refine(sl2_problem(p), 4, 1e-8)
    exact = [2.0 * (n + 1) for n in range(4)]
    err = rel(spec.energies, exact)
    return (err < 1e-5 and [sl2_spectrum(p, n) for n in range(4)] == exact,
            f"E = {np.round(spec.energies, 8).tolist()}, max rel err {err:.1e}")


@criterion("C4")
def test_c4_pct_pipeline():
    cases = []
    p1 = ModelParams(z=1.0, lam=2.0, mu_minus=1.0, mu_zero=2.0)
    U, (lo, hi) = pipeline_potential("example1", p1)
    cases.append(("example1", pointwise(U, example1_potential(p1).U, np.linspace(lo, hi, 202)[1:-1])))
    p1b = ModelParams(z=0.7, lam=1.0, mu_minus=1.3, mu_zero=0.4)
    U, (lo, hi) = pipeline_potential("example1", p1b)
    cases.append(("example1 b", pointwise(U, example1_potential(p1b).U, np.linspace(lo, hi, 202)[1:-1])))
    for name in ("example3-fig5", "example3-fig6"):
        p3 = get_preset(name).model_params()
        U, (lo, hi) = pipeline_potential("example3", p3)
        y = np.linspace(0.0, 6.0, 202)[1:-1]
        cases.append((name, pointwise(U, lambda v: example3_potential(p3, v), y)))
    worst = max(e for _, e in cases)
    return worst < 1e-8, ", ".join(f"{n} {e:.1e}" for n, e in cases)


@criterion("C5")
def test_c5_perturbation_series():
    p = ModelParams(z=20.0, lam=2.0, mu_minus=1.0, mu_zero=0.0, mu_plus=0.5)
    spec = refine(example1_potential(p), 4, 1e-10, max_points=2**16)
    oracle_err, ratios = [], []
    for n in range(4):
        e1 = example1_perturbation_e1(p, n, method="series")
        f = lambda y: example1_eigenfunction(p, n, y) ** 2 * math.log(1.0 / math.cos(y) ** 2)
        val, _ = quad(f, 0.0, math.pi / 2, epsabs=1e-14, epsrel=1e-13, limit=400)
        oracle = p.mu_plus / (2.0 * p.z) * val
        oracle_err.append(abs(e1 - oracle) / abs(oracle))
        e0 = example1_spectrum_exact(p.replace(mu_plus=0.0), n)
        e2 = example1_second_order(p, n)
        ratios.append(abs(e0 + e1 - spec.energies[n]) / abs(e2))
    ok = max(oracle_err) < 1e-6 and max(ratios) <= 5.0
    return ok, (f"series vs oracle max rel {max(oracle_err):.1e}; "
                f"|E0+E1-E_num|/|E2| = {', '.join(f'{r:.2f}' for r in ratios)}")


@criterion("C6")
def test_c6_fig4_trend():
    zs = np.linspace(10.0, 100.0, 46)
    bad = []
    for name in ("fig4-a", "fig4-b", "fig4-c", "fig4-d"):
        p = get_preset(name).model_params()
        for n in range(4):
            d = np.array(fig4_difference(p, n, zs))
            if not np.all(np.diff(d) < 0):
                bad.append(f"{name} n={n}")
    return not bad, "monotone decreasing on 46 z values for 4 sets x 4 levels" if not bad else "; ".join(bad)


@criterion("C7")
def test_c7_example2():
    base = ModelParams(z=1.0, lam=1.0, mu_minus=1.0, mu_zero=1.0, mu_plus=0.5)
    # (a) eta-independence of the pipeline potential
    built = [pipeline_potential("example2", base.replace(eta=eta)) for eta in (0.0, 0.5, 2.0)]
    # shared interior of the three images; the ends agree only to the map quadrature accuracy
    lo = max(r[0] for _, r in built)
    hi = min(r[1] for _, r in built)
    y = np.linspace(lo, hi, 202)[1:-1]
    curves = [np.asarray(U(y), dtype=float) for U, _ in built]
    scale = np.maximum(1.0, np.abs(curves[0]))
    eta_err = max(float(np.max(np.abs(c - curves[0]) / scale)) for c in curves[1:])
    # (b) closed form versus numeric
    spec = refine(example2_problem(base), 4, 1e-8)
    ex_err = rel(spec.energies, [example2_spectrum(base, n) for n in range(4)])
    # (c) box limit: second order plus Richardson
    box = example2_box_problem(base)
    exact = np.array([float(np.real(example2_box_limit(base, n)[0])) for n in (1, 2, 3, 4)])
    coarse = solve_dirichlet(box, Grid(1023, 0.0, math.pi), 4).energies
    fine = solve_dirichlet(box, Grid(2047, 0.0, math.pi), 4).energies
    order = (coarse - exact) / (fine - exact)
    rich = float(np.max(np.abs((4.0 * fine - coarse) / 3.0 - exact)))
    # (d) plus branch of the finite-dimensional formula
    same = True
    for n in range(4):
        m = int(2 * n + base.lam + 2)
        ks = fd_k_values(m + 1)
        vals = finite_dim_eigenvalues("ex2fd", base, m + 1)
        idx = sum(1 if k == 0 else 2 for k in ks[:ks.index(m)])
        same &= vals[idx] == example2_spectrum(base, n)
    ok = eta_err < 1e-10 and ex_err < 1e-5 and rich < 1e-8 and np.allclose(order, 4.0, rtol=1e-2) and same
    return ok, (f"(a) eta spread {eta_err:.1e}; (b) rel err {ex_err:.1e}; "
                f"(c) h^2 ratio {np.round(order, 3).tolist()}, Richardson {rich:.1e}; (d) exact match {same}")


@criterion("C8")
def test_c8_example3_limits():
    y = np.concatenate([np.linspace(-3.0, -0.05, 60), np.linspace(0.05, 3.0, 60)])
    ys = np.linspace(0.5, 3.0, 26)

    def errors(p):
        inf_err = float(np.max(np.abs(example3_potential(p.replace(z=100.0), y) - example3_limits(p, y, "infinity"))))
        zero_errs = [float(np.max(np.abs(example3_potential(p.replace(z=z), ys) - example3_limits(p, ys, "zero"))))
                     for z in (1e-1, 1e-2, 1e-3, 1e-4)]
        return inf_err, zero_errs

    msgs, ok = [], True
    # mu0 = mu- = mu+ = 1, then a pole case with mu+ = 2
    for overrides in ({}, {"mu_plus": 2.0}):
        p = get_preset("example3-fig6").model_params().replace(**overrides)
        inf_err, zero_errs = errors(p)
        shrinking = all(b < a for a, b in zip(zero_errs, zero_errs[1:])) and zero_errs[-1] < 1e-3
        ok &= inf_err < 1e-2 and shrinking
        msgs.append(f"mu0={p.mu_zero:g} mu+={p.mu_plus:g}: z=100 err {inf_err:.1e}, z->0 err {zero_errs[-1]:.1e}")
    # caption set mu0 = 3/2: reported only, the closed form itself sits O(mu0^2 y^4 / z^2) off at z = 100
    inf_err, _ = errors(get_preset("example3-fig5").model_params())
    msgs.append(f"(info) mu0=1.5: z=100 err {inf_err:.1e}")
    # mu+ = mu-: finite at y = 0 for every z > 0
    p = get_preset("example3-fig6").model_params()
    zs = np.geomspace(1e-3, 1e3, 25)
    no_pole = all(example3_barrier_coefficient(p.replace(z=z)) == 0.0
                  and math.isfinite(float(example3_potential(p.replace(z=z), np.array([0.0]))[0])) for z in zs)
    ok &= no_pole
    msgs.append(f"no pole for mu+=mu- at {len(zs)} z values: {no_pole}")
    return ok, "; ".join(msgs)


@criterion("C9")
def test_c9_dwt_heun_khco3():
    d = get_preset("dwt-khco3").dwt()
    heun = dwt_heun_spectrum(d, 5)
    prob = dwt_problem(d)
    fd = refine(prob, 5, 1e-8)
    e_err = rel(heun.energies, fd.energies)
    ref = solve_dirichlet(prob, heun.grid, 5)
    f_err = max(sup_diff_up_to_sign(a, b) for a, b in zip(heun.states, ref.states))
    return (e_err < 1e-4 and f_err < 1e-3,
            f"E = {np.round(heun.energies, 4).tolist()}, rel err {e_err:.1e}, sup-norm {f_err:.1e}")


@criterion("C10")
def test_c10_dwt_zundel():
    d = get_preset("dwt-zundel").dwt()
    m = math.sqrt(d.d_s + 0.25)
    exact = [dwt_symmetric_spectrum(d.b_s, m, n) for n in range(6)]
    fd = refine(dwt_problem(d), 6, 1e-8)
    e_err = rel(fd.energies, exact)
    y = np.linspace(-math.pi / 2, math.pi / 2, 40001)
    S = np.array([dwt_symmetric_eigenfunction(d.b_s, m, n, y) for n in range(6)])
    gram = trapezoid(S[:, None, :] * S[None, :, :], y, axis=-1)
    o_err = float(np.max(np.abs(gram - np.eye(6))))
    return e_err < 1e-4 and o_err < 1e-8, f"m = {m:.4f}, rel err {e_err:.1e}, orthonormality {o_err:.1e}"


@criterion("C11")
def test_c11_heun_vs_spheroidal():
    d = dwt_symmetric_params(10.0, 2)
    heun = dwt_heun_spectrum(d, 4).energies
    sph = [dwt_symmetric_spectrum(10.0, 2, n) for n in range(4)]
    err = rel(heun, sph)
    return err < 1e-6, f"m=2, b=10: max rel diff {err:.1e}"


# panels, curves per panel, levels per panel
FIGURE_SHAPE = {"f1": (3, 5, 4), "f2": (3, 5, 4), "f3": (3, 5, 4), "f4": (4, 4, 0),
                "f5": (1, 4, 0), "f6": (4, 5, 4), "f7a": (1, 6, 5), "f7b": (1, 7, 6)}


def _figure_problems(fig_id):
    t0 = time.perf_counter()
    fig = build_figure(fig_id)
    files = figure_csvs(fig)
    svg = render_svg(fig)
    dt = time.perf_counter() - t0
    again = build_figure(fig_id)
    problems = []
    if figure_csvs(again) != files or render_svg(again) != svg:
        problems.append("not deterministic")
    if dt > 60.0:
        problems.append(f"took {dt:.0f} s")
    n_panels, n_curves, n_levels = FIGURE_SHAPE[fig_id]
    if len(fig.panels) != n_panels:
        problems.append(f"{len(fig.panels)} panels")
    for pn in fig.panels:
        if len(pn.curves) != n_curves or len(pn.levels) != n_levels:
            problems.append(f"{pn.name}: {len(pn.curves)} curves, {len(pn.levels)} levels")
        if n_levels and np.any(np.diff(pn.levels) <= 0):
            problems.append(f"{pn.name}: levels not increasing")
        for k, c in enumerate(c for c in pn.curves if c.kind == "eigenfunction"):
            dev = np.abs(np.asarray(c.y) - pn.levels[k])
            if np.any(dev[[0, -1]] > 1e-2 * np.max(dev)):
                problems.append(f"{pn.name} psi_{k}: no boundary decay")
    root = ET.fromstring(svg)
    groups = [g for g in root.iter(SVG_NS + "g")]
    svg_panels = sum(g.get("class") == "panel" for g in groups)
    svg_curves = sum(g.get("class") == "curve" for g in groups)
    svg_levels = sum(e.get("class") == "level" for e in root.iter(SVG_NS + "line"))
    if (svg_panels, svg_curves, svg_levels) != (n_panels, n_panels * n_curves, n_panels * n_levels):
        problems.append(f"svg counts {svg_panels}/{svg_curves}/{svg_levels}")
    expected_csv = n_panels * (2 if n_levels else 1)
    if len(files) != expected_csv:
        problems.append(f"{len(files)} csv files")
    return problems, dt


@criterion("C12")
def test_c12_figure_artifacts():
    notes, bad = [], []
    for fig_id in FIGURE_SHAPE:
        problems, dt = _figure_problems(fig_id)
        notes.append(f"{fig_id} {dt:.1f}s")
        bad += [f"{fig_id}: {p}" for p in problems]
    return not bad, "; ".join(bad) if bad else "structure and determinism ok (" + ", ".join(notes) + ")"

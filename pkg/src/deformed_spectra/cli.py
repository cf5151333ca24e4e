"""Command-line interface.

Exit codes: 0 ok, 1 usage error, 2 numeric failure, 3 broken-phase parameters.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import models as M
from .algebra import residual_battery
from .figures import FIGURE_IDS, build_figure, csv_text, parallel_map, render_svg, figure_csvs
from .spectral import SolverError, refine
from .specfun import SpecialFunctionError
from .transform import TransformError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_BROKEN = 0, 1, 2, 3
JSON_FORMAT = "deformed-spectra/json/1"

_HELP = """Spectra of deformed-algebra PT-symmetric models.

\b
Exit codes:
  0  success
  1  usage error (unknown preset, bad parameter)
  2  numeric failure (solver did not converge, residual breach)
  3  broken-phase parameters (complex tau)
"""


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _parse_value(raw: str):
    low = raw.strip().lower()
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    return float(raw)


def _resolve(preset: Optional[str], params: tuple) -> M.Preset:
    """Preset plus --param overrides; ``model=...`` selects a model for inline runs."""
    base = None
    if preset:
        try:
            base = M.get_preset(preset)
        except KeyError as exc:
            raise _Fail(EXIT_USAGE, str(exc.args[0])) from None
    model = base.model if base else None
    values = dict(base.params) if base else {}
    allowed = set(M.ModelParams.field_names()) | {"a_s", "b_s", "c_s", "d_s"}
    for item in params:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep:
            raise _Fail(EXIT_USAGE, f"--param expects key=value, got {item!r}")
        if key == "model":
            model = raw.strip()
            continue
        if key not in allowed:
            raise _Fail(EXIT_USAGE, f"unknown parameter {key!r}; allowed: model, {', '.join(sorted(allowed))}")
        try:
            values[key] = _parse_value(raw)
        except ValueError:
            raise _Fail(EXIT_USAGE, f"parameter {key} needs a number, got {raw!r}") from None
    if model is None:
        raise _Fail(EXIT_USAGE, "give --preset NAME or --param model=<model> with inline parameters")
    if model not in M._SCALINGS:
        raise _Fail(EXIT_USAGE, f"unknown model {model!r}; available: {', '.join(sorted(M._SCALINGS))}")
    return M.Preset(base.name if base else "inline", model, values, base.flags if base else ())


def _problem(pre: M.Preset):
    p = pre.model_params()
    if pre.model == "example1":
        return M.example1_potential(p)
    if pre.model == "example2":
        return M.example2_problem(p)
    if pre.model == "example2-box":
        return M.example2_box_problem(p)
    if pre.model == "example3":
        return M.example3_problem(p)
    if pre.model == "sl2":
        return M.sl2_problem(p)
    if pre.model == "dwt":
        return M.dwt_problem(pre.dwt())
    raise _Fail(EXIT_USAGE, f"no problem builder for {pre.model!r}")


def _analytic(pre: M.Preset, n_states: int) -> tuple[list, list]:
    """(state labels, closed-form energies or None) for the lowest states."""
    p = pre.model_params()
    labels = list(range(n_states))
    if pre.model == "example1":
        if p.mu_plus == 0:
            return labels, [M.example1_spectrum_exact(p, n) for n in labels]
        return labels, [None] * n_states
    if pre.model == "example2":
        return labels, [float(M.example2_spectrum(p, n).real) for n in labels]
    if pre.model == "example2-box":
        labels = list(range(1, n_states + 1))
        return labels, [float(np.real(M.example2_box_limit(p, n)[0])) for n in labels]
    if pre.model == "sl2":
        return labels, [M.sl2_spectrum(p, n) for n in labels]
    if pre.model == "dwt":
        d = pre.dwt()
        if d.a_s == 0 and d.c_s == 0:
            m = math.sqrt(d.d_s + 0.25)
            return labels, [M.dwt_symmetric_spectrum(d.b_s, m, n) for n in labels]
        # the Heun reduction holds for any c_s with both walls repulsive
        return labels, list(M.dwt_heun_spectrum(d, n_states).energies)
    return labels, [None] * n_states


def _check_phase(pre: M.Preset):
    if pre.model in ("example2", "example2-box") and M.is_broken_phase(pre.model_params()):
        raise _Fail(EXIT_BROKEN, f"broken phase: mu0^2 + 2 mu+ mu- < 0 for {pre.name}; the spectrum is complex")


def _write(text: str, out: Optional[str]):
    if out in (None, "-"):
        click.echo(text, nl=False)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _run(fn):
    """Map internal failures onto the exit-code contract."""
    try:
        fn()
    except _Fail as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.code)
    except M.BrokenPhaseError as exc:
        click.echo(f"error: broken phase: {exc}", err=True)
        sys.exit(EXIT_BROKEN)
    except (SolverError, TransformError, SpecialFunctionError, M.ModelError, ArithmeticError) as exc:
        click.echo(f"error: numeric failure: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)


_common = [
    click.option("--preset", help="Preset name (see the 'presets' command)."),
    click.option("--param", "params", multiple=True, metavar="KEY=VALUE",
                 help="Override or set a parameter; repeatable. model=NAME selects the model."),
    click.option("--grid", type=click.IntRange(min=64), default=512, show_default=True,
                 help="Starting number of grid points."),
    click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=1e-8, show_default=True,
                 help="Eigenvalue tolerance."),
    click.option("--out", type=click.Path(dir_okay=True), default=None, help="Output path ('-' for stdout)."),
]


def _with_common(f, fmt_choices=("csv", "json")):
    f = click.option("--format", "fmt", type=click.Choice(fmt_choices), default=fmt_choices[0],
                     show_default=True)(f)
    for opt in reversed(_common):
        f = opt(f)
    return f


class _Group(click.Group):
    """Group that maps click's own usage errors onto exit code 1."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        if not standalone_mode:
            return super().main(args, prog_name, complete_var, False, **extra)
        try:
            rv = super().main(args, prog_name, complete_var, False, **extra)
        except click.UsageError as exc:
            exc.show()
            sys.exit(EXIT_USAGE)
        except click.ClickException as exc:
            exc.show()
            sys.exit(exc.exit_code)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        sys.exit(rv if isinstance(rv, int) else EXIT_OK)


@click.group(cls=_Group, help=_HELP)
@click.version_option(package_name="deformed-spectra")
def main():
    pass


def _spectrum_rows(pre: M.Preset, n_states: int, grid: int, tol: float):
    _check_phase(pre)
    labels, exact = _analytic(pre, n_states)
    spec = refine(_problem(pre), n_states, tol, n_start=grid)
    rows = []
    for k, lab in enumerate(labels):
        En = float(spec.energies[k])
        Ea = exact[k]
        abs_err = None if Ea is None else abs(En - Ea)
        rel_err = None if Ea is None else abs_err / max(abs(Ea), np.finfo(float).tiny)
        rows.append([lab, Ea, En, abs_err, rel_err])
    return rows, spec


@click.option("--n-states", type=click.IntRange(min=1), default=4, show_default=True)
def spectrum(preset, params, grid, tol, out, fmt, n_states):
    """Lowest eigenvalues: closed form versus numeric solve."""
    def go():
        pre = _resolve(preset, params)
        rows, spec = _spectrum_rows(pre, n_states, grid, tol)
        header = ["n", "E_analytic", "E_numeric", "abs_err", "rel_err"]
        if fmt == "csv":
            _write(csv_text("spectrum", header, rows), out)
        else:
            _write(_dump_json({"format": JSON_FORMAT, "kind": "spectrum", "preset": pre.to_dict(),
                               "grid_points": spec.grid.n_points, "tol": tol,
                               "rows": [dict(zip(header, r)) for r in rows]}), out)
    _run(go)


spectrum = main.command("spectrum")(_with_common(spectrum))


@click.option("--n-samples", type=click.IntRange(min=2), default=401, show_default=True)
@click.option("--y-min", type=float, default=None)
@click.option("--y-max", type=float, default=None)
def potential(preset, params, grid, tol, out, fmt, n_samples, y_min, y_max):
    """Sample the constant-mass potential of a preset."""
    def go():
        pre = _resolve(preset, params)
        _check_phase(pre)
        prob = _problem(pre)
        lo = prob.y_min if y_min is None else y_min
        hi = prob.y_max if y_max is None else y_max
        y = np.linspace(lo, hi, n_samples + 2)[1:-1]
        if pre.model == "example3":
            U = M.example3_potential(pre.model_params(), y)
        else:
            U = prob.U(y)
        rows = [[a, b] for a, b in zip(y, U)]
        if fmt == "csv":
            _write(csv_text("potential", ["y", "U"], rows), out)
        else:
            _write(_dump_json({"format": JSON_FORMAT, "kind": "potential", "preset": pre.to_dict(),
                               "y": y.tolist(), "U": [float(u) for u in U]}), out)
    _run(go)


potential = main.command("potential")(_with_common(potential))


@click.option("--n-samples", type=click.IntRange(min=2), default=200, show_default=True)
def compare(preset, params, grid, tol, out, fmt, n_samples):
    """Potential built by similarity + PCT versus the closed form."""
    def go():
        pre = _resolve(preset, params)
        _check_phase(pre)
        if pre.model not in ("example1", "example2", "example3"):
            raise _Fail(EXIT_USAGE, f"compare supports example1, example2 and example3, not {pre.model}")
        p = pre.model_params()
        U_pipe, (lo, hi) = M.pipeline_potential(pre.model, p)
        if pre.model == "example3":
            hi = min(hi, 6.0)
            ref = lambda y: M.example3_potential(p, y)
        else:
            ref = _problem(pre).U
        y = np.linspace(lo, hi, n_samples + 2)[1:-1]
        a = np.asarray(U_pipe(y), dtype=float)
        b = np.asarray(ref(y), dtype=float)
        diff = np.abs(a - b)
        rel = diff / np.maximum(1.0, np.abs(b))
        rows = [list(r) for r in zip(y, a, b, diff)]
        worst = float(np.max(rel))
        if fmt == "csv":
            _write(csv_text("compare", ["y", "U_pipeline", "U_closed", "abs_diff"], rows), out)
        else:
            _write(_dump_json({"format": JSON_FORMAT, "kind": "compare", "preset": pre.to_dict(),
                               "max_rel_diff": worst, "tol": tol,
                               "rows": [dict(zip(["y", "U_pipeline", "U_closed", "abs_diff"], r)) for r in rows]}), out)
        if not worst < tol:
            raise _Fail(EXIT_NUMERIC, f"pipeline and closed form differ by {worst:.3e} > tol {tol:g}")
    _run(go)


compare = main.command("compare")(_with_common(compare))


def _zscan_row(pre: M.Preset, z: float, n_states: int, grid: int, tol: float):
    p = pre.model_params().replace(z=z)
    q = M.Preset(pre.name, pre.model, {**pre.params, "z": z}, pre.flags)
    spec = refine(_problem(q), n_states, tol, n_start=grid)
    row = [z] + [float(e) for e in spec.energies]
    if pre.model == "example3":
        c = M.example3_barrier_coefficient(p)
        ys = np.linspace(1e-3 if c != 0 else 0.0, 6.0, 6001)
        U = M.example3_potential(p, ys)
        k = int(np.argmin(U))
        barrier = math.inf if c != 0 else float(M.example3_potential(p, np.array([0.0]))[0])
        row += [int(c != 0), c, barrier, float(ys[k]), float(U[k]), barrier - float(U[k])]
    return row


@click.option("--z", "z_values", required=True,
              help="Comma-separated z grid; 0 and inf select the closed-form limits.")
@click.option("--n-states", type=click.IntRange(min=1), default=4, show_default=True)
def zscan(preset, params, grid, tol, out, fmt, z_values, n_states):
    """Lowest eigenvalues and well descriptors over a grid of z."""
    def go():
        pre = _resolve(preset, params)
        _check_phase(pre)
        try:
            zs = [_parse_value(t) for t in z_values.split(",") if t.strip()]
        except ValueError:
            raise _Fail(EXIT_USAGE, f"bad z grid {z_values!r}") from None
        if not zs or any(z < 0 or math.isnan(z) for z in zs):
            raise _Fail(EXIT_USAGE, "z values must be non-negative")
        if pre.model != "example3" and any(z == 0 or math.isinf(z) for z in zs):
            raise _Fail(EXIT_USAGE, "z = 0 and z = inf limits exist only for example3")
        rows = parallel_map(lambda z: _zscan_row(pre, z, n_states, grid, tol), zs)
        header = ["z"] + [f"E_{k}" for k in range(n_states)]
        if pre.model == "example3":
            header += ["pole", "pole_coefficient", "U_at_0", "y_min", "U_min", "depth"]
        if fmt == "csv":
            _write(csv_text("zscan", header, rows), out)
        else:
            _write(_dump_json({"format": JSON_FORMAT, "kind": "zscan", "preset": pre.to_dict(),
                               "rows": [dict(zip(header, r)) for r in rows]}), out)
    _run(go)


zscan = main.command("zscan")(_with_common(zscan))


@main.command("figure")
@click.argument("fig_id", type=click.Choice(FIGURE_IDS))
@click.option("--out", type=click.Path(file_okay=False), default=".", show_default=True,
              help="Output directory.")
@click.option("--format", "fmt", type=click.Choice(["csv", "svg", "all"]), default="all", show_default=True)
@click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=1e-8, show_default=True)
def figure(fig_id, out, fmt, tol):
    """Write per-panel CSVs and an SVG for figure FIG_ID."""
    def go():
        fig = build_figure(fig_id, tol)
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if fmt in ("csv", "all"):
            for name, text in figure_csvs(fig).items():
                (out_dir / name).write_text(text)
                click.echo(str(out_dir / name))
        if fmt in ("svg", "all"):
            path = out_dir / f"{fig.fig_id}.svg"
            path.write_text(render_svg(fig))
            click.echo(str(path))
    _run(go)


@main.command("verify-algebra")
@click.option("--z", "z_values", default="0.1,0.5,1,2", show_default=True)
@click.option("--lam", "lam_values", default="0,1,2,3.7", show_default=True)
@click.option("--n-x", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--threshold", type=float, default=1e-8, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def verify_algebra(z_values, lam_values, n_x, threshold, out):
    """Commutation and Casimir residuals of the realizations as JSON."""
    def go():
        try:
            zs = [float(t) for t in z_values.split(",")]
            lams = [float(t) for t in lam_values.split(",")]
        except ValueError:
            raise _Fail(EXIT_USAGE, "z and lam must be comma-separated numbers") from None
        rep = residual_battery(zs, lams, n_x)
        ok = rep["commutation"] < threshold and rep["casimir"] < threshold
        report = {"format": JSON_FORMAT, "kind": "verify-algebra", "z": zs, "lam": lams, "n_x": n_x,
                  "threshold": threshold, "max_commutation_residual": rep["commutation"],
                  "max_casimir_residual": rep["casimir"], "cases": rep["cases"], "pass": ok}
        _write(_dump_json(report), out)
        if not ok:
            raise _Fail(EXIT_NUMERIC, "residual above threshold")
    _run(go)


@main.command("presets")
@click.option("--schema", is_flag=True, help="Print the JSON schema instead of the catalog.")
def presets(schema):
    """Print the preset catalog (or its JSON schema)."""
    click.echo(_dump_json(M.preset_schema()) if schema else M.catalog_json() + "\n", nl=False)


if __name__ == "__main__":  # pragma: no cover
    main()

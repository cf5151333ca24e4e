"""Finite-difference and shooting eigensolvers for 1D constant-mass problems.

The Hamiltonian is ``-(1/2 m0) d^2/dy^2 + U(y)`` on a finite interval with
Dirichlet walls.  Two discretizations are available:

* plain vertex-centred second-order differences (``walls=None``);
* a ground-state factored finite-volume scheme for inverse-square walls.
  Writing ``psi = w g`` with a known wall factor ``w`` turns the singular
  part of ``U`` into a smooth effective potential and keeps second-order
  convergence, so Richardson extrapolation works.

Both produce a symmetric tridiagonal matrix that is handed to LAPACK
(bisection for eigenvalues, inverse iteration for vectors).

``shooting_eigenvalue`` is an independent oracle based on Pruefer angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import simpson, solve_ivp, trapezoid
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

__all__ = [
    "SolverError",
    "WallFactor",
    "ConstantMassProblem",
    "Grid",
    "Spectrum",
    "SpectrumEntry",
    "solve_dirichlet",
    "refine",
    "shooting_eigenvalue",
    "shooting_count",
    "overlap",
    "count_nodes",
]

GRID_CAP = 2**20
# Bisect to full precision; the default eps*|T| stopping rule costs digits
# once |T| ~ 1/h^2 is large.
_BISECTION_TOL = 1e-300


class SolverError(RuntimeError):
    """Raised when an eigenvalue computation cannot deliver a result."""


@dataclass(frozen=True)
class WallFactor:
    """Ground-state factor ``w = exp(log_w)`` that vanishes at singular walls.

    ``p_left``/``p_right`` are the power-law exponents of ``w`` in the distance
    to each end; an exponent of zero means the end is a regular Dirichlet end.
    """

    log_w: Callable[[np.ndarray], np.ndarray]
    dlog_w: Callable[[np.ndarray], np.ndarray]
    d2log_w: Callable[[np.ndarray], np.ndarray]
    p_left: float
    p_right: float

    @property
    def left_wall(self) -> bool:
        return self.p_left > 0

    @property
    def right_wall(self) -> bool:
        return self.p_right > 0

    def w2_over_w(self, y):
        """``w''/w`` evaluated analytically."""
        d1 = self.dlog_w(y)
        return self.d2log_w(y) + d1 * d1

    @staticmethod
    def exponent(c: float, m0: float) -> float:
        """Decaying root of ``p(p-1) = 2 m0 c`` for a wall ``c/d^2``."""
        disc = 0.25 + 2.0 * m0 * c
        if disc < 0:
            raise ValueError("wall strength below the inverse-square critical value")
        return 0.5 + math.sqrt(disc)

    @classmethod
    def trig(cls, p_left: float, p_right: float) -> "WallFactor":
        """``sin(y)^p_left cos(y)^p_right`` on (0, pi/2)."""
        def log_w(y):
            y = np.asarray(y, dtype=float)
            with np.errstate(divide="ignore"):
                out = np.zeros_like(y)
                if p_left:
                    out = out + p_left * np.log(np.sin(y))
                if p_right:
                    out = out + p_right * np.log(np.cos(y))
            return out

        def dlog_w(y):
            y = np.asarray(y, dtype=float)
            return p_left / np.tan(y) - p_right * np.tan(y)

        def d2log_w(y):
            y = np.asarray(y, dtype=float)
            return -p_left / np.sin(y) ** 2 - p_right / np.cos(y) ** 2

        return cls(log_w, dlog_w, d2log_w, p_left, p_right)

    @classmethod
    def dwt(cls, p_left: float, p_right: float) -> "WallFactor":
        """``(1+sin y)^(p_left/2) (1-sin y)^(p_right/2)`` on (-pi/2, pi/2)."""
        a = 0.5 * (p_left - p_right)
        b = 0.5 * (p_left + p_right)

        def log_w(y):
            s = np.sin(np.asarray(y, dtype=float))
            with np.errstate(divide="ignore"):
                return 0.5 * p_left * np.log1p(s) + 0.5 * p_right * np.log1p(-s)

        def dlog_w(y):
            y = np.asarray(y, dtype=float)
            return a / np.cos(y) - b * np.tan(y)

        def d2log_w(y):
            y = np.asarray(y, dtype=float)
            c = np.cos(y)
            return a * np.tan(y) / c - b / c**2

        return cls(log_w, dlog_w, d2log_w, p_left, p_right)

    @classmethod
    def power(cls, p_left: float, p_right: float, y_min: float, y_max: float) -> "WallFactor":
        """``(y - y_min)^p_left (y_max - y)^p_right``."""
        def log_w(y):
            y = np.asarray(y, dtype=float)
            with np.errstate(divide="ignore"):
                out = np.zeros_like(y)
                if p_left:
                    out = out + p_left * np.log(y - y_min)
                if p_right:
                    out = out + p_right * np.log(y_max - y)
            return out

        def dlog_w(y):
            y = np.asarray(y, dtype=float)
            out = np.zeros_like(y)
            if p_left:
                out = out + p_left / (y - y_min)
            if p_right:
                out = out - p_right / (y_max - y)
            return out

        def d2log_w(y):
            y = np.asarray(y, dtype=float)
            out = np.zeros_like(y)
            if p_left:
                out = out - p_left / (y - y_min) ** 2
            if p_right:
                out = out - p_right / (y_max - y) ** 2
            return out

        return cls(log_w, dlog_w, d2log_w, p_left, p_right)


@dataclass(frozen=True)
class ConstantMassProblem:
    """``-(1/2 m0) psi'' + U psi = E psi`` on (y_min, y_max), psi = 0 at both ends."""

    m0: float
    potential: Callable[[np.ndarray], np.ndarray]
    y_min: float
    y_max: float
    walls: Optional[WallFactor] = None
    label: str = ""
    # U - w''/(2 m0 w) in closed form; avoids cancellation next to the walls.
    regular_potential: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if not (self.m0 > 0):
            raise ValueError("effective mass must be positive")
        if not (np.isfinite(self.y_min) and np.isfinite(self.y_max)) or self.y_max <= self.y_min:
            raise ValueError("interval must be finite and non-empty")

    @property
    def length(self) -> float:
        return self.y_max - self.y_min

    def U(self, y):
        return np.asarray(self.potential(np.asarray(y, dtype=float)), dtype=float)

    def effective_potential(self, y):
        """U minus the wall-factor kinetic term, smooth at the walls."""
        if self.walls is None:
            return self.U(y)
        if self.regular_potential is not None:
            return np.asarray(self.regular_potential(np.asarray(y, dtype=float)), dtype=float)
        return self.U(y) - self.walls.w2_over_w(y) / (2.0 * self.m0)


@dataclass(frozen=True)
class Grid:
    """Uniform interior grid.

    Cell-centred grids (used with wall factors) put nodes at the cell midpoints,
    i.e. ``endpoint_offset = h/2``.  Vertex grids place Dirichlet ends at
    ``y_min + endpoint_offset`` and ``y_max - endpoint_offset``.
    """

    n_points: int
    y_min: float
    y_max: float
    endpoint_offset: float = 0.0
    cell_centred: bool = False

    def __post_init__(self):
        if self.n_points < 64:
            raise ValueError("grid needs at least 64 points")
        if self.endpoint_offset < 0 or 2 * self.endpoint_offset >= self.y_max - self.y_min:
            raise ValueError("endpoint offset out of range")

    @classmethod
    def for_problem(cls, prob: ConstantMassProblem, n_points: int, endpoint_offset: float = 0.0) -> "Grid":
        if prob.walls is not None:
            return cls(n_points, prob.y_min, prob.y_max, 0.0, True)
        return cls(n_points, prob.y_min, prob.y_max, endpoint_offset, False)

    @property
    def h(self) -> float:
        if self.cell_centred:
            return (self.y_max - self.y_min) / self.n_points
        return (self.y_max - self.y_min - 2 * self.endpoint_offset) / (self.n_points + 1)

    @property
    def y_values(self) -> np.ndarray:
        j = np.arange(self.n_points, dtype=float)
        if self.cell_centred:
            return self.y_min + (j + 0.5) * self.h
        return self.y_min + self.endpoint_offset + (j + 1.0) * self.h

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights consistent with the discretization."""
        return np.full(self.n_points, self.h)

    def halved(self) -> "Grid":
        """Grid with exactly half the spacing."""
        n = 2 * self.n_points if self.cell_centred else 2 * self.n_points + 1
        return Grid(n, self.y_min, self.y_max, self.endpoint_offset, self.cell_centred)


@dataclass(frozen=True)
class SpectrumEntry:
    n: int
    E: float
    psi: np.ndarray
    norm_residual: float
    error: float = float("nan")


@dataclass
class Spectrum:
    """Lowest eigenpairs on a grid, ordered by energy."""

    grid: Grid
    energies: np.ndarray
    states: np.ndarray  # shape (n_states, n_points)
    errors: np.ndarray = field(default=None)
    norm_residuals: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.errors is None:
            self.errors = np.full(len(self.energies), np.nan)
        if self.norm_residuals is None:
            self.norm_residuals = np.abs(self.states**2 @ self.grid.weights - 1.0)

    def __len__(self):
        return len(self.energies)

    @property
    def y(self) -> np.ndarray:
        return self.grid.y_values

    @property
    def entries(self) -> list[SpectrumEntry]:
        return [
            SpectrumEntry(n, float(self.energies[n]), self.states[n],
                          float(self.norm_residuals[n]), float(self.errors[n]))
            for n in range(len(self.energies))
        ]


def count_nodes(psi: np.ndarray, rel_floor: float = 1e-7) -> int:
    """Interior sign changes, ignoring samples negligible against max |psi|."""
    psi = np.asarray(psi)
    keep = np.abs(psi) > rel_floor * np.max(np.abs(psi))
    s = np.sign(psi[keep])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _fix_sign(vecs: np.ndarray) -> np.ndarray:
    for v in vecs:
        big = np.abs(v) > 1e-8 * np.max(np.abs(v))
        if v[np.argmax(big)] < 0:
            v *= -1.0
    return vecs


def _tridiagonal(prob: ConstantMassProblem, grid: Grid):
    y = grid.y_values
    h = grid.h
    kin = 1.0 / (2.0 * prob.m0 * h * h)
    if prob.walls is None:
        d = 2.0 * kin + prob.U(y)
        e = np.full(grid.n_points - 1, -kin)
        return d, e
    walls = prob.walls
    faces = grid.y_min + h * np.arange(grid.n_points + 1, dtype=float)
    lw = walls.log_w(y)
    lf = np.empty(grid.n_points + 1)
    lf[1:-1] = walls.log_w(faces[1:-1])
    # Wall faces carry zero flux; regular ends get a half-cell Dirichlet face.
    lf[0] = -np.inf if walls.left_wall else walls.log_w(faces[:1])[0]
    lf[-1] = -np.inf if walls.right_wall else walls.log_w(faces[-1:])[0]
    left = np.exp(2.0 * lf[:-1] - 2.0 * lw)
    right = np.exp(2.0 * lf[1:] - 2.0 * lw)
    if not walls.left_wall:
        left[0] *= 2.0
    if not walls.right_wall:
        right[-1] *= 2.0
    d = kin * (left + right) + prob.effective_potential(y)
    e = -kin * np.exp(2.0 * lf[1:-1] - lw[:-1] - lw[1:])
    return d, e


def solve_dirichlet(prob: ConstantMassProblem, grid: Grid, n_states: int) -> Spectrum:
    """Lowest ``n_states`` eigenpairs on ``grid``."""
    if n_states < 1:
        raise ValueError("n_states must be positive")
    if 8 * n_states > grid.n_points:
        raise SolverError(f"{n_states} states are not resolvable on {grid.n_points} points")
    d, e = _tridiagonal(prob, grid)
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
        raise SolverError("potential is not finite on the grid")
    try:
        vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, n_states - 1),
                                      lapack_driver="stebz", tol=_BISECTION_TOL)
    except (np.linalg.LinAlgError, ValueError) as exc:  # pragma: no cover - LAPACK failure
        raise SolverError(f"tridiagonal eigensolver failed: {exc}") from exc
    vecs = vecs.T / np.sqrt(grid.h)
    return Spectrum(grid, vals, _fix_sign(vecs))


def refine(prob: ConstantMassProblem, n_states: int, tol: float, n_start: int = 512,
           max_points: int = GRID_CAP, endpoint_offset: float = 0.0) -> Spectrum:
    """Halve the spacing until Richardson-extrapolated eigenvalues settle.

    A Romberg table in h^2 is built from the ladder of solves; the top two
    diagonal entries define the error estimate.  Eigenvectors come from the
    finest grid.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    grid = Grid.for_problem(prob, max(n_start, 8 * n_states, 64), endpoint_offset)
    rows: list[list[np.ndarray]] = []
    last = None
    while True:
        spec = solve_dirichlet(prob, grid, n_states)
        row = [spec.energies]
        for k, prev in enumerate(rows[-1] if rows else []):
            if k > 2:
                break
            f = 4.0 ** (k + 1)
            row.append((f * row[k] - prev) / (f - 1.0))
        rows.append(row)
        if len(rows) >= 2:
            best, prev_best = row[-1], rows[-2][-1]
            err = np.abs(best - prev_best)
            scale = np.maximum(1.0, np.abs(best))
            if np.all(err < tol * scale):
                return Spectrum(grid, best, spec.states, errors=err)
            last = err
        nxt = grid.halved()
        if nxt.n_points > max_points:
            raise SolverError(
                f"grid cap {max_points} reached before tol={tol:g}; last shift {np.max(last):.3e}")
        grid = nxt


# --------------------------------------------------------------------------
# Pruefer shooting
# --------------------------------------------------------------------------

def _start_angle(prob: ConstantMassProblem, y0: float, scale: float, side: str) -> float:
    walls = prob.walls
    if walls is None or not (walls.left_wall if side == "left" else walls.right_wall):
        return 0.0 if side == "left" else math.pi
    dl = float(walls.dlog_w(np.array([y0]))[0])  # psi'/psi at the start
    theta = math.atan2(scale, dl)  # tan(theta) = scale*psi/psi'
    return theta


def _phase(prob: ConstantMassProblem, E: float, scale: float, y0: float, y1: float,
           theta0: float, rtol: float) -> float:
    two_m = 2.0 * prob.m0

    def rhs(y, th):
        s, c = math.sin(th[0]), math.cos(th[0])
        u = float(prob.U(np.array([y]))[0])
        return [scale * c * c + two_m * (E - u) / scale * s * s]

    sol = solve_ivp(rhs, (y0, y1), [theta0], method="DOP853", rtol=rtol, atol=rtol * 1e-2)
    if not sol.success:
        raise SolverError(f"shooting integration failed: {sol.message}")
    return float(sol.y[0, -1])


def _shooting_setup(prob: ConstantMassProblem, match: Optional[float]):
    L = prob.length
    s0 = 1e-7 * L
    walls = prob.walls
    a = prob.y_min + (s0 if walls is not None and walls.left_wall else 0.0)
    b = prob.y_max - (s0 if walls is not None and walls.right_wall else 0.0)
    c = 0.5 * (prob.y_min + prob.y_max) if match is None else match
    return a, b, c


def _mismatch(prob, E, match=None, rtol=1e-13) -> float:
    a, b, c = _shooting_setup(prob, match)
    scale = math.sqrt(2.0 * prob.m0 * max(abs(E), 1.0 / prob.length**2))
    tl = _phase(prob, E, scale, a, c, _start_angle(prob, a, scale, "left"), rtol)
    tr = _phase(prob, E, scale, b, c, _start_angle(prob, b, scale, "right"), rtol)
    return tl - tr


def shooting_count(prob: ConstantMassProblem, E: float, match: Optional[float] = None) -> int:
    """Number of eigenvalues strictly below ``E`` (Pruefer oscillation count)."""
    phi = _mismatch(prob, E, match)
    return 0 if phi <= 0 else int(math.ceil(phi / math.pi - 1e-12))


def shooting_eigenvalue(prob: ConstantMassProblem, bracket: Sequence[float],
                        match: Optional[float] = None, tol: float = 1e-10) -> float:
    """Eigenvalue inside ``bracket`` by two-sided Pruefer shooting.

    Left and right phases are matched at ``match`` (default: interval
    midpoint).  The phase mismatch is monotone in E and equals k*pi at the
    k-th eigenvalue, which doubles as the node count.  When the bracket holds
    several eigenvalues the lowest is returned.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not hi > lo:
        raise ValueError("bracket must be increasing")
    n_lo = shooting_count(prob, lo, match)
    n_hi = shooting_count(prob, hi, match)
    if (n_hi - n_lo) % 2 == 0:
        raise SolverError(f"no sign change in bracket ({n_hi - n_lo} eigenvalues inside)")
    target = n_lo * math.pi
    f = lambda E: _mismatch(prob, E, match) - target
    return brentq(f, lo, hi, xtol=tol * max(1.0, abs(lo), abs(hi)) * 1e-2, rtol=1e-15, maxiter=200)


def overlap(psi_a, psi_b, grid, rule: str = "native") -> float:
    """Inner product of two sampled real functions on a common grid."""
    psi_a = np.asarray(psi_a)
    psi_b = np.asarray(psi_b)
    y = grid.y_values if isinstance(grid, Grid) else np.asarray(grid)
    if psi_a.shape != psi_b.shape or psi_a.shape != y.shape:
        raise ValueError("grid mismatch")
    prod = psi_a * psi_b
    if rule == "native":
        if not isinstance(grid, Grid):
            raise ValueError("native rule needs a Grid")
        return float(prod @ grid.weights)
    if rule == "trapezoid":
        return float(trapezoid(prod, y))
    if rule == "simpson":
        return float(simpson(prod, x=y))
    raise ValueError(f"unknown rule {rule!r}")

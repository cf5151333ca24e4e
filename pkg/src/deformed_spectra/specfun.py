"""Special functions used by the closed-form spectra.

Gamma-ratio products are handled in the log domain.  The confluent Heun
function follows the Maple convention and is normalized to 1 at q = 0.
Angular spheroidal functions use an orthonormal Gegenbauer (associated
Legendre) basis, which also covers non-integer orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "SpecialFunctionError",
    "log_gamma",
    "hyp2f1_terminating",
    "generalized_laguerre",
    "pt_normalization",
    "HeunParams",
    "heun_series_coefficients",
    "heun_series",
    "heun_confluent",
    "heun_profile",
    "heun_boundary_functional",
    "heun_boundary_value",
    "extrapolate_to_one",
    "SpheroidalIndex",
    "spheroidal_eigenvalue",
    "spheroidal_coefficients",
    "spheroidal_function",
]


class SpecialFunctionError(ArithmeticError):
    """Evaluation failed (pole, non-convergence, truncation cap)."""


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"log_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def hyp2f1_terminating(n: int, b: float, c: float, x):
    """2F1(-n, b; c; x) as a finite sum of n+1 terms.

    Terms are accumulated with ``math.fsum`` (exactly rounded), so the result
    does not depend on summation order.
    """
    if n < 0 or int(n) != n:
        raise ValueError("n must be a non-negative integer")
    n = int(n)
    for k in range(n):
        if c + k == 0:
            raise SpecialFunctionError(f"c={c} hits a pole at term {k + 1}")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(xs)
    for i, xv in enumerate(xs):
        term = 1.0
        terms = [1.0]
        for k in range(n):
            term *= (k - n) * (b + k) / ((c + k) * (k + 1)) * xv
            terms.append(term)
        out[i] = math.fsum(terms)
    return float(out[0]) if np.ndim(x) == 0 else out


def generalized_laguerre(n: int, a: float, x):
    """L_n^a(x) by the three-term recurrence."""
    if n < 0:
        raise ValueError("n must be non-negative")
    x = np.asarray(x, dtype=float)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for k in range(n):
        prev, cur = cur, ((2 * k + 1 + a - x) * cur - (k + a) * prev) / (k + 1)
    return float(cur) if cur.ndim == 0 else cur


def pt_normalization(n: int, alpha: float, beta: float) -> float:
    """Normalization of sin^a cos^b 2F1(-n, n+a+b; b+1/2; cos^2) on (0, pi/2)."""
    s = 2 * n + alpha + beta
    args = (n + beta + 0.5, n + alpha + beta, n + alpha + 0.5, n + 1.0, beta + 0.5)
    if min(args) <= 0 or s <= 0:
        raise SpecialFunctionError("Gamma pole in normalization")
    lg = (math.log(2.0 * s) + log_gamma(args[0]) + log_gamma(args[1])
          - log_gamma(args[2]) - log_gamma(args[3]) - 2.0 * log_gamma(args[4]))
    return math.exp(0.5 * lg)


# --------------------------------------------------------------------------
# Confluent Heun
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HeunParams:
    """Parameters of HeunC(alpha, beta, gamma, delta, eta; q), Maple convention.

    The ODE is
    ``q(q-1) Y'' + (alpha q^2 - p1 q - (beta+1)) Y' - (Q1 q + Q0) Y / 2 = 0``.
    """

    alpha: float
    beta: float
    gamma: float
    delta: float
    eta: float

    @property
    def p1(self) -> float:
        return -self.beta + self.alpha - self.gamma - 2.0

    @property
    def q1(self) -> float:
        return (-self.beta - self.gamma - 2.0) * self.alpha - 2.0 * self.delta

    @property
    def q0(self) -> float:
        return ((self.beta + 1.0) * self.alpha + (-self.gamma - 1.0) * self.beta
                - 2.0 * self.eta - self.gamma)

    def rhs(self, q, yv):
        y, dy = yv
        num = (self.alpha * q * q - self.p1 * q - (self.beta + 1.0)) * dy \
            - 0.5 * (self.q1 * q + self.q0) * y
        return [dy, -num / (q * (q - 1.0))]


def heun_series_coefficients(p: HeunParams, n_terms: int) -> np.ndarray:
    """Frobenius coefficients c_k of the solution analytic at 0 with c_0 = 1."""
    if p.beta + 1.0 <= 0 and float(p.beta + 1.0).is_integer():
        raise SpecialFunctionError("beta is a negative integer; no analytic solution at 0")
    c = np.zeros(n_terms)
    c[0] = 1.0
    prev = 0.0
    for k in range(n_terms - 1):
        num = (k * (k - 1) - p.p1 * k - 0.5 * p.q0) * c[k] + (p.alpha * (k - 1) - 0.5 * p.q1) * prev
        prev = c[k]
        c[k + 1] = num / ((k + 1) * (k + p.beta + 1.0))
    return c


def heun_series(p: HeunParams, q: float, max_terms: int = 4000):
    """Series value, derivative and cancellation ratio sum|t| / |sum t|."""
    if not 0 <= q < 1:
        raise ValueError("series needs 0 <= q < 1")
    if q == 0:
        c = heun_series_coefficients(p, 2)
        return 1.0, float(c[1]), 1.0
    terms, dterms = [], []
    ck_prev, ck, qk = 0.0, 1.0, 1.0
    running, quiet = 0.0, 0
    for k in range(max_terms):
        t = ck * qk
        terms.append(t)
        dterms.append(k * t / q)
        running += t
        if abs(t) <= 1e-17 * max(abs(running), 1e-300):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
        num = (k * (k - 1) - p.p1 * k - 0.5 * p.q0) * ck + (p.alpha * (k - 1) - 0.5 * p.q1) * ck_prev
        ck_prev, ck = ck, num / ((k + 1) * (k + p.beta + 1.0))
        qk *= q
    else:
        raise SpecialFunctionError(f"Heun series did not converge at q={q}")
    val = math.fsum(terms)
    ratio = math.fsum(abs(t) for t in terms) / max(abs(val), 1e-300)
    return val, math.fsum(dterms), ratio


_SERIES_MAX_Q = 0.5
_SERIES_MAX_RATIO = 1e4


def _series_start(p: HeunParams, q: float):
    """Largest q0 <= min(q, 0.5) where the series is well conditioned."""
    q0 = min(q, _SERIES_MAX_Q)
    while True:
        val, der, ratio = heun_series(p, q0)
        if ratio < _SERIES_MAX_RATIO or q0 < 1e-3:
            return q0, val, der
        q0 *= 0.5


def _integrate(p: HeunParams, q0: float, y0, q_eval, rtol: float):
    q_eval = np.atleast_1d(np.asarray(q_eval, dtype=float))
    q_end = float(np.max(q_eval))
    if q_end <= q0:
        return np.array([y0[0]] * len(q_eval)), np.array([y0[1]] * len(q_eval))
    sol = solve_ivp(p.rhs, (q0, q_end), list(y0), method="DOP853", rtol=rtol,
                    atol=1e-300, dense_output=True)
    if not sol.success:
        raise SpecialFunctionError(f"Heun continuation failed: {sol.message}")
    out = sol.sol(q_eval)
    return out[0], out[1]


def heun_confluent(p: HeunParams, q: float, rtol: float = 1e-13) -> float:
    """HeunC(alpha, beta, gamma, delta, eta; q) with HeunC(0) = 1, for 0 <= q < 1."""
    if not 0 <= q < 1:
        raise ValueError("q must lie in [0, 1)")
    q0, val, der = _series_start(p, q)
    if q0 >= q:
        return val
    y, _ = _integrate(p, q0, (val, der), [q], rtol)
    return float(y[0])


def heun_profile(p: HeunParams, q_grid, rtol: float = 1e-13) -> np.ndarray:
    """HeunC on an increasing grid in [0, 1): series near 0, ODE beyond."""
    q_grid = np.asarray(q_grid, dtype=float)
    if np.any(q_grid < 0) or np.any(q_grid >= 1) or np.any(np.diff(q_grid) < 0):
        raise ValueError("grid must be increasing inside [0, 1)")
    q0, val, der = _series_start(p, float(q_grid[-1]))
    out = np.empty_like(q_grid)
    near = q_grid <= q0
    out[near] = [heun_series(p, float(q))[0] for q in q_grid[near]]
    if np.any(~near):
        out[~near], _ = _integrate(p, q0, (val, der), q_grid[~near], rtol)
    return out


# Small offsets keep the log companion at q = 1 below the fit error.
_BOUNDARY_DELTAS = (1e-4, 1e-5, 1e-6)


def extrapolate_to_one(deltas, values) -> float:
    """Constant term of the polynomial through (delta_i, values_i)."""
    deltas = np.asarray(deltas, dtype=float)
    coef = np.polyfit(deltas, np.asarray(values, dtype=float), len(deltas) - 1)
    value = float(coef[-1])
    if not np.isfinite(value):
        raise SpecialFunctionError("boundary extrapolation produced a non-finite value")
    return value


def heun_boundary_value(p: HeunParams, deltas=_BOUNDARY_DELTAS, rtol: float = 1e-13) -> float:
    """Analytic part of HeunC at q -> 1, from samples at q = 1 - delta."""
    deltas = np.sort(np.asarray(deltas, dtype=float))[::-1]
    return extrapolate_to_one(deltas, heun_profile(p, 1.0 - deltas, rtol))


def heun_boundary_functional(params_of: Callable[[float], HeunParams], eps: float,
                             deltas=_BOUNDARY_DELTAS, rtol: float = 1e-13) -> float:
    """Extrapolated value of HeunC at q -> 1 for the parameters at ``eps``.

    The solution is sampled at q = 1 - delta and a polynomial in delta is
    fitted through the samples; its constant term is the analytic part at 1,
    whose sign changes bracket eigenvalues.
    """
    return heun_boundary_value(params_of(eps), deltas, rtol)


# --------------------------------------------------------------------------
# Angular spheroidal functions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SpheroidalIndex:
    """Order ``m`` (real, >= 0), degree ``l = m + n`` and parameter ``b``.

    The eigenproblem is
    ``-[(1-s^2) S']' + m^2/(1-s^2) S + b (1-s^2) S = lam S``,
    which is the oblate-sign convention of Flammer with c^2 = -b.
    """

    m: float
    l: float
    b: float

    def __post_init__(self):
        if self.m < 0 or self.b < 0:
            raise ValueError("need m >= 0 and b >= 0")
        n = self.l - self.m
        if n < -1e-12 or abs(n - round(n)) > 1e-9:
            raise ValueError("l - m must be a non-negative integer")

    @property
    def n(self) -> int:
        return int(round(self.l - self.m))


_TRUNC_CAP = 8192


def _gegenbauer_a(m: float, r: np.ndarray) -> np.ndarray:
    return np.sqrt((r + 1.0) * (r + 2.0 * m + 1.0) / ((2.0 * r + 2.0 * m + 1.0) * (2.0 * r + 2.0 * m + 3.0)))


def _parity_matrix(m: float, b: float, parity: int, size: int):
    r = parity + 2 * np.arange(size)
    a = _gegenbauer_a(m, r.astype(float))
    with np.errstate(invalid="ignore", divide="ignore"):  # r = 0 entry is discarded
        a_prev = np.where(r > 0, _gegenbauer_a(m, (r - 1).astype(float)), 0.0)
    l = m + r
    diag = l * (l + 1.0) + b * (1.0 - a * a - a_prev * a_prev)
    a_next = _gegenbauer_a(m, (r + 1).astype(float))
    off = -b * (a * a_next)[:-1]
    return diag, off


@lru_cache(maxsize=256)
def _spheroidal_solve(m: float, b: float, parity: int, k: int):
    """Eigenvalue and coefficient vector of the k-th state in one parity class."""
    size = max(k + 16, int(2.0 * math.sqrt(b)) + 16)
    last = None
    while size <= _TRUNC_CAP:
        diag, off = _parity_matrix(m, b, parity, size)
        vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(k, k))
        lam = float(vals[0])
        if last is not None and abs(lam - last) < 1e-10 * max(1.0, abs(lam)):
            vec = vecs[:, 0]
            if abs(vec[-1]) > 1e-12:
                size *= 2
                last = lam
                continue
            return lam, vec
        last = lam
        size *= 2
    raise SpecialFunctionError("spheroidal truncation cap reached")


def spheroidal_eigenvalue(idx: SpheroidalIndex) -> float:
    """Separation constant for the angular spheroidal equation."""
    n = idx.n
    return _spheroidal_solve(float(idx.m), float(idx.b), n % 2, n // 2)[0]


def _basis_values(m: float, parity: int, size: int, s: np.ndarray) -> np.ndarray:
    """Orthonormal (1-s^2)^(m/2) p_r(s) for r = parity, parity+2, ..."""
    r_max = parity + 2 * (size - 1)
    log_p0 = -0.5 * (0.5 * math.log(math.pi) + math.lgamma(m + 1.0) - math.lgamma(m + 1.5))
    p = np.empty((r_max + 1, s.size))
    p[0] = math.exp(log_p0)
    a = _gegenbauer_a(m, np.arange(r_max + 1, dtype=float))
    if r_max >= 1:
        p[1] = s * p[0] / a[0]
    for r in range(1, r_max):
        p[r + 1] = (s * p[r] - a[r - 1] * p[r - 1]) / a[r]
    with np.errstate(divide="ignore"):
        env = np.exp(0.5 * m * np.log1p(-s * s)) if m else np.ones_like(s)
    return p[parity::2] * env


def spheroidal_coefficients(idx: SpheroidalIndex) -> np.ndarray:
    """Expansion coefficients in the orthonormal basis, sign fixed so S > 0 near s = +1."""
    n = idx.n
    parity = n % 2
    _, vec = _spheroidal_solve(float(idx.m), float(idx.b), parity, n // 2)
    r = parity + 2 * np.arange(len(vec))
    sign = np.sign(np.sum(vec * _poly_at_one(float(idx.m), r)))
    return np.array(vec) * (sign if sign != 0 else 1.0)


def _poly_at_one(m: float, r: np.ndarray) -> np.ndarray:
    """p_r(1) up to a common positive factor, computed with rescaling."""
    r_max = int(np.max(r))
    a = _gegenbauer_a(m, np.arange(r_max + 1, dtype=float))
    logp = np.zeros(r_max + 1)
    prev, cur, scale = 0.0, 1.0, 0.0
    for k in range(r_max):
        nxt = (cur - (a[k - 1] * prev if k > 0 else 0.0)) / a[k]
        prev, cur = cur, nxt
        if cur > 1e200:
            prev, cur = prev * 1e-200, cur * 1e-200
            scale += 200.0 * math.log(10.0)
        logp[k + 1] = math.log(cur) + scale
    return np.exp(logp[r] - np.max(logp[r]))


def spheroidal_function(idx: SpheroidalIndex, s):
    """Normalized angular spheroidal function, unit L^2 norm on [-1, 1]."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(np.abs(s_arr) > 1):
        raise ValueError("|s| must not exceed 1")
    vec = spheroidal_coefficients(idx)
    basis = _basis_values(float(idx.m), idx.n % 2, len(vec), s_arr)
    out = vec @ basis
    return float(out[0]) if np.ndim(s) == 0 else out

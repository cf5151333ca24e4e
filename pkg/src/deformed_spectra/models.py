"""Catalog of the solvable models: potentials, exact spectra, eigenfunctions,
perturbative corrections, finite-dimensional comparison formulas and limits.

Energy units follow each model's constant-mass equation: Pöschl-Teller type
models use ``-(1/2 m0) d^2/dy^2 + U`` with ``m0 = 1/(mu- z)``; DWT models use
the scaled equation ``-1/2 psi'' + u psi = eps psi``.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import betaln, digamma, eval_jacobi, roots_jacobi

from .algebra import ExpPoly, compose, const, exp_ax, make_pt_realization
from .spectral import ConstantMassProblem, Grid, Spectrum, WallFactor, _fix_sign
from .specfun import (
    HeunParams,
    SpheroidalIndex,
    extrapolate_to_one,
    generalized_laguerre,
    heun_profile,
    hyp2f1_terminating,
    log_gamma,
    pt_normalization,
    spheroidal_eigenvalue,
    spheroidal_function,
    _BOUNDARY_DELTAS,
)
from .transform import (
    generic_hamiltonian,
    pct_forward,
    pct_potential,
    pct_range,
    pdm_from_operator,
    restrict_to_imaginary_axis,
)

__all__ = [
    "ModelError",
    "BrokenPhaseError",
    "ModelParams",
    "PtParams",
    "DwtParams",
    "tau_of",
    "alpha_beta_from",
    "example1_potential",
    "example1_scaled_potential",
    "example1_spectrum_exact",
    "example1_eigenfunction",
    "example1_perturbation_e1",
    "example1_second_order",
    "sl2_kappa",
    "sl2_spectrum",
    "sl2_eigenfunction",
    "sl2_problem",
    "example2_spectrum",
    "example2_problem",
    "example2_box_limit",
    "example2_box_problem",
    "is_broken_phase",
    "example3_potential",
    "example3_limits",
    "example3_barrier_coefficient",
    "example3_problem",
    "pipeline_potential",
    "fd_k_values",
    "finite_dim_eigenvalues",
    "fig4_difference",
    "dwt_potential",
    "dwt_exponents",
    "dwt_problem",
    "dwt_heun_params",
    "dwt_heun_count",
    "dwt_heun_spectrum",
    "dwt_symmetric_spectrum",
    "dwt_symmetric_eigenfunction",
    "Preset",
    "PRESETS",
    "get_preset",
    "preset_schema",
    "catalog_json",
]


class ModelError(ValueError):
    """Parameters outside the regime where a formula applies."""


class BrokenPhaseError(ModelError):
    """tau^2 < 0: the spectrum forms complex-conjugate pairs."""


@dataclass(frozen=True)
class ModelParams:
    """Couplings shared by all models; unused fields are ignored."""

    z: float = 1.0
    lam: float = 2.0
    mu_minus: float = 1.0
    mu_zero: float = 0.0
    mu_plus: float = 0.0
    eta: float = 0.0
    g: float = 1.0
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0
    c4: float = 0.0
    m0: float = 1.0

    def replace(self, **kw) -> "ModelParams":
        return replace(self, **kw)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class PtParams:
    alpha: float
    beta: float
    tau: complex
    kappa: float
    bound: bool


@dataclass(frozen=True)
class DwtParams:
    a_s: float = 0.0
    b_s: float = 0.0
    c_s: float = 0.0
    d_s: float = 0.0

    @classmethod
    def from_couplings(cls, g: float, z: float, c1: float, c2: float, c3: float, c4: float) -> "DwtParams":
        """a_s = 2 c1/(g z), ... for the trigonometric double well."""
        if g * z == 0:
            raise ModelError("g z must be non-zero")
        f = 2.0 / (g * z)
        return cls(f * c1, f * c2, f * c3, f * c4)

    @classmethod
    def from_model(cls, p: ModelParams) -> "DwtParams":
        return cls.from_couplings(p.g, p.z, p.c1, p.c2, p.c3, p.c4)

    def mirrored(self) -> "DwtParams":
        """Parameters of u(-y)."""
        return DwtParams(-self.a_s, self.b_s, -self.c_s, self.d_s)


# --------------------------------------------------------------------------
# Pöschl-Teller family (examples 1 and 2)
# --------------------------------------------------------------------------

def tau_of(p: ModelParams) -> complex:
    """sqrt(mu0^2 + 2 mu+ mu-), imaginary when the radicand is negative."""
    disc = p.mu_zero**2 + 2.0 * p.mu_plus * p.mu_minus
    return math.sqrt(disc) if disc >= 0 else 1j * math.sqrt(-disc)


def is_broken_phase(p: ModelParams) -> bool:
    return p.mu_zero**2 + 2.0 * p.mu_plus * p.mu_minus < 0


def _alpha(lam: float) -> float:
    c = 0.75 + lam * (lam + 2.0)
    disc = 0.25 + c
    if disc < 0:
        raise ModelError("negative discriminant in the alpha quadratic")
    return 0.5 + math.sqrt(disc)


def alpha_beta_from(p: ModelParams, which: str = "example1") -> PtParams:
    """Larger roots of alpha(alpha-1) = 3/4 + lam(lam+2), beta(beta-1) = q^2 - 1/4.

    q = mu0/(mu- z) for example 1 and tau/(mu- z) for example 2.
    """
    if p.mu_minus == 0 or p.z == 0:
        raise ModelError("mu- and z must be non-zero")
    tau = tau_of(p)
    if which == "example1":
        q = p.mu_zero / (p.mu_minus * p.z)
    elif which == "example2":
        if isinstance(tau, complex):
            raise BrokenPhaseError("tau is imaginary (mu0^2 + 2 mu+ mu- < 0)")
        q = tau / (p.mu_minus * p.z)
    else:
        raise ValueError(f"unknown model {which!r}")
    alpha = _alpha(p.lam)
    beta = 0.5 + abs(q)
    k2 = (p.mu_zero**2 + p.mu_plus * p.mu_minus) / p.mu_minus**2
    kappa = math.sqrt(k2) if k2 >= 0 else math.nan
    return PtParams(alpha, beta, tau, kappa, alpha > 1 and beta > 1)


def _pt_problem(p: ModelParams, beta: float, shift: float, log_coeff: float, label: str) -> ConstantMassProblem:
    """(mu- z/2)[b(b-1)sec^2 + a(a-1)csc^2] + log_coeff ln sec^2 - shift on (0, pi/2)."""
    a = _alpha(p.lam)
    half = 0.5 * p.mu_minus * p.z
    if half <= 0:
        raise ModelError("mu- z must be positive for a bound problem")

    def U(y):
        y = np.asarray(y, dtype=float)
        c2 = np.cos(y) ** 2
        return half * (beta * (beta - 1.0) / c2 + a * (a - 1.0) / np.sin(y) ** 2) - log_coeff * np.log(c2) - shift

    def R(y):
        return half * (a + beta) ** 2 - log_coeff * np.log(np.cos(np.asarray(y, dtype=float)) ** 2) - shift

    return ConstantMassProblem(1.0 / (p.mu_minus * p.z), U, 0.0, math.pi / 2, WallFactor.trig(a, beta), label, R)


def example1_potential(p: ModelParams) -> ConstantMassProblem:
    """Constant-mass problem of example 1 on the (0, pi/2) cell."""
    pt = alpha_beta_from(p, "example1")
    return _pt_problem(p, pt.beta, p.mu_zero**2 / (2.0 * p.mu_minus * p.z),
                       p.mu_plus / (2.0 * p.z), "example1")


def example1_scaled_potential(p: ModelParams, y):
    """2 U / (mu- z), even in y, for plots on (-pi/2, pi/2)."""
    prob = example1_potential(p)
    y = np.abs(np.asarray(y, dtype=float))
    return 2.0 * prob.U(y) / (p.mu_minus * p.z)


def example1_spectrum_exact(p: ModelParams, n: int) -> float:
    """E_n = (mu- z/2)(2n + alpha + beta)^2 - mu0^2/(2 mu- z), valid for mu+ = 0."""
    if p.mu_plus != 0:
        raise ModelError("closed-form spectrum requires mu+ = 0")
    pt = alpha_beta_from(p, "example1")
    s = 2 * n + pt.alpha + pt.beta
    return 0.5 * p.mu_minus * p.z * s * s - p.mu_zero**2 / (2.0 * p.mu_minus * p.z)


def _pt_eigenfunction(alpha: float, beta: float, n: int, y):
    y = np.asarray(y, dtype=float)
    c2 = np.cos(y) ** 2
    norm = pt_normalization(n, alpha, beta)
    with np.errstate(divide="ignore", invalid="ignore"):
        env = np.exp(alpha * np.log(np.abs(np.sin(y))) + beta * np.log(np.cos(y)))
    return norm * env * hyp2f1_terminating(n, n + alpha + beta, beta + 0.5, c2)


def example1_eigenfunction(p: ModelParams, n: int, y):
    """N sin^a cos^b 2F1(-n, n+a+b; b+1/2; cos^2 y), unit norm on (0, pi/2)."""
    pt = alpha_beta_from(p, "example1")
    return _pt_eigenfunction(pt.alpha, pt.beta, n, y)


def _poly_coefficients(n: int, alpha: float, beta: float) -> np.ndarray:
    """A_m with 2F1(-n, n+a+b; b+1/2; v) = sum A_m v^m."""
    out = np.empty(n + 1)
    for m in range(n + 1):
        lg = (math.lgamma(n + 1) - math.lgamma(m + 1) - math.lgamma(n - m + 1)
              + log_gamma(n + alpha + beta + m) - log_gamma(n + alpha + beta)
              + log_gamma(beta + 0.5) - log_gamma(beta + 0.5 + m))
        out[m] = (-1) ** m * math.exp(lg)
    return out


def example1_perturbation_e1(p: ModelParams, n: int, k_max: int = 500, tol: float = 1e-10,
                             method: str = "closed") -> float:
    """First-order shift from the (mu+/2z) ln sec^2 y term.

    ``closed`` sums the power series of -ln cos^2 analytically (digamma form);
    ``series`` sums it term by term in k with convergence acceleration and
    stops once the accelerated sum changes by less than ``tol`` (relative).
    """
    if p.mu_plus == 0:
        return 0.0
    pt = alpha_beta_from(p, "example1")
    a, b = pt.alpha, pt.beta
    A = _poly_coefficients(n, a, b)
    norm2 = pt_normalization(n, a, b) ** 2
    pref = p.mu_plus / (2.0 * p.z) * norm2
    if method == "closed":
        total = 0.0
        for m in range(n + 1):
            for mp in range(n + 1):
                Q = b + m + mp
                beta_half = 0.5 * math.exp(betaln(a + 0.5, Q + 0.5))
                total += A[m] * A[mp] * beta_half * (digamma(a + Q + 1.0) - digamma(Q + 0.5))
        return pref * total
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    import mpmath as mp_

    # accelerators need terms at working precision, not float-rounded
    def term(k):
        s = mp_.mpf(0)
        for m in range(n + 1):
            for mq in range(n + 1):
                s += A[m] * A[mq] * mp_.beta(a + k + 0.5, b + m + mq + 0.5)
        return s / (2 * k)

    # plain partial sums first; the tail decays algebraically when beta ~ 1/2,
    # so fall back to Levin-type acceleration of the full series
    partial, inc = mp_.mpf(0), mp_.mpf(0)
    for k in range(1, min(k_max, 64) + 1):
        inc = term(k)
        partial += inc
        if abs(inc) < tol * abs(partial):
            return float(pref * partial)
    with mp_.workdps(30):
        total = mp_.nsum(term, [1, mp_.inf], method="levin")
        check = mp_.nsum(term, [1, mp_.inf], method="richardson")
    if abs(total - check) > tol * abs(total):
        raise ModelError(f"perturbation series not converged by k={k_max}; last increment {float(inc):.3e}")
    return float(pref * total)


def example1_second_order(p: ModelParams, n: int, n_basis: int = 80, n_quad: int = 600) -> float:
    """Second-order shift sum_j |<j|W|n>|^2 / (E_n - E_j), W = (mu+/2z) ln sec^2 y.

    Matrix elements use Gauss-Jacobi quadrature in x = 1 - 2 cos^2 y, in which the
    unperturbed states are Jacobi polynomials times the quadrature weight.
    """
    if p.mu_plus == 0:
        return 0.0
    pt = alpha_beta_from(p, "example1")
    a, b = pt.beta - 0.5, pt.alpha - 0.5
    x, w = roots_jacobi(n_quad, a, b)
    f = -np.log(0.5 * (1.0 - x))  # ln sec^2 y with cos^2 y = (1 - x)/2
    P = np.array([eval_jacobi(j, a, b, x) for j in range(n_basis)])
    P /= np.sqrt((P * P) @ w)[:, None]
    col = (P * f) @ (w * P[n])
    coupling = p.mu_plus / (2.0 * p.z)
    energies = 0.5 * p.mu_minus * p.z * (2 * np.arange(n_basis) + pt.alpha + pt.beta) ** 2
    mask = np.arange(n_basis) != n
    return float(np.sum(coupling**2 * col[mask] ** 2 / (energies[n] - energies[mask])))


# --------------------------------------------------------------------------
# sl(2, R) warm-up
# --------------------------------------------------------------------------

def sl2_kappa(p: ModelParams) -> float:
    if p.mu_minus <= 0:
        raise ModelError("mu- must be positive")
    k2 = (p.mu_zero**2 + p.mu_minus * p.mu_plus) / p.mu_minus**2
    if k2 < 0:
        raise ModelError("kappa^2 < 0: outside the bound regime")
    return math.sqrt(k2)


def sl2_spectrum(p: ModelParams, n: int) -> float:
    """mu- kappa (2(n+1) + lam)."""
    return p.mu_minus * sl2_kappa(p) * (2.0 * (n + 1) + p.lam)


def sl2_eigenfunction(p: ModelParams, n: int, u):
    """N u^(lam+3/2) exp(-kappa u^2/2) L_n^(lam+1)(kappa u^2), unit norm on (0, inf)."""
    k = sl2_kappa(p)
    u = np.asarray(u, dtype=float)
    lg = math.log(2.0) + (p.lam + 2.0) * math.log(k) + math.lgamma(n + 1) - log_gamma(n + p.lam + 2.0)
    with np.errstate(divide="ignore"):
        env = np.exp((p.lam + 1.5) * np.log(u) - 0.5 * k * u * u)
    return math.exp(0.5 * lg) * env * generalized_laguerre(n, p.lam + 1.0, k * u * u)


def sl2_problem(p: ModelParams, u_max: Optional[float] = None) -> ConstantMassProblem:
    """Harmonic oscillator plus inverse-square term on (0, u_max)."""
    k = sl2_kappa(p)
    if k == 0:
        raise ModelError("kappa = 0: no bound states")
    u_max = 12.0 / math.sqrt(k) if u_max is None else u_max
    mm = p.mu_minus
    c = mm * (3.0 + 4.0 * p.lam * (p.lam + 2.0)) / 8.0
    pw = WallFactor.exponent(c, 1.0 / mm)

    def U(u):
        u = np.asarray(u, dtype=float)
        return 0.5 * mm * k * k * u * u + c / (u * u)

    def R(u):
        u = np.asarray(u, dtype=float)
        return 0.5 * mm * k * k * u * u

    return ConstantMassProblem(1.0 / mm, U, 0.0, u_max, WallFactor.power(pw, 0.0, 0.0, u_max), "sl2", R)


# --------------------------------------------------------------------------
# Example 2
# --------------------------------------------------------------------------

def example2_spectrum(p: ModelParams, n: int):
    """(mu- z/2)(2n+lam+2)^2 + tau (2n+lam+2); complex when tau is imaginary."""
    s = 2 * n + p.lam + 2.0
    return 0.5 * p.mu_minus * p.z * s * s + tau_of(p) * s


def example2_problem(p: ModelParams) -> ConstantMassProblem:
    pt = alpha_beta_from(p, "example2")
    tau = float(pt.tau)
    return _pt_problem(p, pt.beta, tau * tau / (2.0 * p.mu_minus * p.z), 0.0, "example2")


def example2_box_limit(p: ModelParams, n: int):
    """Large-eta limit: flat box on (0, pi); phi_n renormalized to unit norm."""
    if n < 1:
        raise ModelError("box states start at n = 1")
    tau = tau_of(p)
    eps = 0.5 * p.mu_minus * p.z * n * n - tau * tau / (2.0 * p.mu_minus * p.z)
    if isinstance(eps, complex) and eps.imag == 0:
        eps = eps.real

    def phi(y):
        return math.sqrt(2.0 / math.pi) * np.sin(n * np.asarray(y, dtype=float))

    return eps, phi


def example2_box_problem(p: ModelParams) -> ConstantMassProblem:
    if is_broken_phase(p):
        raise BrokenPhaseError("tau is imaginary")
    level = -abs(tau_of(p)) ** 2 / (2.0 * p.mu_minus * p.z)
    return ConstantMassProblem(1.0 / (p.mu_minus * p.z),
                               lambda y: np.full(np.shape(y), level), 0.0, math.pi, None, "box")


# --------------------------------------------------------------------------
# Example 3
# --------------------------------------------------------------------------

def example3_potential(p: ModelParams, y):
    """Constant-mass potential of example 3 for 0 < z < inf (pole at y = 0 unless mu+ = mu-)."""
    z = p.z
    if z == 0 or math.isinf(z):
        return example3_limits(p, y, "zero" if z == 0 else "infinity")
    y = np.asarray(y, dtype=float)
    mm, m0, mp, lam = p.mu_minus, p.mu_zero, p.mu_plus, p.lam
    y2 = y * y
    s = 2.0 * y2 + z * z
    r = np.sqrt(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        pole = (mp - mm) * z**4 / (8.0 * y2 * s * s) if mp != mm else 0.0 * y
    return (m0 * (3.0 - 2.0 * z / r)
            + 2.0 * m0 * m0 / mm * y2 * s / (z + r) ** 2
            + 0.25 * mm * (2.0 * y2 * lam * (lam + 2.0) + z * z * (2.0 + 2.0 * lam + lam * lam)) / (s * s)
            + 0.5 * mp * (y2 + z * z) / (s * s)
            + pole)


def example3_limits(p: ModelParams, y, which: str):
    """Closed-form z -> 0 and z -> infinity limits of the example-3 potential."""
    y = np.asarray(y, dtype=float)
    mm, m0, mp, lam = p.mu_minus, p.mu_zero, p.mu_plus, p.lam
    with np.errstate(divide="ignore"):
        if which in ("zero", "z->0", "0"):
            c = (mm * lam * (lam + 2.0) + mp) / 8.0
            return 3.0 * m0 + 2.0 * m0 * m0 / mm * y * y + (c / (y * y) if c else 0.0 * y)
        if which in ("infinity", "z->inf", "inf"):
            c = (mp - mm) / 8.0
            return 0.5 * m0 * m0 * y * y / mm + m0 + (c / (y * y) if c else 0.0 * y)
    raise ValueError(f"unknown limit {which!r}")


def example3_barrier_coefficient(p: ModelParams) -> float:
    """Coefficient c of c/y^2 as y -> 0 at the deformation p.z."""
    if p.z == 0:
        return (p.mu_minus * p.lam * (p.lam + 2.0) + p.mu_plus) / 8.0
    return (p.mu_plus - p.mu_minus) / 8.0


def example3_problem(p: ModelParams, y_max: float = 8.0) -> ConstantMassProblem:
    """Full line (-y_max, y_max) without a pole; half line (0, y_max) with a wall otherwise."""
    m0 = 1.0 / p.mu_minus
    c = example3_barrier_coefficient(p)
    U = lambda y: example3_potential(p, y)
    label = f"example3 z={p.z:g}"
    if c == 0:
        return ConstantMassProblem(m0, U, -y_max, y_max, None, label)
    try:
        pw = WallFactor.exponent(c, m0)
    except ValueError as exc:
        raise ModelError("attractive y^-2 term below the critical strength") from exc
    return ConstantMassProblem(m0, U, 0.0, y_max, WallFactor.power(pw, 0.0, 0.0, y_max), label)


# --------------------------------------------------------------------------
# Similarity + PCT pipeline
# --------------------------------------------------------------------------

def _trig(z: float):
    s = ExpPoly({(0, 1j * z): -0.5j, (0, -1j * z): 0.5j})
    c = ExpPoly({(0, 1j * z): 0.5, (0, -1j * z): 0.5})
    return s, c


def pipeline_potential(model: str, p: ModelParams):
    """Constant-mass potential built from the realization by similarity + PCT.

    Returns (U, (y_lo, y_hi)) in the same variable and units as the closed forms.
    """
    if model == "sl2":
        R = make_pt_realization(0.0, p.lam)
        H = R.minus * p.mu_minus + R.zero * p.mu_zero + R.plus * p.mu_plus
        domain, m0, scale, anchor = (0.0, math.inf), 1.0 / p.mu_minus, 1.0, None
    else:
        if p.z <= 0:
            raise ModelError("pipeline needs z > 0")
        R = make_pt_realization(p.z, p.lam)
        if model == "example1":
            H = R.minus * p.mu_minus + R.zero * p.mu_zero + R.plus * p.mu_plus
            domain, m0, scale, anchor = (0.0, math.inf), 1.0 / p.mu_minus, math.sqrt(p.z), None
        elif model == "example2":
            tau = tau_of(p)
            if isinstance(tau, complex):
                raise BrokenPhaseError("tau is imaginary")
            e = p.eta
            H = (R.minus * (p.mu_minus * math.exp(-2 * e))
                 + compose(R.zero, R.zero) * (p.z * p.mu_minus * math.exp(-e) * math.sinh(e))
                 + R.zero * tau)
            xmax = -math.log1p(-math.exp(-2 * e)) / (2 * p.z) if e > 0 else math.inf
            domain, m0, scale, anchor = (0.0, xmax), 1.0, math.sqrt(p.mu_minus * p.z), None
        elif model == "example3":
            z = p.z
            s, c = _trig(z)
            mu_m = s * s * s * exp_ax(1j * z) * (1j * p.mu_minus / z**3) / (c * c)
            mu_p = s * s * (-p.mu_plus / (4.0 * z * z))
            H = generic_hamiltonian(R, mu_m, const(p.mu_zero), mu_p)
            domain, m0, scale, anchor = (-math.inf, 0.0), 1.0, math.sqrt(p.mu_minus), None
        else:
            raise ValueError(f"no pipeline for {model!r}")
    pdm = pdm_from_operator(H)
    M, V = restrict_to_imaginary_axis(pdm)
    zs = p.z if p.z > 0 else 1.0
    cmap = pct_forward(M, domain, m0, anchor=anchor, scale=1.0 / zs)
    return pct_potential(V, M, cmap, m0, scale), pct_range(cmap, scale)


# --------------------------------------------------------------------------
# Finite-dimensional comparison
# --------------------------------------------------------------------------

def fd_k_values(d: int) -> list[int]:
    """k = 2m (m = 0..(d-1)/2) for odd d, k = 2m+1 (m = 0..d/2-1) for even d; d levels in total."""
    if d < 1:
        raise ValueError("dimension must be positive")
    if d % 2:
        return [2 * m for m in range((d - 1) // 2 + 1)]
    return [2 * m + 1 for m in range(d // 2)]


def _fd_branches(which: str, p: ModelParams, k: float):
    base = 0.5 * p.mu_minus * p.z * k * k
    if which == "ek":
        root = k * p.mu_zero
    elif which == "ekfd1":
        root = cmath.sqrt(k * k * p.mu_zero**2 + k * p.mu_minus * p.mu_plus)
        root = root.real if root.imag == 0 else root
    elif which == "ex2fd":
        root = k * tau_of(p)
    else:
        raise ValueError(f"unknown formula {which!r}")
    return base + root, base - root


def finite_dim_eigenvalues(which: str, p: ModelParams, d: int) -> list:
    """Eigenvalues per k (plus branch first); k = 0 contributes once."""
    out = []
    for k in fd_k_values(d):
        plus, minus = _fd_branches(which, p, k)
        out.append(plus)
        if k != 0:
            out.append(minus)
    return out


def fig4_difference(p: ModelParams, n: int, z_list: Sequence[float], branch: str = "-") -> list[float]:
    """|E_n^0 + E_n^1 - E_k^FD| with k = 2n + lam + 2, per z."""
    k = 2 * n + p.lam + 2.0
    if abs(k - round(k)) > 1e-12:
        raise ModelError("2n + lam + 2 must be an integer to select k")
    which = "ekfd1" if p.mu_plus != 0 else "ek"
    out = []
    for z in z_list:
        q = p.replace(z=float(z))
        E = example1_spectrum_exact(q.replace(mu_plus=0.0), n) + example1_perturbation_e1(q, n)
        plus, minus = _fd_branches(which, q, round(k))
        out.append(abs(E - (plus if branch == "+" else minus)))
    return out


# --------------------------------------------------------------------------
# Double-well trigonometric potentials
# --------------------------------------------------------------------------

def dwt_potential(dwt: DwtParams, y):
    """(d/2) tan^2 y - (a/2) sin y - (b/2) sin^2 y + (c/2) sin y / cos^2 y."""
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) >= math.pi / 2):
        raise ValueError("y must lie inside (-pi/2, pi/2)")
    s, c2 = np.sin(y), np.cos(y) ** 2
    return 0.5 * (dwt.d_s * s * s / c2 - dwt.a_s * s - dwt.b_s * s * s + dwt.c_s * s / c2)


def dwt_exponents(dwt: DwtParams) -> tuple[float, float]:
    """Wall exponents at y = -pi/2 and +pi/2."""
    dl, dr = 0.25 + dwt.d_s - dwt.c_s, 0.25 + dwt.d_s + dwt.c_s
    if dl < 0 or dr < 0:
        raise ModelError("wall strength below the inverse-square critical value")
    return 0.5 + math.sqrt(dl), 0.5 + math.sqrt(dr)


def dwt_problem(dwt: DwtParams) -> ConstantMassProblem:
    """-1/2 psi'' + u psi = eps psi on (-pi/2, pi/2)."""
    pl, pr = dwt_exponents(dwt)
    bb = 0.5 * (pl + pr)

    def R(y):
        s = np.sin(np.asarray(y, dtype=float))
        return 0.5 * (bb * bb - dwt.d_s) - 0.5 * dwt.a_s * s - 0.5 * dwt.b_s * s * s

    return ConstantMassProblem(1.0, lambda y: dwt_potential(dwt, y), -math.pi / 2, math.pi / 2,
                               WallFactor.dwt(pl, pr), "dwt", R)


def dwt_heun_params(dwt: DwtParams, eps: float) -> HeunParams:
    """HeunC parameters for psi = e^{-sqrt(b) sin y} q^{p0/2} (1-q)^{p1/2} HeunC(q), q = (1+sin y)/2."""
    pl, pr = dwt_exponents(dwt)
    return HeunParams(-4.0 * math.sqrt(dwt.b_s), pl - 0.5, 0.5 - pr, -2.0 * dwt.a_s,
                      0.375 + dwt.a_s - dwt.b_s - 0.5 * dwt.d_s - 2.0 * eps)


_COUNT_GRID = np.concatenate([np.linspace(0.0, 0.999, 3000), 1.0 - np.geomspace(1e-3, 1e-6, 200)[1:]])
_COUNT_GRID = np.unique(np.concatenate([_COUNT_GRID, 1.0 - np.asarray(_BOUNDARY_DELTAS)]))


def dwt_heun_count(dwt: DwtParams, eps: float) -> tuple[int, float]:
    """(number of eigenvalues below eps, analytic part of HeunC at q = 1).

    Zeros of the solution regular at q = 0 are counted on a grid, with the
    boundary value appended as the last sample.
    """
    p = dwt_heun_params(dwt, eps)
    vals = heun_profile(p, _COUNT_GRID)
    deltas = np.asarray(_BOUNDARY_DELTAS, dtype=float)
    idx = np.searchsorted(_COUNT_GRID, 1.0 - deltas)
    A = extrapolate_to_one(deltas, vals[idx])
    seq = np.append(vals, A)
    sgn = np.sign(seq[seq != 0])
    return int(np.count_nonzero(sgn[1:] != sgn[:-1])), A


def _dwt_half(dwt: DwtParams, eps: float, y: np.ndarray) -> np.ndarray:
    """Left-regular solution on y (increasing, q < 1)."""
    pl, pr = dwt_exponents(dwt)
    s = np.sin(y)
    q = 0.5 * (1.0 + s)
    H = heun_profile(dwt_heun_params(dwt, eps), q)
    with np.errstate(divide="ignore"):
        logpref = -math.sqrt(dwt.b_s) * s + 0.5 * pl * np.log(q) + 0.5 * (1.0 - pr) * np.log1p(-q)
    return np.exp(logpref) * H


def dwt_heun_eigenfunction(dwt: DwtParams, eps: float, y) -> np.ndarray:
    """Eigenfunction at an eigenvalue eps, spliced from both ends and unit-normalized on y."""
    y = np.asarray(y, dtype=float)
    left_y = y[y <= 0]
    right_y = y[y > 0]
    win = np.linspace(-0.3, 0.3, 61)
    L = _dwt_half(dwt, eps, win)
    Rw = _dwt_half(dwt.mirrored(), eps, -win[::-1])[::-1]
    scale = float(L @ Rw / (Rw @ Rw))
    psi = np.empty_like(y)
    psi[y <= 0] = _dwt_half(dwt, eps, left_y)
    if right_y.size:
        psi[y > 0] = scale * _dwt_half(dwt.mirrored(), eps, -right_y[::-1])[::-1]
    return psi


def dwt_heun_spectrum(dwt: DwtParams, n_states: int, n_points: int = 4096,
                      tol: float = 1e-12) -> Spectrum:
    """Lowest eigenvalues as roots of the Heun boundary value, with eigenfunctions."""
    grid = Grid(n_points, -math.pi / 2, math.pi / 2, 0.0, True)
    y = grid.y_values
    lo = float(np.min(dwt_potential(dwt, y)))
    hi = lo + 1.0
    probes: dict[float, tuple[int, float]] = {lo: dwt_heun_count(dwt, lo)}
    if probes[lo][0] != 0:
        raise ModelError("count below the potential minimum is non-zero")
    for _ in range(60):
        probes[hi] = dwt_heun_count(dwt, hi)
        if probes[hi][0] >= n_states:
            break
        hi = lo + 2.0 * (hi - lo)
    else:
        raise ModelError("could not bracket the requested states")

    energies = []
    for k in range(n_states):
        below = max((e for e, (c, _) in probes.items() if c <= k), default=lo)
        above = min(e for e, (c, _) in probes.items() if c >= k + 1)
        for _ in range(200):
            if probes[below][0] == k and probes[above][0] == k + 1:
                break
            mid = 0.5 * (below + above)
            probes[mid] = dwt_heun_count(dwt, mid)
            if probes[mid][0] <= k:
                below = mid
            else:
                above = mid
        else:
            raise ModelError(f"bracketing failed for state {k}")
        fa, fb = probes[below][1], probes[above][1]
        if fa * fb > 0:
            raise ModelError(f"boundary value does not change sign around state {k}")
        root = brentq(lambda e: dwt_heun_count(dwt, e)[1], below, above, xtol=tol, rtol=1e-15)
        energies.append(root)

    states = np.empty((n_states, grid.n_points))
    for k, e in enumerate(energies):
        psi = dwt_heun_eigenfunction(dwt, e, y)
        states[k] = psi / math.sqrt(float(psi @ psi) * grid.h)
    return Spectrum(grid, np.array(energies), _fix_sign(states), errors=np.full(n_states, tol))


def _symmetric_m(m) -> float:
    if m < 0:
        raise ModelError("m must be non-negative")
    return float(m)


def dwt_symmetric_spectrum(b_s: float, m, n: int) -> float:
    """E = (lambda_{m, m+n} + 1/2 - m^2 - b_s)/2 for a = c = 0, d = m^2 - 1/4."""
    m = _symmetric_m(m)
    lam = spheroidal_eigenvalue(SpheroidalIndex(m, m + n, b_s))
    return 0.5 * (lam + 0.5 - m * m - b_s)


def dwt_symmetric_eigenfunction(b_s: float, m, n: int, y):
    """cos^{1/2} y S_{m, m+n}(sin y), unit norm on (-pi/2, pi/2), left lobe positive."""
    m = _symmetric_m(m)
    y = np.asarray(y, dtype=float)
    s = spheroidal_function(SpheroidalIndex(m, m + n, b_s), np.sin(y))
    return (-1) ** n * np.sqrt(np.cos(y)) * s


def dwt_symmetric_params(b_s: float, m) -> DwtParams:
    return DwtParams(0.0, b_s, 0.0, float(m) ** 2 - 0.25)


# --------------------------------------------------------------------------
# Presets
# --------------------------------------------------------------------------

PRESET_FORMAT = "deformed-spectra/preset/1"


@dataclass(frozen=True)
class Preset:
    """Named parameter set; ``model`` selects the problem builder."""

    name: str
    model: str
    params: dict
    flags: tuple = ()
    description: str = ""

    @property
    def scaling(self) -> str:
        """Variable and energy unit in which numeric and analytic values are compared."""
        return _SCALINGS[self.model]

    def model_params(self) -> ModelParams:
        return ModelParams(**{k: v for k, v in self.params.items() if k in ModelParams.field_names()})

    def dwt(self) -> DwtParams:
        keys = ("a_s", "b_s", "c_s", "d_s")
        if all(k in self.params for k in keys):
            return DwtParams(*(float(self.params[k]) for k in keys))
        return DwtParams.from_model(self.model_params())

    def to_dict(self) -> dict:
        return {"name": self.name, "model": self.model, "params": dict(self.params),
                "flags": list(self.flags), "description": self.description, "scaling": self.scaling}


_SCALINGS = {
    "example1": "y = u sqrt(z) on (0, pi/2), m0 = 1/(mu- z); E in Hamiltonian units",
    "example2": "y = u sqrt(mu- z) on (0, pi/2), m0 = 1/(mu- z); E in Hamiltonian units",
    "example2-box": "y on (0, pi), m0 = 1/(mu- z); eps in Hamiltonian units",
    "example3": "y = u sqrt(mu-), m0 = 1/mu-; E in Hamiltonian units",
    "sl2": "u, m0 = 1/mu-; E in Hamiltonian units",
    "dwt": "y on (-pi/2, pi/2), m0 = 1; eps = E/(g z)",
}


def _fig123(tag: str, mu0: float) -> list[Preset]:
    out = []
    for panel, mp in (("left", 0.0), ("center", -26.0), ("right", 26.0)):
        flags = ("closed-form",) if mp == 0 else ("numeric",)
        out.append(Preset(f"example1-{tag}-{panel}", "example1",
                          {"lam": 2.0, "mu_zero": mu0, "mu_minus": 1.0, "z": 1.0, "mu_plus": mp},
                          flags, f"example 1, mu0={mu0:g}, mu+={mp:g}"))
    return out


def _build_presets() -> dict[str, Preset]:
    items: list[Preset] = []
    items += _fig123("fig1", 2.0) + _fig123("fig2", 1.5) + _fig123("fig3", 1.0)
    items.append(Preset("example1-perturbative", "example1",
                        {"lam": 2.0, "mu_zero": 0.0, "mu_minus": 1.0, "mu_plus": 0.5, "z": 20.0},
                        ("numeric", "perturbative"), "example 1 at large z with a weak log term"))
    for tag, mu0, mp in (("a", 0.0, 0.5), ("b", 0.0, 10.0), ("c", 2.0, 0.5), ("d", 2.0, 10.0)):
        items.append(Preset(f"fig4-{tag}", "example1",
                            {"lam": 2.0, "mu_minus": 1.0, "mu_zero": mu0, "mu_plus": mp, "z": 10.0},
                            ("perturbative",), f"difference to finite-dimensional levels, panel {tag}"))
    items.append(Preset("sl2-warmup", "sl2", {"lam": 0.0, "mu_minus": 1.0, "mu_zero": 0.0, "mu_plus": 1.0},
                        ("closed-form",), "undeformed oscillator plus inverse-square term"))
    items.append(Preset("example2", "example2",
                        {"lam": 1.0, "mu_minus": 1.0, "mu_zero": 1.0, "mu_plus": 0.5, "z": 1.0, "eta": 0.5},
                        ("closed-form",), "example 2, unbroken phase"))
    items.append(Preset("example2-broken", "example2",
                        {"lam": 1.0, "mu_minus": 1.0, "mu_zero": 0.0, "mu_plus": -1.0, "z": 1.0},
                        ("broken-phase",), "imaginary tau"))
    items.append(Preset("box", "example2-box", {"mu_minus": 1.0, "z": 1.0, "mu_zero": 0.0, "mu_plus": 0.0},
                        ("closed-form",), "large-eta limit, flat box on (0, pi)"))
    items.append(Preset("example3-fig5", "example3",
                        {"lam": 1.0, "mu_zero": 1.5, "mu_minus": 1.0, "mu_plus": 1.0, "z": 0.4},
                        ("numeric",), "example 3 with the figure-caption couplings"))
    items.append(Preset("example3-fig6", "example3",
                        {"lam": 1.0, "mu_zero": 1.0, "mu_minus": 1.0, "mu_plus": 1.0, "z": 0.25},
                        ("numeric",), "example 3 with the text couplings"))
    items.append(Preset("dwt-khco3", "dwt",
                        {"a_s": 23.0, "b_s": 360.0, "c_s": 2.0 * math.sqrt(35.0), "d_s": 70.0},
                        ("closed-form", "heun"), "asymmetric double well"))
    items.append(Preset("dwt-zundel", "dwt",
                        {"a_s": 0.0, "b_s": 110.0**2, "c_s": 0.0, "d_s": 2.0 * (65.0**2 - 0.25)},
                        ("closed-form", "spheroidal"), "symmetric double well"))
    items.append(Preset("dwt-symmetric-m2", "dwt",
                        {"a_s": 0.0, "b_s": 10.0, "c_s": 0.0, "d_s": 3.75},
                        ("closed-form", "heun", "spheroidal"), "symmetric double well with m = 2"))
    return {p.name: p for p in items}


PRESETS: dict[str, Preset] = _build_presets()


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None


def preset_schema() -> dict:
    """JSON schema of the serialized preset catalog."""
    numbers = {k: {"type": "number"} for k in ModelParams.field_names() + ["a_s", "b_s", "c_s", "d_s"]}
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "deformed-spectra preset catalog",
        "type": "object",
        "required": ["format", "presets"],
        "properties": {
            "format": {"const": PRESET_FORMAT},
            "presets": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["name", "model", "params"],
                    "properties": {
                        "name": {"type": "string"},
                        "model": {"enum": ["example1", "example2", "example2-box", "example3", "sl2", "dwt"]},
                        "params": {"type": "object", "properties": numbers, "additionalProperties": False},
                        "flags": {"type": "array", "items": {
                            "enum": ["closed-form", "numeric", "perturbative", "broken-phase", "heun", "spheroidal"]}},
                        "description": {"type": "string"},
                        "scaling": {"type": "string"},
                    },
                },
            },
        },
    }


def catalog_json() -> str:
    return json.dumps({"format": PRESET_FORMAT, "presets": [p.to_dict() for p in PRESETS.values()]},
                      indent=2, sort_keys=True)

"""Similarity transformation to position-dependent-mass form and the point
canonical transformation to a constant-mass Schroedinger problem.

A second-order operator ``H = a2 d^2 + a1 d + a0`` is conjugated by a weight
``Gamma`` with log-derivative ``L' = (a1 - a2')/(2 a2)`` into
``-1/2 d/dx (1/m) d/dx + V`` with ``m = -1/(2 a2)`` and
``V = a2 (L'^2 - L'') - a1 L' + a0``.

Complex coordinates are handled by restricting to the imaginary axis
``x = i xi`` where mass and potential become real; all quadratures then run
in the real variable ``xi``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import IntegrationWarning, cumulative_simpson, quad
from scipy.optimize import brentq

from .algebra import (
    CoefficientFunction,
    ExpPoly,
    LinearDifferentialOperator,
    OrderError,
    TestFunction,
    apply,
    compose,
    const,
    exp_ax,
)
from .spectral import ConstantMassProblem, WallFactor

__all__ = [
    "TransformError",
    "SimilarityWeight",
    "PdmSystem",
    "MassProfile",
    "CoordinateMap",
    "cot_xz",
    "generic_hamiltonian",
    "pdm_from_operator",
    "gamma_generic",
    "pdm_from_generic",
    "generic_potential_formula",
    "restrict_to_imaginary_axis",
    "pct_forward",
    "pct_potential",
    "pct_problem",
    "pct_range",
    "pct_correction",
    "pullback_wavefunction",
    "similarity_conjugate_residual",
]


class TransformError(ValueError):
    """A transformation step is ill-defined for the given input."""


def cot_xz(z: float) -> CoefficientFunction:
    """cot(z x) = i (e^{2izx} + 1)/(e^{2izx} - 1) as an exact coefficient."""
    e = exp_ax(2j * z)
    return (e + const(1.0)) * 1j / (e - const(1.0))


class _ExpOf(CoefficientFunction):
    """exp(G(x)) given G by value and G' as a coefficient function."""

    def __init__(self, log_value: Callable, dlog: CoefficientFunction, sign: float = 1.0):
        self.log_value, self.dlog, self.sign = log_value, dlog, sign

    def __call__(self, x):
        return np.exp(self.sign * self.log_value(x))

    def _d(self):
        return self.dlog * self.sign * self


@dataclass(frozen=True)
class SimilarityWeight:
    """Gamma(x) through its logarithm; ``dlog`` is the exact log-derivative."""

    log_gamma: Callable
    dlog: CoefficientFunction

    def gamma(self, x):
        return np.exp(self.log_gamma(x))

    def __call__(self, x):
        return self.gamma(x)

    def as_multiplier(self, inverse: bool = False) -> CoefficientFunction:
        return _ExpOf(self.log_gamma, self.dlog, -1.0 if inverse else 1.0)


@dataclass(frozen=True)
class PdmSystem:
    """``-1/2 d/dx (1/m) d/dx + V`` with exact-derivative coefficients."""

    inverse_mass: CoefficientFunction  # 1/m
    potential: CoefficientFunction
    domain: tuple = (-math.inf, math.inf)
    dlog_gamma: Optional[CoefficientFunction] = None

    def mass(self, x):
        return 1.0 / self.inverse_mass(x)

    @property
    def mass_function(self) -> CoefficientFunction:
        return 1.0 / self.inverse_mass

    def as_operator(self) -> LinearDifferentialOperator:
        im = self.inverse_mass
        return LinearDifferentialOperator([self.potential, im.derivative() * -0.5, im * -0.5])


def generic_hamiltonian(triple, mu_minus, mu_zero, mu_plus) -> LinearDifferentialOperator:
    """mu-(x) J- + mu0(x) J0 + mu+(x), with the mu's as coefficient functions."""
    def mult(cf, op):
        return LinearDifferentialOperator([cf * c for c in op.coeffs])
    return mult(mu_minus, triple.minus) + mult(mu_zero, triple.zero) + LinearDifferentialOperator([mu_plus])


def pdm_from_operator(H: LinearDifferentialOperator, domain=(-math.inf, math.inf)) -> PdmSystem:
    """PDM form of a second-order operator via the gauge that removes the drift mismatch."""
    if H.order != 2:
        raise OrderError("PDM form needs a second-order operator")
    a0, a1, a2 = H.coefficient(0), H.coefficient(1), H.coefficient(2)
    lp = (a1 - a2.derivative()) / (a2 * 2.0)
    V = a2 * (lp * lp - lp.derivative()) - a1 * lp + a0
    return PdmSystem(a2 * -2.0, V, domain, lp)


def gamma_generic(mu_minus: CoefficientFunction, mu_zero: CoefficientFunction, z: float,
                  lam: float, norm: complex = 1.0, x_ref: float = 1.0) -> SimilarityWeight:
    """Similarity weight for the generic Hamiltonian on the PT realization.

    log Gamma = log C - (lam+1)/2 Log(sin(xz)/sin z)
                - int_1^x (mu-' - 2i mu0)/(2 mu-) dt + i (x-1) z / 2.
    The integral is computed by adaptive quadrature along the real axis.
    """
    if z == 0:
        raise TransformError("z must be non-zero")
    dmu = mu_minus.derivative()
    integrand = (dmu - mu_zero * 2j) / (mu_minus * 2.0)
    power = -(lam + 1.0) / 2.0
    dlog = cot_xz(z) * (power * z) - integrand + const(0.5j * z)

    def integral(x):
        if x == x_ref:
            return 0j
        if abs(mu_minus(x)) == 0:
            raise TransformError("mu- vanishes on the path")
        re, e1 = quad(lambda t: integrand(t).real, x_ref, x, epsabs=1e-12, epsrel=1e-12, limit=200)
        im, e2 = quad(lambda t: integrand(t).imag, x_ref, x, epsabs=1e-12, epsrel=1e-12, limit=200)
        if max(e1, e2) > 1e-9:
            raise TransformError(f"quadrature did not converge (error {max(e1, e2):.2e})")
        return complex(re, im)

    def log_gamma(x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(xs.shape, dtype=complex)
        for i, xv in enumerate(xs):
            s = np.sin(xv * z) / np.sin(z)
            out[i] = (np.log(complex(norm)) + (power * np.log(complex(s)) if power else 0j)
                      - integral(xv) + 0.5j * (xv - x_ref) * z)
        return out if np.ndim(x) else complex(out[0])

    return SimilarityWeight(log_gamma, dlog)


def _mass_generic(mu_minus: CoefficientFunction, z: float) -> CoefficientFunction:
    """1/m for m = -i z e^{ixz} csc(xz) / (2 mu-): 1/m = mu- (1 - e^{-2ixz}) / z."""
    return mu_minus * ExpPoly({(0, 0): 1.0 / z, (0, -2j * z): -1.0 / z})


def generic_potential_formula(mu_minus, mu_zero, mu_plus, z: float, lam: float) -> CoefficientFunction:
    """Closed-form potential of the generic PT Hamiltonian after the similarity step."""
    e2 = exp_ax(2j * z)
    one = const(1.0)
    sin2 = ExpPoly({(0, 0): 0.5, (0, 2j * z): -0.25, (0, -2j * z): -0.25})
    cos2m1 = ExpPoly({(0, 2j * z): 0.5, (0, -2j * z): 0.5, (0, 0): -1.0})
    emix_sin = ExpPoly({(0, 0): -0.5j, (0, -2j * z): 0.5j})  # e^{-ixz} sin(xz)
    d1, d2 = mu_minus.derivative(), mu_minus.derivative(2)
    den = e2 - one
    t1 = (mu_zero * 2.0 + d1 * 1j)
    term2 = sin2 * t1 * t1 / (mu_minus * den * (2.0 * z))
    term3 = (mu_minus * ((lam * (lam + 2.0) + 2.0) * z * z) + cos2m1 * (d2 - mu_zero.derivative() * 2j)) / (den * (2.0 * z))
    term4 = emix_sin * d1 / den
    term5 = mu_minus * exp_ax(-2j * z) * (z / 2.0) / den
    return mu_plus + term2 - term3 + term4 + term5


def pdm_from_generic(mu_minus, mu_zero, mu_plus, z: float, lam: float) -> PdmSystem:
    """PDM data for mu-(x) J- + mu0(x) J0 + mu+(x) on the PT realization."""
    if z == 0:
        raise TransformError("z must be non-zero")
    V = generic_potential_formula(mu_minus, mu_zero, mu_plus, z, lam)
    dmu = mu_minus.derivative()
    dlog = cot_xz(z) * (-(lam + 1.0) / 2.0 * z) - (dmu - mu_zero * 2j) / (mu_minus * 2.0) + const(0.5j * z)
    return PdmSystem(_mass_generic(mu_minus, z), V, (-math.inf, math.inf), dlog)


def similarity_conjugate_residual(H: LinearDifferentialOperator, gamma: SimilarityWeight,
                                  h_target: PdmSystem, f: TestFunction, x):
    """(Gamma H Gamma^{-1} - h_target) f at x, with the conjugation built by composition."""
    G = LinearDifferentialOperator([gamma.as_multiplier()])
    Gi = LinearDifferentialOperator([gamma.as_multiplier(inverse=True)])
    conj = compose(G, compose(H, Gi))
    return apply(conj - h_target.as_operator(), f, x)


# --------------------------------------------------------------------------
# Imaginary-axis restriction
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MassProfile:
    """Real mass profile along the PCT variable with exact first two derivatives."""

    value: Callable
    d1: Callable
    d2: Callable

    @classmethod
    def constant(cls, m: float) -> "MassProfile":
        return cls(lambda x: np.full(np.shape(x), m) + 0.0 * np.asarray(x),
                   lambda x: 0.0 * np.asarray(x), lambda x: 0.0 * np.asarray(x))

    def scaled(self, s: float) -> "MassProfile":
        return MassProfile(lambda x: self.value(x) * s, lambda x: self.d1(x) * s, lambda x: self.d2(x) * s)


def _realpart(values, what: str, tol: float):
    values = np.asarray(values)
    scale = np.maximum(np.abs(values.real), 1.0)
    if np.any(np.abs(values.imag) > tol * scale):
        bad = float(np.max(np.abs(values.imag) / scale))
        raise TransformError(f"{what} is not real on the contour (relative imaginary part {bad:.2e})")
    return values.real


def restrict_to_imaginary_axis(pdm: PdmSystem, imag_tol: float = 1e-7):
    """Real data along x = i xi.

    The kinetic term -1/2 d/dx (1/m) d/dx becomes -1/2 d/dxi (1/M) d/dxi with
    M(xi) = -m(i xi); derivatives follow by the chain rule.
    Returns (MassProfile, potential) as functions of xi.
    """
    mf = pdm.mass_function
    m1, m2 = mf.derivative(), mf.derivative(2)
    V = pdm.potential

    def value(xi):
        return _realpart(-mf(1j * np.asarray(xi, dtype=float)), "mass", imag_tol)

    def d1(xi):
        return _realpart(-1j * m1(1j * np.asarray(xi, dtype=float)), "mass derivative", imag_tol)

    def d2(xi):
        return _realpart(m2(1j * np.asarray(xi, dtype=float)), "mass second derivative", imag_tol)

    def pot(xi):
        return _realpart(V(1j * np.asarray(xi, dtype=float)), "potential", imag_tol)

    return MassProfile(value, d1, d2), pot


# --------------------------------------------------------------------------
# Point canonical transformation
# --------------------------------------------------------------------------

def _node_table(a: float, b: float, n: int, scale: float) -> np.ndarray:
    t = (np.arange(1, n + 1) / (n + 1.0))
    if np.isfinite(a) and np.isfinite(b):
        return a + (b - a) * 0.5 * (1.0 - np.cos(np.pi * t))
    if np.isfinite(a):
        return a + scale * t / (1.0 - t)
    if np.isfinite(b):
        return b - scale * (1.0 - t) / t
    return scale * np.tan(np.pi * (t - 0.5))


class CoordinateMap:
    """u = w(xi) = u_anchor + int_{anchor}^{xi} sqrt(M/m0), with its inverse F.

    ``anchor`` defaults to the left end of the domain.  Ends where the
    integral diverges map to infinite u.
    """

    def __init__(self, mass: MassProfile, domain, m0: float, anchor=None, u_anchor: float = 0.0,
                 n_nodes: int = 127, scale: float = 1.0):
        a, b = float(domain[0]), float(domain[1])
        if not b > a:
            raise TransformError("empty domain")
        self.mass, self.m0, self.domain = mass, float(m0), (a, b)
        anchor = a if anchor is None else float(anchor)
        if not a <= anchor <= b:
            raise TransformError("anchor outside the domain")
        self.anchor, self.u_anchor = anchor, float(u_anchor)
        probe = _node_table(a, b, 64, scale)
        mv = np.asarray(mass.value(probe), dtype=float)
        if np.any(~np.isfinite(mv)) or np.any(mv <= 0):
            raise TransformError("mass profile is not positive on the domain")
        nodes = _node_table(a, b, n_nodes, scale)
        self._nodes = nodes
        w = np.empty(len(nodes))
        k0 = int(np.searchsorted(nodes, anchor))
        if k0 < len(nodes):
            w[k0] = self.u_anchor + (self._int_to_end(nodes[k0], anchor) if np.isinf(anchor)
                                     else self._int(anchor, nodes[k0]))
            for k in range(k0 + 1, len(nodes)):
                w[k] = w[k - 1] + self._int(nodes[k - 1], nodes[k])
        if k0 > 0:
            w[k0 - 1] = self.u_anchor - (self._int_to_end(nodes[k0 - 1], anchor) if np.isinf(anchor)
                                         else self._int(nodes[k0 - 1], anchor))
            for k in range(k0 - 2, -1, -1):
                w[k] = w[k + 1] - self._int(nodes[k], nodes[k + 1])
        if not np.all(np.isfinite(w)):
            raise TransformError("anchor sits at a divergent end of the map")
        self._w = w
        self.u_range = (w[0] - self._int_to_end(nodes[0], a),
                        w[-1] + self._int_to_end(nodes[-1], b))

    def _sqrtm(self, xi):
        with np.errstate(all="ignore"):
            v = float(self.mass.value(np.array([xi]))[0]) / self.m0
        if not v >= 0:
            raise TransformError(f"mass profile invalid at xi={xi}")
        return math.sqrt(v)

    def _theta(self, xi):
        """Integration variable that regularizes algebraic end singularities."""
        a, b = self.domain
        if np.isfinite(a) and np.isfinite(b):
            return math.acos(min(1.0, max(-1.0, 1.0 - 2.0 * (xi - a) / (b - a))))
        if np.isfinite(a):
            return math.sqrt(max(0.0, xi - a)) if np.isfinite(xi) else math.inf
        if np.isfinite(b):
            return -math.sqrt(max(0.0, b - xi)) if np.isfinite(xi) else -math.inf
        return xi

    def _xi(self, th):
        a, b = self.domain
        if np.isfinite(a) and np.isfinite(b):
            return a + (b - a) * math.sin(0.5 * th) ** 2, 0.5 * (b - a) * math.sin(th)
        if np.isfinite(a):
            return a + th * th, 2.0 * th
        if np.isfinite(b):
            return b - th * th, -2.0 * th
        return th, 1.0

    def _integrand(self, th):
        xi, dxi = self._xi(th)
        if dxi == 0.0 or xi in self.domain:
            return 0.0
        return self._sqrtm(xi) * dxi

    def _int(self, lo, hi, allow_inf: bool = False):
        if lo == hi:
            return 0.0
        t0, t1 = self._theta(lo), self._theta(hi)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", IntegrationWarning)
                val, err = quad(self._integrand, t0, t1, epsabs=1e-14, epsrel=1e-13, limit=400)
        except TransformError:
            if allow_inf:
                return math.inf
            raise
        ok = np.isfinite(val) and err <= 1e-9 * max(1.0, abs(val))
        if ok:
            return val
        if allow_inf:
            return math.inf
        raise TransformError(f"map quadrature failed between {lo} and {hi}")

    def _int_to_end(self, x0, end):
        """|int_{x0}^{end} sqrt(M/m0)|, or inf when it diverges."""
        if np.isfinite(end):
            return abs(self._int(min(x0, end), max(x0, end), allow_inf=True))
        sgn = 1.0 if end > 0 else -1.0
        total, step, x, small = 0.0, max(1.0, abs(x0)), x0, 0
        for _ in range(200):
            try:
                piece = self._int(min(x, x + sgn * step), max(x, x + sgn * step))
            except (TransformError, ValueError, OverflowError):
                piece = math.nan
            if not np.isfinite(piece):
                # the profile overflows further out; stop if the tail has already decayed
                try:
                    tail = self._sqrtm(x) * max(1.0, abs(x))
                except TransformError:
                    return math.inf
                if small or tail < 1e-16 * max(1.0, total):
                    return total
                step *= 0.25
                continue
            total += piece
            small = small + 1 if piece < 1e-17 * max(1.0, total) else 0
            if small >= 2:
                return total
            x += sgn * step
            step *= 2.0
        return math.inf

    def forward(self, xi):
        """w(xi)."""
        xs = np.atleast_1d(np.asarray(xi, dtype=float))
        out = np.empty(xs.shape)
        for i, x in enumerate(xs):
            k = int(np.argmin(np.abs(self._nodes - x)))
            out[i] = self._w[k] + self._int(self._nodes[k], x)
        return out if np.ndim(xi) else float(out[0])

    def inverse(self, u):
        """F(u): bracketed root of w(xi) = u."""
        us = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.empty(us.shape)
        lo_u, hi_u = self.u_range
        for i, uv in enumerate(us):
            if not lo_u < uv < hi_u:
                raise TransformError(f"u={uv} outside the map range {self.u_range}")
            k = int(np.searchsorted(self._w, uv))
            if 0 < k < len(self._nodes):
                lo, hi = self._nodes[k - 1], self._nodes[k]
                base_x, base_w = lo, self._w[k - 1]
            else:
                left = k == 0
                base_x = self._nodes[0] if left else self._nodes[-1]
                base_w = self._w[0] if left else self._w[-1]
                lo, hi = self._tail_bracket(base_x, base_w, uv, left)
            g = lambda x: base_w + self._int(base_x, x) - uv
            out[i] = brentq(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
        return out if np.ndim(u) else float(out[0])

    def _tail_bracket(self, base_x, base_w, uv, left):
        a, b = self.domain
        end = a if left else b
        end_u = self.u_range[0] if left else self.u_range[1]
        if np.isfinite(end) and np.isfinite(end_u):
            return (end, base_x) if left else (base_x, end)
        x = base_x
        step = max(1.0, abs(base_x))
        for _ in range(400):
            if np.isfinite(end):
                x = end + 0.5 * (x - end)
            else:
                x = x - step if left else x + step
                step *= 2.0
            wv = base_w + self._int(base_x, x)
            if (wv <= uv) if left else (wv >= uv):
                return (x, base_x) if left else (base_x, x)
        raise TransformError("inversion bracket failure")

    def jacobian(self, u):
        """dF/du = 1/sqrt(M(F(u))/m0)."""
        xi = self.inverse(u)
        return 1.0 / np.sqrt(np.asarray(self.mass.value(np.atleast_1d(xi)), dtype=float) / self.m0)


def pct_forward(M: MassProfile, domain, m0: float, anchor=None, u_anchor: float = 0.0,
                scale: float = 1.0) -> CoordinateMap:
    """Coordinate map of the PCT for mass profile M on ``domain``."""
    return CoordinateMap(M, domain, m0, anchor, u_anchor, scale=scale)


def pct_correction(M: MassProfile, xi):
    """m0 (W^2 + W')(xi) with W = d/du ln M^{-1/4}, in terms of xi-derivatives of M."""
    m, m1, m2 = (np.asarray(f(xi), dtype=float) for f in (M.value, M.d1, M.d2))
    return 7.0 / 16.0 * m1 * m1 / m**3 - 0.25 * m2 / m**2


def pct_potential(V: Callable, M: MassProfile, cmap: CoordinateMap, m0: float,
                  y_scale: float = 1.0) -> Callable:
    """U(y) = V(F(u)) + (W^2 + W')/(2 m0) with y = y_scale * u.

    The correction (W^2 + W')/(2 m0) equals pct_correction/2 whatever m0 is,
    since W carries a factor sqrt(m0/M); a negative ``y_scale`` flips the
    orientation of the image.
    """
    def U(y):
        y = np.asarray(y, dtype=float)
        xi = cmap.inverse(np.atleast_1d(y) / y_scale)
        out = np.asarray(V(xi), dtype=float) + 0.5 * pct_correction(M, xi)
        return out if y.ndim else float(out[0])
    return U


def pct_range(cmap: CoordinateMap, y_scale: float = 1.0) -> tuple:
    """Image interval in y = y_scale * u."""
    lo, hi = (v * y_scale for v in cmap.u_range)
    return (min(lo, hi), max(lo, hi))


def pct_problem(V: Callable, M: MassProfile, cmap: CoordinateMap, m0: float,
                y_scale: float = 1.0, walls: Optional[WallFactor] = None,
                label: str = "") -> ConstantMassProblem:
    """Constant-mass problem on a finite PCT image; effective mass m0 / y_scale^2."""
    lo, hi = pct_range(cmap, y_scale)
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise TransformError("PCT image interval is not finite")
    U = pct_potential(V, M, cmap, m0, y_scale)
    return ConstantMassProblem(m0 / y_scale**2, U, lo, hi, walls, label)


def pullback_wavefunction(psi, u_grid, W: Union[Callable, np.ndarray], cmap: Optional[CoordinateMap] = None):
    """phi(F(u)) = psi(u) exp(-int_{u_0}^{u} W), integral by cumulative Simpson.

    Returns (x_grid, phi); x_grid is F(u_grid) when a map is given, else u_grid.
    """
    u_grid = np.asarray(u_grid, dtype=float)
    psi = np.asarray(psi)
    if psi.shape != u_grid.shape:
        raise ValueError("psi and u_grid differ in shape")
    w = np.asarray(W(u_grid) if callable(W) else W, dtype=float)
    integral = cumulative_simpson(w, x=u_grid, initial=0.0)
    phi = psi * np.exp(-integral)
    x = cmap.inverse(u_grid) if cmap is not None else u_grid
    return x, phi

"""Differential realizations of sl(2,R) and its non-standard deformation U_z(sl(2,R)).

Operators are finite sums ``sum_k c_k(x) d^k/dx^k`` (order <= 4) whose
coefficients carry exact derivatives, so compositions and commutators are
assembled without numerical differentiation.  Coefficients of the
realizations are exponential polynomials ``sum c x^p e^{a x}``, which are
closed under products and derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product as _iproduct
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "CoefficientFunction",
    "ExpPoly",
    "Analytic",
    "const",
    "xvar",
    "exp_ax",
    "LinearDifferentialOperator",
    "OrderError",
    "TestFunction",
    "standard_test_functions",
    "Realization",
    "make_classical_realization",
    "make_deformed_realization",
    "make_pt_realization",
    "apply",
    "compose",
    "commutator",
    "commutation_residuals",
    "casimir_operator",
    "casimir_residual",
    "pt_symmetry_defect",
    "residual_battery",
    "MAX_ORDER",
]

MAX_ORDER = 4


class OrderError(ValueError):
    """Operator order exceeds what the operation supports."""


# --------------------------------------------------------------------------
# Coefficient functions
# --------------------------------------------------------------------------

class CoefficientFunction:
    """Complex function of a real (or complex) variable with exact derivatives."""

    def __call__(self, x):
        raise NotImplementedError

    def derivative(self, k: int = 1) -> "CoefficientFunction":
        f = self
        for _ in range(k):
            f = f._d()
        return f

    def _d(self) -> "CoefficientFunction":
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return False

    @property
    def eval(self) -> Callable:
        return self.__call__

    @property
    def deriv1(self) -> Callable:
        return self.derivative(1).__call__

    @property
    def deriv2(self) -> Callable:
        return self.derivative(2).__call__

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        other = _lift(other)
        if other.is_zero:
            return self
        if self.is_zero:
            return other
        if isinstance(self, ExpPoly) and isinstance(other, ExpPoly):
            return self._add(other)
        return _Sum((self, other))

    __radd__ = __add__

    def __neg__(self):
        return self * (-1.0)

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) + (-self)

    def __mul__(self, other):
        other = _lift(other)
        if self.is_zero or other.is_zero:
            return ExpPoly({})
        if isinstance(self, ExpPoly) and isinstance(other, ExpPoly):
            return self._mul(other)
        return _Product(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _lift(other)
        if isinstance(other, ExpPoly) and other.is_constant:
            return self * (1.0 / other.constant_value)
        return self * _Reciprocal(other)

    def __rtruediv__(self, other):
        return _lift(other) * _Reciprocal(self)


def _lift(v) -> CoefficientFunction:
    if isinstance(v, CoefficientFunction):
        return v
    if np.isscalar(v):
        return const(complex(v))
    raise TypeError(f"cannot use {type(v).__name__} as a coefficient")


class ExpPoly(CoefficientFunction):
    """``sum_{(p, a)} c * x**p * exp(a x)`` with integer p >= 0 and complex a."""

    __slots__ = ("terms", "_groups")

    def __init__(self, terms: dict):
        self.terms = {(int(p), complex(a)): complex(c) for (p, a), c in terms.items() if c != 0}
        self._groups = None

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return all(p == 0 and a == 0 for p, a in self.terms)

    @property
    def constant_value(self) -> complex:
        return self.terms.get((0, 0j), 0j)

    def __call__(self, x):
        x = np.asarray(x)
        out = np.zeros(x.shape, dtype=complex)
        for p, group in self._grouped().items():
            t = self._exp_sum(group, x)
            out = out + (t * x**p if p else t)
        return out if out.ndim else complex(out)

    _TAYLOR_ORDER = 32

    def _grouped(self):
        """Per power of x: exponents, coefficients, max |a| and exact moments sum c a^k."""
        if self._groups is None:
            raw: dict = {}
            for (p, a), c in self.terms.items():
                raw.setdefault(p, []).append((a, c))
            self._groups = {}
            for p, terms in raw.items():
                a = np.array([t[0] for t in terms])
                c = np.array([t[1] for t in terms])
                terms_k = [c * a**k for k in range(self._TAYLOR_ORDER)]
                moments = np.array([np.sum(t) for t in terms_k])
                # a moment at the rounding level of its terms is an exact zero
                noise = np.array([16 * np.finfo(float).eps * np.sum(np.abs(t)) for t in terms_k])
                moments[np.abs(moments) <= noise] = 0.0
                self._groups[p] = (a, c, float(np.max(np.abs(a))), moments)
        return self._groups

    @staticmethod
    def _exp_sum(group, x):
        """sum c e^{a x}; near x = 0 summed from the moments to avoid cancellation."""
        a, c, amax, moments = group
        if amax == 0:
            return np.full(x.shape, c.sum(), dtype=complex)
        if x.ndim == 0:
            xv = complex(x)
            if abs(xv) * amax >= 1.0:
                return complex(np.exp(a * xv) @ c)
            acc = 0j
            for k in range(len(moments) - 1, -1, -1):
                acc = acc * xv / (k + 1) + moments[k]
            return acc
        direct = np.exp(np.multiply.outer(x, a)) @ c
        small = np.abs(x) * amax < 1.0
        if np.any(small):
            xs = x[small]
            series = np.zeros(xs.shape, dtype=complex)
            for k in range(len(moments) - 1, -1, -1):
                series = series * xs / (k + 1) + moments[k]
            direct[small] = series
        return direct

    def _d(self):
        new: dict = {}
        for (p, a), c in self.terms.items():
            if a != 0:
                new[(p, a)] = new.get((p, a), 0) + c * a
            if p:
                new[(p - 1, a)] = new.get((p - 1, a), 0) + c * p
        return ExpPoly(new)

    def _add(self, other: "ExpPoly") -> "ExpPoly":
        new = dict(self.terms)
        for k, c in other.terms.items():
            new[k] = new.get(k, 0) + c
        return ExpPoly(new)

    def _mul(self, other: "ExpPoly") -> "ExpPoly":
        new: dict = {}
        for (p1, a1), c1 in self.terms.items():
            for (p2, a2), c2 in other.terms.items():
                k = (p1 + p2, a1 + a2)
                new[k] = new.get(k, 0) + c1 * c2
        return ExpPoly(new)

    def __repr__(self):
        parts = [f"{c:.6g}*x^{p}*exp({a:.6g}x)" for (p, a), c in sorted(self.terms.items(), key=lambda t: (t[0][0], t[0][1].real, t[0][1].imag))]
        return "ExpPoly(" + " + ".join(parts or ["0"]) + ")"


def const(c: complex) -> ExpPoly:
    return ExpPoly({(0, 0): c})


def xvar(scale: complex = 1.0) -> ExpPoly:
    """``scale * x``."""
    return ExpPoly({(1, 0): scale})


def exp_ax(a: complex, c: complex = 1.0) -> ExpPoly:
    """``c * exp(a x)``."""
    return ExpPoly({(0, a): c})


class Analytic(CoefficientFunction):
    """User-supplied function with a finite chain of analytic derivatives."""

    def __init__(self, funcs: Sequence[Callable], name: str = "f"):
        if not funcs:
            raise ValueError("need at least the function itself")
        self.funcs = tuple(funcs)
        self.name = name

    def __call__(self, x):
        return np.asarray(self.funcs[0](x), dtype=complex) if np.ndim(x) else complex(self.funcs[0](x))

    def _d(self):
        if len(self.funcs) < 2:
            raise OrderError(f"no analytic derivative supplied for {self.name}")
        return Analytic(self.funcs[1:], self.name + "'")


class _Sum(CoefficientFunction):
    def __init__(self, parts):
        self.parts = tuple(parts)

    def __call__(self, x):
        return sum(p(x) for p in self.parts)

    def _d(self):
        out = ExpPoly({})
        for p in self.parts:
            out = out + p._d()
        return out


class _Product(CoefficientFunction):
    def __init__(self, f, g):
        self.f, self.g = f, g

    def __call__(self, x):
        return self.f(x) * self.g(x)

    def _d(self):
        return self.f._d() * self.g + self.f * self.g._d()


class _Reciprocal(CoefficientFunction):
    def __init__(self, f):
        self.f = f

    def __call__(self, x):
        return 1.0 / self.f(x)

    def _d(self):
        return -(self.f._d() * self * self)


# --------------------------------------------------------------------------
# Test functions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """Probe function with derivatives up to order 4."""

    derivs: tuple
    name: str = "f"

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if len(self.derivs) < MAX_ORDER + 1:
            raise ValueError("a test function needs derivatives up to order 4")

    def __call__(self, x, k: int = 0):
        return self.derivs[k](x)

    @property
    def eval(self):
        return self.derivs[0]

    @classmethod
    def from_coefficient(cls, cf: CoefficientFunction, name: str = "f") -> "TestFunction":
        chain = [cf]
        for _ in range(MAX_ORDER):
            chain.append(chain[-1].derivative())
        return cls(tuple(c.__call__ for c in chain), name)

    @classmethod
    def gaussian(cls, width: float = 1.0) -> "TestFunction":
        """exp(-(x/width)^2), derivatives through Hermite polynomials."""
        from numpy.polynomial.hermite import hermval

        def make(k):
            coef = [0] * k + [1]
            return lambda x: ((-1) ** k * hermval(np.asarray(x) / width, coef)
                              * np.exp(-(np.asarray(x) / width) ** 2) / width**k)

        return cls(tuple(make(k) for k in range(MAX_ORDER + 1)), f"gauss({width})")


def standard_test_functions() -> list[TestFunction]:
    """Fixed battery of five probe functions."""
    poly = ExpPoly({(0, 0): 1.0, (1, 0): 1.0, (2, 0): -0.5, (3, 0): 0.3})
    sine = ExpPoly({(0, 1.3j): -0.5j, (0, -1.3j): 0.5j})  # sin(1.3 x)
    growth = exp_ax(0.7)
    mixed = ExpPoly({(0, 0.2 + 0.9j): 0.5, (0, 0.2 - 0.9j): 0.5, (2, 0): 0.1})
    return [
        TestFunction.from_coefficient(poly, "cubic"),
        TestFunction.from_coefficient(sine, "sin(1.3x)"),
        TestFunction.from_coefficient(growth, "exp(0.7x)"),
        TestFunction.from_coefficient(mixed, "exp(0.2x)cos(0.9x)+0.1x^2"),
        TestFunction.gaussian(0.8),
    ]


# --------------------------------------------------------------------------
# Operators
# --------------------------------------------------------------------------

class LinearDifferentialOperator:
    """``sum_k coeffs[k](x) d^k/dx^k`` with order <= 4."""

    def __init__(self, coeffs: Sequence):
        coeffs = [_lift(c) for c in coeffs]
        while coeffs and coeffs[-1].is_zero:
            coeffs.pop()
        if len(coeffs) > MAX_ORDER + 1:
            raise OrderError(f"order {len(coeffs) - 1} exceeds {MAX_ORDER}")
        self.coeffs = tuple(coeffs) if coeffs else (ExpPoly({}),)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1 if not (len(self.coeffs) == 1 and self.coeffs[0].is_zero) else 0

    @classmethod
    def multiply(cls, cf) -> "LinearDifferentialOperator":
        return cls([cf])

    @classmethod
    def identity(cls) -> "LinearDifferentialOperator":
        return cls([const(1.0)])

    @classmethod
    def d(cls, k: int = 1) -> "LinearDifferentialOperator":
        return cls([ExpPoly({})] * k + [const(1.0)])

    def coefficient(self, k: int) -> CoefficientFunction:
        return self.coeffs[k] if k < len(self.coeffs) else ExpPoly({})

    def __call__(self, f: TestFunction, x):
        return apply(self, f, x)

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        return LinearDifferentialOperator([self.coefficient(k) + other.coefficient(k) for k in range(n)])

    def __neg__(self):
        return LinearDifferentialOperator([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s):
        if isinstance(s, LinearDifferentialOperator):
            return compose(self, s)
        return LinearDifferentialOperator([c * s for c in self.coeffs])

    def __rmul__(self, s):
        return LinearDifferentialOperator([_lift(s) * c for c in self.coeffs])

    def __matmul__(self, other):
        return compose(self, other)

    def __repr__(self):
        return f"LinearDifferentialOperator(order={self.order})"


def apply(op: LinearDifferentialOperator, f: TestFunction, x):
    """``sum_k c_k(x) f^(k)(x)``."""
    if op.order >= len(f.derivs):
        raise OrderError(f"test function lacks derivative {op.order}")
    total = 0j
    for k, c in enumerate(op.coeffs):
        if not c.is_zero:
            total = total + c(x) * f.derivs[k](x)
    return total


def compose(A: LinearDifferentialOperator, B: LinearDifferentialOperator) -> LinearDifferentialOperator:
    """``A o B`` by the Leibniz rule."""
    if A.order + B.order > MAX_ORDER:
        raise OrderError(f"composition order {A.order + B.order} exceeds {MAX_ORDER}")
    out = [ExpPoly({}) for _ in range(A.order + B.order + 1)]
    for i, a in enumerate(A.coeffs):
        if a.is_zero:
            continue
        for j, b in enumerate(B.coeffs):
            if b.is_zero:
                continue
            for r in range(i + 1):
                out[i - r + j] = out[i - r + j] + math.comb(i, r) * (a * b.derivative(r))
    return LinearDifferentialOperator(out)


def commutator(A, B):
    return compose(A, B) - compose(B, A)


# --------------------------------------------------------------------------
# Realizations
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Realization:
    """A triple (plus, zero, minus) with the data needed by its relations.

    ``plus`` is multiplication by ``plus_slope * x``; ``z`` is the deformation
    parameter in the relations (0 for the Lie algebra).
    """

    plus: LinearDifferentialOperator
    zero: LinearDifferentialOperator
    minus: LinearDifferentialOperator
    z: float
    lam: float
    plus_slope: complex
    kind: str

    def exp_plus(self, s: complex) -> ExpPoly:
        """Multiplier ``exp(s * plus)`` as a function of x."""
        return exp_ax(s * self.plus_slope)

    def __iter__(self):
        return iter((self.plus, self.zero, self.minus))


def _flag_lambda(lam: float):
    if -1 < lam < 0:
        import warnings
        warnings.warn("representation label in (-1, 0) is outside the tested regime", stacklevel=3)


def make_classical_realization(lam: float) -> Realization:
    """l+ = x, l0 = 2x d - lam, l- = -x d^2 + lam d."""
    _flag_lambda(lam)
    plus = LinearDifferentialOperator([xvar()])
    zero = LinearDifferentialOperator([const(-lam), xvar(2.0)])
    minus = LinearDifferentialOperator([ExpPoly({}), const(lam), xvar(-1.0)])
    return Realization(plus, zero, minus, 0.0, lam, 1.0, "classical")


def _deformed_ops(zeta: complex, lam: float):
    e2 = exp_ax(2 * zeta)
    one = const(1.0)
    zero = LinearDifferentialOperator([(e2 + one) * (-lam / 2), (e2 - one) * (1 / zeta)])
    minus = LinearDifferentialOperator([
        (e2 - one) * (-zeta * lam * lam / 8),
        (e2 + one) * (lam / 2),
        (e2 - one) * (-1 / (2 * zeta)),
    ])
    return zero, minus


def make_deformed_realization(z: float, lam: float) -> Realization:
    """Gelfand-Dyson type realization of U_z(sl(2,R)) with j+ = x."""
    if z == 0:
        raise ValueError("z = 0 is the classical realization; use make_classical_realization")
    _flag_lambda(lam)
    zero, minus = _deformed_ops(complex(z), lam)
    plus = LinearDifferentialOperator([xvar()])
    return Realization(plus, zero, minus, float(z), lam, 1.0, "deformed")


def make_pt_realization(z: float, lam: float) -> Realization:
    """PT-symmetric realization: J+ = -i x; z = 0 gives the undeformed PT triple.

    Obtained from the deformed one through x -> i x scaling of the deformation
    (zeta = -i z), J0 = j0 and J- = i j-.
    """
    _flag_lambda(lam)
    plus = LinearDifferentialOperator([xvar(-1j)])
    if z == 0:
        zero = LinearDifferentialOperator([const(-lam), xvar(2.0)])
        minus = LinearDifferentialOperator([ExpPoly({}), const(1j * lam), xvar(-1j)])
        return Realization(plus, zero, minus, 0.0, lam, -1j, "pt")
    zero, m = _deformed_ops(-1j * z, lam)
    minus = 1j * m
    return Realization(plus, zero, minus, float(z), lam, -1j, "pt")


def pt_symmetry_defect(op: LinearDifferentialOperator, x) -> float:
    """max_k |conj(c_k(-x)) (-1)^k - c_k(x)|: zero for a PT-invariant operator."""
    worst = 0.0
    for k, c in enumerate(op.coeffs):
        worst = max(worst, float(np.max(np.abs(np.conj(c(-np.asarray(x))) * (-1) ** k - c(x)))))
    return worst


def _relation_operators(t: Realization):
    jp, j0, jm = t.plus, t.zero, t.minus
    if t.z == 0:
        rhs1 = jp * 2.0
        rhs2 = jm * -2.0
    else:
        rhs1 = LinearDifferentialOperator([(t.exp_plus(2 * t.z) - const(1.0)) * (1 / t.z)])
        rhs2 = jm * -2.0 + compose(j0, j0) * t.z
    r1 = commutator(j0, jp) - rhs1
    r2 = commutator(j0, jm) - rhs2
    r3 = commutator(jp, jm) - j0
    return r1, r2, r3


def commutation_residuals(triple: Realization, x, battery: Iterable[TestFunction] | None = None):
    """Max modulus of the three relation residuals over the probe battery at x."""
    battery = list(battery) if battery is not None else standard_test_functions()
    ops = _relation_operators(triple)
    return tuple(
        max(float(np.max(np.abs(apply(op, f, x)))) for f in battery) for op in ops
    )


def casimir_operator(t: Realization) -> LinearDifferentialOperator:
    """Casimir assembled from the triple; reduces to 1/2 j0^2 + j+j- + j-j+ at z = 0."""
    j0, jm = t.zero, t.minus
    if t.z == 0:
        return compose(j0, j0) * 0.5 + compose(t.plus, jm) + compose(jm, t.plus)
    em = t.exp_plus(-2 * t.z)
    one = const(1.0)
    w = LinearDifferentialOperator([(one - em) * (1 / (2 * t.z))])
    return (compose(j0, compose(LinearDifferentialOperator([em]), j0)) * 0.5
            + compose(w, jm) + compose(jm, w)
            + LinearDifferentialOperator([em - one]))


def casimir_residual(triple: Realization, lam: float, f: TestFunction, x):
    """(C f)(x) - lam(lam+2)/2 f(x)."""
    C = casimir_operator(triple)
    return apply(C, f, x) - 0.5 * lam * (lam + 2.0) * f(x)


BATTERY_Z = (0.1, 0.5, 1.0, 2.0)
BATTERY_LAMBDA = (0.0, 1.0, 2.0, 3.7)


def residual_battery(zs=BATTERY_Z, lams=BATTERY_LAMBDA, n_x: int = 20, kinds=("deformed", "pt"),
                     battery: Sequence[TestFunction] | None = None) -> dict:
    """Max commutation and Casimir residuals over the standard parameter battery."""
    x = np.linspace(-1.0, 1.0, n_x + 2)[1:-1]
    battery = list(battery) if battery is not None else standard_test_functions()
    report = {"commutation": 0.0, "casimir": 0.0, "cases": 0}
    for kind, z, lam in _iproduct(kinds, zs, lams):
        if kind == "deformed":
            t = make_deformed_realization(z, lam) if z != 0 else make_classical_realization(lam)
        elif kind == "pt":
            t = make_pt_realization(z, lam)
        else:
            t = make_classical_realization(lam)
        r = commutation_residuals(t, x, battery)
        C = casimir_operator(t)
        c = max(float(np.max(np.abs(apply(C, f, x) - 0.5 * lam * (lam + 2.0) * f(x)))) for f in battery)
        report["commutation"] = max(report["commutation"], *r)
        report["casimir"] = max(report["casimir"], c)
        report["cases"] += 1
    return report

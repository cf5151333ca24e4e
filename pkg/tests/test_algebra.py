import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from deformed_spectra.algebra import (
    ExpPoly,
    LinearDifferentialOperator,
    OrderError,
    Realization,
    TestFunction,
    apply,
    casimir_operator,
    casimir_residual,
    commutation_residuals,
    commutator,
    compose,
    const,
    exp_ax,
    make_classical_realization,
    make_deformed_realization,
    make_pt_realization,
    pt_symmetry_defect,
    residual_battery,
    standard_test_functions,
    xvar,
)

X = np.linspace(-1.0, 1.0, 22)[1:-1]


def _num_deriv(f, x, h=1e-5):
    return (f(x + h) - f(x - h)) / (2 * h)


class TestExpPoly:
    def test_sin_cos_identity(self):
        z = 0.7
        s = ExpPoly({(0, 1j * z): -0.5j, (0, -1j * z): 0.5j})
        c = ExpPoly({(0, 1j * z): 0.5, (0, -1j * z): 0.5})
        one = s * s + c * c
        np.testing.assert_allclose(one(X), 1.0, atol=1e-14)

    @given(st.floats(-2, 2), st.integers(0, 3), st.floats(-1.5, 1.5))
    def test_derivative_matches_finite_difference(self, a, p, c):
        f = ExpPoly({(p, a): c, (0, 0.3j): 1.0})
        np.testing.assert_allclose(f.derivative()(X), _num_deriv(f, X), rtol=1e-6, atol=1e-7)

    def test_small_argument_cancellation(self):
        # (e^{ax} - 1)/a at tiny x must keep relative accuracy
        a = 0.9
        f = (exp_ax(a) - const(1.0)) * (1 / a)
        x = np.array([1e-12, 1e-9, 1e-6])
        np.testing.assert_allclose(f(x).real, np.expm1(a * x) / a, rtol=1e-12)

    def test_product_and_sum(self):
        f = xvar(2.0) + const(1.0)
        g = exp_ax(0.5)
        np.testing.assert_allclose((f * g)(X), (2 * X + 1) * np.exp(0.5 * X), rtol=1e-14)

    def test_scalar_and_array_agree(self):
        f = ExpPoly({(1, 0.2): 1.0, (0, -1j): 2.0})
        assert f(0.3) == pytest.approx(f(np.array([0.3]))[0], rel=1e-15)


class TestOperators:
    def test_compose_leibniz(self):
        D = LinearDifferentialOperator.d()
        x_op = LinearDifferentialOperator.multiply(xvar())
        # [d, x] = 1
        c = commutator(D, x_op)
        f = standard_test_functions()[0]
        np.testing.assert_allclose(apply(c, f, X), f(X), atol=1e-13)

    def test_order_cap(self):
        D2 = LinearDifferentialOperator.d(2)
        D3 = LinearDifferentialOperator.d(3)
        with pytest.raises(OrderError):
            compose(D2, D3)

    def test_commutator_antisymmetric(self):
        t = make_deformed_realization(0.5, 1.0)
        f = standard_test_functions()[1]
        a = apply(commutator(t.zero, t.minus), f, X)
        b = apply(commutator(t.minus, t.zero), f, X)
        np.testing.assert_allclose(a, -b, atol=1e-12)

    def test_test_function_needs_four_derivatives(self):
        with pytest.raises(ValueError):
            TestFunction((np.sin, np.cos))


class TestRealizations:
    def test_classical_relations(self):
        r = commutation_residuals(make_classical_realization(2.0), X)
        assert max(r) < 1e-12

    @pytest.mark.parametrize("z", [0.1, 0.5, 1.0, 2.0])
    @pytest.mark.parametrize("lam", [0.0, 1.0, 2.0, 3.7])
    @pytest.mark.parametrize("maker", [make_deformed_realization, make_pt_realization])
    def test_deformed_relations_and_casimir(self, maker, z, lam):
        t = maker(z, lam)
        assert max(commutation_residuals(t, X)) < 1e-10
        for f in standard_test_functions():
            assert np.max(np.abs(casimir_residual(t, lam, f, X))) < 1e-10

    @given(st.floats(0.05, 3.0), st.floats(0.0, 5.0))
    def test_relations_random_parameters(self, z, lam):
        assert max(commutation_residuals(make_pt_realization(z, lam), X)) < 1e-8

    def test_pt_realization_is_pt_invariant(self):
        t = make_pt_realization(0.7, 2.0)
        for op in t:
            assert pt_symmetry_defect(op, X) < 1e-13

    def test_casimir_reduces_at_zero(self):
        t = make_pt_realization(0.0, 1.0)
        f = standard_test_functions()[0]
        assert np.max(np.abs(casimir_residual(t, 1.0, f, X))) < 1e-12

    def test_z_zero_rejected_by_deformed_maker(self):
        with pytest.raises(ValueError):
            make_deformed_realization(0.0, 1.0)

    def test_wrong_sign_mutation_is_detected(self):
        t = make_deformed_realization(0.5, 2.0)
        bad_minus = LinearDifferentialOperator(
            [t.minus.coefficient(0), t.minus.coefficient(1) * -1.0, t.minus.coefficient(2)])
        bad = Realization(t.plus, t.zero, bad_minus, t.z, t.lam, t.plus_slope, t.kind)
        assert max(commutation_residuals(bad, X)) > 0.1


class TestBattery:
    def test_standard_battery_passes(self):
        rep = residual_battery()
        assert rep["commutation"] < 1e-8 and rep["casimir"] < 1e-8
        assert rep["cases"] == 32

    def test_battery_has_five_probes(self):
        assert len(standard_test_functions()) == 5

    def test_zero_z_battery_is_classical(self):
        rep = residual_battery(zs=(0.0,), lams=(0.0, 2.0))
        assert rep["commutation"] < 1e-12

    def test_casimir_operator_order(self):
        assert casimir_operator(make_pt_realization(1.0, 1.0)).order <= 4

import json
import math

import jsonschema
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from deformed_spectra.models import (
    PRESET_FORMAT,
    PRESETS,
    BrokenPhaseError,
    DwtParams,
    ModelError,
    ModelParams,
    alpha_beta_from,
    catalog_json,
    dwt_exponents,
    dwt_potential,
    dwt_problem,
    dwt_symmetric_eigenfunction,
    dwt_symmetric_params,
    dwt_symmetric_spectrum,
    example1_eigenfunction,
    example1_perturbation_e1,
    example1_potential,
    example1_spectrum_exact,
    example2_box_limit,
    example2_box_problem,
    example2_problem,
    example2_spectrum,
    example3_barrier_coefficient,
    example3_limits,
    example3_potential,
    example3_problem,
    fd_k_values,
    fig4_difference,
    finite_dim_eigenvalues,
    get_preset,
    is_broken_phase,
    preset_schema,
    sl2_eigenfunction,
    sl2_problem,
    sl2_spectrum,
    tau_of,
)
from deformed_spectra.spectral import Grid, count_nodes, refine, solve_dirichlet

EX1 = ModelParams(z=1.0, lam=2.0, mu_minus=1.0, mu_zero=2.0)


def sup_diff_up_to_sign(a, b):
    return min(np.max(np.abs(a - b)), np.max(np.abs(a + b)))


class TestExample1:
    @pytest.mark.parametrize("lam,alpha", [(2.0, 3.5), (0.0, 1.5), (1.0, 2.5)])
    def test_alpha(self, lam, alpha):
        assert alpha_beta_from(EX1.replace(lam=lam)).alpha == pytest.approx(alpha)

    def test_beta(self):
        pt = alpha_beta_from(EX1)
        assert pt.beta == pytest.approx(2.5)
        assert pt.bound

    def test_potential_at_quarter_period(self):
        pt = alpha_beta_from(EX1)
        expected = 0.5 * (2 * pt.beta * (pt.beta - 1) + 2 * pt.alpha * (pt.alpha - 1)) - 2.0
        assert example1_potential(EX1).U(math.pi / 4) == pytest.approx(expected, rel=1e-13)
        assert expected == pytest.approx(10.5)

    def test_closed_form_levels(self):
        assert [example1_spectrum_exact(EX1, n) for n in range(4)] == pytest.approx([16, 30, 48, 70])

    def test_pure_quadratic_when_mu0_vanishes(self):
        p = EX1.replace(mu_zero=0.0, z=3.0)
        for n in range(3):
            assert example1_spectrum_exact(p, n) == pytest.approx(1.5 * (2 * n + 4) ** 2)

    def test_closed_form_needs_zero_mu_plus(self):
        with pytest.raises(ModelError):
            example1_spectrum_exact(EX1.replace(mu_plus=0.5), 0)

    def test_log_term_flips_with_mu_plus(self):
        y = np.array([0.3, 1.0, 1.4])
        base = example1_potential(EX1).U(y)
        up = example1_potential(EX1.replace(mu_plus=26.0)).U(y) - base
        down = example1_potential(EX1.replace(mu_plus=-26.0)).U(y) - base
        np.testing.assert_allclose(up, -down, rtol=1e-12)

    def test_eigenfunction_boundaries_and_norm(self):
        for n in range(3):
            assert abs(example1_eigenfunction(EX1, n, 1e-6)) < 1e-12
            assert abs(example1_eigenfunction(EX1, n, math.pi / 2 - 1e-6)) < 1e-12
            val, _ = quad(lambda y: example1_eigenfunction(EX1, n, y) ** 2, 0, math.pi / 2, epsabs=1e-12)
            assert val == pytest.approx(1.0, abs=1e-10)

    def test_ground_state_single_lobe(self):
        y = np.linspace(0.01, math.pi / 2 - 0.01, 200)
        assert np.all(example1_eigenfunction(EX1, 0, y) > 0)

    def test_eigenfunction_matches_solver(self):
        prob = example1_potential(EX1)
        spec = solve_dirichlet(prob, Grid(4096, 0.0, math.pi / 2, 0.0, True), 3)
        exact = example1_eigenfunction(EX1, 2, spec.grid.y_values)
        assert sup_diff_up_to_sign(spec.states[2], exact) < 1e-4

    def test_limit_z_to_zero_matches_sl2(self):
        # mu+ = 0: kappa = |mu0|/mu-
        sl2 = ModelParams(lam=2.0, mu_minus=1.0, mu_zero=2.0)
        for n in range(3):
            e = [example1_spectrum_exact(EX1.replace(z=z), n) for z in (1e-3, 1e-6)]
            ref = sl2_spectrum(sl2, n)
            assert abs(e[1] - ref) < abs(e[0] - ref)
            assert e[1] == pytest.approx(ref, rel=1e-5)


class TestPerturbation:
    P = ModelParams(z=20.0, lam=2.0, mu_minus=1.0, mu_zero=0.0, mu_plus=0.5)

    def test_vanishes_without_mu_plus(self):
        assert example1_perturbation_e1(self.P.replace(mu_plus=0.0), 1) == 0.0

    @pytest.mark.parametrize("mu_plus", [0.5, -0.5, 3.0])
    def test_sign_follows_mu_plus(self, mu_plus):
        assert np.sign(example1_perturbation_e1(self.P.replace(mu_plus=mu_plus), 0)) == np.sign(mu_plus)

    @pytest.mark.parametrize("n", range(4))
    def test_series_matches_closed_form(self, n):
        a = example1_perturbation_e1(self.P, n, method="closed")
        b = example1_perturbation_e1(self.P, n, method="series")
        assert b == pytest.approx(a, rel=1e-8)

    @pytest.mark.parametrize("n", range(3))
    def test_matches_overlap_integral(self, n):
        p = self.P
        f = lambda y: example1_eigenfunction(p, n, y) ** 2 * math.log(1 / math.cos(y) ** 2)
        val, _ = quad(f, 0, math.pi / 2, epsabs=1e-13, epsrel=1e-12, limit=200)
        assert example1_perturbation_e1(p, n) == pytest.approx(p.mu_plus / (2 * p.z) * val, rel=1e-8)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            example1_perturbation_e1(self.P, 0, method="pade")


class TestSl2:
    P = ModelParams(lam=0.0, mu_minus=1.0, mu_zero=0.0, mu_plus=1.0)

    def test_levels(self):
        assert [sl2_spectrum(self.P, n) for n in range(3)] == pytest.approx([2.0, 4.0, 6.0])

    def test_eigenfunction_vanishes_at_origin(self):
        assert sl2_eigenfunction(self.P, 1, 0.0) == 0.0

    def test_numeric(self):
        spec = refine(sl2_problem(self.P), 4, 1e-9)
        np.testing.assert_allclose(spec.energies, [2, 4, 6, 8], rtol=1e-7)

    def test_kappa_sign(self):
        with pytest.raises(ModelError):
            sl2_spectrum(self.P.replace(mu_plus=-1.0), 0)


class TestExample2:
    P = ModelParams(z=1.0, lam=1.0, mu_minus=1.0, mu_zero=1.0, mu_plus=0.5)

    @given(st.floats(-3.0, 3.0).filter(lambda v: abs(v) > 0.1), st.integers(0, 4))
    def test_reduces_to_example1(self, mu0, n):
        p = ModelParams(z=0.8, lam=1.0, mu_minus=1.2, mu_zero=mu0)
        assert example2_spectrum(p, n) == pytest.approx(example1_spectrum_exact(p, n), rel=1e-12)

    @pytest.mark.parametrize("n", range(4))
    def test_matches_finite_dimensional_plus_branch(self, n):
        m = int(2 * n + self.P.lam + 2)
        d = m + 1
        k_list = fd_k_values(d)
        vals = finite_dim_eigenvalues("ex2fd", self.P, d)
        # plus branch of k = m sits just before its minus partner
        idx = sum(1 if k == 0 else 2 for k in k_list[:k_list.index(m)])
        assert vals[idx] == example2_spectrum(self.P, n)

    def test_numeric(self):
        spec = refine(example2_problem(self.P), 4, 1e-9)
        exact = [example2_spectrum(self.P, n) for n in range(4)]
        np.testing.assert_allclose(spec.energies, exact, rtol=1e-7)

    def test_broken_phase(self):
        p = ModelParams(mu_minus=1.0, mu_zero=0.0, mu_plus=-1.0)
        assert is_broken_phase(p)
        assert isinstance(tau_of(p), complex)
        assert isinstance(example2_spectrum(p, 0), complex)
        with pytest.raises(BrokenPhaseError):
            alpha_beta_from(p, "example2")
        with pytest.raises(BrokenPhaseError):
            example2_box_problem(p)

    def test_box_values_and_norm(self):
        p = ModelParams(z=1.0, mu_minus=1.0)
        assert example2_box_limit(p, 1)[0] == pytest.approx(0.5)
        assert example2_box_limit(p, 2)[0] == pytest.approx(2.0)
        phi = example2_box_limit(p, 3)[1]
        val, _ = quad(lambda y: phi(y) ** 2, 0, math.pi)
        assert val == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(ModelError):
            example2_box_limit(p, 0)

    def test_box_solver_second_order(self):
        p = self.P
        prob = example2_box_problem(p)
        exact = np.array([example2_box_limit(p, n)[0] for n in (1, 2, 3)])
        errs = [solve_dirichlet(prob, Grid(n, 0.0, math.pi), 3).energies - exact for n in (255, 511)]
        np.testing.assert_allclose(errs[0] / errs[1], 4.0, rtol=1e-2)


class TestExample3:
    ONES = ModelParams(lam=1.0, mu_minus=1.0, mu_zero=1.0, mu_plus=1.0)
    Y = np.linspace(0.2, 3.0, 15)

    def test_infinity_limit(self):
        np.testing.assert_allclose(example3_limits(self.ONES, self.Y, "infinity"), self.Y**2 / 2 + 1)

    def test_zero_limit(self):
        np.testing.assert_allclose(example3_limits(self.ONES, self.Y, "zero"),
                                   3 + 2 * self.Y**2 + 1 / (2 * self.Y**2))

    def test_endpoint_dispatch(self):
        for z, which in ((0.0, "zero"), (math.inf, "infinity")):
            np.testing.assert_array_equal(example3_potential(self.ONES.replace(z=z), self.Y),
                                          example3_limits(self.ONES, self.Y, which))

    @pytest.mark.parametrize("which", ["zero", "infinity"])
    def test_limits_approached(self, which):
        zs = (1e-2, 1e-3) if which == "zero" else (30.0, 300.0)
        ref = example3_limits(self.ONES, self.Y, which)
        errs = [np.max(np.abs(example3_potential(self.ONES.replace(z=z), self.Y) - ref)) for z in zs]
        assert errs[1] < errs[0] < 0.1

    def test_pole(self):
        assert example3_barrier_coefficient(self.ONES.replace(z=0.5)) == 0.0
        assert example3_barrier_coefficient(self.ONES.replace(z=0.5, mu_plus=2.0)) == pytest.approx(0.125)
        assert math.isfinite(example3_potential(self.ONES.replace(z=0.5), 0.0))
        assert example3_problem(self.ONES.replace(z=0.5)).y_min < 0
        assert example3_problem(self.ONES.replace(z=0.5, mu_plus=2.0)).y_min == 0

    def test_depth_decreases_with_z(self):
        def depth(z):
            y = np.linspace(0.0, 4.0, 4001)
            u = example3_potential(get_preset("example3-fig6").model_params().replace(z=z), y)
            return u[0] - u.min()
        assert depth(0.25) > depth(0.5) > 0

    def test_unknown_limit(self):
        with pytest.raises(ValueError):
            example3_limits(self.ONES, self.Y, "half")


class TestFiniteDimensional:
    P = ModelParams(z=1.5, mu_minus=1.0, mu_zero=0.7, mu_plus=0.4)

    def test_ek_odd_dimension(self):
        vals = finite_dim_eigenvalues("ek", self.P, 3)
        assert fd_k_values(3) == [0, 2]
        assert vals == pytest.approx([0.0, 2 * 1.5 + 1.4, 2 * 1.5 - 1.4])

    def test_even_dimension(self):
        assert fd_k_values(4) == [1, 3]

    @pytest.mark.parametrize("d", range(1, 9))
    def test_level_count_equals_dimension(self, d):
        assert len(finite_dim_eigenvalues("ek", self.P, d)) == d

    def test_ekfd1_zero_k(self):
        assert finite_dim_eigenvalues("ekfd1", self.P, 1) == [0.0]

    def test_ex2fd(self):
        tau = tau_of(self.P)
        vals = finite_dim_eigenvalues("ex2fd", self.P, 4)
        assert vals == pytest.approx([0.75 + tau, 0.75 - tau, 6.75 + 3 * tau, 6.75 - 3 * tau])

    def test_invalid(self):
        with pytest.raises(ValueError):
            fd_k_values(0)
        with pytest.raises(ValueError):
            finite_dim_eigenvalues("ek2", self.P, 2)

    def test_fig4_trend(self):
        p = get_preset("fig4-a").model_params()
        zs = [10.0, 20.0, 40.0, 80.0]
        for n in range(4):
            d = fig4_difference(p, n, zs)
            assert all(b < a for a, b in zip(d, d[1:]))

    def test_fig4_needs_integer_k(self):
        with pytest.raises(ModelError):
            fig4_difference(EX1.replace(lam=0.5, mu_plus=0.5), 0, [10.0])


class TestDwt:
    Y = np.linspace(-1.5, 1.5, 31)

    def test_zero_couplings(self):
        np.testing.assert_array_equal(dwt_potential(DwtParams(), self.Y), 0.0)

    def test_symmetric_is_even(self):
        d = DwtParams(0.0, 10.0, 0.0, 3.75)
        np.testing.assert_allclose(dwt_potential(d, self.Y), dwt_potential(d, -self.Y), rtol=1e-14)

    def test_mirror(self):
        d = get_preset("dwt-khco3").dwt()
        np.testing.assert_allclose(dwt_potential(d.mirrored(), self.Y), dwt_potential(d, -self.Y), rtol=1e-13)

    def test_khco3_is_asymmetric_double_well(self):
        d = get_preset("dwt-khco3").dwt()
        assert (d.a_s, d.b_s, d.d_s) == (23.0, 360.0, 70.0)
        assert d.c_s == pytest.approx(2 * math.sqrt(35))
        y = np.linspace(-1.2, 1.2, 2401)
        u = dwt_potential(d, y)
        interior = (u[1:-1] < u[:-2]) & (u[1:-1] < u[2:])
        minima = y[1:-1][interior]
        assert len(minima) == 2 and minima[0] < 0 < minima[1]
        assert not math.isclose(dwt_potential(d, minima[0]), dwt_potential(d, minima[1]))

    def test_coupling_map(self):
        d = DwtParams.from_couplings(2.0, 0.5, 1.0, 2.0, 3.0, 4.0)
        assert (d.a_s, d.b_s, d.c_s, d.d_s) == (2.0, 4.0, 6.0, 8.0)
        with pytest.raises(ModelError):
            DwtParams.from_couplings(0.0, 1.0, 1, 1, 1, 1)

    def test_domain(self):
        with pytest.raises(ValueError):
            dwt_potential(DwtParams(), math.pi / 2)

    def test_wall_strength(self):
        with pytest.raises(ModelError):
            dwt_exponents(DwtParams(0.0, 0.0, 5.0, 1.0))

    def test_symmetric_legendre_value(self):
        assert dwt_symmetric_spectrum(0.0, 1, 0) == pytest.approx(0.75)

    @pytest.mark.parametrize("n", range(4))
    def test_symmetric_parity(self, n):
        f = dwt_symmetric_eigenfunction(10.0, 2, n, self.Y)
        g = dwt_symmetric_eigenfunction(10.0, 2, n, -self.Y)
        np.testing.assert_allclose(g, (-1) ** n * f, atol=1e-12)

    def test_symmetric_matches_solver(self):
        spec = refine(dwt_problem(dwt_symmetric_params(10.0, 2)), 4, 1e-9)
        exact = [dwt_symmetric_spectrum(10.0, 2, n) for n in range(4)]
        np.testing.assert_allclose(spec.energies, exact, rtol=1e-7)


class TestPresets:
    def test_schema(self):
        schema = preset_schema()
        catalog = json.loads(catalog_json())
        jsonschema.validate(catalog, schema)
        assert catalog["format"] == PRESET_FORMAT
        assert {p["name"] for p in catalog["presets"]} == set(PRESETS)

    def test_unknown_preset(self):
        with pytest.raises(KeyError, match="available"):
            get_preset("nope")

    def test_every_preset_has_a_scaling(self):
        assert all(p.scaling for p in PRESETS.values())

    @pytest.mark.parametrize("name", sorted(n for n, p in PRESETS.items()
                                            if "broken-phase" not in p.flags))
    def test_node_theorem(self, name):
        pre = get_preset(name)
        p = pre.model_params()
        builders = {"example1": example1_potential, "example2": example2_problem,
                    "example2-box": example2_box_problem, "example3": example3_problem,
                    "sl2": sl2_problem}
        prob = dwt_problem(pre.dwt()) if pre.model == "dwt" else builders[pre.model](p)
        spec = solve_dirichlet(prob, Grid.for_problem(prob, 4096, 1e-6), 8)
        assert [count_nodes(v) for v in spec.states] == list(range(8))
        assert np.all(np.diff(spec.energies) > 0)

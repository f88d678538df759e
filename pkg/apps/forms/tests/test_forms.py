import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from apps.common.exceptions import DomainError, InputError, UnsupportedSpaceError
from apps.common.records import convergence_order
from apps.forms.fields import (
    OneFormField,
    exact_form,
    form_from_expression,
    random_form_spec,
    random_series,
    random_smooth_form,
    read_form_csv,
    write_form_csv,
)
from apps.forms.hodge import hodge_evolve
from apps.forms.identities import (
    check_coercive_corollary,
    check_coercive_estimate,
    check_commutation,
    check_form_identities,
    check_hodge_symmetry,
    check_integration_by_parts,
    check_log_gradient_corollary,
    check_refined_blw,
)
from apps.forms.operators import delta_psi, hodge_generator
from apps.geometry.curvature import CDParams, cd_best_R
from apps.geometry.spaces import build_model_space
from apps.geometry.weights import WeightField, weight_from_expression
from apps.semigroup.fields import ScalarField, scalar_from_expression
from apps.semigroup.operators import apply_generator


def circle(resolution, psi='0'):
    space = build_model_space('circle', resolution)
    return space, weight_from_expression(space, psi)


def torus(resolution, psi='0'):
    space = build_model_space('torus2', resolution)
    return space, weight_from_expression(space, psi)


def random_triple(kind, seed):
    rng = np.random.default_rng(seed)
    return random_form_spec(kind, rng), random_form_spec(kind, rng), float(rng.uniform(-2, 2))


class DeltaPsiTests(SimpleTestCase):

    def test_flat_circle_derivative(self):
        space, w = circle(256)
        omega = form_from_expression(space, ['cos(theta)'])
        np.testing.assert_allclose(delta_psi(omega, space, w).values, -np.sin(space.grid), atol=1e-3)

    def test_weighted_constant_form(self):
        # δ_Ψω = ω' − Ψ'ω = 0.1 sinθ
        space, w = circle(256, '0.1*cos(theta)')
        omega = form_from_expression(space, ['1'])
        np.testing.assert_allclose(delta_psi(omega, space, w).values, 0.1 * np.sin(space.grid), atol=1e-14)

    def test_exact_form_matches_generator(self):
        space, w = circle(512)
        f = scalar_from_expression(space, 'sin(theta)')
        divergence = delta_psi(exact_form(f), space, w).values
        np.testing.assert_allclose(divergence, -np.sin(space.grid), atol=1e-4)
        np.testing.assert_allclose(divergence, apply_generator(f, space, w).values, atol=1e-4)

    def test_sphere_accepts_theta_forms_only(self):
        space = build_model_space('sphere_zonal', 64)
        comps = np.zeros((2, 64))
        comps[1] = 1.0
        with self.assertRaises(InputError):
            OneFormField(comps=comps, space=space)
        omega = form_from_expression(space, ['sin(theta)'])
        # δ(sinθ dθ) = (1/sinθ)∂_θ(sin²θ) = 2cosθ
        values = delta_psi(omega, space, WeightField.zero(space)).values
        np.testing.assert_allclose(values[4:-4], 2 * np.cos(space.grid[4:-4]), atol=5e-3)


class HodgeEvolutionTests(SimpleTestCase):

    def test_flat_circle_mode(self):
        space, w = circle(128)
        omega = form_from_expression(space, ['cos(theta)'])
        evolved = hodge_evolve(omega, 1.0, space, w)
        np.testing.assert_allclose(evolved.comps[0], math.exp(-1) * np.cos(space.grid), atol=1e-6)

    def test_zero_time(self):
        space, w = torus(32, '0.2*cos(x)*cos(y)')
        omega = random_smooth_form(space, np.random.default_rng(1))
        self.assertIs(hodge_evolve(omega, 0.0, space, w), omega)

    def test_sphere_is_unsupported(self):
        space = build_model_space('sphere_zonal', 64)
        omega = form_from_expression(space, ['sin(theta)'])
        with self.assertRaises(UnsupportedSpaceError):
            hodge_evolve(omega, 0.1, space, WeightField.zero(space))
        with self.assertRaises(UnsupportedSpaceError):
            hodge_generator(omega, space, WeightField.zero(space))

    def test_negative_time(self):
        space, w = circle(64)
        with self.assertRaises(DomainError):
            hodge_evolve(OneFormField.zero(space), -1.0, space, w)

    def test_weighted_time_order(self):
        space, w = circle(64, '0.1*cos(theta)')
        omega = form_from_expression(space, ['1'])
        reference = hodge_evolve(omega, 0.2, space, w, dt=1e-4).comps
        coarse = hodge_evolve(omega, 0.2, space, w, dt=0.02).comps
        fine = hodge_evolve(omega, 0.2, space, w, dt=0.01).comps
        order = convergence_order(np.max(np.abs(coarse - reference)), np.max(np.abs(fine - reference)))
        self.assertAlmostEqual(order, 2.0, delta=0.3)


class CommutationTests(SimpleTestCase):

    def test_zero_time(self):
        space, w = circle(64, '0.1*cos(theta)')
        omega = form_from_expression(space, ['cos(theta)'])
        self.assertEqual(check_commutation(omega, 0.0, space, w).residual, 0.0)

    def test_flat_circle(self):
        space, w = circle(512)
        omega = form_from_expression(space, ['cos(theta)'])
        self.assertLessEqual(check_commutation(omega, 0.5, space, w).residual, 1e-6)

    def test_weighted_refinement(self):
        residuals = []
        for resolution in (64, 128):
            space, w = circle(resolution, '0.3*cos(theta)')
            omega = form_from_expression(space, ['cos(theta) + 0.5*sin(2*theta)'])
            residuals.append(check_commutation(omega, 0.2, space, w).residual)
        self.assertLess(residuals[1], 1e-3)
        self.assertAlmostEqual(convergence_order(*residuals), 2.0, delta=0.5)


class RefinedBLWTests(SimpleTestCase):

    def test_classical_case(self):
        space, w = circle(512)
        eta = form_from_expression(space, ['cos(theta)'])
        self.assertLessEqual(check_refined_blw(eta, eta, 0.0, space, w).residual, 1e-3)

    def test_zero_form(self):
        space, w = torus(32, '0.1*sin(x)')
        zero = OneFormField.zero(space)
        self.assertEqual(check_refined_blw(zero, zero, -0.5, space, w).residual, 0.0)

    def test_random_triples_converge(self):
        for seed in range(20):
            eta_spec, alpha_spec, b = random_triple('circle', seed)
            residuals = []
            for resolution in (256, 512):
                space, w = circle(resolution, '0.1*cos(theta)')
                record = check_refined_blw(eta_spec.sample(space), alpha_spec.sample(space), b, space, w)
                residuals.append(record.residual)
            self.assertLessEqual(residuals[1], 1e-3, msg=f'seed {seed}')
            self.assertAlmostEqual(convergence_order(*residuals), 2.0, delta=0.3, msg=f'seed {seed}')

    def test_torus(self):
        eta_spec, alpha_spec, _ = random_triple('torus2', 7)
        residuals = []
        for resolution in (64, 128):
            space, w = torus(resolution, '0.2*cos(x)*sin(y)')
            residuals.append(check_refined_blw(eta_spec.sample(space), alpha_spec.sample(space), -0.5, space, w).residual)
        self.assertAlmostEqual(convergence_order(*residuals), 2.0, delta=0.3)

    def test_sphere_is_unsupported(self):
        space = build_model_space('sphere_zonal', 64)
        eta = form_from_expression(space, ['sin(theta)'])
        with self.assertRaises(UnsupportedSpaceError):
            check_refined_blw(eta, eta, 0.0, space, WeightField.zero(space))


class LemmaTests(SimpleTestCase):

    def test_constant_form(self):
        space, w = circle(64)
        eta = form_from_expression(space, ['2'])
        f = scalar_from_expression(space, 'cos(theta)')
        self.assertEqual(check_form_identities(eta, eta, f, space, w)['norm_gradient'].residual, 0.0)

    def test_closed_forms(self):
        space, w = circle(512)
        eta = form_from_expression(space, ['cos(theta)'])
        alpha = form_from_expression(space, ['sin(theta)'])
        f = scalar_from_expression(space, 'sin(theta)')
        records = check_form_identities(eta, alpha, f, space, w)
        for key in ('norm_gradient', 'product_rule', 'diffusion'):
            self.assertLessEqual(records[key].residual, 1e-3, msg=key)

    def test_random_torus_fields_converge(self):
        rng = np.random.default_rng(3)
        eta_spec, alpha_spec = random_form_spec('torus2', rng), random_form_spec('torus2', rng)
        f_series = random_series('torus2', rng)
        records = []
        for resolution in (64, 128):
            space, w = torus(resolution)
            f = ScalarField(values=f_series.sample(space), space=space)
            records.append(check_form_identities(eta_spec.sample(space), alpha_spec.sample(space), f, space, w))
        for key in ('norm_gradient', 'product_rule', 'diffusion'):
            order = convergence_order(records[0][key].residual, records[1][key].residual)
            self.assertAlmostEqual(order, 2.0, delta=0.3, msg=key)


class CoerciveCorollaryTests(SimpleTestCase):

    def test_zero_form(self):
        space, w = circle(64)
        zero = OneFormField.zero(space)
        record = check_coercive_corollary(zero, zero, 0.3, CDParams(R=0.0, m=1, n=1), space, w)
        self.assertEqual(record.residual, 0.0)

    def test_one_dimensional_equality(self):
        space, w = circle(512)
        eta = form_from_expression(space, ['cos(theta)'])
        record = check_coercive_corollary(eta, eta, 0.0, CDParams(R=0.0, m=1, n=1), space, w)
        self.assertGreaterEqual(record.residual, -1e-4)

    def test_weighted_random_forms(self):
        space, w = circle(512, '0.1*cos(theta)')
        cd = cd_best_R(space, w, 2)
        for seed in range(5):
            eta_spec, alpha_spec, _ = random_triple('circle', seed)
            record = check_coercive_corollary(eta_spec.sample(space), alpha_spec.sample(space), -0.5, cd, space, w)
            self.assertGreaterEqual(record.residual, -1e-3, msg=f'seed {seed}')

    def test_log_gradient_choice(self):
        space, w = torus(64, '0.1*cos(x)')
        rng = np.random.default_rng(11)
        eta = random_smooth_form(space, rng)
        G = ScalarField(values=np.exp(0.3 * random_series('torus2', rng).sample(space)), space=space)
        record = check_log_gradient_corollary(eta, G, cd_best_R(space, w, 'inf'), space, w)
        self.assertGreaterEqual(record.residual, -1e-3)
        with self.assertRaises(InputError):
            check_log_gradient_corollary(eta, G.with_values(-G.values), cd_best_R(space, w, 'inf'), space, w)

    def test_infeasible_params(self):
        space, w = circle(64)
        eta = form_from_expression(space, ['cos(theta)'])
        with self.assertRaises(DomainError):
            check_coercive_corollary(eta, eta, 0.0, CDParams(R=0.5, m=1, n=1), space, w)


class CoerciveEstimateTests(SimpleTestCase):

    def setUp(self):
        self.cd = CDParams(R=0.0, m=1, n=1)

    def test_zero_time(self):
        space, w = circle(64)
        omega = form_from_expression(space, ['cos(theta)'])
        g = scalar_from_expression(space, '1 + 0.5*sin(theta)')
        self.assertEqual(check_coercive_estimate(omega, g, 0.0, [0.0], self.cd, space, w).residual, 0.0)

    def test_zero_form(self):
        space, w = circle(64)
        g = scalar_from_expression(space, '1 + 0.5*sin(theta)')
        record = check_coercive_estimate(OneFormField.zero(space), g, 0.3, np.linspace(0, 0.3, 5), self.cd, space, w)
        self.assertEqual(record.residual, 0.0)

    def test_circle_pair(self):
        space, w = circle(512)
        omega = form_from_expression(space, ['cos(theta)'])
        g = scalar_from_expression(space, '1 + 0.5*sin(theta)')
        record = check_coercive_estimate(omega, g, 0.5, np.linspace(0, 0.5, 32), self.cd, space, w)
        self.assertGreaterEqual(record.residual, -1e-3)

    def test_g_touching_zero(self):
        space, w = circle(64)
        omega = form_from_expression(space, ['cos(theta)'])
        g = scalar_from_expression(space, '1 + sin(theta)')
        with self.assertRaises(InputError):
            check_coercive_estimate(omega, g, 0.5, [0.0, 0.5], self.cd, space, w)

    def test_u_grid_outside_interval(self):
        space, w = circle(64)
        omega = form_from_expression(space, ['cos(theta)'])
        g = scalar_from_expression(space, '2 + sin(theta)')
        with self.assertRaises(DomainError):
            check_coercive_estimate(omega, g, 0.5, [0.0, 0.7], self.cd, space, w)


class SymmetryTests(SimpleTestCase):

    def test_flat_summation_by_parts_is_exact(self):
        space, w = torus(64)
        rng = np.random.default_rng(5)
        omega, eta = random_smooth_form(space, rng), random_smooth_form(space, rng)
        f = ScalarField(values=random_series('torus2', rng).sample(space), space=space)
        self.assertLess(check_integration_by_parts(omega, f, space, w).residual, 1e-12)
        self.assertLess(check_hodge_symmetry(omega, eta, space, w).residual, 1e-12)

    def test_weighted_circle(self):
        space, w = circle(512, '0.1*cos(theta)')
        rng = np.random.default_rng(9)
        omega, eta = random_smooth_form(space, rng), random_smooth_form(space, rng)
        f = ScalarField(values=random_series('circle', rng).sample(space), space=space)
        self.assertLess(check_integration_by_parts(omega, f, space, w).residual, 1e-3)
        self.assertLess(check_hodge_symmetry(omega, eta, space, w).residual, 1e-3)


class RandomFieldTests(SimpleTestCase):

    def test_seeded_fields_are_reproducible(self):
        space, _ = torus(32)
        first = random_smooth_form(space, np.random.default_rng(42))
        second = random_smooth_form(space, np.random.default_rng(42))
        np.testing.assert_array_equal(first.comps, second.comps)

    def test_coefficients_do_not_depend_on_resolution(self):
        spec = random_form_spec('circle', np.random.default_rng(0))
        coarse = spec.sample(build_model_space('circle', 64))
        fine = spec.sample(build_model_space('circle', 128))
        np.testing.assert_allclose(coarse.comps[0], fine.comps[0][::2], atol=1e-13)

    def test_form_csv(self):
        space, _ = torus(16)
        omega = random_smooth_form(space, np.random.default_rng(2))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'omega.csv'
            write_form_csv(omega, path)
            loaded = read_form_csv(path, space)
        np.testing.assert_array_equal(loaded.comps, omega.comps)

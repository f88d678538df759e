import math
import tempfile
from pathlib import Path

import numpy as np
import ot
from django.conf import settings
from django.test import SimpleTestCase, override_settings

from apps.common.exceptions import ConfigurationError, ConvergenceError, InputError
from apps.forms.fields import OneFormField, random_smooth_scalar
from apps.geometry.curvature import measure_of
from apps.geometry.spaces import build_model_space
from apps.geometry.weights import WeightField, weight_from_expression
from apps.semigroup.evolution import heat_evolve
from apps.semigroup.fields import density_from_expression, density_from_values
from apps.transport import cost_cache
from apps.transport.api import resolve_method, w2_distance
from apps.transport.circle import w2_circle_exact
from apps.transport.dynamic import assemble_path, bb_action, build_mccann_path
from apps.transport.monotone import ZONAL_UNVERIFIED, ZONAL_VERIFIED, coarse_masses, w2_monotone_1d, zonal_cross_check
from apps.transport.quantiles import cell_cdf
from apps.transport.sinkhorn import w2_sinkhorn


def _flat(kind, resolution):
    space = build_model_space(kind, resolution)
    return space, measure_of(space, WeightField.zero(space))


class CircleExactTests(SimpleTestCase):

    def setUp(self):
        self.space, self.mu = _flat('circle', 512)

    def density(self, form, **params):
        return density_from_expression(self.space, self.mu, form, params)

    def test_identical_densities(self):
        rho = self.density('1 + 0.5*cos(theta)')
        self.assertEqual(w2_circle_exact(rho, rho).w2, 0.0)

    def test_rotated_copy(self):
        rho0 = self.density('exp(2*cos(theta))')
        rho1 = self.density('exp(2*cos(theta - 0.3))')
        self.assertAlmostEqual(w2_circle_exact(rho0, rho1).w2, 0.3, delta=1e-3)

    def test_cut_matches_refined_shift(self):
        rho0 = self.density('exp(2*cos(theta))')
        rho1 = self.density('1 + 0.4*sin(3*theta)')
        for first, second in ((rho0, rho1), (rho1, rho0)):
            diagnostics = w2_circle_exact(first, second).diagnostics
            F, G = cell_cdf(first), cell_cdf(second)
            cut = diagnostics['cut']
            gap = np.interp(cut, F.knots, F.values) - np.interp(cut, G.knots, G.values)
            self.assertAlmostEqual(gap, diagnostics['alpha'], delta=1e-12)

    def test_concentrated_bumps(self):
        rho0 = self.density('exp(200*cos(theta))')
        rho1 = self.density('exp(200*cos(theta - pi/2))')
        self.assertAlmostEqual(w2_circle_exact(rho0, rho1).w2, math.pi / 2, delta=2e-2)

    def test_symmetric(self):
        rho0 = self.density('1 + 0.5*cos(theta)')
        rho1 = self.density('1 + 0.3*sin(2*theta)')
        self.assertEqual(w2_circle_exact(rho0, rho1).w2, w2_circle_exact(rho1, rho0).w2)

    def test_agrees_with_network_flow(self):
        space, mu = _flat('circle', 256)
        rho0 = density_from_expression(space, mu, '1 + 0.5*cos(theta)')
        rho1 = density_from_expression(space, mu, 'exp(cos(theta - 1))')
        oracle = math.sqrt(ot.emd2(rho0.masses, rho1.masses, cost_cache.circle_cost(256)))
        self.assertAlmostEqual(w2_circle_exact(rho0, rho1).w2, oracle, delta=1e-2)

    def test_mismatched_inputs(self):
        other_space, other_mu = _flat('circle', 256)
        with self.assertRaises(InputError):
            w2_circle_exact(self.density('1'), density_from_expression(other_space, other_mu, '1'))

        w = weight_from_expression(self.space, '0.1*cos(theta)')
        weighted = density_from_expression(self.space, measure_of(self.space, w), '1')
        with self.assertRaises(InputError):
            w2_circle_exact(self.density('1'), weighted)


class SinkhornTests(SimpleTestCase):

    def test_identical_inputs_give_zero(self):
        space, mu = _flat('circle', 64)
        rho = density_from_expression(space, mu, '1 + 0.5*cos(theta)')
        self.assertEqual(w2_sinkhorn(rho, rho).w2, 0.0)

    def test_matches_circle_exact(self):
        space, mu = _flat('circle', 128)
        rho0 = density_from_expression(space, mu, '1 + 0.5*cos(theta)')
        rho1 = density_from_expression(space, mu, '1 + 0.5*sin(theta)')
        result = w2_sinkhorn(rho0, rho1)
        self.assertAlmostEqual(result.w2, w2_circle_exact(rho0, rho1).w2, delta=5e-3)
        self.assertLessEqual(result.diagnostics['marginal_error'], 1e-8)
        self.assertIsNotNone(result.diagnostics['extrapolation'])

    def test_torus_reduces_to_circle(self):
        torus, torus_mu = _flat('torus2', (128, 16))
        rho0 = density_from_expression(torus, torus_mu, '1')
        rho1 = density_from_expression(torus, torus_mu, '1 + 0.5*cos(x)')

        circle, circle_mu = _flat('circle', 128)
        exact = w2_circle_exact(
            density_from_expression(circle, circle_mu, '1'),
            density_from_expression(circle, circle_mu, '1 + 0.5*cos(theta)'),
        )
        self.assertAlmostEqual(w2_sinkhorn(rho0, rho1).w2, exact.w2, delta=5e-3)

    def test_schedule_validation(self):
        space, mu = _flat('circle', 32)
        rho = density_from_expression(space, mu, '1 + 0.5*cos(theta)')
        for schedule in ([], [0.1, 0.2], [0.1, -0.01]):
            with self.assertRaises(ConfigurationError):
                w2_sinkhorn(rho, rho, eps_schedule=schedule)
        with self.assertRaises(ConfigurationError):
            w2_sinkhorn(rho, rho, cost='euclidean')

    def test_convergence_error_keeps_last_iterate(self):
        space, mu = _flat('circle', 64)
        rho0 = density_from_expression(space, mu, '1 + 0.5*cos(theta)')
        rho1 = density_from_expression(space, mu, 'exp(3*cos(theta - 2))')
        with self.assertRaises(ConvergenceError) as ctx:
            w2_sinkhorn(rho0, rho1, eps_schedule=[0.01], max_iter=1)
        self.assertEqual(ctx.exception.last_iterate['stage'], 0)
        self.assertEqual(ctx.exception.last_iterate['f'].shape, (64,))

    def test_values_approach_limit_monotonically(self):
        space, mu = _flat('circle', 256)
        rho0 = density_from_expression(space, mu, '1 + 0.5*cos(theta)')
        rho1 = density_from_expression(space, mu, 'exp(2*cos(theta - 1))')
        exact = ot.emd2(rho0.masses, rho1.masses, cost_cache.circle_cost(256))
        result = w2_sinkhorn(rho0, rho1, eps_schedule=[0.08, 0.04, 0.02, 0.01])

        self.assertTrue(result.diagnostics['monotone_in_eps'])
        gaps = [abs(stage['value'] - exact) for stage in result.diagnostics['stages']]
        for earlier, later in zip(gaps[:-1], gaps[1:]):
            self.assertLess(later, earlier)
        limit = result.diagnostics['extrapolation']['limit']
        self.assertLess(abs(limit - exact), gaps[-1])


class ZonalTests(SimpleTestCase):

    def setUp(self):
        self.space, self.mu = _flat('sphere_zonal', 512)

    def test_identical_densities(self):
        rho = density_from_expression(self.space, self.mu, '1 + 0.3*cos(theta)')
        result = w2_monotone_1d(rho, rho)
        self.assertEqual(result.w2, 0.0)
        self.assertEqual(result.diagnostics['zonal_reduction'], ZONAL_UNVERIFIED)

    def test_polar_bumps_cross_check(self):
        north = density_from_expression(self.space, self.mu, 'exp(20*cos(theta))')
        south = density_from_expression(self.space, self.mu, 'exp(-20*cos(theta))')
        result = zonal_cross_check(north, south)
        self.assertGreater(result.w2, 2.0)
        self.assertEqual(result.diagnostics['zonal_reduction'], ZONAL_VERIFIED)
        self.assertLessEqual(result.diagnostics['cross_check']['gap'], 3e-2)

    def test_heat_flow_moves_slowly(self):
        rho = density_from_expression(self.space, self.mu, 'exp(2*cos(theta))')
        w = WeightField.zero(self.space)
        for t in (1e-3, 1e-2, 1e-1):
            evolved = heat_evolve(rho, t, self.space, w)
            self.assertLessEqual(w2_monotone_1d(rho, evolved).w2, 2 * math.sqrt(t))

    def test_coarse_grid_must_divide(self):
        space, mu = _flat('sphere_zonal', 48)
        rho = density_from_expression(space, mu, '1')
        with self.assertRaises(ConfigurationError):
            coarse_masses(rho, 32)

    def test_monotone_needs_sphere(self):
        space, mu = _flat('circle', 32)
        rho = density_from_expression(space, mu, '1')
        with self.assertRaises(InputError):
            w2_monotone_1d(rho, rho)


class TriangleInequalityTests(SimpleTestCase):

    def test_circle_random_triples(self):
        space, mu = _flat('circle', 256)
        rng = np.random.default_rng(20)
        for _ in range(6):
            a, b, c = (
                density_from_values(np.exp(random_smooth_scalar(space, rng).values), space, mu)
                for _ in range(3)
            )
            ab, bc, ac = (w2_circle_exact(x, y).w2 for x, y in ((a, b), (b, c), (a, c)))
            self.assertLessEqual(ac, ab + bc + 1e-6)

    def test_zonal_random_triples(self):
        space, mu = _flat('sphere_zonal', 256)
        rng = np.random.default_rng(21)
        for _ in range(6):
            a, b, c = (
                density_from_expression(
                    space, mu, 'exp(p*cos(theta) + q*cos(2*theta))',
                    {'p': float(rng.uniform(-3, 3)), 'q': float(rng.uniform(-1, 1))},
                )
                for _ in range(3)
            )
            ab, bc, ac = (w2_monotone_1d(x, y).w2 for x, y in ((a, b), (b, c), (a, c)))
            self.assertLessEqual(ac, ab + bc + 1e-6)


class DispatchTests(SimpleTestCase):

    def test_resolve_method(self):
        self.assertEqual(resolve_method('exact', 'circle'), 'circle_exact')
        self.assertEqual(resolve_method('exact', 'sphere_zonal'), 'monotone_1d')
        self.assertEqual(resolve_method('exact', 'torus2'), 'sinkhorn')
        with self.assertRaises(ConfigurationError):
            resolve_method('circle_exact', 'torus2')
        with self.assertRaises(ConfigurationError):
            resolve_method('monotone_1d', 'circle')
        with self.assertRaises(ConfigurationError):
            resolve_method('simplex', 'circle')

    def test_cross_check_flag(self):
        space, mu = _flat('sphere_zonal', 256)
        rho0 = density_from_expression(space, mu, '1 + 0.3*cos(theta)')
        rho1 = density_from_expression(space, mu, '1 - 0.3*cos(theta)')
        plain = w2_distance(rho0, rho1)
        checked = w2_distance(rho0, rho1, cross_check=True)
        self.assertEqual(plain.w2, checked.w2)
        self.assertNotIn('cross_check', plain.diagnostics)
        self.assertIn('cross_check', checked.diagnostics)


class PathTests(SimpleTestCase):

    def setUp(self):
        self.space, self.mu = _flat('circle', 512)

    def density(self, form):
        return density_from_expression(self.space, self.mu, form)

    def test_constant_path(self):
        rho = self.density('1 + 0.5*cos(theta)')
        path = build_mccann_path(rho, rho, 8)
        self.assertEqual(path.steps, 8)
        self.assertEqual(path.continuity_residual, 0.0)
        self.assertEqual(bb_action(path), 0.0)

    def test_rigid_rotation_path(self):
        steps = 64
        times = np.linspace(0.0, 1.0, steps + 1)
        theta = self.space.grid

        def rotated(s):
            return density_from_values(np.exp(2 * np.cos(theta - 0.3 * s)), self.space, self.mu)

        rho_s = [rotated(s) for s in times]
        omega_s = []
        for s in 0.5 * (times[:-1] + times[1:]):
            comps = (0.3 * rotated(s).rho)[None, :]
            omega_s.append(OneFormField(comps=comps, space=self.space))

        path = assemble_path(rho_s, omega_s, times)
        self.assertLess(path.continuity_residual, 1e-2)
        self.assertAlmostEqual(bb_action(path), 0.09, delta=1e-3)

    def test_mccann_action_matches_w2(self):
        space, mu = _flat('circle', 2048)
        rho0 = density_from_expression(space, mu, '1 + 0.5*cos(theta)')
        rho1 = density_from_expression(space, mu, '1 + 0.3*sin(2*theta)')
        path = build_mccann_path(rho0, rho1, 64)
        self.assertAlmostEqual(bb_action(path), w2_circle_exact(rho0, rho1).w2_squared, delta=2e-3)

    def test_rotation_velocity_is_constant(self):
        rho0 = self.density('exp(2*cos(theta))')
        rho1 = self.density('exp(2*cos(theta - 0.3))')
        path = build_mccann_path(rho0, rho1, 16)
        for k, omega in enumerate(path.omega_s):
            rho_mid = 0.5 * (path.rho_s[k].rho + path.rho_s[k + 1].rho)
            np.testing.assert_allclose(omega.comps[0] / rho_mid, 0.3, atol=1e-3)

    def test_continuity_residual_shrinks_with_steps(self):
        rho0 = self.density('1 + 0.5*cos(theta)')
        rho1 = self.density('exp(cos(theta - 2))')
        coarse = build_mccann_path(rho0, rho1, 16).continuity_residual
        fine = build_mccann_path(rho0, rho1, 32).continuity_residual
        self.assertLessEqual(fine, 0.6 * coarse)

    def test_action_refuses_inadmissible_path(self):
        rho0 = self.density('1 + 0.5*cos(theta)')
        rho1 = self.density('1 - 0.5*cos(theta)')
        path = assemble_path([rho0, rho1], [OneFormField.zero(self.space)], tolerance=1e-6)
        self.assertGreater(path.continuity_residual, 1e-6)
        with self.assertRaises(InputError):
            bb_action(path)

    def test_path_errors(self):
        rho = self.density('1')
        with self.assertRaises(InputError):
            build_mccann_path(rho, rho, 0)
        with self.assertRaises(InputError):
            assemble_path([rho, rho], [])
        torus, torus_mu = _flat('torus2', 32)
        flat = density_from_expression(torus, torus_mu, '1')
        with self.assertRaises(InputError):
            build_mccann_path(flat, flat, 4)


class CostCacheTests(SimpleTestCase):

    def setUp(self):
        cost_cache.clear_memory()
        self.addCleanup(cost_cache.clear_memory)

    def test_round_trip_and_stale_version(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = {'enabled': True, 'dir': tmp, 'version': 3}
            with override_settings(LAB_COST_CACHE=config):
                cost = cost_cache.circle_cost(32)
                path = cost_cache.cache_path('circle', (32,))
                self.assertTrue(path.exists())
                np.testing.assert_array_equal(cost_cache.read_cost(path, 3), cost)
                self.assertIsNone(cost_cache.read_cost(path, 4))
                self.assertFalse(cost.flags.writeable)

    def test_bad_magic_is_ignored(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = {'enabled': True, 'dir': tmp, 'version': 1}
            with override_settings(LAB_COST_CACHE=config):
                path = cost_cache.cache_path('circle', (16,))
                path.write_bytes(b'not a cost file at all')
                self.assertIsNone(cost_cache.read_cost(path, 1))
                cost = cost_cache.circle_cost(16)
                self.assertAlmostEqual(cost[0, 8], math.pi ** 2)

    def test_default_directory_is_outside_project(self):
        directory = Path(settings.LAB_COST_CACHE['dir']).resolve()
        self.assertNotIn(Path(settings.BASE_DIR).resolve(), [directory, *directory.parents])

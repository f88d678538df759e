import math

import numpy as np
from django.test import SimpleTestCase

from apps.common.exceptions import ConfigurationError, DomainError, PreconditionError, UnsupportedSpaceError
from apps.geometry.curvature import CDParams, cd_best_R, measure_of
from apps.geometry.spaces import build_model_space
from apps.geometry.weights import WeightField, weight_from_expression
from apps.harness.contraction import (
    eks_time_term,
    run_eks_bound,
    run_main_contraction,
    run_simple_two_time,
    run_time_consistency,
    run_vrs_limit,
    s_r,
)
from apps.harness.tolerance import STATUS_FAIL, STATUS_PASS
from apps.semigroup.fields import density_from_expression


def _setup(kind, resolution, psi='0'):
    space = build_model_space(kind, resolution)
    w = weight_from_expression(space, psi)
    return space, w, measure_of(space, w)


class MainContractionTests(SimpleTestCase):

    def test_flat_circle(self):
        space, w, mu = _setup('circle', 512)
        f = density_from_expression(space, mu, '1 + 0.5*cos(theta)')
        g = density_from_expression(space, mu, '1')
        cd = cd_best_R(space, w, 1)
        report = run_main_contraction(f, g, cd, np.linspace(0, 1, 10), u_points=33)

        self.assertEqual(len(report.rows), 10)
        self.assertGreaterEqual(report.min_deficit, -1e-3)
        self.assertNotEqual(report.status, STATUS_FAIL)
        # t = 0 行左右两侧都是 W₂²(f, g)
        first = report.rows[0]
        self.assertEqual(first.t, 0.0)
        self.assertEqual(first.deficit, 0.0)
        self.assertEqual(len(report.trajectories['u']), len(report.trajectories['ent_f']))

    def test_unit_sphere(self):
        space, w, mu = _setup('sphere_zonal', 512)
        f = density_from_expression(space, mu, '1 + 0.3*cos(theta)')
        g = density_from_expression(space, mu, '1 - 0.3*cos(theta)')
        cd = cd_best_R(space, w, 2)
        self.assertAlmostEqual(cd.R, 1.0, delta=1e-6)

        report = run_main_contraction(f, g, cd, np.linspace(0, 0.5, 6))
        self.assertGreaterEqual(report.min_deficit, -1e-3)
        self.assertEqual(report.params['R'], cd.R)

    def test_weighted_circle_and_dimension_monotonicity(self):
        space, w, mu = _setup('circle', 512, '0.1*cos(theta)')
        f = density_from_expression(space, mu, '1 + 0.5*cos(theta)')
        g = density_from_expression(space, mu, '1')
        finite = cd_best_R(space, w, 2)
        self.assertAlmostEqual(finite.R, -0.1, places=12)
        t_grid = np.linspace(0, 1, 6)

        dimensional = run_main_contraction(f, g, finite, t_grid)
        self.assertGreaterEqual(dimensional.min_deficit, -1e-3)

        infinite = run_main_contraction(f, g, CDParams(R=finite.R, m=math.inf, n=1), t_grid)
        for row_m, row_inf in zip(dimensional.rows, infinite.rows):
            self.assertEqual(row_m.t, row_inf.t)
            self.assertEqual(row_inf.dim_term, 0.0)
            self.assertGreaterEqual(row_inf.deficit, row_m.deficit)

        limit = run_vrs_limit(f, g, CDParams(R=finite.R, m=math.inf, n=1), t_grid)
        self.assertTrue(all(row.dim_term is None for row in limit.rows))
        self.assertGreaterEqual(limit.min_deficit, -1e-3)

    def test_weighted_deficit_floor_tightens_under_refinement(self):
        floors = []
        for resolution in (256, 512):
            space, w, mu = _setup('circle', resolution, '0.1*cos(theta)')
            f = density_from_expression(space, mu, '1 + 0.5*cos(theta)')
            g = density_from_expression(space, mu, '1')
            report = run_main_contraction(f, g, cd_best_R(space, w, 2), np.linspace(0, 1, 6), u_points=65)
            floors.append(min(0.0, report.min_deficit))
        coarse, fine = floors
        self.assertLessEqual(abs(fine), 0.5 * abs(coarse) + 1e-12)

    def test_identical_densities(self):
        space, w, mu = _setup('circle', 128)
        f = density_from_expression(space, mu, '1 + 0.5*cos(theta)')
        report = run_main_contraction(f, f, cd_best_R(space, w, 1), [0.0, 0.1, 0.5])
        for row in report.rows:
            self.assertEqual(row.lhs, 0.0)
            self.assertEqual(row.dim_term, 0.0)
            self.assertEqual(row.deficit, 0.0)
        self.assertEqual(report.status, STATUS_PASS)

    def test_argument_errors(self):
        space, w, mu = _setup('circle', 64)
        f = density_from_expression(space, mu, '1 + 0.5*cos(theta)')
        cd = cd_best_R(space, w, 1)
        with self.assertRaises(DomainError):
            run_main_contraction(f, f, cd, [-0.1, 0.2])
        with self.assertRaises(ConfigurationError):
            run_main_contraction(f, f, cd, [])
        with self.assertRaises(ConfigurationError):
            run_main_contraction(f, f, cd, [0.1], u_points=1)
        with self.assertRaises(DomainError):
            run_main_contraction(f, f, CDParams(R=0.5, m=1, n=1), [0.1])
        with self.assertRaises(ConfigurationError):
            run_vrs_limit(f, f, cd, [0.1])


class VRSLimitTests(SimpleTestCase):

    def test_rotated_copy_keeps_distance(self):
        space, w, mu = _setup('circle', 512)
        f = density_from_expression(space, mu, 'exp(2*cos(theta))')
        g = density_from_expression(space, mu, 'exp(2*cos(theta - 0.3))')
        report = run_vrs_limit(f, g, cd_best_R(space, w, 'inf'), [0.0, 0.25, 0.5, 1.0])
        # 旋转与热流交换，W₂ 在流下不变
        for row in report.rows:
            self.assertAlmostEqual(row.deficit, 0.0, delta=1e-3)
        self.assertNotEqual(report.status, STATUS_FAIL)


class TwoTimeTests(SimpleTestCase):

    def setUp(self):
        self.space, self.w, self.mu = _setup('circle', 512)
        self.f = density_from_expression(self.space, self.mu, '1 + 0.5*cos(theta)')
        self.g = density_from_expression(self.space, self.mu, '1')
        ticks = np.linspace(0, 0.25, 5)
        self.st_grid = [(s, t) for s in ticks for t in ticks]

    def test_simple_two_time(self):
        report = run_simple_two_time(self.f, self.g, self.st_grid)
        self.assertEqual(len(report.rows), 25)
        self.assertGreaterEqual(report.min_deficit, -1e-3)

    def test_negative_curvature_is_rejected(self):
        space, w, mu = _setup('circle', 64, '0.1*cos(theta)')
        f = density_from_expression(space, mu, '1')
        with self.assertRaises(PreconditionError):
            run_simple_two_time(f, f, [(0.1, 0.2)])

    def test_eks_on_sphere(self):
        space, w, mu = _setup('sphere_zonal', 512)
        f = density_from_expression(space, mu, '1 + 0.3*cos(theta)')
        g = density_from_expression(space, mu, '1 - 0.3*cos(theta)')
        report = run_eks_bound(f, g, [(t, t) for t in (0.0, 0.1, 0.25, 0.5)])
        self.assertGreaterEqual(report.min_deficit, -1e-3)
        self.assertEqual(report.params['m'], 2)

    def test_eks_flat_branch_matches_simple_bound(self):
        simple = run_simple_two_time(self.f, self.g, self.st_grid)
        eks = run_eks_bound(self.f, self.g, [(t, s) for s, t in self.st_grid])
        eks_rows = {(row.t, row.s): row for row in eks.rows}
        for row in simple.rows:
            # EKS 的行 (s', t') = (t, s)，两侧都是 ¼ 倍
            mirrored = eks_rows[(row.s, row.t)]
            self.assertAlmostEqual(4 * mirrored.deficit, row.deficit, delta=1e-9)

    def test_eks_needs_unweighted_space(self):
        space, w, mu = _setup('circle', 64, '0.1*cos(theta)')
        f = density_from_expression(space, mu, '1')
        with self.assertRaises(UnsupportedSpaceError):
            run_eks_bound(f, f, [(0.1, 0.1)])


class EKSTermTests(SimpleTestCase):

    def test_s_r_branches(self):
        self.assertEqual(s_r(0.0, 0.7), 0.7)
        self.assertAlmostEqual(s_r(1.0, 0.7), math.sin(0.7))
        self.assertAlmostEqual(s_r(-4.0, 0.7), math.sinh(1.4) / 2)

    def test_flat_limit(self):
        self.assertAlmostEqual(eks_time_term(1e-9, 1, 0.1, 0.4), eks_time_term(0.0, 1, 0.1, 0.4), delta=1e-9)
        self.assertAlmostEqual(eks_time_term(0.0, 2, 0.0, 0.25), 0.25)

    def test_origin(self):
        self.assertEqual(eks_time_term(1.0, 2, 0.0, 0.0), 0.0)
        self.assertEqual(eks_time_term(1.0, 2, 0.3, 0.3), 0.0)


class TimeConsistencyTests(SimpleTestCase):

    def test_restart_agrees_with_tail(self):
        space, w, mu = _setup('circle', 256)
        f = density_from_expression(space, mu, '1 + 0.5*cos(theta)')
        g = density_from_expression(space, mu, '1')
        outcome = run_time_consistency(f, g, cd_best_R(space, w, 1), 0.3, [0.3, 0.6, 0.9])
        self.assertTrue(outcome['consistent'])
        self.assertLessEqual(outcome['lhs_gap'], outcome['tolerance'])
        self.assertEqual(outcome['restarted'].rows[0].t, 0.0)

    def test_tail_before_restart(self):
        space, w, mu = _setup('circle', 64)
        f = density_from_expression(space, mu, '1 + 0.5*cos(theta)')
        with self.assertRaises(DomainError):
            run_time_consistency(f, f, cd_best_R(space, w, 1), 0.5, [0.2, 0.6])

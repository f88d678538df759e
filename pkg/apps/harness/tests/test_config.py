import json
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from apps.common.exceptions import ConfigurationError
from apps.harness.config import load_config, parse_config

BASE = {
    'space': {'kind': 'circle', 'resolution': 128},
    'psi': 'a*cos(theta)',
    'params': {'a': 0.1},
    'm': 2,
    'f': '1 + 0.5*cos(theta)',
    'g': '1',
    't_grid': {'start': 0.0, 'stop': 1.0, 'num': 5},
}


class ParseConfigTests(SimpleTestCase):

    def test_defaults_and_grid(self):
        config = parse_config(BASE)
        self.assertEqual(config.resolution, (128,))
        self.assertEqual(config.t_grid, (0.0, 0.25, 0.5, 0.75, 1.0))
        self.assertEqual(config.w2_method, 'exact')
        self.assertIsNone(config.R)
        self.assertEqual(config.u_points, 33)

    def test_best_curvature_from_weight(self):
        config = parse_config(BASE)
        space = config.space()
        w = config.weight(space)
        self.assertAlmostEqual(config.cd(space, w).R, -0.1, places=12)
        self.assertTrue(math.isinf(config.cd(space, w, math.inf).m))

    def test_explicit_curvature(self):
        config = parse_config({**BASE, 'R': -0.5})
        space = config.space()
        self.assertEqual(config.cd(space, config.weight(space)).R, -0.5)

    def test_densities_use_params(self):
        config = parse_config({**BASE, 'f': '1 + a*sin(theta)'})
        space = config.space()
        w = config.weight(space)
        rho = config.density('f', space, config.measure(space, w))
        self.assertAlmostEqual(rho.mass, 1.0, places=12)
        with self.assertRaises(ConfigurationError):
            parse_config({**BASE, 'g': None}).density('g', space, config.measure(space, w))

    def test_sections_pass_through(self):
        config = parse_config({**BASE, 'w2': {'bb_steps': 16}, 'st_grid': [[0, 0.1], [0.1, 0]]})
        self.assertEqual(config.section('w2'), {'bb_steps': 16})
        self.assertEqual(config.section('evolve'), {})
        self.assertEqual(config.st_grid, ((0.0, 0.1), (0.1, 0.0)))
        self.assertEqual(parse_config(config.to_dict()), config)

    def test_invalid_documents(self):
        broken = [
            [],
            {'psi': '0'},
            {**BASE, 'space': {'kind': 'klein_bottle'}},
            {**BASE, 'params': {'a': 'big'}},
            {**BASE, 'w2_method': 'simplex'},
            {**BASE, 'scheme': 'euler'},
            {**BASE, 't_grid': {'start': 0}},
            {**BASE, 't_grid': 'soon'},
            {**BASE, 'st_grid': [[0.1]]},
            {**BASE, 'm': 'many'},
        ]
        for data in broken:
            with self.assertRaises(ConfigurationError, msg=repr(data)):
                parse_config(data)


class LoadConfigTests(SimpleTestCase):

    def test_load_and_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            good = Path(tmp) / 'lab.json'
            good.write_text(json.dumps(BASE), encoding='utf-8')
            self.assertEqual(load_config(good).kind, 'circle')

            bad = Path(tmp) / 'bad.json'
            bad.write_text('{"space": ', encoding='utf-8')
            with self.assertRaises(ConfigurationError):
                load_config(bad)
            with self.assertRaises(ConfigurationError):
                load_config(Path(tmp) / 'absent.json')


class WeightFormTests(SimpleTestCase):

    def test_object_form_with_inline_params(self):
        data = {**BASE, 'psi': {'form': 'a*cos(theta)', 'a': 0.1}}
        del data['params']
        config = parse_config(data)
        self.assertEqual(config.psi, 'a*cos(theta)')
        self.assertEqual(config.params, {'a': 0.1})
        space = config.space()
        w = config.weight(space)
        np.testing.assert_allclose(w.psi, 0.1 * np.cos(space.coordinates()[0]), atol=1e-12)
        self.assertAlmostEqual(config.cd(space, w).R, -0.1, places=12)

    def test_object_form_merges_params(self):
        config = parse_config({**BASE, 'psi': {'form': 'a*cos(theta) + b', 'b': 1}})
        self.assertEqual(config.params, {'a': 0.1, 'b': 1.0})
        self.assertEqual(parse_config(config.to_dict()), config)

    def test_object_form_errors(self):
        for psi in ({'form': 'a*cos(theta)', 'a': 0.2}, {'a': 0.1}, {'form': 'cos(theta)', 'b': 'x'}, ['cos(theta)']):
            with self.assertRaises(ConfigurationError, msg=repr(psi)):
                parse_config({**BASE, 'psi': psi})

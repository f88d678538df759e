import json
import tempfile
from contextlib import redirect_stderr
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from apps.harness.models import VerificationRun
from apps.harness.reports import load_report
from apps.harness.tolerance import STATUS_FAIL

CIRCLE = {
    'space': {'kind': 'circle', 'resolution': 64},
    'psi': '0',
    'm': 1,
    'f': '1 + 0.5*cos(theta)',
    'g': '1',
    't_grid': [0.0, 0.1, 0.2],
    'st_grid': [[0.0, 0.1], [0.1, 0.1]],
    'u_points': 9,
}


class CommandTestCase(TestCase):

    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.dir = Path(tmp.name)

    def config(self, **overrides):
        path = self.dir / 'lab.json'
        path.write_text(json.dumps({**CIRCLE, **overrides}), encoding='utf-8')
        return str(path)

    def call(self, name, **options):
        out = StringIO()
        call_command(name, stdout=out, **options)
        return out.getvalue()


class CheckCommandTests(CommandTestCase):

    def test_check_main_writes_report_and_archives(self):
        out = self.dir / 'main.json'
        self.call('check_main', config=self.config(), out=str(out), archive=True)

        report = load_report(out)
        self.assertEqual(report.name, 'main_dimensional')
        self.assertEqual([row.t for row in report.rows], [0.0, 0.1, 0.2])
        run = VerificationRun.objects.get()
        self.assertEqual(run.space_kind, 'circle')
        self.assertEqual(run.status, report.summary['status'])

    def test_check_main_restart_note(self):
        out = self.dir / 'main.json'
        self.call('check_main', config=self.config(check_main={'restart_t0': 0.1}), out=str(out))
        self.assertTrue(any('restart from t0' in note for note in load_report(out).notes))
        self.assertFalse(VerificationRun.objects.exists())

    def test_check_vrs_csv(self):
        out = self.dir / 'vrs.csv'
        self.call('check_vrs', config=self.config(), out=str(out), format='csv')
        self.assertEqual(load_report(out).name, 'vrs_limit')

    def test_two_time_commands(self):
        output = self.call('check_simple', config=self.config())
        self.assertIn('simple_two_time', output)
        output = self.call('check_eks', config=self.config())
        self.assertIn('eks', output)

    def test_configuration_error_exits_with_one(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('check_main', config=self.config(space={'kind': 'circle', 'resolution': 8}))
        self.assertEqual(ctx.exception.returncode, 1)

        with self.assertRaises(CommandError):
            self.call('check_main', config=str(self.dir / 'absent.json'))

    def test_precondition_error(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('check_simple', config=self.config(psi='0.1*cos(theta)'))
        self.assertIn('curvature', str(ctx.exception))


class IdentityCommandTests(CommandTestCase):

    def test_flat_identities_pass(self):
        out = self.dir / 'identities.json'
        self.call('check_identities', config=self.config(
            space={'kind': 'circle', 'resolution': 512},
            identities={'samples': 1, 'b_values': [0.5], 'u_points': 5, 'max_freq': 2},
        ), out=str(out))
        payload = json.loads(out.read_text(encoding='utf-8'))
        checks = {row['check'] for row in payload['records']}
        self.assertIn('refined_blw[b=0.5]', checks)
        self.assertIn('lemma_product_rule', checks)
        self.assertNotEqual(payload['status'], STATUS_FAIL)

    def test_failure_exits_with_two(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('check_identities', config=self.config(identities={'tol': 1e-18, 'b_values': [0.0]}))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_sphere_runs_zonal_checks(self):
        out = self.dir / 'sphere.json'
        self.call('check_identities', config=self.config(
            space={'kind': 'sphere_zonal', 'resolution': 256},
            m=2,
            identities={'b_values': [-0.5]},
        ), out=str(out))
        checks = {row['check'] for row in json.loads(out.read_text(encoding='utf-8'))['records']}
        self.assertEqual(checks, {'integration_by_parts', 'gamma2_cd[b=-0.5]'})


class ToolCommandTests(CommandTestCase):

    def test_cd_params(self):
        out = self.dir / 'cd.json'
        self.call('cd_params', config=self.config(cd_params={'m_values': [1, 'inf']}), out=str(out))
        entries = json.loads(out.read_text(encoding='utf-8'))['cd']
        self.assertEqual(len(entries), 2)
        self.assertEqual(entries[0]['R'], 0.0)

    def test_evolve_csv(self):
        out = self.dir / 'evolve.csv'
        self.call('evolve', config=self.config(evolve={'times': [0.0, 0.5]}), out=str(out), format='csv')
        header = out.read_text(encoding='utf-8').splitlines()[0].split(',')
        self.assertEqual(header, ['node_index', 'theta', 't=0.0', 't=0.5'])

    def test_evolve_rejects_unknown_field(self):
        with self.assertRaises(CommandError):
            self.call('evolve', config=self.config(evolve={'field': 'h'}))

    def test_w2_with_path(self):
        out = self.dir / 'w2.json'
        self.call('w2', config=self.config(
            space={'kind': 'circle', 'resolution': 256},
            w2={'bb_steps': 16},
        ), out=str(out))
        payload = json.loads(out.read_text(encoding='utf-8'))
        self.assertEqual(payload['method'], 'circle_exact')
        self.assertEqual(payload['bb_action']['steps'], 16)
        self.assertAlmostEqual(payload['bb_action']['action'], payload['w2'] ** 2, delta=1e-2)


class UsageErrorTests(CommandTestCase):

    def test_bad_option_exits_with_one(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('check_main', '--config', self.config(), '--format', 'xml', stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 1)

    def test_command_line_usage_error_exits_with_one(self):
        from apps.harness.management.commands.check_main import Command

        parser = Command().create_parser('manage.py', 'check_main')
        parser.called_from_command_line = True
        with redirect_stderr(StringIO()) as err, self.assertRaises(SystemExit) as ctx:
            parser.parse_args(['--format', 'csv'])
        self.assertEqual(ctx.exception.code, 1)
        self.assertIn('--config', err.getvalue())

    def test_weight_object_form(self):
        out = self.dir / 'cd.json'
        config = self.config(psi={'form': 'a*cos(theta)', 'a': 0.1}, m=2, cd_params={'m_values': [2]})
        self.call('cd_params', config=config, out=str(out))
        entries = json.loads(out.read_text(encoding='utf-8'))['cd']
        self.assertAlmostEqual(entries[0]['R'], -0.1, places=6)

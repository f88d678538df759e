"""
1-形式恒等式与强制性估计的批量检查

每个检查在配置分辨率 N 与 2N 上各做一次，输出细网格残差和收敛阶估计。
配置中可选的小节：
    "identities": {"samples": 3, "b_values": [-1, -0.5, 0, 0.5, 1], "t": 0.1,
                   "max_freq": 3, "tol": 1e-3, "u_points": 17}
sphere_zonal 上 1-形式半群不可用，只做分部积分与 Γ₂ 形式的 CD 不等式，
测试场取 "omega"（θ 分量）与 "f" 两个闭式表达式。
"""
import numpy as np
import pandas as pd
from django.core.management.base import CommandError

from apps.common.records import convergence_order
from apps.forms.fields import form_from_expression, random_form_spec, random_series
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
from apps.geometry.spaces import KIND_SPHERE, build_model_space
from apps.harness.tolerance import STATUS_FAIL, STATUS_PASS
from apps.semigroup.fields import ScalarField, scalar_from_expression
from apps.semigroup.operators import check_gamma2_cd

from ._base import LabCommand

# 这些检查输出的是最小 slack，其余为 sup 残差
SLACK_CHECKS = ('coercive_corollary', 'log_gradient_corollary', 'coercive_estimate', 'gamma2_cd')


def _flat_fields(space, specs):
    eta_spec, alpha_spec, f_series, g_series = specs
    return {
        'eta': eta_spec.sample(space),
        'alpha': alpha_spec.sample(space),
        'f': ScalarField(values=f_series.sample(space), space=space),
        'g': ScalarField(values=np.exp(0.3 * g_series.sample(space)), space=space),
    }


def _flat_records(fields, space, w, cd, section):
    eta, alpha, f, g = fields['eta'], fields['alpha'], fields['f'], fields['g']
    t = float(section.get('t', 0.1))
    u_grid = np.linspace(0.0, t, int(section.get('u_points', 17)))

    records = {'commutation': check_commutation(eta, t, space, w)}
    for b in section.get('b_values', [-1.0, -0.5, 0.0, 0.5, 1.0]):
        records[f'refined_blw[b={b}]'] = check_refined_blw(eta, alpha, float(b), space, w)
        records[f'coercive_corollary[b={b}]'] = check_coercive_corollary(eta, alpha, float(b), cd, space, w)
    for key, record in check_form_identities(eta, alpha, f, space, w).items():
        records[f'lemma_{key}'] = record
    records['log_gradient_corollary'] = check_log_gradient_corollary(eta, g, cd, space, w)
    records['coercive_estimate'] = check_coercive_estimate(eta, g, t, u_grid, cd, space, w)
    records['integration_by_parts'] = check_integration_by_parts(eta, f, space, w)
    records['hodge_symmetry'] = check_hodge_symmetry(eta, alpha, space, w)
    return records


def _zonal_records(space, w, cd, config, section):
    params = config.params
    omega = form_from_expression(space, [section.get('omega', 'sin(theta)**2*cos(theta)')], params)
    f = scalar_from_expression(space, section.get('f', '1 + 0.3*cos(theta)'), params)
    records = {'integration_by_parts': check_integration_by_parts(omega, f, space, w)}
    for b in section.get('b_values', [-1.0, -0.5, 0.0, 0.5, 1.0]):
        records[f'gamma2_cd[b={b}]'] = check_gamma2_cd(f, f, float(b), cd, space, w)
    return records


class Command(LabCommand):
    help = '检查 1-形式恒等式（交换性、加细 BLW、引理）与强制性估计'

    def run(self, config, options):
        section = config.section('identities')
        tol = float(section.get('tol', 1e-3))
        samples = int(section.get('samples', 1))
        max_freq = int(section.get('max_freq', 3))

        coarse = config.space()
        fine = build_model_space(config.kind, tuple(2 * r for r in coarse.resolution))
        grids = [(space, config.weight(space)) for space in (coarse, fine)]

        rows = []
        for sample in range(samples):
            if config.kind == KIND_SPHERE:
                pair = [_zonal_records(space, w, config.cd(space, w), config, section) for space, w in grids]
            else:
                specs = (
                    random_form_spec(config.kind, self.rng, max_freq),
                    random_form_spec(config.kind, self.rng, max_freq),
                    random_series(config.kind, self.rng, max_freq),
                    random_series(config.kind, self.rng, max_freq),
                )
                pair = [
                    _flat_records(_flat_fields(space, specs), space, w, config.cd(space, w), section)
                    for space, w in grids
                ]
            rows.extend(self._compare(sample, pair[0], pair[1], tol))
            if config.kind == KIND_SPHERE:
                break

        failed = [row for row in rows if row['status'] == STATUS_FAIL]
        payload = {
            'space': coarse.describe(),
            'psi': grids[0][1].descriptor,
            'tol': tol,
            'status': STATUS_FAIL if failed else STATUS_PASS,
            'records': rows,
        }
        self.write_payload(payload, options, table=pd.json_normalize(rows))

        if failed:
            names = ', '.join(sorted({row['check'] for row in failed}))
            message = f'{len(failed)} 项检查超出容差 {tol:.1e}: {names}'
            self.stdout.write(self.style.ERROR(message))
            raise CommandError(message, returncode=2)
        self.stdout.write(self.style.SUCCESS(f'{len(rows)} 项检查全部通过'))

    def _compare(self, sample, coarse, fine, tol):
        rows = []
        for name, record in fine.items():
            slack = name.split('[')[0] in SLACK_CHECKS
            order = None if slack else convergence_order(coarse[name].residual, record.residual)
            record = record.with_order(order)
            ok = record.residual >= -tol if slack else abs(record.residual) <= tol
            rows.append({
                'sample': sample,
                'check': name,
                **record.to_dict(),
                'status': STATUS_PASS if ok else STATUS_FAIL,
            })
        return rows

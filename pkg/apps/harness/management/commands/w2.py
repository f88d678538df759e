"""
计算 W₂(f, g)

配置中可选的小节：
    "w2": {"cross_check": true, "eps_schedule": [0.5, 0.1, 0.02], "bb_steps": 32}
bb_steps 给定时（仅 circle / sphere_zonal）另外构造 McCann 插值路径并报告 Benamou–Brenier 作用量。
"""
import pandas as pd

from apps.transport.api import w2_distance
from apps.transport.dynamic import bb_action, build_mccann_path
from apps.transport.results import METHOD_SINKHORN

from ._base import LabCommand, setup


class Command(LabCommand):
    help = '计算两个密度之间的 W₂ 距离'

    def run(self, config, options):
        space, w, mu = setup(config)
        section = config.section('w2')
        f = config.density('f', space, mu)
        g = config.density('g', space, mu)

        sinkhorn_options = {}
        if config.w2_method == METHOD_SINKHORN and 'eps_schedule' in section:
            sinkhorn_options['eps_schedule'] = [float(e) for e in section['eps_schedule']]
        result = w2_distance(
            f, g,
            method=config.w2_method,
            cross_check=bool(section.get('cross_check', False)),
            **sinkhorn_options,
        )
        payload = {'space': space.describe(), 'psi': w.descriptor, **result.to_dict()}
        self.stdout.write(f'W2 = {result.w2:.12g}（{result.method}）')

        steps = section.get('bb_steps')
        if steps:
            path = build_mccann_path(f, g, int(steps))
            action = bb_action(path)
            payload['bb_action'] = {
                'steps': path.steps,
                'action': action,
                'continuity_residual': path.continuity_residual,
                'worst_s': path.worst_s,
            }
            self.stdout.write(
                f'BB 作用量 = {action:.12g}（W2² = {result.w2_squared:.12g}），'
                f'连续性残差 {path.continuity_residual:.3e}'
            )

        table = pd.json_normalize({k: v for k, v in payload.items() if k != 'diagnostics'})
        self.write_payload(payload, options, table=table)

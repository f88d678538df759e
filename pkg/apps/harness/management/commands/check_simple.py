"""
两时刻界 W₂²(P_sf, P_tg) ≤ W₂²(f, g) + 2n(√s − √t)²
"""
from apps.harness.contraction import run_simple_two_time

from ._base import LabCommand, setup


class Command(LabCommand):
    help = '在非负曲率下验证简单两时刻界'
    archivable = True

    def run(self, config, options):
        space, w, mu = setup(config)
        report = run_simple_two_time(
            config.density('f', space, mu),
            config.density('g', space, mu),
            config.st_grid,
            w2_method=config.w2_method,
            scheme=config.scheme,
            smoothing_eps=config.smoothing_eps,
        )
        self.finish_report(report, options)

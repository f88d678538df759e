"""
m = ∞ 的指数收缩 W₂(P_tf, P_tg) ≤ e^{−Rt}W₂(f, g)
"""
import math

from apps.harness.contraction import run_vrs_limit

from ._base import LabCommand, setup


class Command(LabCommand):
    help = '验证 m = ∞ 时的指数收缩'
    archivable = True

    def run(self, config, options):
        space, w, mu = setup(config)
        f = config.density('f', space, mu)
        g = config.density('g', space, mu)

        report = run_vrs_limit(
            f, g, config.cd(space, w, math.inf), config.t_grid,
            w2_method=config.w2_method,
            scheme=config.scheme,
            smoothing_eps=config.smoothing_eps,
        )
        self.finish_report(report, options)

"""
维数 Wasserstein 收缩不等式

配置中可选的小节：
    "check_main": {"restart_t0": 0.2}
给定 restart_t0 时另外做一次时间一致性复核，结果写进报告的 notes。
"""
from apps.harness.contraction import run_main_contraction, run_time_consistency

from ._base import LabCommand, setup


class Command(LabCommand):
    help = '验证维数 W₂ 收缩不等式并输出报告'
    archivable = True

    def run(self, config, options):
        space, w, mu = setup(config)
        f = config.density('f', space, mu)
        g = config.density('g', space, mu)
        cd = config.cd(space, w)

        report = run_main_contraction(
            f, g, cd, config.t_grid,
            u_points=config.u_points,
            w2_method=config.w2_method,
            scheme=config.scheme,
            smoothing_eps=config.smoothing_eps,
        )

        t0 = config.section('check_main').get('restart_t0')
        if t0 is not None:
            tail = [t for t in config.t_grid if t >= float(t0)]
            outcome = run_time_consistency(
                f, g, cd, float(t0), tail,
                u_points=config.u_points,
                w2_method=config.w2_method,
                scheme=config.scheme,
                smoothing_eps=config.smoothing_eps,
            )
            report.notes.append(
                f"restart from t0={float(t0)!r}: lhs gap {outcome['lhs_gap']:.3e}, "
                f"consistent={outcome['consistent']}"
            )
            style = self.style.SUCCESS if outcome['consistent'] else self.style.WARNING
            self.stdout.write(style(f"时间一致性: gap={outcome['lhs_gap']:.3e}"))

        self.finish_report(report, options)

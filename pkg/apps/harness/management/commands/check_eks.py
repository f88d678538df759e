"""
EKS 两时刻界（Ψ = 0，维数取 n）
"""
from apps.harness.contraction import run_eks_bound

from ._base import LabCommand, setup


class Command(LabCommand):
    help = '验证 EKS 两时刻界'
    archivable = True

    def run(self, config, options):
        space, w, mu = setup(config)
        cd = None if config.R is None else config.cd(space, w, space.n)
        report = run_eks_bound(
            config.density('f', space, mu),
            config.density('g', space, mu),
            config.st_grid,
            cd=cd,
            w2_method=config.w2_method,
            scheme=config.scheme,
            smoothing_eps=config.smoothing_eps,
        )
        self.finish_report(report, options)

"""
计算最优曲率下界

配置中可选的小节：
    "cd_params": {"m_values": [1, 2, "inf"]}
配置给了 R 时同时校验其可行性。
"""
import pandas as pd

from apps.geometry.curvature import check_cd_feasible, parse_dimension

from ._base import LabCommand, setup


class Command(LabCommand):
    help = '计算 (space, Ψ) 上给定 m 的最优 CD(R, m) 参数'

    def run(self, config, options):
        space, w, _ = setup(config)
        section = config.section('cd_params')
        m_values = [parse_dimension(m) for m in section.get('m_values', [config.m])]

        entries = []
        for m in m_values:
            cd = config.cd(space, w, m)
            best = check_cd_feasible(cd, space, w)
            entry = best.to_dict()
            entry['R_requested'] = config.R
            entries.append(entry)
            self.stdout.write(f"m={entry['m']}: R={best.R:.12g}，见证节点 {entry['witness_node']}")

        payload = {'space': space.describe(), 'psi': w.descriptor, 'cd': entries}
        self.write_payload(payload, options, table=pd.DataFrame.from_records(entries))

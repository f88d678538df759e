"""
推进热半群并输出各时刻的密度

配置中可选的小节：
    "evolve": {"field": "f", "times": [0.0, 0.1, 0.5]}
times 缺省为 t_grid。
"""
import numpy as np
import pandas as pd

from apps.common.exceptions import ConfigurationError
from apps.semigroup.entropy import entropy
from apps.semigroup.evolution import evolve_at_times, resolve_scheme

from ._base import LabCommand, setup


class Command(LabCommand):
    help = '计算 P_t f 并输出节点值、质量与熵'

    def run(self, config, options):
        space, w, mu = setup(config)
        section = config.section('evolve')
        which = section.get('field', 'f')
        if which not in ('f', 'g'):
            raise ConfigurationError(f'evolve.field must be "f" or "g", got {which!r}')
        times = [float(t) for t in section.get('times', config.t_grid)]
        if not times:
            raise ConfigurationError('evolve needs evolve.times or t_grid')

        rho = config.density(which, space, mu)
        evolved = evolve_at_times(rho, times, space, w, config.scheme, config.dt)

        table = {'node_index': np.arange(space.size)}
        for name, coord in zip(space.coordinate_names, space.coordinates()):
            table[name] = np.asarray(coord).reshape(-1)
        snapshots = []
        for t, field in zip(times, evolved):
            table[f't={t!r}'] = field.rho.reshape(-1)
            snapshots.append({
                't': t,
                'mass': field.mass,
                'entropy': entropy(field),
                'clamped': field.clamped,
                'rho': field.rho.reshape(-1).tolist(),
            })
            self.stdout.write(f't={t:g}: mass={field.mass:.15f}，Ent={snapshots[-1]["entropy"]:.10g}')

        payload = {
            'space': space.describe(),
            'psi': w.descriptor,
            'scheme': resolve_scheme(config.scheme, w),
            'field': which,
            'snapshots': snapshots,
        }
        self.write_payload(payload, options, table=pd.DataFrame(table))

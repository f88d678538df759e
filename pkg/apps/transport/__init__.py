"""
Wasserstein 距离模块
圆周与纬向球面上的精确一维求解器、熵正则 Sinkhorn、Benamou–Brenier 作用量
"""
from importlib import import_module

_EXPORTS = {
    'TransportResult': 'apps.transport.results',
    'BBPath': 'apps.transport.results',
    'w2_circle_exact': 'apps.transport.circle',
    'w2_monotone_1d': 'apps.transport.monotone',
    'zonal_cross_check': 'apps.transport.monotone',
    'w2_sinkhorn': 'apps.transport.sinkhorn',
    'w2_distance': 'apps.transport.api',
    'build_mccann_path': 'apps.transport.dynamic',
    'assemble_path': 'apps.transport.dynamic',
    'bb_action': 'apps.transport.dynamic',
}

__all__ = list(_EXPORTS)


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(_EXPORTS[name]), name)
    raise AttributeError(f"module '{__name__}' has no attribute '{name}'")

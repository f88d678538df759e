"""
验证工具
收缩不等式的端到端运行、容差模型、报告序列化与管理命令
"""
from importlib import import_module

_EXPORTS = {
    'run_main_contraction': 'apps.harness.contraction',
    'run_vrs_limit': 'apps.harness.contraction',
    'run_simple_two_time': 'apps.harness.contraction',
    'run_eks_bound': 'apps.harness.contraction',
    'run_time_consistency': 'apps.harness.contraction',
    'InequalityReport': 'apps.harness.reports',
    'ReportRow': 'apps.harness.reports',
    'emit_report': 'apps.harness.reports',
    'load_report': 'apps.harness.reports',
    'classify': 'apps.harness.reports',
    'tolerance_for': 'apps.harness.tolerance',
    'classify_deficit': 'apps.harness.tolerance',
    'LabConfig': 'apps.harness.config',
    'load_config': 'apps.harness.config',
    'parse_config': 'apps.harness.config',
}

__all__ = list(_EXPORTS)


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(_EXPORTS[name]), name)
    raise AttributeError(f"module '{__name__}' has no attribute '{name}'")

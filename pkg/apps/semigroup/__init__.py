"""
扩散半群模块
加权生成元 L、热半群 P_t、Γ / Γ₂ 与相对熵
"""
from importlib import import_module

# 延迟导入，避免 Django 加载 app 时提前读取 settings
_EXPORTS = {
    'ScalarField': 'apps.semigroup.fields',
    'DensityField': 'apps.semigroup.fields',
    'density_from_expression': 'apps.semigroup.fields',
    'density_from_values': 'apps.semigroup.fields',
    'scalar_from_expression': 'apps.semigroup.fields',
    'generator_matrix': 'apps.semigroup.operators',
    'apply_generator': 'apps.semigroup.operators',
    'gamma': 'apps.semigroup.operators',
    'gamma2': 'apps.semigroup.operators',
    'check_gamma2_cd': 'apps.semigroup.operators',
    'heat_evolve': 'apps.semigroup.evolution',
    'evolve_at_times': 'apps.semigroup.evolution',
    'smooth_density': 'apps.semigroup.evolution',
    'entropy': 'apps.semigroup.entropy',
    'fisher_information': 'apps.semigroup.entropy',
    'check_entropy_dissipation': 'apps.semigroup.entropy',
}

__all__ = list(_EXPORTS)


def __getattr__(name):
    """延迟导入模块"""
    if name in _EXPORTS:
        return getattr(import_module(_EXPORTS[name]), name)
    raise AttributeError(f"module '{__name__}' has no attribute '{name}'")

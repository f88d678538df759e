"""
几何模块
模型空间、权重势 Ψ、参考测度 μ 与 CD(R, m) 参数
"""
from importlib import import_module

# 延迟导入，避免 Django 加载 app 时提前读取 settings
_EXPORTS = {
    'ModelSpace': 'apps.geometry.spaces',
    'build_model_space': 'apps.geometry.spaces',
    'WeightField': 'apps.geometry.weights',
    'weight_from_expression': 'apps.geometry.weights',
    'weight_from_samples': 'apps.geometry.weights',
    'MeasureField': 'apps.geometry.curvature',
    'CDParams': 'apps.geometry.curvature',
    'measure_of': 'apps.geometry.curvature',
    'ricci_operator_field': 'apps.geometry.curvature',
    'cd_best_R': 'apps.geometry.curvature',
    'check_cd_feasible': 'apps.geometry.curvature',
}

__all__ = list(_EXPORTS)


def __getattr__(name):
    """延迟导入模块"""
    if name in _EXPORTS:
        return getattr(import_module(_EXPORTS[name]), name)
    raise AttributeError(f"module '{__name__}' has no attribute '{name}'")

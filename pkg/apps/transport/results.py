"""
传输结果类型
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np

from apps.forms.fields import OneFormField
from apps.semigroup.fields import DensityField

METHOD_CIRCLE_EXACT = 'circle_exact'
METHOD_MONOTONE_1D = 'monotone_1d'
METHOD_SINKHORN = 'sinkhorn'
METHOD_BB_ACTION = 'bb_action'

# w2_distance 的 method 参数：exact 按空间选精确求解器
METHOD_EXACT = 'exact'
METHODS = (METHOD_EXACT, METHOD_CIRCLE_EXACT, METHOD_MONOTONE_1D, METHOD_SINKHORN)


def _plain(value: Any) -> Any:
    """诊断信息转成可 JSON 序列化的纯 Python 对象"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass(frozen=True)
class TransportResult:
    """
    Attributes:
        w2: W₂ 距离（长度单位）
        method: circle_exact / monotone_1d / sinkhorn / bb_action
        diagnostics: 迭代次数、最终 ε、边缘误差、切点、外推记录等
    """
    w2: float
    method: str
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def w2_squared(self) -> float:
        return self.w2 ** 2

    def to_dict(self) -> Dict[str, Any]:
        return {
            'w2': float(self.w2),
            'method': self.method,
            'diagnostics': _plain(self.diagnostics),
        }


@dataclass(frozen=True, eq=False)
class BBPath:
    """
    Benamou–Brenier 容许路径 (ρ_s, ω_s)

    Attributes:
        times: s_k = k/K，k = 0..K
        rho_s: 各 s_k 处的密度
        omega_s: 各中点 s_{k+½} 处的动量 ω = ρ·η
        continuity_residual: sup |∂_sρ + δ_Ψω|
        worst_s: 残差最大处的中点时刻
        tolerance: 声明的连续性容差
    """
    times: Tuple[float, ...]
    rho_s: Tuple[DensityField, ...]
    omega_s: Tuple[OneFormField, ...]
    continuity_residual: float
    worst_s: float = 0.0
    tolerance: float = 0.0

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def space(self):
        return self.rho_s[0].space

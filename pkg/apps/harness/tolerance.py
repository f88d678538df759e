"""
全局容差模型

tol = c_h·h² + c_dt·dt² + c_u/u_points + w2_solver_tol
常数在 settings.LAB_TOLERANCE 中，由圆周基线的 h 加密校准后固定。
"""
from typing import Optional

from django.conf import settings

from apps.geometry.spaces import ModelSpace
from apps.semigroup.evolution import dt_max
from apps.transport.results import METHOD_SINKHORN

STATUS_PASS = 'PASS'
STATUS_WARNING = 'PASS_WITH_WARNING'
STATUS_FAIL = 'FAIL'


def tolerance_for(
    space: ModelSpace,
    dt: Optional[float] = None,
    u_points: Optional[int] = None,
    w2_method: str = 'exact',
) -> float:
    config = settings.LAB_TOLERANCE
    dt = dt_max(space) if dt is None else float(dt)
    tol = config['c_h'] * space.h_min ** 2 + config['c_dt'] * dt ** 2
    if u_points:
        tol += config['c_u'] / u_points
    solver = config['sinkhorn_solver_tol'] if w2_method == METHOD_SINKHORN else config['w2_solver_tol']
    return tol + solver


def classify_deficit(min_deficit: Optional[float], tolerance: float) -> str:
    """deficit ≥ 0 为 PASS；容差内的负值为 PASS_WITH_WARNING；超出容差为 FAIL"""
    if min_deficit is None or min_deficit >= 0:
        return STATUS_PASS
    if min_deficit >= -tolerance:
        return STATUS_WARNING
    return STATUS_FAIL

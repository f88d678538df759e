"""
圆周上的精确 W₂

把两条分布函数展开到实数轴上，最优耦合为 x ↦ G̃⁻¹(F(x) − α)。
代价关于 α 是凸函数，最优 α 落在 {F_k − G_k} 的取值范围内：
先在全部 N 个网格切点的候选 α_k 上穷举，再在相邻候选之间用有界 Brent 搜索细化。
"""
import logging
import math

import numpy as np
from scipy.optimize import minimize_scalar

from apps.common.exceptions import InputError
from apps.geometry.spaces import KIND_CIRCLE
from apps.semigroup.fields import DensityField
from apps.transport.quantiles import canonical_pair, cell_cdf, check_pair, quantile_cost
from apps.transport.results import METHOD_CIRCLE_EXACT, TransportResult

logger = logging.getLogger(__name__)


def optimal_shift(rho0: DensityField, rho1: DensityField):
    """
    Returns:
        (最小代价, 最优 α, 切点, 候选个数)
    """
    source, target = cell_cdf(rho0), cell_cdf(rho1)
    candidates = source.values[:-1] - target.values[:-1]
    costs = np.array([quantile_cost(source, target, alpha) for alpha in candidates])
    best = int(np.argmin(costs))
    best_alpha, best_cost = float(candidates[best]), float(costs[best])

    ordered = np.unique(candidates)
    position = int(np.searchsorted(ordered, best_alpha))
    if ordered.size > 1:
        spread = float(ordered[-1] - ordered[0])
        lo = float(ordered[position - 1]) if position > 0 else best_alpha - spread
        hi = float(ordered[position + 1]) if position + 1 < ordered.size else best_alpha + spread
        lo, hi = max(lo, -1.0), min(hi, 1.0)
        if hi > lo:
            refined = minimize_scalar(
                lambda a: quantile_cost(source, target, a),
                bounds=(lo, hi),
                method='bounded',
                options={'xatol': 1e-13},
            )
            if refined.success and refined.fun < best_cost:
                best_alpha, best_cost = float(refined.x), float(refined.fun)

    return max(best_cost, 0.0), best_alpha, cut_point(source, target, best_alpha), int(candidates.size)


def cut_point(source, target, alpha: float) -> float:
    """F(x) − G(x) = α 的位置；两条分布函数在单元内线性，有多个交点时取残差最小的单元"""
    diff = source.values - target.values - alpha
    crossings = np.flatnonzero(np.sign(diff[:-1]) != np.sign(diff[1:]))
    if crossings.size == 0:
        return float(source.knots[int(np.argmin(np.abs(diff)))])
    k = int(crossings[np.argmin(np.abs(diff[crossings]))])
    d0, d1 = diff[k], diff[k + 1]
    if d0 == d1:
        return float(source.knots[k])
    return float(source.knots[k] + (source.knots[k + 1] - source.knots[k]) * d0 / (d0 - d1))


def w2_circle_exact(rho0: DensityField, rho1: DensityField) -> TransportResult:
    """
    圆周上两个密度之间的 W₂

    Example:
        w2_circle_exact(rho, rho).w2 == 0.0
    """
    check_pair(rho0, rho1)
    if rho0.space.kind != KIND_CIRCLE:
        raise InputError(f'w2_circle_exact needs a circle, got {rho0.space.kind}')

    first, second, swapped = canonical_pair(rho0, rho1)
    cost, alpha, cut, count = optimal_shift(first, second)
    if swapped:
        # 交换后 α 取反；切点处 F − G = α，不变
        alpha = -alpha
    w2 = math.sqrt(cost)

    logger.debug('circle W2 on %s: %.12g (alpha=%.6g)', rho0.space.describe(), w2, alpha)
    return TransportResult(
        w2=w2,
        method=METHOD_CIRCLE_EXACT,
        diagnostics={'alpha': alpha, 'cut': cut, 'candidates': count},
    )

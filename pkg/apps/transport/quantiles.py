"""
一维分位数耦合

密度在每个网格单元内取常值（单元模型），累积分布函数在单元边界上分段线性，
分位函数也分段线性，于是 ∫₀¹|F⁻¹(q) − G⁻¹(q − α)|² dq 在两组分位节点的并集上可以精确求积。
"""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from apps.common.exceptions import InputError
from apps.geometry.spaces import KIND_CIRCLE, KIND_SPHERE
from apps.semigroup.fields import DensityField


@dataclass(frozen=True, eq=False)
class CellCDF:
    """
    Attributes:
        knots: 单元边界坐标，N+1 个
        values: 边界处的累积质量，从 0 到 1
        period: 周期（圆周为 2π），区间上为 None
    """
    knots: np.ndarray
    values: np.ndarray
    period: Optional[float] = None

    def extended(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        周期延拓到 [−1, 2] 的分位节点

        圆周上 q − α 落在 (−1, 2) 内，需要前后各一个周期的副本。
        """
        if self.period is None:
            return self.values, self.knots
        r, y = self.values[:-1], self.knots[:-1]
        r_ext = np.concatenate([r - 1.0, r, r + 1.0, [2.0]])
        y_ext = np.concatenate([y - self.period, y, y + self.period, [self.knots[-1] + self.period]])
        return r_ext, y_ext


def cell_cdf(rho: DensityField) -> CellCDF:
    """把 μ-密度换成单元质量并累积（度量体积已在 μ 权重里）"""
    space = rho.space
    masses = rho.masses
    total = float(masses.sum())
    if abs(total - 1.0) > 1e-8:
        raise InputError(f'density is not normalized: total mass {total!r}')

    values = np.concatenate([[0.0], np.cumsum(masses)])
    values /= values[-1]

    if space.kind == KIND_CIRCLE:
        step = space.h[0]
        knots = space.grid[0] - 0.5 * step + step * np.arange(space.size + 1)
        return CellCDF(knots=knots, values=values, period=2 * math.pi)
    if space.kind == KIND_SPHERE:
        return CellCDF(knots=np.asarray(space.faces, dtype=float), values=values)
    raise InputError(f'one-dimensional quantile coupling needs circle or sphere_zonal, not {space.kind}')


def quantile_cost(source: CellCDF, target: CellCDF, alpha: float = 0.0) -> float:
    """
    ∫₀¹ |F⁻¹(q) − G̃⁻¹(q − α)|² dq

    被积函数在分位节点之间是线性函数的平方，区间 [q_a, q_b] 上积分为
    Δq·(D_a² + D_a·D_b + D_b²)/3。
    """
    r_ext, y_ext = target.extended()
    shifted = r_ext + alpha
    inside = shifted[(shifted > 0.0) & (shifted < 1.0)]
    q = np.union1d(source.values, inside)

    xs = np.interp(q, source.values, source.knots)
    ys = np.interp(q - alpha, r_ext, y_ext)
    gap = xs - ys
    dq = np.diff(q)
    return float(np.sum(dq * (gap[:-1] ** 2 + gap[:-1] * gap[1:] + gap[1:] ** 2)) / 3.0)


def canonical_pair(rho0: DensityField, rho1: DensityField) -> Tuple[DensityField, DensityField, bool]:
    """按字节序固定两个输入的顺序，使 w2(a, b) 与 w2(b, a) 走同一条计算路径"""
    if rho1.rho.tobytes() < rho0.rho.tobytes():
        return rho1, rho0, True
    return rho0, rho1, False


def check_pair(rho0: DensityField, rho1: DensityField):
    if not rho0.space.same_grid(rho1.space):
        raise InputError(f'densities live on {rho0.space.describe()} and {rho1.space.describe()}')
    if not rho0.same_reference(rho1):
        raise InputError('densities are measured against different reference measures')

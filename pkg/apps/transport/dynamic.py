"""
Benamou–Brenier 容许路径与作用量

build_mccann_path 用最优一维映射 T 做位移插值：
    y = x + s·d(x)，d = T − id，ρ_s 为 T_s = id + s·d 的前推，
动量 ω_s = ρ_s·v_s，v_s(y) = d(x)。
节点弧长密度用三次样条插值，分布函数取样条的原函数，逆函数用向量化的
带保护 Newton–二分迭代。
"""
import logging
import math
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings
from scipy.interpolate import CubicSpline

from apps.common.exceptions import InputError
from apps.forms.fields import OneFormField
from apps.forms.operators import delta_psi
from apps.geometry.spaces import KIND_CIRCLE, KIND_SPHERE, ModelSpace
from apps.semigroup.fields import DensityField, density_from_values
from apps.transport.circle import w2_circle_exact
from apps.transport.results import BBPath

logger = logging.getLogger(__name__)

# 圆周上 |d| 至多约为 π，括号再放宽一点
_MARGIN = 0.25


def solve_increasing(
    func: Callable[[np.ndarray], np.ndarray],
    derivative: Callable[[np.ndarray], np.ndarray],
    target: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    tol: float = 1e-13,
    max_iter: int = 200,
) -> np.ndarray:
    """在括号 [lo, hi] 内逐点求解单调递增方程 func(x) = target"""
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        value = func(x) - target
        lo = np.where(value < 0, x, lo)
        hi = np.where(value > 0, x, hi)
        slope = derivative(x)
        with np.errstate(divide='ignore', invalid='ignore'):
            newton = x - value / slope
        fallback = ~np.isfinite(newton) | (slope <= 0) | (newton <= lo) | (newton >= hi)
        updated = np.where(fallback, 0.5 * (lo + hi), newton)
        done = np.max(np.abs(updated - x)) <= tol
        x = updated
        if done:
            break
    return x


class SplineCDF:
    """
    节点弧长密度的三次样条与其分布函数

    圆周上周期延拓：F̃(x + 2π) = F̃(x) + 1；sphere_zonal 上在两极补零点。
    """

    def __init__(self, rho: DensityField):
        space = rho.space
        step = space.h[0]
        nodal = rho.masses / step
        self.kind = space.kind
        if space.kind == KIND_CIRCLE:
            nodes = np.append(space.grid, space.grid[0] + 2 * math.pi)
            self.density = CubicSpline(nodes, np.append(nodal, nodal[0]), bc_type='periodic')
            self.start, self.period = float(nodes[0]), 2 * math.pi
        elif space.kind == KIND_SPHERE:
            nodes = np.concatenate([[0.0], space.grid, [math.pi]])
            self.density = CubicSpline(nodes, np.concatenate([[0.0], nodal, [0.0]]))
            self.start, self.period = 0.0, math.pi
        else:
            raise InputError(f'displacement interpolation needs circle or sphere_zonal, not {space.kind}')

        self.primitive = self.density.antiderivative()
        # 原函数在一个周期内求值，不做周期外推
        self.primitive.extrapolate = True
        self.total = float(self.primitive(self.start + self.period) - self.primitive(self.start))

    def pdf(self, x: np.ndarray) -> np.ndarray:
        if self.kind == KIND_CIRCLE:
            x = self.start + np.mod(x - self.start, self.period)
        return self.density(x) / self.total

    def cdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == KIND_CIRCLE:
            turns = np.floor((x - self.start) / self.period)
            local = x - turns * self.period
            return (self.primitive(local) - self.primitive(self.start)) / self.total + turns
        return (self.primitive(x) - self.primitive(self.start)) / self.total

    def inverse(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.kind == KIND_CIRCLE:
            turns = np.floor(q)
            local = q - turns
            lo = np.full(q.shape, self.start)
            x = solve_increasing(self.cdf, self.pdf, local, lo, lo + self.period)
            return x + turns * self.period
        lo = np.zeros(q.shape)
        return solve_increasing(self.cdf, self.pdf, np.clip(q, 0.0, 1.0), lo, lo + math.pi)


class DisplacementMap:
    """T(x) = F₁⁻¹(F₀(x) − α)"""

    def __init__(self, source: SplineCDF, target: SplineCDF, alpha: float = 0.0):
        self.source = source
        self.target = target
        self.alpha = alpha

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.target.inverse(self.source.cdf(x) - self.alpha)

    def displacement(self, x: np.ndarray) -> np.ndarray:
        return self(x) - x

    def displacement_slope(self, x: np.ndarray) -> np.ndarray:
        """d'(x) = p₀(x)/p₁(T(x)) − 1"""
        return self.source.pdf(x) / self.target.pdf(self(x)) - 1.0

    def preimage(self, y: np.ndarray, s: float) -> np.ndarray:
        """解 x + s·d(x) = y"""
        y = np.asarray(y, dtype=float)
        if self.source.kind == KIND_CIRCLE:
            lo, hi = y - math.pi - _MARGIN, y + math.pi + _MARGIN
        else:
            lo, hi = np.zeros(y.shape), np.full(y.shape, math.pi)
        return solve_increasing(
            lambda x: x + s * self.displacement(x),
            lambda x: 1.0 + s * self.displacement_slope(x),
            y, lo, hi,
        )


def _interpolant(rho0: DensityField, mapping: DisplacementMap, s: float) -> Tuple[DensityField, np.ndarray]:
    """s 时刻的密度与节点速度 v_s(y) = d(x)"""
    space = rho0.space
    nodes = np.asarray(space.grid, dtype=float)
    x = mapping.preimage(nodes, s)
    jacobian = 1.0 + s * mapping.displacement_slope(x)
    arclength = mapping.source.pdf(x) / jacobian
    values = np.maximum(arclength * space.h[0] / rho0.measure.mu_weights, 0.0)
    return density_from_values(values, space, rho0.measure), mapping.displacement(x)


def _form(space: ModelSpace, values: np.ndarray) -> OneFormField:
    comps = np.zeros((space.n,) + space.shape)
    comps[0] = values
    return OneFormField(comps=comps, space=space)


def continuity_residual(
    rho_s: Sequence[DensityField],
    omega_s: Sequence[OneFormField],
    times: Sequence[float],
) -> Tuple[float, float]:
    """
    sup_k sup_x |(ρ_{k+1} − ρ_k)/Δs + δ_Ψω_{k+½}|

    Returns:
        (残差, 残差最大的中点时刻)
    """
    worst, worst_s = 0.0, 0.0
    for k, omega in enumerate(omega_s):
        ds = times[k + 1] - times[k]
        rho = rho_s[k]
        divergence = delta_psi(omega, rho.space, rho.measure.weight).values
        residual = float(np.max(np.abs((rho_s[k + 1].rho - rho.rho) / ds + divergence)))
        if residual > worst:
            worst, worst_s = residual, 0.5 * (times[k] + times[k + 1])
    return worst, worst_s


def assemble_path(
    rho_s: Sequence[DensityField],
    omega_s: Sequence[OneFormField],
    times: Optional[Sequence[float]] = None,
    tolerance: Optional[float] = None,
) -> BBPath:
    """由给定的 (ρ_s, ω_s) 组装 BBPath 并计算连续性残差"""
    if len(rho_s) < 2 or len(omega_s) != len(rho_s) - 1:
        raise InputError(f'path needs K+1 densities and K momenta, got {len(rho_s)} and {len(omega_s)}')
    steps = len(omega_s)
    times = tuple(float(t) for t in (times if times is not None else np.linspace(0.0, 1.0, steps + 1)))
    space = rho_s[0].space
    for rho in rho_s:
        if not rho.same_reference(rho_s[0]):
            raise InputError('path densities use different grids or reference measures')
    for omega in omega_s:
        omega.check_space(space)

    residual, worst_s = continuity_residual(rho_s, omega_s, times)
    tolerance = settings.LAB_BB_CONTINUITY_TOL if tolerance is None else float(tolerance)
    return BBPath(
        times=times,
        rho_s=tuple(rho_s),
        omega_s=tuple(omega_s),
        continuity_residual=residual,
        worst_s=worst_s,
        tolerance=tolerance,
    )


def build_mccann_path(
    rho0: DensityField,
    rho1: DensityField,
    K: int,
    tolerance: Optional[float] = None,
) -> BBPath:
    """
    位移插值路径，K 个 s 步

    圆周上的平移参数 α 取自精确求解器，sphere_zonal 上 α = 0。
    """
    if rho0.space.kind not in (KIND_CIRCLE, KIND_SPHERE):
        raise InputError(f'build_mccann_path needs circle or sphere_zonal, not {rho0.space.kind}')
    if not rho0.same_reference(rho1):
        raise InputError('densities use different grids or reference measures')
    K = int(K)
    if K < 1:
        raise InputError(f'path needs at least one step, got K={K}')

    space = rho0.space
    times = np.linspace(0.0, 1.0, K + 1)
    if np.array_equal(rho0.rho, rho1.rho):
        zero = OneFormField.zero(space)
        return assemble_path([rho0] * (K + 1), [zero] * K, times, tolerance)

    alpha = 0.0
    if space.kind == KIND_CIRCLE:
        alpha = w2_circle_exact(rho0, rho1).diagnostics['alpha']
        # 单元模型的分布函数从 θ₀ − h/2 起算，样条的从 θ₀ 起算，两者差半个首单元的质量
        alpha -= 0.5 * float(rho0.masses[0] - rho1.masses[0])
    mapping = DisplacementMap(SplineCDF(rho0), SplineCDF(rho1), alpha)

    rho_s = [rho0]
    for s in times[1:-1]:
        rho_s.append(_interpolant(rho0, mapping, float(s))[0])
    rho_s.append(rho1)

    omega_s = []
    for s in 0.5 * (times[:-1] + times[1:]):
        rho_mid, velocity = _interpolant(rho0, mapping, float(s))
        omega_s.append(_form(space, rho_mid.rho * velocity))

    path = assemble_path(rho_s, omega_s, times, tolerance)
    logger.debug(
        'mccann path on %s: K=%d, continuity residual %.3e at s=%.3f',
        space.describe(), K, path.continuity_residual, path.worst_s,
    )
    return path


def bb_action(path: BBPath) -> float:
    """
    ∫₀¹∫|ω_s|²/ρ_s dμ ds，s 方向用中点公式（ω 给在中点，ρ 取相邻两层的平均）
    """
    if path.continuity_residual > path.tolerance:
        raise InputError(
            f'continuity residual {path.continuity_residual:.3e} exceeds tolerance '
            f'{path.tolerance:.1e} (worst at s={path.worst_s:.4f})'
        )
    mu = path.rho_s[0].measure.mu_weights
    action = 0.0
    for k, omega in enumerate(path.omega_s):
        ds = path.times[k + 1] - path.times[k]
        rho_mid = 0.5 * (path.rho_s[k].rho + path.rho_s[k + 1].rho)
        action += ds * float(np.sum(omega.sq_norm / rho_mid * mu))
    return action

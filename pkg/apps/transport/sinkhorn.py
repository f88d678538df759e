"""
对数域熵正则 Sinkhorn

- 代价取模型空间上的测地距离平方；
- 去偏值 S_ε = OT_ε(a, b) − ½OT_ε(a, a) − ½OT_ε(b, b)，对称问题用平均更新；
- ε 按几何序列逐级减小，势函数逐级热启动；
- 最后三级用 {1, ε, ε²} 做 Richardson 外推得到 ε → 0 的 W₂²。

三种核：
- 圆周：稠密代价矩阵；
- torus2：代价按坐标轴可分，log-sum-exp 分两步做；
- sphere_zonal：提升到 L 个经度的 S² 网格，纬向势函数下按经度差先做 log-sum-exp，
  得到纬度 × 纬度的约化对数核（对纬向边缘是精确的）。
"""
import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings
from scipy.special import logsumexp

from apps.common.exceptions import ConfigurationError, ConvergenceError, InputError
from apps.geometry.spaces import KIND_CIRCLE, KIND_SPHERE, KIND_TORUS, ModelSpace
from apps.semigroup.fields import DensityField
from apps.transport.cost_cache import circle_cost, sphere_cost
from apps.transport.quantiles import canonical_pair, check_pair
from apps.transport.results import METHOD_SINKHORN, TransportResult

logger = logging.getLogger(__name__)

COST_GEODESIC_SQ = 'geodesic_sq'


class DenseKernel:
    """log K_ij = −C_ij/ε"""

    def __init__(self, cost: np.ndarray, shape: Tuple[int, ...]):
        self.cost = cost
        self.shape = shape
        self._eps = None
        self._log_kernel = None

    def log_kernel(self, eps: float) -> np.ndarray:
        if eps != self._eps:
            self._log_kernel = -self.cost / eps
            self._eps = eps
        return self._log_kernel

    def softmin(self, h: np.ndarray, eps: float) -> np.ndarray:
        """−ε·log Σ_j exp(h_j + log K_ij)"""
        flat = h.reshape(-1)
        return (-eps * logsumexp(flat[None, :] + self.log_kernel(eps), axis=1)).reshape(self.shape)


class ReducedSphereKernel(DenseKernel):
    """Λ_ij = log (1/L)Σ_l exp(−C(θ_i, θ_j, Δφ_l)/ε)"""

    def __init__(self, stack: np.ndarray, shape: Tuple[int, ...]):
        super().__init__(stack, shape)

    def log_kernel(self, eps: float) -> np.ndarray:
        if eps != self._eps:
            count = self.cost.shape[0]
            self._log_kernel = logsumexp(-self.cost / eps, axis=0) - math.log(count)
            self._eps = eps
        return self._log_kernel


class SeparableKernel:
    """C((i₁,i₂),(j₁,j₂)) = C_x(i₁,j₁) + C_y(i₂,j₂)"""

    def __init__(self, cost_x: np.ndarray, cost_y: np.ndarray):
        self.cost_x = cost_x
        self.cost_y = cost_y
        self.shape = (cost_x.shape[0], cost_y.shape[0])

    def softmin(self, h: np.ndarray, eps: float) -> np.ndarray:
        # 先对 j₂ 求和得到 [j₁, i₂]，再对 j₁ 求和得到 [i₁, i₂]
        partial = logsumexp(h[:, None, :] - self.cost_y[None, :, :] / eps, axis=2)
        return -eps * logsumexp(partial[None, :, :] - self.cost_x[:, :, None] / eps, axis=1)


def build_kernel(space: ModelSpace, longitudes: Optional[int] = None):
    if space.kind == KIND_CIRCLE:
        return DenseKernel(circle_cost(space.size), space.shape)
    if space.kind == KIND_TORUS:
        n1, n2 = space.shape
        return SeparableKernel(circle_cost(n1), circle_cost(n2))
    if space.kind == KIND_SPHERE:
        longitudes = longitudes or settings.LAB_SINKHORN['sphere_lon_resolution']
        return ReducedSphereKernel(sphere_cost(np.asarray(space.grid), longitudes), space.shape)
    raise ConfigurationError(f'no Sinkhorn kernel for {space.kind}')


def eps_schedule_from_settings() -> List[float]:
    config = settings.LAB_SINKHORN
    start, stop, stages = config['eps_start'], config['eps_stop'], int(config['stages'])
    if stages == 1:
        return [float(stop)]
    return [float(v) for v in np.geomspace(start, stop, stages)]


def _check_schedule(eps_schedule: Sequence[float]) -> List[float]:
    schedule = [float(e) for e in eps_schedule]
    if not schedule:
        raise ConfigurationError('eps_schedule must not be empty')
    if any(not math.isfinite(e) or e <= 0 for e in schedule):
        raise ConfigurationError(f'eps_schedule must be positive, got {schedule}')
    if any(b >= a for a, b in zip(schedule[:-1], schedule[1:])):
        raise ConfigurationError(f'eps_schedule must be strictly decreasing, got {schedule}')
    return schedule


class _Problem:
    """一个熵 OT 子问题（ab / aa / bb）的势函数状态"""

    def __init__(self, label: str, a: np.ndarray, b: np.ndarray, symmetric: bool):
        self.label = label
        self.a, self.b = a, b
        self.log_a, self.log_b = np.log(a), np.log(b)
        self.symmetric = symmetric
        self.f = np.zeros_like(a)
        self.g = np.zeros_like(b)

    @property
    def value(self) -> float:
        """对偶值 ⟨f, a⟩ + ⟨g, b⟩"""
        return float(np.sum(self.f * self.a) + np.sum(self.g * self.b))

    def solve(self, kernel, eps: float, max_iter: int, tol: float, stage: int) -> Tuple[int, float]:
        error = math.inf
        for iteration in range(1, max_iter + 1):
            if self.symmetric:
                f_new = kernel.softmin(self.log_a + self.f / eps, eps)
                error = float(np.sum(self.a * np.abs(np.expm1((self.f - f_new) / eps))))
                self.f = 0.5 * (self.f + f_new)
                self.g = self.f
            else:
                self.f = kernel.softmin(self.log_b + self.g / eps, eps)
                g_new = kernel.softmin(self.log_a + self.f / eps, eps)
                error = float(np.sum(self.b * np.abs(np.expm1((self.g - g_new) / eps))))
                self.g = g_new
            if error <= tol:
                return iteration, error

        raise ConvergenceError(
            f'sinkhorn ({self.label}) did not reach marginal error {tol:.1e} '
            f'at eps={eps:.3e} within {max_iter} iterations (error {error:.3e})',
            last_iterate={
                'problem': self.label,
                'stage': stage,
                'eps': eps,
                'marginal_error': error,
                'f': self.f.copy(),
                'g': self.g.copy(),
            },
        )


def richardson(eps: Sequence[float], values: Sequence[float]) -> float:
    """S(ε) ≈ c₀ + c₁ε + c₂ε²，返回 c₀"""
    eps = np.asarray(eps, dtype=float)
    system = np.vander(eps, 3, increasing=True)
    return float(np.linalg.solve(system, np.asarray(values, dtype=float))[0])


def sinkhorn_divergence(
    a: np.ndarray,
    b: np.ndarray,
    kernel,
    eps_schedule: Sequence[float],
    max_iter: int,
    marginal_tol: float,
) -> Dict[str, Any]:
    """
    在 ε 序列上计算去偏 Sinkhorn 值

    Returns:
        {'stages': [...], 'iterations': 总迭代数, 'marginal_error': 最后一级误差,
         'values': 各级 S_ε}
    """
    identical = np.array_equal(a, b)
    ab = _Problem('ab', a, b, symmetric=identical)
    aa = ab if identical else _Problem('aa', a, a, symmetric=True)
    bb = ab if identical else _Problem('bb', b, b, symmetric=True)
    problems = [ab] if identical else [ab, aa, bb]

    stages, total = [], 0
    for stage, eps in enumerate(eps_schedule):
        iterations, error = 0, 0.0
        for problem in problems:
            used, residual = problem.solve(kernel, eps, max_iter, marginal_tol, stage)
            iterations += used
            error = max(error, residual)
        value = ab.value - 0.5 * aa.value - 0.5 * bb.value
        total += iterations
        stages.append({'eps': eps, 'value': value, 'iterations': iterations, 'marginal_error': error})
        logger.debug('sinkhorn stage %d: eps=%.4g S=%.12g (%d iterations)', stage, eps, value, iterations)

    return {
        'stages': stages,
        'iterations': total,
        'marginal_error': stages[-1]['marginal_error'],
        'values': [s['value'] for s in stages],
    }


def w2_sinkhorn(
    rho0: DensityField,
    rho1: DensityField,
    eps_schedule: Optional[Sequence[float]] = None,
    cost: str = COST_GEODESIC_SQ,
    max_iter: Optional[int] = None,
    marginal_tol: Optional[float] = None,
    longitudes: Optional[int] = None,
) -> TransportResult:
    """
    熵正则 W₂，Richardson 外推到 ε → 0

    Args:
        eps_schedule: 严格递减的 ε 序列，默认取 settings.LAB_SINKHORN
        cost: 目前只支持 'geodesic_sq'
        longitudes: sphere_zonal 提升时的经度格点数
    """
    check_pair(rho0, rho1)
    if cost != COST_GEODESIC_SQ:
        raise ConfigurationError(f'unsupported cost {cost!r}; only {COST_GEODESIC_SQ!r}')
    schedule = _check_schedule(eps_schedule if eps_schedule is not None else eps_schedule_from_settings())
    config = settings.LAB_SINKHORN
    max_iter = int(max_iter or config['max_iter'])
    marginal_tol = float(marginal_tol or config['marginal_tol'])

    first, second, _ = canonical_pair(rho0, rho1)
    a, b = first.masses, second.masses
    if abs(a.sum() - 1.0) > 1e-8 or abs(b.sum() - 1.0) > 1e-8:
        raise InputError('sinkhorn marginals must be probability vectors')

    kernel = build_kernel(rho0.space, longitudes)
    run = sinkhorn_divergence(a, b, kernel, schedule, max_iter, marginal_tol)
    return _result(run, schedule)


def _result(run: Dict[str, Any], schedule: List[float]) -> TransportResult:
    values = run['values']
    extrapolation = None
    if len(values) >= 3:
        limit = richardson(schedule[-3:], values[-3:])
        extrapolation = {'eps': schedule[-3:], 'values': values[-3:], 'limit': limit}
    else:
        limit = values[-1]

    steps = np.diff(values)
    monotone = bool(np.all(steps <= 1e-9) or np.all(steps >= -1e-9))
    if not monotone:
        logger.debug('sinkhorn values not monotone in eps: %s', values)

    return TransportResult(
        w2=math.sqrt(max(limit, 0.0)),
        method=METHOD_SINKHORN,
        diagnostics={
            'iterations': run['iterations'],
            'final_eps': schedule[-1],
            'marginal_error': run['marginal_error'],
            'stages': run['stages'],
            'extrapolation': extrapolation,
            'monotone_in_eps': monotone,
        },
    )


def w2_sinkhorn_masses(
    a: np.ndarray,
    b: np.ndarray,
    kernel,
    eps_schedule: Optional[Sequence[float]] = None,
) -> TransportResult:
    """直接在质量向量上求解（纬向交叉验证的粗网格用）"""
    schedule = _check_schedule(eps_schedule if eps_schedule is not None else eps_schedule_from_settings())
    config = settings.LAB_SINKHORN
    if b.tobytes() < a.tobytes():
        a, b = b, a
    run = sinkhorn_divergence(a, b, kernel, schedule, int(config['max_iter']), float(config['marginal_tol']))
    return _result(run, schedule)

"""
节点场

- ScalarField: 一般光滑函数（f、g、G = P_{t−s}g ...）
- DensityField: 相对 μ 的概率密度，带下界与归一化校验
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from django.conf import settings

from apps.common.exceptions import InputError
from apps.geometry.curvature import MeasureField
from apps.geometry.expressions import DENSITY_FUNCTIONS, parse_closed_form
from apps.geometry.spaces import ModelSpace, _frozen

logger = logging.getLogger(__name__)


def _check_shape(values: np.ndarray, space: ModelSpace, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != space.shape:
        raise InputError(f'{what} has shape {values.shape}, expected {space.shape} on {space.describe()}')
    if not np.all(np.isfinite(values)):
        raise InputError(f'{what} contains non-finite values')
    return values


@dataclass(frozen=True, eq=False)
class ScalarField:
    values: np.ndarray
    space: ModelSpace

    def __post_init__(self):
        object.__setattr__(self, 'values', _frozen(_check_shape(self.values, self.space, 'scalar field')))

    def check_space(self, space: ModelSpace):
        if not self.space.same_grid(space):
            raise InputError(f'field lives on {self.space.describe()}, not {space.describe()}')

    def with_values(self, values: np.ndarray) -> 'ScalarField':
        return ScalarField(values=values, space=self.space)


@dataclass(frozen=True, eq=False)
class DensityField:
    """
    Attributes:
        rho: 相对 μ 的节点密度
        space: 模型空间
        measure: 参考测度 μ（同时确定了 Ψ）
        clamped: 构造或演化过程中被截断到下界的最大幅度，光滑数据应为 0
    """
    rho: np.ndarray
    space: ModelSpace
    measure: MeasureField
    clamped: float = 0.0

    def __post_init__(self):
        rho = _check_shape(self.rho, self.space, 'density')
        if not self.measure.space.same_grid(self.space):
            raise InputError('density and measure live on different grids')

        floor = settings.LAB_DENSITY_FLOOR
        if rho.min() < floor * (1 - 1e-6):
            raise InputError(f'density drops to {rho.min():.3e}, below floor {floor:.1e}')

        mass = float(np.sum(rho * self.measure.mu_weights))
        if abs(mass - 1.0) > settings.LAB_MASS_TOL:
            raise InputError(f'density is not normalized: mass = {mass!r}')

        object.__setattr__(self, 'rho', _frozen(rho))

    @property
    def values(self) -> np.ndarray:
        return self.rho

    @property
    def mass(self) -> float:
        return self.measure.integrate(self.rho)

    @property
    def masses(self) -> np.ndarray:
        """每个节点（单元）的 μ 质量 ρ·μ_weights"""
        return self.rho * self.measure.mu_weights

    def check_space(self, space: ModelSpace):
        if not self.space.same_grid(space):
            raise InputError(f'density lives on {self.space.describe()}, not {space.describe()}')

    def same_reference(self, other: 'DensityField') -> bool:
        return self.space.same_grid(other.space) and self.measure.same_as(other.measure)

    def as_scalar(self) -> ScalarField:
        return ScalarField(values=self.rho, space=self.space)

    def with_values(self, values: np.ndarray, clamped: float = 0.0) -> 'DensityField':
        return DensityField(
            rho=values,
            space=self.space,
            measure=self.measure,
            clamped=max(self.clamped, clamped),
        )


def clamp_at_floor(values: np.ndarray, floor: Optional[float] = None) -> Tuple[np.ndarray, float]:
    """
    截断到密度下界

    Returns:
        (截断后的值, 截断幅度 max(floor − values, 0))
    """
    floor = settings.LAB_DENSITY_FLOOR if floor is None else floor
    values = np.asarray(values, dtype=float)
    amount = float(np.max(floor - values, initial=0.0))
    if amount > 0:
        values = np.maximum(values, floor)
    return values, max(amount, 0.0)


def density_from_values(
    values: np.ndarray,
    space: ModelSpace,
    measure: MeasureField,
) -> DensityField:
    """
    非负节点值 → 归一化密度；低于下界的节点先截断并记录截断幅度
    """
    values = _check_shape(values, space, 'density values')
    scale = max(float(np.max(np.abs(values))), 1.0)
    if values.min() < -1e-12 * scale:
        raise InputError(f'density values must be nonnegative, min = {values.min():.3e}')

    values = np.maximum(values, 0.0)
    mass = float(np.sum(values * measure.mu_weights))
    if mass <= 0:
        raise InputError('density values have zero mass')

    values, amount = clamp_at_floor(values / mass)
    values = values / float(np.sum(values * measure.mu_weights))
    if amount > 0:
        logger.warning('density clamped at floor on %s (amount %.3e)', space.describe(), amount)
    return DensityField(rho=values, space=space, measure=measure, clamped=amount)


def density_from_expression(
    space: ModelSpace,
    measure: MeasureField,
    form: str,
    params: Optional[Dict[str, float]] = None,
) -> DensityField:
    """
    闭式初始密度，自动归一化

    Example:
        density_from_expression(space, mu, '1 + 0.5*cos(theta)')
    """
    closed = parse_closed_form(form, space.coordinate_names, params, functions=DENSITY_FUNCTIONS)
    return density_from_values(closed.evaluate(*space.coordinates()), space, measure)


def scalar_from_expression(
    space: ModelSpace,
    form: str,
    params: Optional[Dict[str, float]] = None,
) -> ScalarField:
    closed = parse_closed_form(form, space.coordinate_names, params, functions=DENSITY_FUNCTIONS)
    return ScalarField(values=closed.evaluate(*space.coordinates()), space=space)

"""
参考测度与曲率-维数参数

- measure_of: μ = e^{−Ψ}dx，归一化为概率测度
- ricci_operator_field: Bakry–Émery 张量 Ricci(L) = Ricci_g + Hess(Ψ)
- cd_best_R: 网格上 CD(R, m) 条件允许的最大 R
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Tuple, Union

import numpy as np

from apps.common.exceptions import ConfigurationError, DomainError, InputError
from apps.geometry.spaces import KIND_SPHERE, ModelSpace, _frozen
from apps.geometry.weights import WeightField

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MeasureField:
    """
    归一化参考测度

    Attributes:
        space: 模型空间
        weight: 对应的 Ψ
        mu_weights: 每个节点的 e^{−Ψ}·vol_weight，总和为 1
        normalization_constant: 归一化除数 Σ e^{−Ψ}·vol_weight
    """
    space: ModelSpace
    weight: WeightField
    mu_weights: np.ndarray
    normalization_constant: float

    @property
    def density(self) -> np.ndarray:
        """μ 相对黎曼体积的密度 e^{−Ψ}/Z"""
        return self.mu_weights / self.space.vol_weights

    def integrate(self, values: np.ndarray) -> float:
        """∫ values dμ，固定求和顺序"""
        return float(np.sum(np.asarray(values) * self.mu_weights))

    def same_as(self, other: 'MeasureField') -> bool:
        if other is self:
            return True
        return (
            self.space.same_grid(other.space)
            and np.array_equal(self.mu_weights, other.mu_weights)
        )


def measure_of(space: ModelSpace, w: WeightField) -> MeasureField:
    w.check_space(space)
    psi = np.asarray(w.psi)
    if not np.all(np.isfinite(psi)):
        raise InputError('psi contains non-finite values')

    # 先平移 Ψ 再取指数，避免大 Ψ 溢出
    shift = float(psi.min())
    raw = np.exp(-(psi - shift)) * space.vol_weights
    total = float(raw.sum())
    mu = raw / total
    normalization = total * math.exp(-shift)

    logger.debug('measure on %s: Z = %.12g', space.describe(), normalization)
    return MeasureField(
        space=space,
        weight=w,
        mu_weights=_frozen(mu),
        normalization_constant=normalization,
    )


def ricci_operator_field(space: ModelSpace, w: WeightField) -> np.ndarray:
    """
    逐节点的 n×n 对称矩阵 Ricci(L)

    circle 上为 Ψ''，torus2 上为 Hess Ψ，单位球面上为 g + Hess Ψ。

    Returns:
        形状 (*shape, n, n) 的数组
    """
    w.check_space(space)
    tensor = np.moveaxis(np.asarray(w.d2psi), (0, 1), (-2, -1)).copy()
    if space.kind == KIND_SPHERE:
        # 单位球面 Ricci_g = (n−1)·g = g
        tensor += np.eye(space.n)
    return tensor


def parse_dimension(value: Union[str, float, int, None]) -> float:
    """把配置中的 m 解析成 float，'inf' / None 表示 +∞"""
    if value is None:
        return math.inf
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ('inf', '+inf', 'infinity', '∞'):
            return math.inf
        try:
            return float(text)
        except ValueError as exc:
            raise ConfigurationError(f'invalid dimension m: {value!r}') from exc
    return float(value)


@dataclass(frozen=True)
class CDParams:
    """
    CD(R, m) 参数

    Attributes:
        R: 曲率下界
        m: 有效维数，m ≥ n 或 +∞
        witness_node: 取到最小值的网格下标
        n: 内在维数
    """
    R: float
    m: float
    witness_node: Tuple[int, ...] = ()
    n: int = 1

    @property
    def is_infinite_dimension(self) -> bool:
        return math.isinf(self.m)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'R': self.R,
            'm': 'inf' if math.isinf(self.m) else self.m,
            'n': self.n,
            'witness_node': list(self.witness_node),
        }


def _check_dimension(space: ModelSpace, w: WeightField, m: float):
    if math.isnan(m) or m < space.n:
        raise DomainError(f'effective dimension m={m} is below intrinsic dimension n={space.n}')
    if m == space.n and not w.is_zero:
        raise DomainError('m = n requires psi to vanish identically')


def cd_best_R(space: ModelSpace, w: WeightField, m: Union[float, str]) -> CDParams:
    """
    计算网格上的最优曲率下界

    R = min_节点 λ_min( Ricci(L) − (1/(m−n))·∇Ψ⊗∇Ψ )，m = +∞ 或 Ψ ≡ 0 时不减去梯度项。
    """
    m = parse_dimension(m)
    _check_dimension(space, w, m)

    tensor = ricci_operator_field(space, w)
    if not (math.isinf(m) or w.is_zero):
        grad = np.moveaxis(np.asarray(w.dpsi), 0, -1)
        tensor = tensor - np.einsum('...i,...j->...ij', grad, grad) / (m - space.n)

    smallest = np.linalg.eigvalsh(tensor)[..., 0]
    flat_index = int(np.argmin(smallest))
    witness = tuple(int(i) for i in np.unravel_index(flat_index, smallest.shape))
    best = float(smallest.reshape(-1)[flat_index])

    logger.debug('cd_best_R on %s, m=%s: R=%.12g at %s', space.describe(), m, best, witness)
    return CDParams(R=best, m=m, witness_node=witness, n=space.n)


def check_cd_feasible(cd: CDParams, space: ModelSpace, w: WeightField, tol: float = 1e-9) -> CDParams:
    """
    确认给定的 CD 参数可行：R 不超过 cd_best_R 的输出

    Returns:
        同一 (space, w, m) 上的最优参数
    """
    best = cd_best_R(space, w, cd.m)
    if cd.R > best.R + tol:
        raise DomainError(
            f'CD({cd.R}, {cd.m}) is infeasible on {space.describe()}: best R is {best.R}'
        )
    return best

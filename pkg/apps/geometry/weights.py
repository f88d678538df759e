"""
权重势函数 (WeightField)

μ = e^{−Ψ}dx 中的 Ψ 及其一阶、二阶导数。
导数优先使用闭式表达式（sympy 求导），只有采样值时使用四阶中心差分。

分量约定（正交标架）：
- circle: dpsi[0] = Ψ'，d2psi[0,0] = Ψ''
- torus2: dpsi = (Ψ_x, Ψ_y)，d2psi 为 Hessian
- sphere_zonal: 标架 (e_θ, e_φ/sinθ)，dpsi = (Ψ_θ, 0)，Hess = diag(Ψ_θθ, cotθ·Ψ_θ)
"""
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from apps.common.exceptions import ConfigurationError, InputError
from apps.geometry.expressions import parse_closed_form
from apps.geometry.spaces import KIND_CIRCLE, KIND_TORUS, ModelSpace, _frozen


@dataclass(frozen=True, eq=False)
class WeightField:
    """
    Attributes:
        space: 所在模型空间
        psi: Ψ 的节点值
        dpsi: 梯度分量，形状 (n, *shape)
        d2psi: Hessian 分量，形状 (n, n, *shape)
        analytic: 导数是否来自闭式表达式
        descriptor: 可读描述（写入报告参数）
    """
    space: ModelSpace
    psi: np.ndarray
    dpsi: np.ndarray
    d2psi: np.ndarray
    analytic: bool
    descriptor: str = '0'

    @property
    def is_zero(self) -> bool:
        return not np.any(self.psi)

    def check_space(self, space: ModelSpace):
        if not self.space.same_grid(space):
            raise InputError(
                f'weight field lives on {self.space.describe()}, not {space.describe()}'
            )

    @classmethod
    def zero(cls, space: ModelSpace) -> 'WeightField':
        n, shape = space.n, space.shape
        return cls(
            space=space,
            psi=_frozen(np.zeros(shape)),
            dpsi=_frozen(np.zeros((n,) + shape)),
            d2psi=_frozen(np.zeros((n, n) + shape)),
            analytic=True,
            descriptor='0',
        )


def _assemble(space: ModelSpace, psi, first, second, analytic: bool, descriptor: str) -> WeightField:
    """把坐标导数整理成正交标架下的 dpsi / d2psi"""
    n, shape = space.n, space.shape
    dpsi = np.zeros((n,) + shape)
    d2psi = np.zeros((n, n) + shape)

    if space.kind == KIND_CIRCLE:
        dpsi[0] = first[0]
        d2psi[0, 0] = second[0][0]
    elif space.kind == KIND_TORUS:
        dpsi[0], dpsi[1] = first
        d2psi[0, 0] = second[0][0]
        d2psi[0, 1] = d2psi[1, 0] = second[0][1]
        d2psi[1, 1] = second[1][1]
    else:
        theta = space.grid
        dpsi[0] = first[0]
        d2psi[0, 0] = second[0][0]
        d2psi[1, 1] = first[0] * np.cos(theta) / np.sin(theta)

    return WeightField(
        space=space,
        psi=_frozen(psi),
        dpsi=_frozen(dpsi),
        d2psi=_frozen(d2psi),
        analytic=analytic,
        descriptor=descriptor,
    )


def weight_from_expression(
    space: ModelSpace,
    form: str,
    params: Optional[Dict[str, float]] = None,
) -> WeightField:
    """
    由闭式表达式构造 Ψ，导数由 sympy 解析求出

    Args:
        space: 模型空间
        form: 例如 "a*cos(theta)"
        params: 表达式参数，例如 {'a': 0.1}
    """
    names = space.coordinate_names
    closed = parse_closed_form(form, names, params)
    if closed.is_zero:
        return WeightField.zero(space)

    coords = space.coordinates()
    psi = closed.evaluate(*coords)
    first = [closed.derivative(name).evaluate(*coords) for name in names]
    second = [
        [closed.derivative(a, b).evaluate(*coords) for b in names]
        for a in names
    ]

    params_text = ', '.join(f'{k}={v!r}' for k, v in sorted((params or {}).items()))
    descriptor = f'{closed.text} [{params_text}]' if params_text else closed.text
    return _assemble(space, psi, first, second, analytic=True, descriptor=descriptor)


# 四阶中心差分模板
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def _pad(values: np.ndarray, axis: int, periodic: bool) -> np.ndarray:
    width = [(0, 0)] * values.ndim
    width[axis] = (2, 2)
    # 球面两极做偶反射：θ_{−1} = −θ_0 处的值等于 θ_0 处的值
    return np.pad(values, width, mode='wrap' if periodic else 'symmetric')


def _stencil(values: np.ndarray, weights: np.ndarray, axis: int, periodic: bool) -> np.ndarray:
    padded = _pad(values, axis, periodic)
    count = values.shape[axis]
    out = np.zeros_like(values)
    for offset, coefficient in enumerate(weights):
        if coefficient:
            out += coefficient * np.take(padded, range(offset, offset + count), axis=axis)
    return out


def weight_from_samples(space: ModelSpace, psi: np.ndarray, descriptor: str = 'sampled') -> WeightField:
    """
    由节点采样值构造 Ψ，导数用四阶中心差分

    采样值需要至少四阶可微，否则 CD 常数会被差分噪声污染。
    """
    psi = np.asarray(psi, dtype=float)
    if psi.shape != space.shape:
        raise ConfigurationError(f'psi samples have shape {psi.shape}, expected {space.shape}')
    if not np.any(psi):
        return WeightField.zero(space)

    periodic = space.is_periodic
    first, second = [], []
    for axis, step in enumerate(space.h):
        first.append(_stencil(psi, _D1, axis, periodic) / step)
    for a, step_a in enumerate(space.h):
        row = []
        for b, step_b in enumerate(space.h):
            if a == b:
                row.append(_stencil(psi, _D2, a, periodic) / step_a ** 2)
            else:
                row.append(_stencil(first[a], _D1, b, periodic) / step_b)
        second.append(row)

    return _assemble(space, psi, first, second, analytic=False, descriptor=descriptor)

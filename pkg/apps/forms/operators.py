"""
1-形式上的算子

- delta_psi: 加权散度 δ_Ψω = ∇·ω* − ∇Ψ·ω*（L²(μ) 中 d 的伴随的相反数）
- hodge_generator: (L⃗ω)_i = Δω_i − ∇^kΨ ∇_kω_i − Ricci(L)(ω*, e_i)

circle 与 torus2 上联络平凡、Ricci_g = 0，∇_kω_i 就是分量的坐标导数，
因此 L⃗ 是显式的耦合标量方程组：D2ω_i − Σ_k ∂_kΨ D_kω_i − Σ_j Hess_ij ω_j。
"""
from typing import Tuple

import numpy as np
from scipy import sparse

from apps.common.exceptions import UnsupportedSpaceError
from apps.forms.fields import OneFormField
from apps.geometry.spaces import KIND_SPHERE, ModelSpace
from apps.geometry.weights import WeightField
from apps.semigroup.fields import ScalarField
from apps.semigroup.operators import central_gradient


def require_flat(space: ModelSpace, operation: str):
    if space.kind == KIND_SPHERE:
        raise UnsupportedSpaceError(
            f'{operation} is implemented on circle and torus2 only (flat connection on 1-forms)'
        )


def covariant_derivative(omega: OneFormField) -> np.ndarray:
    """∇_kω_i，形状 (n, n, *shape)，下标顺序 [k, i]"""
    space = omega.space
    require_flat(space, 'covariant derivative')
    return np.stack([central_gradient(component, space) for component in omega.comps], axis=1)


def second_difference(values: np.ndarray, space: ModelSpace) -> np.ndarray:
    """三点二阶差分之和 Σ_axis D2（周期）"""
    out = np.zeros_like(values, dtype=float)
    for axis, step in enumerate(space.h):
        out += (np.roll(values, -1, axis=axis) - 2 * values + np.roll(values, 1, axis=axis)) / step ** 2
    return out


def delta_psi(omega: OneFormField, space: ModelSpace, w: WeightField) -> ScalarField:
    """
    δ_Ψω

    circle: ω' − Ψ'ω；torus2: Σ_i(∂_iω_i − ∂_iΨ ω_i)；
    sphere_zonal（纬向 θ-形式）: (1/sinθ)∂_θ(sinθ ω_θ) − Ψ_θ ω_θ，两极 sinθ·ω_θ 偶反射。
    """
    omega.check_space(space)
    w.check_space(space)

    if space.kind == KIND_SPHERE:
        theta = space.grid
        flux = np.pad(np.sin(theta) * omega.comps[0], 1, mode='symmetric')
        divergence = (flux[2:] - flux[:-2]) / (2 * space.h[0] * np.sin(theta))
        return ScalarField(values=divergence - w.dpsi[0] * omega.comps[0], space=space)

    values = np.zeros(space.shape)
    for axis, step in enumerate(space.h):
        component = omega.comps[axis]
        values += (np.roll(component, -1, axis=axis) - np.roll(component, 1, axis=axis)) / (2 * step)
        values -= w.dpsi[axis] * component
    return ScalarField(values=values, space=space)


def _hodge_values(comps: np.ndarray, space: ModelSpace, w: WeightField) -> np.ndarray:
    out = np.empty_like(comps, dtype=float)
    for i, component in enumerate(comps):
        grad = central_gradient(component, space)
        drift = np.sum(w.dpsi * grad, axis=0)
        curvature = np.sum(w.d2psi[i] * comps, axis=0)
        out[i] = second_difference(component, space) - drift - curvature
    return out


def hodge_generator(omega: OneFormField, space: ModelSpace, w: WeightField) -> OneFormField:
    """L⃗ω"""
    omega.check_space(space)
    require_flat(space, 'hodge generator')
    w.check_space(space)
    return omega.with_comps(_hodge_values(omega.comps, space, w))


def _periodic_1d(count: int, step: float) -> Tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """一维周期中心差分与二阶差分矩阵"""
    ones = np.ones(count)
    first = sparse.diags([ones[:-1], -ones[:-1]], [1, -1], shape=(count, count), format='lil')
    first[0, count - 1] = -1.0
    first[count - 1, 0] = 1.0
    second = sparse.diags([ones[:-1], -2 * ones, ones[:-1]], [1, 0, -1], shape=(count, count), format='lil')
    second[0, count - 1] = 1.0
    second[count - 1, 0] = 1.0
    return sparse.csr_matrix(first) / (2 * step), sparse.csr_matrix(second) / step ** 2


def hodge_matrix(space: ModelSpace, w: WeightField) -> sparse.csr_matrix:
    """
    L⃗ 的稀疏矩阵，未知量按 (分量, 节点) 展平
    """
    require_flat(space, 'hodge generator')
    w.check_space(space)

    shape = space.shape
    first_ops, second_ops = [], []
    for axis, (count, step) in enumerate(zip(shape, space.h)):
        d1, d2 = _periodic_1d(count, step)
        # C 顺序展平：x 轴算子为 kron(Op, I)，y 轴为 kron(I, Op)
        left = sparse.identity(int(np.prod(shape[:axis])), format='csr')
        right = sparse.identity(int(np.prod(shape[axis + 1:])), format='csr')
        first_ops.append(sparse.kron(sparse.kron(left, d1), right, format='csr'))
        second_ops.append(sparse.kron(sparse.kron(left, d2), right, format='csr'))

    scalar_part = sum(second_ops[1:], second_ops[0])
    for axis, d1 in enumerate(first_ops):
        scalar_part = scalar_part - sparse.diags(np.asarray(w.dpsi[axis]).reshape(-1)) @ d1

    blocks = [[None] * space.n for _ in range(space.n)]
    for i in range(space.n):
        for j in range(space.n):
            coupling = -sparse.diags(np.asarray(w.d2psi[i, j]).reshape(-1))
            blocks[i][j] = scalar_part + coupling if i == j else coupling
    return sparse.bmat(blocks, format='csr')

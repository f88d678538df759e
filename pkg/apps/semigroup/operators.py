"""
加权生成元 L = Δ − ∇Ψ·∇ 与 carré du champ 算子

L 用守恒型有限体积格式离散：
    (Lf)_i = Σ_面 κ_f (f_j − f_i) / M_i,   M_i = e^{−Ψ_i}·vol_i,   κ_f = 面积·e^{−Ψ_f}/间距
其中面上的 Ψ_f 取两侧平均。这样 Σ_i M_i (Lf)_i = 0（质量守恒）且 L 在 L²(μ) 中严格对称。
周期方向上它就是二阶中心差分 f'' − Ψ'f' 的守恒形式；sphere_zonal 上是
(1/sinθ)∂_θ(sinθ ∂_θ f) 的有限体积形式，单元面积取精确值，两极面积为 0（闭合）。
"""
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import sparse

from apps.common.records import CheckRecord
from apps.geometry.curvature import CDParams, check_cd_feasible
from apps.geometry.spaces import KIND_SPHERE, ModelSpace
from apps.geometry.weights import WeightField
from apps.semigroup.fields import ScalarField


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """
    Attributes:
        matrix: 稀疏矩阵形式的 L（按 C 顺序展平节点）
        mass: 未归一化的节点质量 M_i
        faces: (i, j, κ) 面列表，用于 Dirichlet 形式
    """
    matrix: sparse.csr_matrix
    mass: np.ndarray
    faces: Tuple[np.ndarray, np.ndarray, np.ndarray]


def _face_list(space: ModelSpace, w: WeightField) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    psi = np.asarray(w.psi)
    shift = float(psi.min()) if psi.size else 0.0
    mass = np.exp(-(psi - shift)) * space.vol_weights

    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    conductance: List[np.ndarray] = []

    if space.kind == KIND_SPHERE:
        step = space.h[0]
        faces = np.asarray(space.faces)[1:-1]
        psi_face = 0.5 * (psi[:-1] + psi[1:])
        kappa = 2 * np.pi * np.sin(faces) * np.exp(-(psi_face - shift)) / step
        index = np.arange(space.size)
        rows.append(index[:-1])
        cols.append(index[1:])
        conductance.append(kappa)
    else:
        index = np.arange(space.size).reshape(space.shape)
        for axis, step in enumerate(space.h):
            neighbor = np.roll(index, -1, axis=axis)
            psi_face = 0.5 * (psi + np.roll(psi, -1, axis=axis))
            face_area = space.vol_weights / step
            kappa = face_area * np.exp(-(psi_face - shift)) / step
            rows.append(index.reshape(-1))
            cols.append(neighbor.reshape(-1))
            conductance.append(kappa.reshape(-1))

    return np.concatenate(rows), np.concatenate(cols), np.concatenate(conductance), mass.reshape(-1)


def generator_matrix(space: ModelSpace, w: WeightField) -> GeneratorMatrix:
    """构造守恒型有限体积生成元（稀疏）"""
    w.check_space(space)
    rows, cols, kappa, mass = _face_list(space, w)
    size = space.size

    outflow = np.bincount(rows, weights=kappa, minlength=size) + np.bincount(cols, weights=kappa, minlength=size)
    data = np.concatenate([kappa / mass[rows], kappa / mass[cols], -outflow / mass])
    r = np.concatenate([rows, cols, np.arange(size)])
    c = np.concatenate([cols, rows, np.arange(size)])
    matrix = sparse.coo_matrix((data, (r, c)), shape=(size, size)).tocsr()
    return GeneratorMatrix(matrix=matrix, mass=mass, faces=(rows, cols, kappa))


def _apply(op: GeneratorMatrix, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return (op.matrix @ values.reshape(-1)).reshape(values.shape)


def apply_generator(f: ScalarField, space: ModelSpace, w: WeightField) -> ScalarField:
    """Lf = Δf − ∇Ψ·∇f"""
    f.check_space(space)
    return ScalarField(values=_apply(generator_matrix(space, w), f.values), space=space)


def central_gradient(values: np.ndarray, space: ModelSpace) -> np.ndarray:
    """
    二阶中心差分梯度，正交标架分量，形状 (n, *shape)

    sphere_zonal 上 θ 分量在两极用偶反射虚节点，φ 分量恒为 0。
    """
    values = np.asarray(values, dtype=float)
    grad = np.zeros((space.n,) + values.shape)
    if space.kind == KIND_SPHERE:
        padded = np.pad(values, 1, mode='symmetric')
        grad[0] = (padded[2:] - padded[:-2]) / (2 * space.h[0])
        return grad
    for axis, step in enumerate(space.h):
        grad[axis] = (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2 * step)
    return grad


def _gamma_values(f: np.ndarray, g: np.ndarray, space: ModelSpace) -> np.ndarray:
    return np.sum(central_gradient(f, space) * central_gradient(g, space), axis=0)


def gamma(f: ScalarField, g: ScalarField, space: ModelSpace, w: WeightField) -> ScalarField:
    """Γ(f, g) = ∇f·∇g"""
    f.check_space(space)
    g.check_space(space)
    return ScalarField(values=_gamma_values(f.values, g.values, space), space=space)


def _gamma2_values(f: np.ndarray, space: ModelSpace, op: GeneratorMatrix) -> np.ndarray:
    lf = _apply(op, f)
    return 0.5 * (_apply(op, _gamma_values(f, f, space)) - 2 * _gamma_values(f, lf, space))


def gamma2(f: ScalarField, space: ModelSpace, w: WeightField) -> ScalarField:
    """Γ₂(f) = ½(LΓ(f) − 2Γ(f, Lf))，嵌套离散算子"""
    f.check_space(space)
    return ScalarField(values=_gamma2_values(f.values, space, generator_matrix(space, w)), space=space)


def dirichlet_form(f: np.ndarray, g: np.ndarray, space: ModelSpace, w: WeightField) -> float:
    """
    离散 Dirichlet 形式 E(f, g) = −∫ f Lg dμ = Σ_面 κ (f_j − f_i)(g_j − g_i) / Σ M
    """
    op = generator_matrix(space, w)
    rows, cols, kappa = op.faces
    f = np.asarray(f, dtype=float).reshape(-1)
    g = np.asarray(g, dtype=float).reshape(-1)
    return float(np.sum(kappa * (f[cols] - f[rows]) * (g[cols] - g[rows])) / op.mass.sum())


def check_gamma2_cd(
    f: ScalarField,
    g: ScalarField,
    b: float,
    cd: CDParams,
    space: ModelSpace,
    w: WeightField,
) -> CheckRecord:
    """
    Γ₂ 形式的 CD 不等式残差

    Γ₂(f) + 2bΓ(f,Γ(g)) + 4b²Γ(f)Γ(g) − (1/m)(Lf + 2bΓ(f,g))² − RΓ(f)，逐点应 ≥ −C·h²。
    residual 字段为最小值。
    """
    f.check_space(space)
    g.check_space(space)
    check_cd_feasible(cd, space, w)
    op = generator_matrix(space, w)
    fv, gv = f.values, g.values

    gamma_f = _gamma_values(fv, fv, space)
    gamma_g = _gamma_values(gv, gv, space)
    gamma_fg = _gamma_values(fv, gv, space)

    lhs = (
        _gamma2_values(fv, space, op)
        + 2 * b * _gamma_values(fv, gamma_g, space)
        + 4 * b ** 2 * gamma_f * gamma_g
    )
    inverse_m = 0.0 if cd.is_infinite_dimension else 1.0 / cd.m
    rhs = inverse_m * (_apply(op, fv) + 2 * b * gamma_fg) ** 2 + cd.R * gamma_f
    field = lhs - rhs

    return CheckRecord(
        name='gamma2_cd',
        grid=space.resolution,
        params={'kind': space.kind, 'b': b, 'R': cd.R, 'm': 'inf' if cd.is_infinite_dimension else cd.m},
        residual=float(field.min()),
        field=field,
    )

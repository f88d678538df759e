"""
模型空间 (ModelSpace)

支持三种紧致模型流形：
1. circle：单位圆周 S¹，n = 1
2. torus2：平坦环面 T² = S¹×S¹，n = 2
3. sphere_zonal：单位球面 S² 上的纬向（只依赖余纬度 θ）函数，n = 2

所有网格均匀；圆周/环面周期，球面余纬度网格为单元中心网格，两极闭合。
"""
import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from django.conf import settings

from apps.common.exceptions import ConfigurationError

KIND_CIRCLE = 'circle'
KIND_TORUS = 'torus2'
KIND_SPHERE = 'sphere_zonal'

SPACE_KINDS = (KIND_CIRCLE, KIND_TORUS, KIND_SPHERE)

# 各空间的解析体积，用于体积权重自检
ANALYTIC_VOLUME = {
    KIND_CIRCLE: 2 * math.pi,
    KIND_TORUS: 4 * math.pi ** 2,
    KIND_SPHERE: 4 * math.pi,
}

INTRINSIC_DIMENSION = {
    KIND_CIRCLE: 1,
    KIND_TORUS: 2,
    KIND_SPHERE: 2,
}

# 坐标符号名（表达式、CSV 列名共用）
COORDINATE_NAMES = {
    KIND_CIRCLE: ('theta',),
    KIND_TORUS: ('x', 'y'),
    KIND_SPHERE: ('theta',),
}


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=float)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class ModelSpace:
    """
    离散化的紧致模型流形

    Attributes:
        kind: 空间类型
        n: 内在维数
        resolution: 每个坐标轴的网格点数
        axes: 每个坐标轴上的节点坐标（弧度）
        grid: 节点坐标数组；circle/sphere_zonal 为 (N,)，torus2 为 (2, N1, N2)
        h: 每个坐标轴的网格间距
        vol_weights: 黎曼体积 dx 的求积权重，形状与节点场相同
        metric: 节点度量系数；sphere_zonal 为经向 sin²θ（已折叠进 vol_weights），其余为 1
        faces: sphere_zonal 的单元边界余纬度 θ_{j−½}（N+1 个），其余为 None
    """
    kind: str
    n: int
    resolution: Tuple[int, ...]
    axes: Tuple[np.ndarray, ...]
    grid: np.ndarray
    h: Tuple[float, ...]
    vol_weights: np.ndarray
    metric: np.ndarray
    faces: Union[np.ndarray, None] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.resolution

    @property
    def size(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def key(self) -> Tuple[str, Tuple[int, ...]]:
        return self.kind, self.resolution

    @property
    def h_min(self) -> float:
        return min(self.h)

    @property
    def is_periodic(self) -> bool:
        return self.kind in (KIND_CIRCLE, KIND_TORUS)

    @property
    def volume(self) -> float:
        return float(self.vol_weights.sum())

    @property
    def coordinate_names(self) -> Tuple[str, ...]:
        return COORDINATE_NAMES[self.kind]

    def coordinates(self) -> Tuple[np.ndarray, ...]:
        """按节点场形状广播后的坐标数组（theta，或 x, y）"""
        if self.kind == KIND_TORUS:
            return self.grid[0], self.grid[1]
        return (self.grid,)

    def same_grid(self, other: 'ModelSpace') -> bool:
        return other is self or (other.kind == self.kind and other.resolution == self.resolution)

    def describe(self) -> str:
        return f"{self.kind}[{'x'.join(str(r) for r in self.resolution)}]"


def _normalize_resolution(kind: str, resolution: Union[int, Sequence[int]]) -> Tuple[int, ...]:
    if isinstance(resolution, (int, np.integer)):
        values = [int(resolution)] * (2 if kind == KIND_TORUS else 1)
    else:
        values = [int(r) for r in resolution]
        if kind == KIND_TORUS and len(values) == 1:
            values = values * 2

    expected = 2 if kind == KIND_TORUS else 1
    if len(values) != expected:
        raise ConfigurationError(
            f'{kind} needs {expected} resolution value(s), got {len(values)}'
        )

    minimum = settings.LAB_MIN_RESOLUTION
    for value in values:
        if value < minimum:
            raise ConfigurationError(
                f'resolution {value} below minimum {minimum} per axis for {kind}'
            )
    return tuple(values)


def build_model_space(kind: str, resolution: Union[int, Sequence[int]]) -> ModelSpace:
    """
    构建模型空间

    Args:
        kind: 'circle' / 'torus2' / 'sphere_zonal'
        resolution: 每轴网格点数，int 或序列（torus2 可给两个值）

    Returns:
        ModelSpace
    """
    if kind not in SPACE_KINDS:
        raise ConfigurationError(f'unknown space kind: {kind!r}; expected one of {SPACE_KINDS}')

    res = _normalize_resolution(kind, resolution)

    if kind == KIND_CIRCLE:
        (count,) = res
        step = 2 * math.pi / count
        theta = step * np.arange(count)
        return ModelSpace(
            kind=kind,
            n=1,
            resolution=res,
            axes=(_frozen(theta),),
            grid=_frozen(theta),
            h=(step,),
            vol_weights=_frozen(np.full(count, step)),
            metric=_frozen(np.ones(count)),
        )

    if kind == KIND_TORUS:
        n1, n2 = res
        hx, hy = 2 * math.pi / n1, 2 * math.pi / n2
        x = hx * np.arange(n1)
        y = hy * np.arange(n2)
        xx, yy = np.meshgrid(x, y, indexing='ij')
        return ModelSpace(
            kind=kind,
            n=2,
            resolution=res,
            axes=(_frozen(x), _frozen(y)),
            grid=_frozen(np.stack([xx, yy])),
            h=(hx, hy),
            vol_weights=_frozen(np.full(res, hx * hy)),
            metric=_frozen(np.ones(res)),
        )

    # sphere_zonal: 单元中心 θ_j = (j+½)Δθ，单元面积取精确值 2π(cos θ_{j−½} − cos θ_{j+½})
    (count,) = res
    step = math.pi / count
    faces = step * np.arange(count + 1)
    faces[-1] = math.pi
    theta = 0.5 * (faces[:-1] + faces[1:])
    cos_faces = np.cos(faces)
    cos_faces[0], cos_faces[-1] = 1.0, -1.0
    areas = 2 * math.pi * (cos_faces[:-1] - cos_faces[1:])
    return ModelSpace(
        kind=kind,
        n=2,
        resolution=res,
        axes=(_frozen(theta),),
        grid=_frozen(theta),
        h=(step,),
        vol_weights=_frozen(areas),
        metric=_frozen(np.sin(theta) ** 2),
        faces=_frozen(faces),
    )

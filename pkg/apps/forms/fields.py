"""
1-形式场 (OneFormField) 与随机光滑测试场

模型空间的度量系数为单位阵（正交标架），对偶向量 ω* 与 ω 分量相同。
sphere_zonal 上只表示纬向 θ-形式，φ 分量必须为 0。
"""
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from apps.common.exceptions import InputError
from apps.geometry.expressions import DENSITY_FUNCTIONS, parse_closed_form
from apps.geometry.spaces import KIND_CIRCLE, KIND_SPHERE, KIND_TORUS, ModelSpace, _frozen
from apps.semigroup.fields import ScalarField
from apps.semigroup.io import read_node_table, write_node_table
from apps.semigroup.operators import central_gradient


@dataclass(frozen=True, eq=False)
class OneFormField:
    """
    Attributes:
        comps: 余向量分量，形状 (n, *shape)
        space: 模型空间
    """
    comps: np.ndarray
    space: ModelSpace

    def __post_init__(self):
        comps = np.asarray(self.comps, dtype=float)
        expected = (self.space.n,) + self.space.shape
        if comps.shape != expected:
            raise InputError(f'1-form has shape {comps.shape}, expected {expected}')
        if not np.all(np.isfinite(comps)):
            raise InputError('1-form contains non-finite values')
        if self.space.kind == KIND_SPHERE and np.any(comps[1]):
            raise InputError('only zonal theta-forms are represented on sphere_zonal')
        object.__setattr__(self, 'comps', _frozen(comps))

    @property
    def sq_norm(self) -> np.ndarray:
        """|ω|²"""
        return np.sum(self.comps ** 2, axis=0)

    def check_space(self, space: ModelSpace):
        if not self.space.same_grid(space):
            raise InputError(f'1-form lives on {self.space.describe()}, not {space.describe()}')

    def with_comps(self, comps: np.ndarray) -> 'OneFormField':
        return OneFormField(comps=comps, space=self.space)

    @classmethod
    def zero(cls, space: ModelSpace) -> 'OneFormField':
        return cls(comps=np.zeros((space.n,) + space.shape), space=space)


def exact_form(f: ScalarField) -> OneFormField:
    """df（中心差分）"""
    return OneFormField(comps=central_gradient(f.values, f.space), space=f.space)


def form_from_expression(
    space: ModelSpace,
    components: Sequence[str],
    params: Optional[Dict[str, float]] = None,
) -> OneFormField:
    """
    闭式 1-形式，例如 circle 上 ['cos(theta)'] 即 cosθ dθ
    """
    if len(components) > space.n:
        raise InputError(f'{space.kind} takes at most {space.n} components')
    comps = np.zeros((space.n,) + space.shape)
    for index, text in enumerate(components):
        closed = parse_closed_form(text, space.coordinate_names, params, functions=DENSITY_FUNCTIONS)
        comps[index] = closed.evaluate(*space.coordinates())
    return OneFormField(comps=comps, space=space)


@dataclass(frozen=True)
class FourierSeries:
    """
    截断 Fourier 级数，系数与分辨率无关，可在不同网格上采样做 h 加密研究

    terms: (频率向量, cos 系数, sin 系数) 列表
    """
    kind: str
    terms: Tuple[Tuple[Tuple[int, ...], float, float], ...] = field(default_factory=tuple)
    offset: float = 0.0

    @property
    def max_frequency(self) -> int:
        return max((max(abs(k) for k in freq) for freq, _, _ in self.terms), default=0)

    def sample(self, space: ModelSpace) -> np.ndarray:
        if space.kind != self.kind:
            raise InputError(f'series built for {self.kind}, not {space.kind}')
        cap = min(space.shape) // 8
        coords = space.coordinates()
        values = np.full(space.shape, self.offset)
        for freq, a, b in self.terms:
            if max(abs(k) for k in freq) > cap:
                continue
            phase = sum(k * c for k, c in zip(freq, coords))
            values = values + a * np.cos(phase) + b * np.sin(phase)
        return values


def random_series(
    kind: str,
    rng: np.random.Generator,
    max_freq: int = 3,
    amplitude: float = 1.0,
    offset: float = 0.0,
) -> FourierSeries:
    """系数 ~ N(0,1)·amplitude/(1+|k|)²"""
    if kind == KIND_CIRCLE:
        frequencies = [(k,) for k in range(max_freq + 1)]
    elif kind == KIND_TORUS:
        frequencies = [
            (kx, ky)
            for kx in range(max_freq + 1)
            for ky in range(-max_freq, max_freq + 1)
            if (kx, ky) != (0, 0) and not (kx == 0 and ky < 0)
        ]
        frequencies.insert(0, (0, 0))
    else:
        raise InputError(f'random Fourier fields are defined on circle and torus2, not {kind}')

    terms = []
    for freq in frequencies:
        decay = amplitude / (1.0 + math.hypot(*freq)) ** 2
        a, b = rng.standard_normal(2) * decay
        if all(k == 0 for k in freq):
            b = 0.0
        terms.append((freq, float(a), float(b)))
    return FourierSeries(kind=kind, terms=tuple(terms), offset=offset)


@dataclass(frozen=True)
class RandomFormSpec:
    """每个分量一条 Fourier 级数"""
    components: Tuple[FourierSeries, ...]

    def sample(self, space: ModelSpace) -> OneFormField:
        comps = np.stack([series.sample(space) for series in self.components])
        return OneFormField(comps=comps, space=space)


def random_form_spec(kind: str, rng: np.random.Generator, max_freq: int = 3) -> RandomFormSpec:
    count = 1 if kind == KIND_CIRCLE else 2
    return RandomFormSpec(components=tuple(random_series(kind, rng, max_freq) for _ in range(count)))


def random_smooth_form(space: ModelSpace, rng: np.random.Generator, max_freq: int = 3) -> OneFormField:
    return random_form_spec(space.kind, rng, max_freq).sample(space)


def random_smooth_scalar(space: ModelSpace, rng: np.random.Generator, max_freq: int = 3) -> ScalarField:
    return ScalarField(values=random_series(space.kind, rng, max_freq).sample(space), space=space)


_COMPONENT_COLUMNS = ('comp_1', 'comp_2')


def write_form_csv(omega: OneFormField, path: Union[str, Path]):
    count = 1 if omega.space.kind != KIND_TORUS else 2
    columns = {name: omega.comps[i] for i, name in enumerate(_COMPONENT_COLUMNS[:count])}
    write_node_table(path, omega.space, columns)


def read_form_csv(path: Union[str, Path], space: ModelSpace) -> OneFormField:
    count = 1 if space.kind != KIND_TORUS else 2
    names: List[str] = list(_COMPONENT_COLUMNS[:count])
    table = read_node_table(path, space, names)
    comps = np.zeros((space.n,) + space.shape)
    for i, name in enumerate(names):
        comps[i] = table[name]
    return OneFormField(comps=comps, space=space)

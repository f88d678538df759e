"""
实验配置

--config 指向的 JSON 文档，例如：

    {
      "space": {"kind": "circle", "resolution": 512},
      "psi": "0",
      "params": {},
      "m": 1, "R": 0.0,
      "f": "1 + 0.5*cos(theta)", "g": "1",
      "t_grid": {"start": 0.0, "stop": 1.0, "num": 10},
      "u_points": 33,
      "w2_method": "exact"
    }

psi 也可写成 {"form": "a*cos(theta)", "a": 0.1}，其中的参数并入 params（不允许重复）。
R 缺省时取 cd_best_R(space, Ψ, m)；t_grid 可以是列表或 {start, stop, num}。
"""
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from django.conf import settings

from apps.common.exceptions import ConfigurationError
from apps.geometry.curvature import CDParams, MeasureField, cd_best_R, measure_of, parse_dimension
from apps.geometry.spaces import SPACE_KINDS, ModelSpace, build_model_space
from apps.geometry.weights import WeightField, weight_from_expression
from apps.semigroup.evolution import SCHEME_AUTO, SCHEMES
from apps.semigroup.fields import DensityField, density_from_expression
from apps.transport.results import METHOD_EXACT, METHODS


def _time_grid(value: Any, what: str) -> Tuple[float, ...]:
    if value is None:
        return ()
    if isinstance(value, dict):
        try:
            grid = np.linspace(float(value['start']), float(value['stop']), int(value['num']))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f'{what} needs start, stop and num: {value!r}') from exc
        return tuple(float(t) for t in grid)
    if isinstance(value, (list, tuple)):
        try:
            return tuple(float(t) for t in value)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f'{what} must contain numbers: {value!r}') from exc
    raise ConfigurationError(f'{what} must be a list or {{start, stop, num}}, got {value!r}')


def _pair_grid(value: Any) -> Tuple[Tuple[float, float], ...]:
    if value is None:
        return ()
    try:
        pairs = tuple((float(s), float(t)) for s, t in value)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f'st_grid must be a list of [s, t] pairs: {value!r}') from exc
    return pairs


@dataclass(frozen=True)
class LabConfig:
    """
    Attributes:
        kind / resolution: 模型空间
        psi / params: Ψ 的闭式表达式及其参数（也用于 f、g）
        m / R: CD 参数，R 为 None 时取最优值
        f / g: 初始密度表达式
        t_grid / st_grid: 单时刻与两时刻网格
        extra: evolve / w2 / identities 等子命令的小节
    """
    kind: str
    resolution: Tuple[int, ...]
    psi: str = '0'
    params: Dict[str, float] = field(default_factory=dict)
    m: float = math.inf
    R: Optional[float] = None
    f: Optional[str] = None
    g: Optional[str] = None
    t_grid: Tuple[float, ...] = ()
    st_grid: Tuple[Tuple[float, float], ...] = ()
    u_points: int = 33
    w2_method: str = METHOD_EXACT
    scheme: str = SCHEME_AUTO
    dt: Optional[float] = None
    smoothing_eps: Optional[float] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def space(self) -> ModelSpace:
        return build_model_space(self.kind, self.resolution)

    def weight(self, space: Optional[ModelSpace] = None) -> WeightField:
        return weight_from_expression(space or self.space(), self.psi, self.params)

    def measure(self, space: ModelSpace, w: WeightField) -> MeasureField:
        return measure_of(space, w)

    def density(self, which: str, space: ModelSpace, measure: MeasureField) -> DensityField:
        form = getattr(self, which)
        if not form:
            raise ConfigurationError(f'config has no density {which!r}')
        return density_from_expression(space, measure, form, self.params)

    def cd(self, space: ModelSpace, w: WeightField, m: Optional[float] = None) -> CDParams:
        m = self.m if m is None else m
        best = cd_best_R(space, w, m)
        if self.R is None:
            return best
        return CDParams(R=float(self.R), m=best.m, witness_node=best.witness_node, n=space.n)

    def section(self, name: str) -> Dict[str, Any]:
        return dict(self.extra.get(name) or {})

    def to_dict(self) -> Dict[str, Any]:
        return {
            'space': {'kind': self.kind, 'resolution': list(self.resolution)},
            'psi': self.psi,
            'params': self.params,
            'm': 'inf' if math.isinf(self.m) else self.m,
            'R': self.R,
            'f': self.f,
            'g': self.g,
            't_grid': list(self.t_grid),
            'st_grid': [list(p) for p in self.st_grid],
            'u_points': self.u_points,
            'w2_method': self.w2_method,
            'scheme': self.scheme,
            'dt': self.dt,
            'smoothing_eps': self.smoothing_eps,
            **self.extra,
        }


def _number_map(value: Any, what: str) -> Dict[str, float]:
    if not isinstance(value, dict):
        raise ConfigurationError(f'"{what}" must be an object of numbers')
    try:
        return {str(k): float(v) for k, v in value.items()}
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f'"{what}" must map names to numbers: {value!r}') from exc


def _weight_form(value: Any) -> Tuple[str, Dict[str, float]]:
    """psi 可写成表达式字符串，或 {"form": "a*cos(theta)", "a": 0.1}"""
    if isinstance(value, dict):
        if not isinstance(value.get('form'), str):
            raise ConfigurationError('"psi" object needs a string "form"')
        inline = {k: v for k, v in value.items() if k != 'form'}
        return value['form'], _number_map(inline, 'psi')
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return repr(value), {}
    if not isinstance(value, str):
        raise ConfigurationError(f'"psi" must be an expression or an object with "form": {value!r}')
    return value, {}


_KNOWN_KEYS = {
    'space', 'psi', 'params', 'm', 'R', 'f', 'g', 't_grid', 'st_grid',
    'u_points', 'w2_method', 'scheme', 'dt', 'smoothing_eps',
}


def parse_config(data: Dict[str, Any]) -> LabConfig:
    if not isinstance(data, dict):
        raise ConfigurationError('config must be a JSON object')

    space = data.get('space')
    if not isinstance(space, dict) or 'kind' not in space:
        raise ConfigurationError('config needs "space": {"kind": ..., "resolution": ...}')
    kind = space['kind']
    if kind not in SPACE_KINDS:
        raise ConfigurationError(f'unknown space kind {kind!r}; expected one of {SPACE_KINDS}')
    resolution = space.get('resolution', 64)
    resolution = tuple(int(r) for r in (resolution if isinstance(resolution, (list, tuple)) else [resolution]))

    params = _number_map(data.get('params') or {}, 'params')
    psi, inline = _weight_form(data.get('psi', '0'))
    clash = sorted(set(inline) & set(params))
    if clash:
        raise ConfigurationError(f'parameters {clash} are set both in "psi" and in "params"')
    params = {**params, **inline}

    w2_method = data.get('w2_method', METHOD_EXACT)
    if w2_method not in METHODS:
        raise ConfigurationError(f'unknown w2 method {w2_method!r}; expected one of {METHODS}')
    scheme = data.get('scheme', SCHEME_AUTO)
    if scheme not in SCHEMES:
        raise ConfigurationError(f'unknown scheme {scheme!r}; expected one of {SCHEMES}')

    R = data.get('R')
    return LabConfig(
        kind=kind,
        resolution=resolution,
        psi=psi,
        params=params,
        m=parse_dimension(data.get('m', 'inf')),
        R=None if R is None else float(R),
        f=data.get('f'),
        g=data.get('g'),
        t_grid=_time_grid(data.get('t_grid'), 't_grid'),
        st_grid=_pair_grid(data.get('st_grid')),
        u_points=int(data.get('u_points', settings.LAB_U_POINTS)),
        w2_method=w2_method,
        scheme=scheme,
        dt=None if data.get('dt') is None else float(data['dt']),
        smoothing_eps=None if data.get('smoothing_eps') is None else float(data['smoothing_eps']),
        extra={k: v for k, v in data.items() if k not in _KNOWN_KEYS},
    )


def load_config(path: Union[str, Path]) -> LabConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except OSError as exc:
        raise ConfigurationError(f'cannot read config {path}: {exc}') from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f'{path} is not valid JSON: {exc}') from exc
    return parse_config(data)

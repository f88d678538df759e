"""
节点场 CSV 导入导出

列：node_index, 坐标列（theta 或 x, y）, 数值列（value 或 comp_1, comp_2）。
浮点数按 17 位有效数字写出，读回时逐位一致。
"""
from pathlib import Path
from typing import Dict, Sequence, Union

import numpy as np
import pandas as pd

from apps.common.exceptions import InputError
from apps.geometry.curvature import MeasureField
from apps.geometry.spaces import ModelSpace
from apps.semigroup.fields import DensityField, ScalarField

FLOAT_FORMAT = '%.17g'


def write_node_table(path: Union[str, Path], space: ModelSpace, columns: Dict[str, np.ndarray]):
    """把若干个节点场按 node_index 顺序写成 CSV"""
    path = Path(path)
    table = {'node_index': np.arange(space.size)}
    for name, coord in zip(space.coordinate_names, space.coordinates()):
        table[name] = np.asarray(coord).reshape(-1)
    for name, values in columns.items():
        table[name] = np.asarray(values, dtype=float).reshape(-1)

    try:
        pd.DataFrame(table).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    except OSError as exc:
        raise InputError(f'cannot write {path}: {exc}') from exc


def read_node_table(path: Union[str, Path], space: ModelSpace, value_columns: Sequence[str]) -> Dict[str, np.ndarray]:
    """读取 CSV 并校验节点下标与坐标和网格一致"""
    path = Path(path)
    try:
        df = pd.read_csv(path, float_precision='round_trip')
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InputError(f'cannot read {path}: {exc}') from exc

    required = ['node_index', *space.coordinate_names, *value_columns]
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise InputError(f'{path}: missing columns {missing}')
    if len(df) != space.size:
        raise InputError(f'{path}: {len(df)} rows, expected {space.size} nodes')

    df = df.sort_values('node_index')
    if not np.array_equal(df['node_index'].to_numpy(), np.arange(space.size)):
        raise InputError(f'{path}: node_index must enumerate 0..{space.size - 1}')

    for name, coord in zip(space.coordinate_names, space.coordinates()):
        if not np.allclose(df[name].to_numpy(), np.asarray(coord).reshape(-1), atol=1e-12, rtol=0):
            raise InputError(f'{path}: column {name} does not match the {space.describe()} grid')

    return {name: df[name].to_numpy(dtype=float).reshape(space.shape) for name in value_columns}


def write_scalar_csv(field: Union[ScalarField, DensityField], path: Union[str, Path]):
    write_node_table(path, field.space, {'value': field.values})


def read_scalar_csv(path: Union[str, Path], space: ModelSpace) -> ScalarField:
    values = read_node_table(path, space, ['value'])['value']
    return ScalarField(values=values, space=space)


def read_density_csv(path: Union[str, Path], space: ModelSpace, measure: MeasureField) -> DensityField:
    values = read_node_table(path, space, ['value'])['value']
    return DensityField(rho=values, space=space, measure=measure)

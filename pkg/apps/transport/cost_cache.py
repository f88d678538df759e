"""
代价矩阵缓存

文件名 <kind>_<resolution>.cost，文件头为魔数 + 版本号，之后是 np.save 格式的数组。
版本号与 settings.LAB_COST_CACHE['version'] 不一致或文件损坏时重新计算并覆盖。
"""
import logging
import math
import struct
from pathlib import Path
from typing import Callable, Dict, Tuple

import numpy as np
from django.conf import settings

from apps.common.exceptions import InputError

logger = logging.getLogger(__name__)

MAGIC = b'LABCOST\x00'
_HEADER = struct.Struct('<8sI')

# 进程内缓存，避免同一次运行中重复读盘
_memory: Dict[Tuple[str, Tuple[int, ...]], np.ndarray] = {}


def cache_path(kind: str, resolution: Tuple[int, ...]) -> Path:
    name = f"{kind}_{'x'.join(str(r) for r in resolution)}.cost"
    return Path(settings.LAB_COST_CACHE['dir']) / name


def write_cost(path: Path, cost: np.ndarray, version: int):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'wb') as handle:
            handle.write(_HEADER.pack(MAGIC, version))
            np.save(handle, np.ascontiguousarray(cost), allow_pickle=False)
    except OSError as exc:
        raise InputError(f'cannot write cost cache {path}: {exc}') from exc


def read_cost(path: Path, version: int):
    """读取缓存；文件不存在、魔数或版本不符时返回 None"""
    if not path.exists():
        return None
    try:
        with open(path, 'rb') as handle:
            header = handle.read(_HEADER.size)
            if len(header) != _HEADER.size:
                return None
            magic, found = _HEADER.unpack(header)
            if magic != MAGIC or found != version:
                logger.info('stale cost cache %s (version %s, expected %s)', path, found, version)
                return None
            return np.load(handle, allow_pickle=False)
    except (OSError, ValueError) as exc:
        logger.warning('unreadable cost cache %s: %s', path, exc)
        return None


def cached_cost(kind: str, resolution: Tuple[int, ...], builder: Callable[[], np.ndarray]) -> np.ndarray:
    """按 (kind, resolution) 取代价矩阵，必要时调用 builder 计算"""
    key = (kind, tuple(int(r) for r in resolution))
    if key in _memory:
        return _memory[key]

    config = settings.LAB_COST_CACHE
    cost = None
    path = cache_path(*key)
    if config['enabled']:
        cost = read_cost(path, config['version'])
    if cost is None:
        cost = builder()
        if config['enabled']:
            write_cost(path, cost, config['version'])
            logger.debug('cost cache written: %s %s', path, cost.shape)

    cost.setflags(write=False)
    _memory[key] = cost
    return cost


def clear_memory():
    _memory.clear()


def circle_cost(count: int) -> np.ndarray:
    """圆周等距节点之间的测地距离平方"""
    def build():
        theta = 2 * math.pi * np.arange(count) / count
        gap = np.abs(theta[:, None] - theta[None, :])
        gap = np.minimum(gap, 2 * math.pi - gap)
        return gap ** 2

    return cached_cost('circle', (count,), build)


def sphere_cost(theta: np.ndarray, longitudes: int) -> np.ndarray:
    """
    S² 上纬向节点 (θ_i, 0) 与 (θ_j, φ_l) 的测地距离平方，形状 (L, N, N)
    """
    def build():
        phi = 2 * math.pi * np.arange(longitudes) / longitudes
        cos_d = (
            np.cos(theta)[None, :, None] * np.cos(theta)[None, None, :]
            + np.sin(theta)[None, :, None] * np.sin(theta)[None, None, :] * np.cos(phi)[:, None, None]
        )
        return np.arccos(np.clip(cos_d, -1.0, 1.0)) ** 2

    return cached_cost('sphere_zonal', (theta.size, longitudes), build)

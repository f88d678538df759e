"""
检查结果记录

forms / semigroup 中所有 check_* 的残差都以 CheckRecord 输出，
JSON 结构为 {name, grid, params, residual, order_estimate}。
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np


@dataclass(frozen=True, eq=False)
class CheckRecord:
    name: str
    grid: Tuple[int, ...]
    params: Dict[str, Any]
    residual: float
    order_estimate: Optional[float] = None
    field: Optional[np.ndarray] = field(default=None, repr=False)

    def with_order(self, order: Optional[float]) -> 'CheckRecord':
        return CheckRecord(
            name=self.name,
            grid=self.grid,
            params=self.params,
            residual=self.residual,
            order_estimate=order,
            field=self.field,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'grid': list(self.grid),
            'params': self.params,
            'residual': float(self.residual),
            'order_estimate': None if self.order_estimate is None else float(self.order_estimate),
        }


def convergence_order(coarse: float, fine: float) -> Optional[float]:
    """
    h → h/2 时的收敛阶估计 log₂(coarse/fine)

    任一残差为 0（或非有限）时无法估计，返回 None。
    """
    coarse, fine = abs(coarse), abs(fine)
    if coarse == 0.0 or fine == 0.0 or not math.isfinite(coarse) or not math.isfinite(fine):
        return None
    return math.log2(coarse / fine)

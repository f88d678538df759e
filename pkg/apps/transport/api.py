"""
W₂ 求解器分派
"""
from typing import Any

from apps.common.exceptions import ConfigurationError
from apps.geometry.spaces import KIND_CIRCLE, KIND_SPHERE
from apps.semigroup.fields import DensityField
from apps.transport.circle import w2_circle_exact
from apps.transport.monotone import w2_monotone_1d, zonal_cross_check
from apps.transport.results import (
    METHOD_CIRCLE_EXACT,
    METHOD_EXACT,
    METHOD_MONOTONE_1D,
    METHOD_SINKHORN,
    METHODS,
    TransportResult,
)
from apps.transport.sinkhorn import w2_sinkhorn


def resolve_method(method: str, kind: str) -> str:
    """'exact' 按空间落到 circle_exact / monotone_1d，torus2 上只有 sinkhorn"""
    if method not in METHODS:
        raise ConfigurationError(f'unknown w2 method {method!r}; expected one of {METHODS}')
    if method == METHOD_EXACT:
        return {KIND_CIRCLE: METHOD_CIRCLE_EXACT, KIND_SPHERE: METHOD_MONOTONE_1D}.get(kind, METHOD_SINKHORN)
    if method == METHOD_CIRCLE_EXACT and kind != KIND_CIRCLE:
        raise ConfigurationError(f'circle_exact is not available on {kind}')
    if method == METHOD_MONOTONE_1D and kind != KIND_SPHERE:
        raise ConfigurationError(f'monotone_1d is not available on {kind}')
    return method


def w2_distance(
    rho0: DensityField,
    rho1: DensityField,
    method: str = METHOD_EXACT,
    cross_check: bool = False,
    **options: Any,
) -> TransportResult:
    """
    Args:
        method: exact / circle_exact / monotone_1d / sinkhorn
        cross_check: sphere_zonal 上顺带做纬向约化复核
        **options: 透传给 w2_sinkhorn（eps_schedule、max_iter 等）
    """
    resolved = resolve_method(method, rho0.space.kind)
    if resolved == METHOD_CIRCLE_EXACT:
        return w2_circle_exact(rho0, rho1)
    if resolved == METHOD_MONOTONE_1D:
        return zonal_cross_check(rho0, rho1) if cross_check else w2_monotone_1d(rho0, rho1)
    return w2_sinkhorn(rho0, rho1, **options)

"""
纬向球面上的单调重排

纬向测度之间沿经线耦合的代价就是余纬度的一维代价，而测地距离 d ≥ |θ − θ'|，
所以 S² 上的 W₂ 等于余纬度边缘的一维 W₂。这一约化由 zonal_cross_check
在粗 S² 网格上用 Sinkhorn 复核，复核通过前结果带 zonal_reduction='unverified' 标记。
"""
import logging
import math
from dataclasses import replace

import numpy as np
from django.conf import settings

from apps.common.exceptions import ConfigurationError, InputError
from apps.geometry.spaces import KIND_SPHERE
from apps.semigroup.fields import DensityField
from apps.transport.cost_cache import sphere_cost
from apps.transport.quantiles import CellCDF, canonical_pair, cell_cdf, check_pair, quantile_cost
from apps.transport.results import METHOD_MONOTONE_1D, TransportResult
from apps.transport.sinkhorn import ReducedSphereKernel, w2_sinkhorn_masses

logger = logging.getLogger(__name__)

ZONAL_UNVERIFIED = 'unverified'
ZONAL_VERIFIED = 'verified'


def _check_sphere(rho0: DensityField, rho1: DensityField):
    check_pair(rho0, rho1)
    if rho0.space.kind != KIND_SPHERE:
        raise InputError(f'monotone rearrangement needs sphere_zonal, got {rho0.space.kind}')
    for rho in (rho0, rho1):
        total = float(rho.masses.sum())
        if abs(total - 1.0) > 1e-8:
            raise InputError(f'zonal density is not normalized: total mass {total!r}')


def w2_monotone_1d(rho0: DensityField, rho1: DensityField) -> TransportResult:
    """余纬度单调重排，代价 |θ − θ'|²"""
    _check_sphere(rho0, rho1)
    first, second, _ = canonical_pair(rho0, rho1)
    cost = quantile_cost(cell_cdf(first), cell_cdf(second))
    w2 = math.sqrt(max(cost, 0.0))
    logger.debug('monotone W2 on %s: %.12g', rho0.space.describe(), w2)
    return TransportResult(
        w2=w2,
        method=METHOD_MONOTONE_1D,
        diagnostics={'zonal_reduction': ZONAL_UNVERIFIED},
    )


def coarse_masses(rho: DensityField, lat_resolution: int) -> np.ndarray:
    """把纬向单元质量合并到 lat_resolution 个等宽余纬度带"""
    count = rho.space.size
    if count % lat_resolution:
        raise ConfigurationError(
            f'sphere resolution {count} is not a multiple of the cross-check grid {lat_resolution}'
        )
    return rho.masses.reshape(lat_resolution, count // lat_resolution).sum(axis=1)


def zonal_cross_check(rho0: DensityField, rho1: DensityField) -> TransportResult:
    """
    用粗 S² 网格上的 Sinkhorn 复核纬向约化

    两边都在同一组粗化质量上计算：单调重排用粗单元模型，Sinkhorn 用提升到
    lon_resolution 个经度的 S² 格点和测地距离平方。两者差距在 tol 内时标记 verified。
    """
    _check_sphere(rho0, rho1)
    config = settings.LAB_ZONAL_CROSSCHECK
    lat, lon = int(config['lat_resolution']), int(config['lon_resolution'])

    fine = w2_monotone_1d(rho0, rho1)
    a, b = coarse_masses(rho0, lat), coarse_masses(rho1, lat)

    faces = math.pi * np.arange(lat + 1) / lat
    coarse_monotone = math.sqrt(max(quantile_cost(
        CellCDF(knots=faces, values=np.concatenate([[0.0], np.cumsum(a)]) / a.sum()),
        CellCDF(knots=faces, values=np.concatenate([[0.0], np.cumsum(b)]) / b.sum()),
    ), 0.0))

    centres = 0.5 * (faces[:-1] + faces[1:])
    kernel = ReducedSphereKernel(sphere_cost(centres, lon), (lat,))
    oracle = w2_sinkhorn_masses(a / a.sum(), b / b.sum(), kernel)

    gap = abs(coarse_monotone - oracle.w2)
    verified = gap <= config['tol']
    if verified:
        logger.info('zonal reduction verified: monotone %.6f vs sinkhorn %.6f', coarse_monotone, oracle.w2)
    else:
        logger.warning(
            'zonal reduction not verified: monotone %.6f vs sinkhorn %.6f (gap %.3e > %.1e)',
            coarse_monotone, oracle.w2, gap, config['tol'],
        )

    diagnostics = dict(fine.diagnostics)
    diagnostics.update({
        'zonal_reduction': ZONAL_VERIFIED if verified else ZONAL_UNVERIFIED,
        'cross_check': {
            'grid': [lat, lon],
            'monotone_w2': coarse_monotone,
            'sinkhorn_w2': oracle.w2,
            'gap': gap,
            'tol': config['tol'],
        },
    })
    return replace(fine, diagnostics=diagnostics)

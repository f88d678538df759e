"""
收缩不等式的端到端验证

- run_main_contraction: 维数版本
      W₂²(P_tf, P_tg) ≤ e^{−2Rt}W₂²(f, g) − (2/m)∫₀ᵗ e^{−2R(t−u)}[Ent(P_ug) − Ent(P_uf)]² du
- run_vrs_limit: m = ∞ 的极限 W₂²(P_tf, P_tg) ≤ e^{−2Rt}W₂²(f, g)
- run_simple_two_time: 非负曲率下 W₂²(P_sf, P_tg) ≤ W₂²(f, g) + 2n(√s − √t)²
- run_eks_bound: s_{R/n}(½W₂(P_tf, P_sg))² ≤ e^{−R(t+s)}s_{R/n}(½W₂(f, g))²
                 + (n/R)(1 − e^{−R(s+t)})(√t − √s)²/(2(t+s))
"""
import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings
from scipy.integrate import trapezoid

from apps.common.exceptions import (
    ConfigurationError,
    DomainError,
    InputError,
    PreconditionError,
    UnsupportedSpaceError,
)
from apps.geometry.curvature import CDParams, cd_best_R, check_cd_feasible
from apps.harness.reports import (
    REPORT_EKS,
    REPORT_MAIN,
    REPORT_SIMPLE,
    REPORT_VRS,
    InequalityReport,
    ReportRow,
    build_report,
)
from apps.harness.tolerance import tolerance_for
from apps.semigroup.entropy import entropy
from apps.semigroup.evolution import SCHEME_AUTO, evolve_at_times, resolve_scheme, smooth_density
from apps.semigroup.fields import DensityField
from apps.transport.api import w2_distance
from apps.transport.results import METHOD_EXACT

logger = logging.getLogger(__name__)

EKS_ORIGIN_NOTE = (
    'eks: the second term at s + t = 0 is taken as its limit 0; '
    'for R = 0 it is n(sqrt(t) - sqrt(s))^2 / 2'
)


def _check_pair(f: DensityField, g: DensityField):
    if not f.same_reference(g):
        raise InputError('f and g must live on the same grid with the same reference measure')


def _check_times(times: Sequence[float], what: str) -> List[float]:
    values = [float(t) for t in times]
    if not values:
        raise ConfigurationError(f'{what} must not be empty')
    if any(not math.isfinite(t) or t < 0 for t in values):
        raise DomainError(f'{what} must be nonnegative, got {values}')
    return values


def _base_params(f: DensityField, cd: Optional[CDParams], w2_method: str, scheme: str, eps: float) -> Dict[str, Any]:
    space = f.space
    w = f.measure.weight
    params: Dict[str, Any] = {
        'space': space.kind,
        'resolution': list(space.resolution),
        'psi': w.descriptor,
        'w2_method': w2_method,
        'scheme': resolve_scheme(scheme, w),
        'smoothing_eps': eps,
    }
    if cd is not None:
        params.update({'R': float(cd.R), 'm': cd.to_dict()['m']})
    return params


def _smooth_pair(f: DensityField, g: DensityField, eps: Optional[float]):
    eps = settings.LAB_SMOOTHING_EPSILON if eps is None else float(eps)
    space, w = f.space, f.measure.weight
    return smooth_density(f, space, w, eps), smooth_density(g, space, w, eps), eps


def _w2_squared(rho0: DensityField, rho1: DensityField, method: str) -> float:
    return w2_distance(rho0, rho1, method=method).w2 ** 2


def _clamp_notes(fields: Sequence[DensityField]) -> List[str]:
    clamped = max((rho.clamped for rho in fields), default=0.0)
    if clamped > 0:
        return [f'densities clamped at floor along the trajectory (max {clamped:.3e})']
    return []


def _contraction(
    name: str,
    f: DensityField,
    g: DensityField,
    cd: CDParams,
    t_grid: Sequence[float],
    u_points: int,
    w2_method: str,
    scheme: str,
    smoothing_eps: Optional[float],
    dimensional: bool,
) -> InequalityReport:
    _check_pair(f, g)
    space, w = f.space, f.measure.weight
    check_cd_feasible(cd, space, w)
    t_grid = sorted(set(_check_times(t_grid, 't_grid')))
    u_points = int(u_points)
    if u_points < 2:
        raise ConfigurationError(f'u_points must be at least 2, got {u_points}')

    f, g, eps = _smooth_pair(f, g, smoothing_eps)

    # 每个 t 的 u 网格 linspace(0, t, u_points) 与 t_grid 合并后一次性增量推进
    u_grids = {t: np.linspace(0.0, t, u_points) for t in t_grid}
    times = sorted(set(t_grid).union(*(grid.tolist() for grid in u_grids.values())))
    f_traj = dict(zip(times, evolve_at_times(f, times, space, w, scheme)))
    g_traj = dict(zip(times, evolve_at_times(g, times, space, w, scheme)))
    ent_f = {t: entropy(rho) for t, rho in f_traj.items()}
    ent_g = {t: entropy(rho) for t, rho in g_traj.items()}

    w0_sq = _w2_squared(f, g, w2_method)
    inverse_m = 0.0 if cd.is_infinite_dimension else 1.0 / cd.m
    rows = []
    for t in t_grid:
        lhs = w0_sq if t == 0 else _w2_squared(f_traj[t], g_traj[t], w2_method)
        dim_term = 0.0
        if dimensional and t > 0 and inverse_m > 0:
            u = u_grids[t]
            gap = np.array([ent_g[v] - ent_f[v] for v in u.tolist()])
            dim_term = 2 * inverse_m * float(trapezoid(np.exp(-2 * cd.R * (t - u)) * gap ** 2, x=u))
        rhs = math.exp(-2 * cd.R * t) * w0_sq - dim_term
        rows.append(ReportRow(
            t=t,
            lhs=lhs,
            rhs=rhs,
            deficit=rhs - lhs,
            dim_term=dim_term if dimensional else None,
            ent_f=ent_f[t],
            ent_g=ent_g[t],
            w2_t=math.sqrt(lhs),
        ))

    params = _base_params(f, cd, w2_method, scheme, eps)
    params.update({'t_grid': t_grid, 'u_points': u_points, 'w2_initial': math.sqrt(w0_sq)})
    tolerance = tolerance_for(space, None, u_points if dimensional else None, w2_method)
    return build_report(
        name,
        params,
        rows,
        tolerance,
        notes=_clamp_notes(list(f_traj.values()) + list(g_traj.values())),
        trajectories={
            'u': times,
            'ent_f': [ent_f[t] for t in times],
            'ent_g': [ent_g[t] for t in times],
        },
    )


def run_main_contraction(
    f: DensityField,
    g: DensityField,
    cd: CDParams,
    t_grid: Sequence[float],
    u_points: Optional[int] = None,
    w2_method: str = METHOD_EXACT,
    scheme: str = SCHEME_AUTO,
    smoothing_eps: Optional[float] = None,
) -> InequalityReport:
    """维数收缩不等式；cd 必须在 (space, Ψ) 上可行"""
    u_points = settings.LAB_U_POINTS if u_points is None else u_points
    return _contraction(REPORT_MAIN, f, g, cd, t_grid, u_points, w2_method, scheme, smoothing_eps, True)


def run_vrs_limit(
    f: DensityField,
    g: DensityField,
    cd: CDParams,
    t_grid: Sequence[float],
    w2_method: str = METHOD_EXACT,
    scheme: str = SCHEME_AUTO,
    smoothing_eps: Optional[float] = None,
) -> InequalityReport:
    """m = ∞ 的指数收缩（dim_term ≡ 0）"""
    if not cd.is_infinite_dimension:
        raise ConfigurationError(f'run_vrs_limit needs m = inf, got m = {cd.m}')
    return _contraction(REPORT_VRS, f, g, cd, t_grid, 2, w2_method, scheme, smoothing_eps, False)


def _two_time_grid(st_grid: Sequence[Tuple[float, float]]) -> List[Tuple[float, float]]:
    pairs = [(float(s), float(t)) for s, t in st_grid]
    if not pairs:
        raise ConfigurationError('(s, t) grid must not be empty')
    _check_times([v for pair in pairs for v in pair], '(s, t) grid')
    return pairs


def _two_time_trajectories(f, g, pairs, scheme):
    space, w = f.space, f.measure.weight
    times = sorted({v for pair in pairs for v in pair})
    f_traj = dict(zip(times, evolve_at_times(f, times, space, w, scheme)))
    g_traj = dict(zip(times, evolve_at_times(g, times, space, w, scheme)))
    return f_traj, g_traj


def run_simple_two_time(
    f: DensityField,
    g: DensityField,
    st_grid: Sequence[Tuple[float, float]],
    w2_method: str = METHOD_EXACT,
    scheme: str = SCHEME_AUTO,
    smoothing_eps: Optional[float] = None,
) -> InequalityReport:
    """
    W₂²(P_sf, P_tg) ≤ W₂²(f, g) + 2n(√s − √t)²

    要求 Bakry–Émery Ricci 下界 R ≥ 0（Ψ = 0 时即 m = n 的最优 R）。
    """
    _check_pair(f, g)
    space, w = f.space, f.measure.weight
    cd = cd_best_R(space, w, space.n if w.is_zero else 'inf')
    if cd.R < 0:
        raise PreconditionError(f'two-time bound needs nonnegative curvature, best R = {cd.R:.6g}')
    pairs = _two_time_grid(st_grid)

    f, g, eps = _smooth_pair(f, g, smoothing_eps)
    f_traj, g_traj = _two_time_trajectories(f, g, pairs, scheme)
    w0_sq = _w2_squared(f, g, w2_method)

    rows = []
    for s, t in pairs:
        lhs = _w2_squared(f_traj[s], g_traj[t], w2_method)
        rhs = w0_sq + 2 * space.n * (math.sqrt(s) - math.sqrt(t)) ** 2
        rows.append(ReportRow(t=t, s=s, lhs=lhs, rhs=rhs, deficit=rhs - lhs, w2_t=math.sqrt(lhs)))

    params = _base_params(f, cd, w2_method, scheme, eps)
    params.update({'n': space.n, 'st_grid': [list(p) for p in pairs], 'w2_initial': math.sqrt(w0_sq)})
    return build_report(REPORT_SIMPLE, params, rows, tolerance_for(space, None, None, w2_method))


def s_r(r: float, x: float) -> float:
    """sin(√r x)/√r（r > 0），sinh(√−r x)/√−r（r < 0），x（r = 0）"""
    if r > 0:
        root = math.sqrt(r)
        return math.sin(root * x) / root
    if r < 0:
        root = math.sqrt(-r)
        return math.sinh(root * x) / root
    return x


def eks_time_term(R: float, n: int, s: float, t: float) -> float:
    """(n/R)(1 − e^{−R(s+t)})(√t − √s)²/(2(t+s))，R → 0 与 s + t → 0 取极限"""
    total = s + t
    if total == 0:
        return 0.0
    spread = (math.sqrt(t) - math.sqrt(s)) ** 2
    if R == 0:
        return n * spread / 2
    return (n / R) * (-math.expm1(-R * total)) * spread / (2 * total)


def run_eks_bound(
    f: DensityField,
    g: DensityField,
    st_grid: Sequence[Tuple[float, float]],
    cd: Optional[CDParams] = None,
    w2_method: str = METHOD_EXACT,
    scheme: str = SCHEME_AUTO,
    smoothing_eps: Optional[float] = None,
) -> InequalityReport:
    """
    EKS 两时刻界，维数参数取内在维数 n，只适用于 Ψ = 0

    行 (s, t) 的左侧为 s_{R/n}(½W₂(P_tf, P_sg))²。
    """
    _check_pair(f, g)
    space, w = f.space, f.measure.weight
    if not w.is_zero:
        raise UnsupportedSpaceError('the EKS bound uses m = n, which forces psi = 0')
    n = space.n
    if cd is None:
        cd = cd_best_R(space, w, n)
    check_cd_feasible(CDParams(R=cd.R, m=n, n=n), space, w)
    pairs = _two_time_grid(st_grid)

    f, g, eps = _smooth_pair(f, g, smoothing_eps)
    f_traj, g_traj = _two_time_trajectories(f, g, pairs, scheme)
    w0 = math.sqrt(_w2_squared(f, g, w2_method))
    r = cd.R / n
    initial = s_r(r, 0.5 * w0) ** 2

    rows = []
    for s, t in pairs:
        w_st = math.sqrt(_w2_squared(f_traj[t], g_traj[s], w2_method))
        lhs = s_r(r, 0.5 * w_st) ** 2
        rhs = math.exp(-cd.R * (t + s)) * initial + eks_time_term(cd.R, n, s, t)
        rows.append(ReportRow(t=t, s=s, lhs=lhs, rhs=rhs, deficit=rhs - lhs, w2_t=w_st))

    params = _base_params(f, cd, w2_method, scheme, eps)
    params.update({'n': n, 'R': float(cd.R), 'm': n, 'st_grid': [list(p) for p in pairs], 'w2_initial': w0})
    # ¼ 的缩放使左右两侧比 W₂² 小 4 倍，容差同比缩小
    tolerance = tolerance_for(space, None, None, w2_method) / 4
    return build_report(REPORT_EKS, params, rows, tolerance, notes=[EKS_ORIGIN_NOTE])


def run_time_consistency(
    f: DensityField,
    g: DensityField,
    cd: CDParams,
    t0: float,
    t_grid: Sequence[float],
    u_points: Optional[int] = None,
    w2_method: str = METHOD_EXACT,
    scheme: str = SCHEME_AUTO,
    smoothing_eps: Optional[float] = None,
) -> Dict[str, Any]:
    """
    从 (P_{t0}f, P_{t0}g) 重新起跑维数不等式，与原运行在 [t0, t] 上的尾段比较

    两次运行的 lhs 由半群性质应一致；两者的 deficit 都应 ≥ −tol。

    Returns:
        {'original', 'restarted', 'lhs_gap', 'tolerance', 'consistent'}
    """
    _check_pair(f, g)
    t0 = float(t0)
    tail = sorted(set(_check_times(t_grid, 't_grid')))
    if any(t < t0 for t in tail):
        raise DomainError(f't_grid must lie in [t0, ∞) with t0 = {t0}')

    space, w = f.space, f.measure.weight
    f_s, g_s, eps = _smooth_pair(f, g, smoothing_eps)
    original = run_main_contraction(f_s, g_s, cd, sorted({t0, *tail}), u_points, w2_method, scheme, 0.0)
    f0, g0 = evolve_at_times(f_s, [t0], space, w, scheme)[0], evolve_at_times(g_s, [t0], space, w, scheme)[0]
    restarted = run_main_contraction(f0, g0, cd, [t - t0 for t in tail], u_points, w2_method, scheme, 0.0)

    by_time = {row.t: row for row in original.rows}
    gap = max(abs(by_time[t].lhs - row.lhs) for t, row in zip(tail, restarted.rows))
    tolerance = max(original.summary['tolerance'], restarted.summary['tolerance'])
    worst = min(original.summary['min_deficit'], restarted.summary['min_deficit'])
    consistent = gap <= tolerance and worst >= -tolerance
    logger.info('time consistency from t0=%s: lhs gap %.3e, consistent=%s', t0, gap, consistent)
    return {
        'original': original,
        'restarted': restarted,
        'lhs_gap': gap,
        'tolerance': tolerance,
        'consistent': consistent,
        'smoothing_eps': eps,
    }

"""
1-形式恒等式与强制性估计的数值检查

每个检查都返回 CheckRecord：
- 恒等式（交换性、加细 BLW、三个引理、分部积分、Hodge 对称）给出 sup 残差，应按 h² 收敛；
- 不等式（强制推论、强制半群估计）给出最小 slack / deficit，应 ≥ −C·h²。
"""
import logging
from typing import Dict, Optional, Sequence

import numpy as np
from django.conf import settings
from scipy.integrate import trapezoid

from apps.common.exceptions import DomainError, InputError
from apps.common.records import CheckRecord
from apps.forms.fields import OneFormField
from apps.forms.hodge import HodgePropagator
from apps.forms.operators import (
    _hodge_values,
    covariant_derivative,
    delta_psi,
    require_flat,
    second_difference,
)
from apps.geometry.curvature import CDParams, check_cd_feasible, measure_of
from apps.geometry.spaces import ModelSpace
from apps.geometry.weights import WeightField
from apps.semigroup.evolution import SCHEME_AUTO, HeatPropagator
from apps.semigroup.fields import ScalarField
from apps.semigroup.operators import _apply, central_gradient, generator_matrix

logger = logging.getLogger(__name__)


def _record(name: str, space: ModelSpace, params: Dict, field: np.ndarray, reduce: str = 'sup') -> CheckRecord:
    if reduce == 'sup':
        residual = float(np.max(np.abs(field))) if field.size else 0.0
    else:
        residual = float(np.min(field)) if field.size else 0.0
    return CheckRecord(
        name=name,
        grid=space.resolution,
        params={'kind': space.kind, **params},
        residual=residual,
        field=field,
    )


def _inverse_m(cd: CDParams) -> float:
    return 0.0 if cd.is_infinite_dimension else 1.0 / cd.m


def check_commutation(
    omega: OneFormField,
    t: float,
    space: ModelSpace,
    w: WeightField,
    scheme: str = SCHEME_AUTO,
    dt: Optional[float] = None,
) -> CheckRecord:
    """sup |P_t δ_Ψω − δ_Ψ R_t ω|"""
    omega.check_space(space)
    if t < 0:
        raise DomainError(f'time must be nonnegative, got {t}')

    heat = HeatPropagator(space, w, scheme, dt)
    hodge = HodgePropagator(space, w, scheme, dt)
    left = heat.advance(delta_psi(omega, space, w).values, t)
    evolved = omega.with_comps(hodge.advance(omega.comps, t))
    right = delta_psi(evolved, space, w).values
    return _record('commutation', space, {'t': t, 'scheme': heat.scheme}, left - right)


def _blw_sides(eta: OneFormField, alpha: OneFormField, b: float, space: ModelSpace, w: WeightField):
    """加细 BLW 左侧 L(|η|²/2) − η·L⃗η + 2bα·d|η|² + 4b²|α|²|η|²，以及其中的 |η|²"""
    op = generator_matrix(space, w)
    norm_eta = eta.sq_norm
    norm_alpha = alpha.sq_norm
    hodge_eta = _hodge_values(eta.comps, space, w)
    grad_norm = central_gradient(norm_eta, space)

    lhs = (
        _apply(op, 0.5 * norm_eta)
        - np.sum(eta.comps * hodge_eta, axis=0)
        + 2 * b * np.sum(alpha.comps * grad_norm, axis=0)
        + 4 * b ** 2 * norm_alpha * norm_eta
    )
    return lhs, norm_eta


def check_refined_blw(
    eta: OneFormField,
    alpha: OneFormField,
    b: float,
    space: ModelSpace,
    w: WeightField,
) -> CheckRecord:
    """
    加细 Bochner–Lichnerowicz–Weitzenböck 公式的逐点残差

    L(|η|²/2) − η·L⃗η + 2bα·d|η|² + 4b²|α|²|η|² = |∇η + 2b α⊗η|² + Ricci(L)(η*, η*)
    """
    require_flat(space, 'refined BLW check')
    eta.check_space(space)
    alpha.check_space(space)

    lhs, _ = _blw_sides(eta, alpha, b, space, w)
    nabla = covariant_derivative(eta)
    coupled = nabla + 2 * b * alpha.comps[:, None] * eta.comps[None, :]
    ricci = np.einsum('ij...,i...,j...->...', w.d2psi, eta.comps, eta.comps)
    rhs = np.sum(coupled ** 2, axis=(0, 1)) + ricci
    return _record('refined_blw', space, {'b': b}, lhs - rhs)


def check_form_identities(
    eta: OneFormField,
    alpha: OneFormField,
    f: ScalarField,
    space: ModelSpace,
    w: WeightField,
) -> Dict[str, CheckRecord]:
    """
    三个引理的 sup 残差：
    - norm_gradient:  d(|η|²/2)_k = η^i ∇_kη_i
    - product_rule:   d(η·α) = ∇η·α + ∇α·η
    - diffusion:      Δ⃗(fω) = fΔ⃗ω + ωΔf + 2∇_{∇f}ω（ω 取 alpha）
    """
    require_flat(space, 'form identity checks')
    eta.check_space(space)
    alpha.check_space(space)
    f.check_space(space)

    nabla_eta = covariant_derivative(eta)
    nabla_alpha = covariant_derivative(alpha)

    lemma_norm = central_gradient(0.5 * eta.sq_norm, space) - np.sum(eta.comps[None] * nabla_eta, axis=1)

    pairing = np.sum(eta.comps * alpha.comps, axis=0)
    lemma_product = central_gradient(pairing, space) - (
        np.sum(nabla_eta * alpha.comps[None], axis=1) + np.sum(nabla_alpha * eta.comps[None], axis=1)
    )

    fv = f.values
    grad_f = central_gradient(fv, space)
    product = fv[None] * alpha.comps
    lap = np.stack([second_difference(c, space) for c in product])
    expected = (
        fv[None] * np.stack([second_difference(c, space) for c in alpha.comps])
        + alpha.comps * second_difference(fv, space)[None]
        + 2 * np.einsum('k...,ki...->i...', grad_f, nabla_alpha)
    )
    lemma_diffusion = lap - expected

    return {
        'norm_gradient': _record('lemma_norm_gradient', space, {}, lemma_norm),
        'product_rule': _record('lemma_product_rule', space, {}, lemma_product),
        'diffusion': _record('lemma_diffusion', space, {}, lemma_diffusion),
    }


def check_coercive_corollary(
    eta: OneFormField,
    alpha: OneFormField,
    b: float,
    cd: CDParams,
    space: ModelSpace,
    w: WeightField,
) -> CheckRecord:
    """
    强制推论的逐点 slack：
    L(|η|²/2) − η·L⃗η + 2bα·d|η|² + 4b²|α|²|η|² − (1/m)(δ_Ψη + 2bα·η)² − R|η|²

    residual 为最小 slack，应 ≥ −C·h²。
    """
    require_flat(space, 'coercive corollary')
    eta.check_space(space)
    alpha.check_space(space)
    check_cd_feasible(cd, space, w)

    lhs, norm_eta = _blw_sides(eta, alpha, b, space, w)
    divergence = delta_psi(eta, space, w).values
    pairing = np.sum(alpha.comps * eta.comps, axis=0)
    rhs = _inverse_m(cd) * (divergence + 2 * b * pairing) ** 2 + cd.R * norm_eta
    return _record(
        'coercive_corollary', space,
        {'b': b, 'R': cd.R, 'm': 'inf' if cd.is_infinite_dimension else cd.m},
        lhs - rhs, reduce='min',
    )


def check_log_gradient_corollary(
    eta: OneFormField,
    G: ScalarField,
    cd: CDParams,
    space: ModelSpace,
    w: WeightField,
) -> CheckRecord:
    """强制推论取 α = d log G、b = −½（强制半群估计证明中使用的组合）"""
    G.check_space(space)
    if G.values.min() <= 0:
        raise InputError('G must be positive to form d log G')
    alpha = OneFormField(comps=central_gradient(G.values, space) / G.values[None], space=space)
    record = check_coercive_corollary(eta, alpha, -0.5, cd, space, w)
    return CheckRecord(
        name='log_gradient_corollary',
        grid=record.grid,
        params=record.params,
        residual=record.residual,
        field=record.field,
    )


def check_coercive_estimate(
    omega: OneFormField,
    g: ScalarField,
    t: float,
    u_grid: Sequence[float],
    cd: CDParams,
    space: ModelSpace,
    w: WeightField,
    scheme: str = SCHEME_AUTO,
) -> CheckRecord:
    """
    强制半群估计的逐点 deficit

    RHS = e^{−2Rt}P_t(|ω|²/g) − (2/m)∫₀ᵗ (e^{−2Ru}/P_tg)[P_tδ_Ψω − P_u(d(log P_{t−u}g)·R_{t−u}ω)]² du
    LHS = |R_tω|²/P_tg，deficit = RHS − LHS，u 积分在 u_grid 上用梯形公式。
    """
    require_flat(space, 'coercive estimate')
    omega.check_space(space)
    g.check_space(space)
    if t < 0:
        raise DomainError(f'time must be nonnegative, got {t}')
    if g.values.min() <= settings.LAB_DENSITY_FLOOR:
        raise InputError(f'g must stay positive, min = {g.values.min():.3e}')

    u_grid = np.asarray(sorted(float(u) for u in u_grid))
    if u_grid.size and (u_grid[0] < -1e-12 or u_grid[-1] > t + 1e-12):
        raise DomainError(f'u_grid must lie in [0, {t}]')
    u_grid = np.clip(u_grid, 0.0, t)
    check_cd_feasible(cd, space, w)

    heat = HeatPropagator(space, w, scheme)
    hodge = HodgePropagator(space, w, scheme)
    gv = g.values

    pt_g = heat.advance(gv, t)
    rt_omega = hodge.advance(omega.comps, t)
    lhs = np.sum(rt_omega ** 2, axis=0) / pt_g
    first = np.exp(-2 * cd.R * t) * heat.advance(omega.sq_norm / gv, t)
    pt_delta = heat.advance(delta_psi(omega, space, w).values, t)

    # P_{t−u}g 与 R_{t−u}ω 按滞后时间递增推进
    lags = sorted(set(float(t - u) for u in u_grid))
    g_lagged, omega_lagged = {}, {}
    g_now, omega_now, clock = gv, omega.comps, 0.0
    for lag in lags:
        g_now = heat.advance(g_now, lag - clock)
        omega_now = hodge.advance(omega_now, lag - clock)
        clock = lag
        g_lagged[lag], omega_lagged[lag] = g_now, omega_now

    integrand = np.zeros((u_grid.size,) + space.shape)
    for k, u in enumerate(u_grid):
        lag = float(t - u)
        G, eta = g_lagged[lag], omega_lagged[lag]
        transported = np.sum(central_gradient(G, space) * eta, axis=0) / G
        pushed = heat.advance(transported, float(u))
        integrand[k] = np.exp(-2 * cd.R * u) / pt_g * (pt_delta - pushed) ** 2

    integral = trapezoid(integrand, x=u_grid, axis=0) if u_grid.size > 1 else np.zeros(space.shape)
    rhs = first - 2 * _inverse_m(cd) * integral
    deficit = rhs - lhs

    logger.debug('coercive estimate on %s: t=%s min deficit %.3e', space.describe(), t, deficit.min())
    return _record(
        'coercive_estimate', space,
        {'t': t, 'u_points': int(u_grid.size), 'R': cd.R, 'm': 'inf' if cd.is_infinite_dimension else cd.m},
        deficit, reduce='min',
    )


def check_integration_by_parts(omega: OneFormField, f: ScalarField, space: ModelSpace, w: WeightField) -> CheckRecord:
    """|∫δ_Ψω·f dμ + ∫ω·df dμ|"""
    mu = measure_of(space, w).mu_weights
    left = np.sum(delta_psi(omega, space, w).values * f.values * mu)
    right = np.sum(np.sum(omega.comps * central_gradient(f.values, space), axis=0) * mu)
    return _record('integration_by_parts', space, {}, np.array([left + right]))


def check_hodge_symmetry(omega: OneFormField, eta: OneFormField, space: ModelSpace, w: WeightField) -> CheckRecord:
    """|∫ω·L⃗η dμ − ∫η·L⃗ω dμ|"""
    require_flat(space, 'hodge symmetry check')
    mu = measure_of(space, w).mu_weights
    left = np.sum(np.sum(omega.comps * _hodge_values(eta.comps, space, w), axis=0) * mu)
    right = np.sum(np.sum(eta.comps * _hodge_values(omega.comps, space, w), axis=0) * mu)
    return _record('hodge_symmetry', space, {}, np.array([left - right]))

"""
热半群 P_t

两种格式：
1. spectral：仅 Ψ ≡ 0。circle/torus2 用 FFT（连续谱符号 e^{−|k|²t}），
   sphere_zonal 用有限体积 Legendre 算子的离散本征分解（精确守恒、精确可逆）。
2. crank_nicolson：任意 Ψ，稀疏 LU 分解一次，固定步长
   dt = min(h²/2, t/⌈t/(h²/2)⌉)；出现负值时步长减半重算。
"""
import logging
import math
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from django.conf import settings
from scipy import fft, linalg, sparse
from scipy.sparse.linalg import splu

from apps.common.exceptions import ConfigurationError, DomainError
from apps.geometry.spaces import KIND_CIRCLE, KIND_SPHERE, KIND_TORUS, ModelSpace, build_model_space
from apps.geometry.weights import WeightField
from apps.semigroup.fields import DensityField, ScalarField, clamp_at_floor
from apps.semigroup.operators import generator_matrix

logger = logging.getLogger(__name__)

SCHEME_AUTO = 'auto'
SCHEME_SPECTRAL = 'spectral'
SCHEME_CRANK_NICOLSON = 'crank_nicolson'
SCHEMES = (SCHEME_AUTO, SCHEME_SPECTRAL, SCHEME_CRANK_NICOLSON)

Field = Union[DensityField, ScalarField]


def dt_max(space: ModelSpace) -> float:
    """Crank–Nicolson 的最大步长 h²/2"""
    return 0.5 * space.h_min ** 2


def resolve_scheme(scheme: str, w: WeightField) -> str:
    if scheme not in SCHEMES:
        raise ConfigurationError(f'unknown scheme {scheme!r}; expected one of {SCHEMES}')
    if scheme == SCHEME_AUTO:
        return SCHEME_SPECTRAL if w.is_zero else SCHEME_CRANK_NICOLSON
    if scheme == SCHEME_SPECTRAL and not w.is_zero:
        raise ConfigurationError('spectral scheme requires psi = 0')
    return scheme


def step_count(duration: float, cap: float) -> int:
    return max(1, math.ceil(duration / cap - 1e-9))


class CrankNicolsonStepper:
    """
    对线性系统 u' = A u 做 Crank–Nicolson 时间推进

    每个步长只做一次 LU 分解；同一个 stepper 可以在多段推进之间复用。
    """

    def __init__(self, matrix: sparse.spmatrix):
        self.matrix = sparse.csc_matrix(matrix)
        self.identity = sparse.identity(self.matrix.shape[0], format='csc')
        self._factors: Dict[float, Tuple[object, sparse.csr_matrix]] = {}

    def _factor(self, dt: float):
        if dt not in self._factors:
            half = 0.5 * dt * self.matrix
            lu = splu(sparse.csc_matrix(self.identity - half))
            explicit = sparse.csr_matrix(self.identity + half)
            self._factors[dt] = (lu, explicit)
        return self._factors[dt]

    def advance(self, vector: np.ndarray, duration: float, cap: float) -> np.ndarray:
        if duration <= 0:
            return np.array(vector, dtype=float)
        steps = step_count(duration, cap)
        dt = duration / steps
        lu, explicit = self._factor(dt)
        out = np.array(vector, dtype=float)
        for _ in range(steps):
            out = lu.solve(explicit @ out)
        return out


@lru_cache(maxsize=8)
def _sphere_eigenbasis(count: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Ψ = 0 时球面有限体积算子的对称化本征分解

    A = M^{−1/2} Q Λ Qᵀ M^{1/2}，返回 (Λ, Q, M^{1/2})。
    """
    space = build_model_space(KIND_SPHERE, count)
    op = generator_matrix(space, WeightField.zero(space))
    root = np.sqrt(op.mass)
    dense = op.matrix.toarray()
    symmetric = (root[:, None] * dense) / root[None, :]
    symmetric = 0.5 * (symmetric + symmetric.T)
    eigenvalues, basis = linalg.eigh(symmetric)
    return eigenvalues, basis, root


def spectral_advance(values: np.ndarray, duration: float, space: ModelSpace) -> np.ndarray:
    """Ψ = 0 时的精确（谱）热流，values 末尾维度为节点维度"""
    values = np.asarray(values, dtype=float)
    if duration <= 0:
        return values.copy()

    if space.kind == KIND_CIRCLE:
        (count,) = space.shape
        k = np.arange(count // 2 + 1)
        return fft.irfft(fft.rfft(values, axis=-1) * np.exp(-k ** 2 * duration), n=count, axis=-1)

    if space.kind == KIND_TORUS:
        n1, n2 = space.shape
        kx = fft.fftfreq(n1, d=1.0 / n1)
        ky = np.arange(n2 // 2 + 1)
        symbol = np.exp(-(kx[:, None] ** 2 + ky[None, :] ** 2) * duration)
        spectrum = fft.rfftn(values, axes=(-2, -1))
        return fft.irfftn(spectrum * symbol, s=(n1, n2), axes=(-2, -1))

    eigenvalues, basis, root = _sphere_eigenbasis(space.shape[0])
    rows = np.atleast_2d(values)
    coefficients = (root * rows) @ basis
    evolved = (coefficients * np.exp(eigenvalues * duration)) @ basis.T / root
    return evolved.reshape(values.shape)


class HeatPropagator:
    """
    在同一 (space, Ψ, scheme) 上做多段热流推进的辅助对象

    CN 格式下的 LU 分解在各段之间共享。
    """

    def __init__(self, space: ModelSpace, w: WeightField, scheme: str = SCHEME_AUTO, dt: Optional[float] = None):
        w.check_space(space)
        self.space = space
        self.weight = w
        self.scheme = resolve_scheme(scheme, w)
        self.cap = dt_max(space) if dt is None else float(dt)
        if self.cap <= 0:
            raise ConfigurationError(f'time step must be positive, got {dt}')
        self._stepper = None
        if self.scheme == SCHEME_CRANK_NICOLSON:
            self._stepper = CrankNicolsonStepper(generator_matrix(space, w).matrix)

    def advance(self, values: np.ndarray, duration: float, guard_positivity: bool = False) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if duration < 0:
            raise DomainError(f'time must be nonnegative, got {duration}')
        if duration == 0:
            return values.copy()

        if self.scheme == SCHEME_SPECTRAL:
            return spectral_advance(values, duration, self.space)

        cap = self.cap
        flat = values.reshape(-1)
        out = self._stepper.advance(flat, duration, cap)
        if guard_positivity and flat.min() >= 0:
            halvings = 0
            while out.min() < 0 and halvings < settings.LAB_POSITIVITY_MAX_HALVINGS:
                halvings += 1
                cap *= 0.5
                logger.warning(
                    'negative node %.3e after CN step on %s, retrying with dt cap %.3e',
                    out.min(), self.space.describe(), cap,
                )
                out = self._stepper.advance(flat, duration, cap)
        return out.reshape(values.shape)


def _wrap(field: Field, values: np.ndarray) -> Field:
    if isinstance(field, DensityField):
        values, amount = clamp_at_floor(values)
        return field.with_values(values, clamped=amount)
    return field.with_values(values)


def evolve_at_times(
    f: Field,
    times: Sequence[float],
    space: ModelSpace,
    w: WeightField,
    scheme: str = SCHEME_AUTO,
    dt: Optional[float] = None,
) -> List[Field]:
    """
    依次推进到多个时刻（增量推进，每段各自满足步长规则）

    Returns:
        与 times 同顺序的场列表
    """
    f.check_space(space)
    times = [float(t) for t in times]
    if any(t < 0 or math.isnan(t) for t in times):
        raise DomainError(f'times must be nonnegative, got {times}')

    propagator = HeatPropagator(space, w, scheme, dt)
    guard = isinstance(f, DensityField)
    results: Dict[float, Field] = {}
    current, clock = np.asarray(f.values), 0.0
    for t in sorted(set(times)):
        if t == 0:
            results[t] = f
            continue
        current = propagator.advance(current, t - clock, guard_positivity=guard)
        clock = t
        results[t] = _wrap(f, current)
    return [results[t] for t in times]


def heat_evolve(
    f: Field,
    t: float,
    space: ModelSpace,
    w: WeightField,
    scheme: str = SCHEME_AUTO,
    dt: Optional[float] = None,
) -> Field:
    """
    P_t f

    Args:
        f: DensityField 或 ScalarField
        t: 时间 ≥ 0
        scheme: 'auto' / 'spectral' / 'crank_nicolson'
        dt: 覆盖 CN 步长上限（阶数测试用）
    """
    if t < 0:
        raise DomainError(f'time must be nonnegative, got {t}')
    return evolve_at_times(f, [t], space, w, scheme, dt)[0]


def smooth_density(f: DensityField, space: ModelSpace, w: WeightField, eps: Optional[float] = None) -> DensityField:
    """
    正则化 f_ε = (P_ε f + ε)/(1+ε)，保证密度有严格正下界
    """
    eps = settings.LAB_SMOOTHING_EPSILON if eps is None else float(eps)
    if eps < 0:
        raise ConfigurationError(f'smoothing epsilon must be nonnegative, got {eps}')
    if eps == 0:
        return f
    evolved = heat_evolve(f, eps, space, w)
    return f.with_values((evolved.rho + eps) / (1 + eps), clamped=evolved.clamped)

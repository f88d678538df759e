"""
Hodge–de Rham 半群 R_t：∂_t ω = L⃗ω

Ψ ≡ 0 时 L⃗ 就是分量的平坦 Laplace 算子，逐分量用 FFT 精确推进；
否则用 Crank–Nicolson，步长规则与标量热流相同。
"""
import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from apps.common.exceptions import DomainError
from apps.forms.fields import OneFormField
from apps.forms.operators import hodge_matrix, require_flat
from apps.geometry.spaces import ModelSpace
from apps.geometry.weights import WeightField
from apps.semigroup.evolution import (
    SCHEME_AUTO,
    SCHEME_SPECTRAL,
    CrankNicolsonStepper,
    dt_max,
    resolve_scheme,
    spectral_advance,
)


class HodgePropagator:
    """在同一 (space, Ψ, scheme) 上多段推进 1-形式"""

    def __init__(self, space: ModelSpace, w: WeightField, scheme: str = SCHEME_AUTO, dt: Optional[float] = None):
        require_flat(space, 'hodge_evolve')
        w.check_space(space)
        self.space = space
        self.scheme = resolve_scheme(scheme, w)
        self.cap = dt_max(space) if dt is None else float(dt)
        self._stepper = None
        if self.scheme != SCHEME_SPECTRAL:
            self._stepper = CrankNicolsonStepper(hodge_matrix(space, w))

    def advance(self, comps: np.ndarray, duration: float) -> np.ndarray:
        comps = np.asarray(comps, dtype=float)
        if duration < 0:
            raise DomainError(f'time must be nonnegative, got {duration}')
        if duration == 0:
            return comps.copy()
        if self.scheme == SCHEME_SPECTRAL:
            return np.stack([spectral_advance(c, duration, self.space) for c in comps])
        out = self._stepper.advance(comps.reshape(-1), duration, self.cap)
        return out.reshape(comps.shape)


def evolve_forms_at_times(
    omega: OneFormField,
    times: Sequence[float],
    space: ModelSpace,
    w: WeightField,
    scheme: str = SCHEME_AUTO,
    dt: Optional[float] = None,
) -> List[OneFormField]:
    omega.check_space(space)
    times = [float(t) for t in times]
    if any(t < 0 or math.isnan(t) for t in times):
        raise DomainError(f'times must be nonnegative, got {times}')

    propagator = HodgePropagator(space, w, scheme, dt)
    results: Dict[float, OneFormField] = {}
    current, clock = omega.comps, 0.0
    for t in sorted(set(times)):
        if t == 0:
            results[t] = omega
            continue
        current = propagator.advance(current, t - clock)
        clock = t
        results[t] = omega.with_comps(current)
    return [results[t] for t in times]


def hodge_evolve(
    omega: OneFormField,
    t: float,
    space: ModelSpace,
    w: WeightField,
    scheme: str = SCHEME_AUTO,
    dt: Optional[float] = None,
) -> OneFormField:
    """R_t ω（仅 circle / torus2）"""
    if t < 0:
        raise DomainError(f'time must be nonnegative, got {t}')
    return evolve_forms_at_times(omega, [t], space, w, scheme, dt)[0]

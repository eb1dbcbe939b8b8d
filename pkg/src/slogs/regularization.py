"""Regularized logarithmic nonlinearities, their entropies and the modified energy.

Two families replace ``log(rho)``:

* ``LOG_SHIFT``:    ``f(rho) = log(rho + eps)``
* ``LOG_RATIONAL``: ``f(rho) = log((rho + eps) / (1 + eps * rho))``, bounded by ``|log eps|``

``EXACT`` (``eps = 0``) is the unregularized ``log(rho)``, kept for oracle comparisons.
Every function here is vectorized; ``eps`` may be an array broadcasting
against ``rho`` so that one call serves a batch of different regularizations.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, ParameterError
from .grid import ComplexField


class Family(str, Enum):
    LOG_SHIFT = "log_shift"
    LOG_RATIONAL = "log_rational"
    EXACT = "exact"


@dataclass(frozen=True)
class RegKind:
    family: Family
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.family is Family.EXACT:
            if self.epsilon != 0:
                raise ParameterError("the exact logarithm takes epsilon = 0")
        elif not 0 < self.epsilon < 1:
            raise ParameterError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    def with_epsilon(self, epsilon: float) -> "RegKind":
        return RegKind(self.family, epsilon)


@dataclass(frozen=True)
class EquationSpec:
    """Nonlinearity strength ``lam`` and the regularization in use.

    ``lam = 0`` is admitted for the linear contrast runs.
    """

    lam: float
    reg: RegKind


def _rho(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise DomainError("density must be nonnegative")
    return rho


def f_values(rho, family: Family, eps):
    """``f_eps(rho)`` without domain checks (hot path)."""
    if family is Family.LOG_SHIFT:
        return np.log(rho + eps)
    if family is Family.LOG_RATIONAL:
        return np.log(rho + eps) - np.log1p(eps * rho)
    with np.errstate(divide="ignore"):
        return np.log(rho)


def f_eps(rho, kind: RegKind):
    """Regularized logarithm; the exact kind returns ``-inf`` at ``rho = 0``."""
    return f_values(_rho(rho), kind.family, kind.epsilon)


def f_eps_prime(rho, kind: RegKind):
    rho = _rho(rho)
    eps = kind.epsilon
    if kind.family is Family.LOG_SHIFT:
        return 1.0 / (rho + eps)
    if kind.family is Family.LOG_RATIONAL:
        return (1.0 - eps * eps) / ((rho + eps) * (1.0 + eps * rho))
    with np.errstate(divide="ignore"):
        return 1.0 / rho


def entropy_density(rho, family: Family, eps):
    """Antiderivative ``int_0^rho f_eps(s) ds``, written so ``rho = 0`` gives exactly 0."""
    rho = np.asarray(rho, dtype=float)
    if family is Family.LOG_SHIFT:
        return rho * np.log(eps) + (eps + rho) * np.log1p(rho / eps) - rho
    if family is Family.LOG_RATIONAL:
        f = np.log(rho + eps) - np.log1p(eps * rho)
        return rho * f + eps * np.log1p(rho / eps) - np.log1p(eps * rho) / eps
    with np.errstate(divide="ignore", invalid="ignore"):
        out = rho * np.log(rho) - rho
    return np.where(rho > 0, out, 0.0)


def entropy(u: ComplexField, kind: RegKind) -> float:
    """Regularized entropy ``F_eps(|u|^2)``."""
    rho = np.abs(u.values) ** 2
    return float(u.grid.integrate(entropy_density(rho, kind.family, kind.epsilon)))


def kinetic_energy(u: ComplexField) -> float:
    return 0.5 * float(u.grid.grad_sq(u.values))


def modified_energy(u: ComplexField, spec: EquationSpec) -> float:
    """``H_eps = K - (lam/2) F_eps``; the form the energy moment bound is stated for."""
    return kinetic_energy(u) - 0.5 * spec.lam * entropy(u, spec.reg)


def regularized_energy_plus(u: ComplexField, spec: EquationSpec) -> float:
    """Alternate sign convention ``K + (lam/2) F_eps``."""
    return kinetic_energy(u) + 0.5 * spec.lam * entropy(u, spec.reg)


def drift_values(u: np.ndarray, lam: float, family: Family, eps, rho=None) -> np.ndarray:
    if rho is None:
        rho = np.abs(u) ** 2
    return 1j * lam * f_values(rho, family, eps) * u


def drift_nonlinear(u: ComplexField, spec: EquationSpec) -> ComplexField:
    """Pointwise ``i lam f_eps(|u|^2) u``."""
    with np.errstate(invalid="ignore"):
        vals = drift_values(u.values, spec.lam, spec.reg.family, spec.reg.epsilon)
    if spec.reg.family is Family.EXACT:
        vals = np.where(u.values == 0, 0.0, vals)
    return u.with_values(vals)

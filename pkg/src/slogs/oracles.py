"""Deterministic oracle checks with closed-form answers.

* constant field: ``Laplacian c = 0``, so ``u(t) = c exp(i lam t f(|c|^2))``;
* stationary Gausson: ``u = exp(i w t) A exp(-(lam/2)|x|^2)`` with
  ``w = 2 lam log A - lam d`` solves the unregularized equation
  (``Laplacian`` of the Gaussian gives ``(lam^2 |x|^2 - lam d) u`` and
  ``lam log|u|^2 = 2 lam log A - lam^2 |x|^2``; the ``|x|^2`` terms cancel);
* unitarity and group property of the free propagator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ComplexField, Grid, norm_l2, semigroup_apply
from .noise import NoiseCase, NoiseSpec, Spectrum
from .regularization import EquationSpec, Family, RegKind, f_eps
from .solver import Scheme, SolverConfig, evolve

QUIET = NoiseSpec(NoiseCase.ADDITIVE, Spectrum(2.0, 0.0, 0))


@dataclass(frozen=True)
class OracleResult:
    name: str
    error: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.tolerance)


def constant_field(c: complex = 0.8 * np.exp(0.3j), lam: float = -1.0,
                   kind: RegKind = RegKind(Family.LOG_SHIFT, 1e-2), dt: float = 2.5e-4,
                   t_end: float = 1.0, tol: float = 1e-8) -> OracleResult:
    grid = Grid(1, 2 * np.pi, 256)
    u0 = ComplexField(grid, np.full(grid.shape, c))
    eq = EquationSpec(lam, kind)
    rec = evolve(u0, eq, QUIET, SolverConfig(Scheme.SPLIT_STEP, dt, t_end), observers=("mass",))
    exact = c * np.exp(1j * lam * t_end * f_eps(abs(c) ** 2, kind))
    return OracleResult("constant_field_phase", float(np.max(np.abs(rec.u.values - exact))), tol)


def gausson_profile(grid: Grid, lam: float, amplitude: float) -> ComplexField:
    return ComplexField(grid, amplitude * np.exp(-0.5 * lam * grid.r2))


def gausson_frequency(lam: float, amplitude: float, d: int) -> float:
    return 2 * lam * np.log(amplitude) - lam * d


def gausson_residual(lam: float = 1.0, amplitude: float = 1.3, grid: Grid | None = None) -> float:
    """Relative residual of ``i w u = i Laplacian u + i lam u log|u|^2`` for the ansatz."""
    grid = grid or Grid(1, 40.0, 512)
    u = gausson_profile(grid, lam, amplitude).values
    w = gausson_frequency(lam, amplitude, grid.dim)
    rhs = grid.laplacian(u) + lam * u * np.log(np.abs(u) ** 2)
    return float(np.sqrt(grid.l2sq(w * u - rhs) / grid.l2sq(w * u)))


def gausson(lam: float = 1.0, amplitude: float = 1.3, eps: float = 1e-6, dt: float = 1e-4,
            t_end: float = 1.0, tol: float = 1e-3) -> OracleResult:
    grid = Grid(1, 40.0, 512)
    u0 = gausson_profile(grid, lam, amplitude)
    eq = EquationSpec(lam, RegKind(Family.LOG_SHIFT, eps))
    rec = evolve(u0, eq, QUIET, SolverConfig(Scheme.SPLIT_STEP, dt, t_end, dealias=False),
                 observers=("mass",))
    err = norm_l2(rec.u.with_values(np.abs(rec.u.values) - np.abs(u0.values))) / norm_l2(u0)
    return OracleResult("gausson_modulus", float(err), tol)


def unitarity(n_fields: int = 1000, seed: int = 0, tol: float = 1e-10) -> OracleResult:
    rng = np.random.default_rng(seed)
    grid = Grid(1, 2 * np.pi, 256)
    v = rng.normal(size=(n_fields, 256)) + 1j * rng.normal(size=(n_fields, 256))
    t = rng.uniform(-10, 10, (n_fields, 1))
    out = grid.inverse(grid.forward(v) * np.exp(-1j * grid.spectral.k2 * t))
    n0 = np.sqrt(grid.l2sq(v))
    err = np.max(np.abs(np.sqrt(grid.l2sq(out)) - n0) / n0)
    back = grid.inverse(grid.forward(out) * np.exp(1j * grid.spectral.k2 * t))
    err = max(err, float(np.max(np.sqrt(grid.l2sq(back - v)) / n0)))
    return OracleResult("semigroup_unitarity", float(err), tol)


def free_evolution(tol: float = 1e-10) -> OracleResult:
    """With no nonlinearity and no noise the stepper reproduces ``S(T) u0``."""
    grid = Grid(1, 20.0, 256)
    u0 = ComplexField(grid, np.exp(-grid.x ** 2) * np.exp(2j * grid.x))
    eq = EquationSpec(0.0, RegKind(Family.LOG_SHIFT, 1e-2))
    rec = evolve(u0, eq, QUIET, SolverConfig(Scheme.EXP_EULER, 1e-2, 1.0), observers=("mass",))
    ref = semigroup_apply(u0, 1.0)
    return OracleResult("free_evolution", float(norm_l2(rec.u.with_values(rec.u.values - ref.values))
                                                / norm_l2(u0)), tol)


def run_all() -> list:
    res = gausson_residual()
    return [
        constant_field(),
        OracleResult("gausson_ansatz_residual", res, 1e-8),
        gausson(),
        unitarity(),
        free_evolution(),
    ]

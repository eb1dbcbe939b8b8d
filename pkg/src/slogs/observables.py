"""Scalar diagnostics along trajectories and the weighted interpolation check."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .grid import ComplexField, Grid, norm_l2, norm_l2_alpha, norm_lp
from .regularization import EquationSpec, Family, entropy_density


def mass(u: ComplexField) -> float:
    return float(u.grid.l2sq(u.values))


def kinetic(u: ComplexField) -> float:
    return 0.5 * float(u.grid.grad_sq(u.values))


def h1_norm(u: ComplexField) -> float:
    return float(np.sqrt(u.grid.h1sq(u.values)))


def h2_norm(u: ComplexField) -> float:
    return float(np.sqrt(u.grid.h2sq(u.values)))


def weighted_norm(u: ComplexField, alpha: float) -> float:
    return norm_l2_alpha(u, alpha)


# batched channels: (grid, u[B, ...], eq, eps[B], alpha) -> values[B]

def _mass(grid, u, eq, eps, alpha):
    return grid.l2sq(u)


def _kinetic(grid, u, eq, eps, alpha):
    return 0.5 * grid.grad_sq(u)


def _h1sq(grid, u, eq, eps, alpha):
    return grid.h1sq(u)


def _h2sq(grid, u, eq, eps, alpha):
    return grid.h2sq(u)


def _l2a_sq(grid, u, eq, eps, alpha):
    return grid.l2sq(grid.weight(alpha) * u)


def _expand(eps, grid, u):
    e = np.asarray(eps, dtype=float)
    return e.reshape(e.shape + (1,) * (u.ndim - e.ndim))


def _entropy(grid, u, eq, eps, alpha):
    rho = np.abs(u) ** 2
    return grid.integrate(entropy_density(rho, eq.reg.family, _expand(eps, grid, u)))


def _energy(grid, u, eq, eps, alpha):
    return _kinetic(grid, u, eq, eps, alpha) - 0.5 * eq.lam * _entropy(grid, u, eq, eps, alpha)


CHANNELS = {
    "mass": _mass,
    "kinetic": _kinetic,
    "h1sq": _h1sq,
    "h2sq": _h2sq,
    "l2alpha_sq": _l2a_sq,
    "entropy": _entropy,
    "energy": _energy,
}


def evaluate(names, grid: Grid, u: np.ndarray, eq: EquationSpec, eps, alpha: float = 1.0) -> np.ndarray:
    """Channels for a batch; returns an array of shape ``(len(names), batch)``."""
    if eq.reg.family is Family.EXACT and any(n in ("entropy", "energy") for n in names):
        eps = 0.0
    out = []
    for name in names:
        fn = CHANNELS.get(name)
        if fn is None:
            raise ParameterError(f"unknown observable {name!r}")
        out.append(np.broadcast_to(fn(grid, u, eq, eps, alpha), u.shape[:u.ndim - grid.dim]))
    return np.array(out, dtype=float)


@dataclass
class ObservableSeries:
    """Time-stamped scalar channels for one path."""

    names: list
    times: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def append(self, t: float, values) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError("observation times must increase strictly")
        self.times.append(float(t))
        self.rows.append([float(v) for v in values])

    @property
    def values(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(len(self.times), len(self.names))

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time"] + list(self.names))
            for t, row in zip(self.times, self.rows):
                w.writerow([repr(t)] + [repr(v) for v in row])


# weighted interpolation ---------------------------------------------------

def _ball_volume(d: int) -> float:
    return 2.0 if d == 1 else np.pi


def _sphere_area(d: int) -> float:
    return 2.0 if d == 1 else 2.0 * np.pi


def interpolation_exponent(d: int, alpha: float, eta: float) -> float:
    return d * eta / (2.0 * alpha * (1.0 - eta))


def interpolation_constant(d: int, alpha: float, eta: float) -> float:
    """Constant of ``||v||_{L^{2-2eta}} <= C ||v||^{1-theta} ||v||_{L^2_alpha}^theta``.

    Splitting at radius ``r``, Hoelder on the ball gives ``|B_r|^eta ||v||^{2-2eta}``
    and on the complement ``(int_{|x|>r} |x|^-beta)^eta ||v||_alpha^{2-2eta}`` with
    ``beta = alpha (2-2eta) / eta``.  With ``r = (||v||_alpha / ||v||)^(1/alpha)``
    both terms carry the same power, leaving
    ``C^{2-2eta} = omega_d^eta + (sigma_{d-1} / (beta - d))^eta``.
    """
    _check_interp(d, alpha, eta)
    beta = alpha * (2.0 - 2.0 * eta) / eta
    total = _ball_volume(d) ** eta + (_sphere_area(d) / (beta - d)) ** eta
    return total ** (1.0 / (2.0 - 2.0 * eta))


def _check_interp(d, alpha, eta):
    if not 0 < eta < 1:
        raise ParameterError(f"eta must lie in (0, 1), got {eta}")
    if not alpha > d * eta / (2.0 - 2.0 * eta):
        raise ParameterError("interpolation needs alpha > d*eta/(2-2*eta)")


def interpolation_check(u: ComplexField, alpha: float, eta: float) -> dict:
    d = u.grid.dim
    _check_interp(d, alpha, eta)
    theta = interpolation_exponent(d, alpha, eta)
    lhs = norm_lp(u, 2.0 - 2.0 * eta)
    nrm = norm_l2(u)
    if nrm == 0:
        return {"lhs": 0.0, "rhs_product": 0.0, "ratio": 0.0}
    # the weighted norm is only defined for alpha <= 2; compute it directly otherwise
    wn = float(np.sqrt(u.grid.l2sq(u.grid.weight(alpha) * u.values)))
    rhs = nrm ** (1.0 - theta) * wn ** theta
    return {"lhs": lhs, "rhs_product": rhs, "ratio": lhs / rhs}

"""Spatial grids, pseudospectral operators and the norms used along trajectories.

Fields live on a box ``[-L/2, L/2)^d`` sampled at cell centres.  Periodic
grids use the Fourier basis, homogeneous Dirichlet grids the sine basis
(DST-II at cell centres), so the free Schroedinger group ``exp(i t Laplacian)``
is a diagonal multiplier in both cases and is applied exactly.

All array-level methods on :class:`Grid` accept arbitrary leading batch axes;
the trailing ``dim`` axes are spatial.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError, ParameterError


class Boundary(str, Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class SpectralCache:
    """Per-grid spectral multipliers.

    ``wavenumbers`` holds one 1-D array per axis, ordered like the transform
    output.  The semigroup is not cached: its multiplier depends on ``t``.
    """

    wavenumbers: tuple
    k2: np.ndarray
    laplacian_multiplier: np.ndarray
    dealias_mask: np.ndarray


@dataclass(frozen=True)
class Grid:
    dim: int
    length: float
    n: int
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.dim not in (1, 2):
            raise ConfigurationError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ConfigurationError(f"points per axis must be a power of two >= 8, got {self.n}")
        if not self.length > 0:
            raise ConfigurationError(f"extent must be positive, got {self.length}")

    # geometry -------------------------------------------------------------

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def volume(self) -> float:
        return self.length ** self.dim

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def axes(self) -> tuple:
        return tuple(range(-self.dim, 0))

    @cached_property
    def x(self) -> np.ndarray:
        """1-D cell-centre coordinates, shared by every axis."""
        return -0.5 * self.length + (np.arange(self.n) + 0.5) * self.h

    @cached_property
    def mesh(self) -> tuple:
        return tuple(np.meshgrid(*([self.x] * self.dim), indexing="ij"))

    @cached_property
    def r2(self) -> np.ndarray:
        return sum(c * c for c in self.mesh)

    # spectral machinery ---------------------------------------------------

    @cached_property
    def spectral(self) -> SpectralCache:
        if self.boundary is Boundary.PERIODIC:
            k1 = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)
        else:
            k1 = np.pi * np.arange(1, self.n + 1) / self.length
        kmax = np.pi / self.h
        ks = np.meshgrid(*([k1] * self.dim), indexing="ij")
        k2 = sum(k * k for k in ks)
        keep = np.ones(self.shape, dtype=bool)
        for k in ks:
            keep &= np.abs(k) <= (2.0 / 3.0) * kmax
        return SpectralCache(
            wavenumbers=(k1,) * self.dim,
            k2=k2,
            laplacian_multiplier=-k2,
            dealias_mask=keep,
        )

    def forward(self, u: np.ndarray) -> np.ndarray:
        if self.boundary is Boundary.PERIODIC:
            return sfft.fftn(u, axes=self.axes)
        return sfft.dstn(u, type=2, axes=self.axes, norm="ortho")

    def inverse(self, c: np.ndarray) -> np.ndarray:
        if self.boundary is Boundary.PERIODIC:
            return sfft.ifftn(c, axes=self.axes)
        return sfft.idstn(c, type=2, axes=self.axes, norm="ortho")

    def apply_multiplier(self, u: np.ndarray, mult: np.ndarray) -> np.ndarray:
        return self.inverse(self.forward(u) * mult)

    def semigroup_multiplier(self, t: float) -> np.ndarray:
        return np.exp(-1j * self.spectral.k2 * t)

    def propagate(self, u: np.ndarray, t: float) -> np.ndarray:
        """Apply ``S(t) = exp(i t Laplacian)``; exact for every real ``t``."""
        if t == 0:
            return np.array(u, dtype=complex, copy=True)
        return self.apply_multiplier(u, self.semigroup_multiplier(t))

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        return self.apply_multiplier(u, self.spectral.laplacian_multiplier)

    def dealias(self, u: np.ndarray) -> np.ndarray:
        return self.apply_multiplier(u, self.spectral.dealias_mask)

    def gradient(self, u: np.ndarray) -> list:
        """Spectral partial derivatives, one array per axis."""
        c = self.forward(u)
        out = []
        for axis in range(self.dim):
            k = self.spectral.wavenumbers[axis]
            bshape = [1] * self.dim
            bshape[axis] = self.n
            kb = k.reshape(bshape)
            if self.boundary is Boundary.PERIODIC:
                out.append(sfft.ifftn(1j * kb * c, axes=self.axes))
                continue
            # sine series derivative is a cosine series; mode n = N vanishes at cell centres
            dc = kb * c
            ax = self.axes[axis]
            dc = np.roll(dc, 1, axis=ax)
            idx = [slice(None)] * dc.ndim
            idx[ax] = 0
            dc[tuple(idx)] = 0.0
            other = [a for a in self.axes if a != ax]
            v = sfft.idct(dc, type=2, axis=ax, norm="ortho")
            if other:
                v = sfft.idstn(v, type=2, axes=other, norm="ortho")
            out.append(v)
        return out

    # quadrature -----------------------------------------------------------

    def integrate(self, f: np.ndarray) -> np.ndarray:
        """Rectangle-rule integral over the trailing spatial axes."""
        return self.cell_volume * np.sum(f, axis=self.axes)

    def l2sq(self, u: np.ndarray) -> np.ndarray:
        return self.integrate(np.abs(u) ** 2)

    def grad_sq(self, u: np.ndarray) -> np.ndarray:
        """``sum_axes ||d_axis u||^2``."""
        return sum(self.l2sq(g) for g in self.gradient(u))

    def h1sq(self, u: np.ndarray) -> np.ndarray:
        return self.l2sq(u) + self.grad_sq(u)

    def h2sq(self, u: np.ndarray) -> np.ndarray:
        """``||u||^2 + ||grad u||^2 + ||Laplacian u||^2``."""
        return self.h1sq(u) + self.l2sq(self.laplacian(u))

    def weight(self, alpha: float) -> np.ndarray:
        return (1.0 + self.r2) ** (0.5 * alpha)

    def check(self, values: np.ndarray) -> None:
        if np.shape(values)[-self.dim:] != self.shape:
            raise ConfigurationError(
                f"field shape {np.shape(values)} does not match grid {self.shape}")


@dataclass(frozen=True, eq=False)
class ComplexField:
    """A complex field on a grid; treated as an immutable value."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise ConfigurationError(
                f"values of shape {vals.shape} do not match grid {self.grid.shape}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ComplexField":
        return cls(grid, fn(*grid.mesh))

    @classmethod
    def zeros(cls, grid: Grid) -> "ComplexField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def with_values(self, values) -> "ComplexField":
        return ComplexField(self.grid, values)


def _same_grid(u: ComplexField, v: ComplexField) -> Grid:
    if u.grid != v.grid:
        raise ConfigurationError("fields live on different grids")
    return u.grid


def inner(u: ComplexField, v: ComplexField) -> float:
    """Real inner product ``int Re(u conj(v)) dx``."""
    g = _same_grid(u, v)
    return float(g.integrate(np.real(u.values * np.conj(v.values))))


def norm_l2(u: ComplexField) -> float:
    return float(np.sqrt(u.grid.l2sq(u.values)))


def norm_h1(u: ComplexField) -> float:
    return float(np.sqrt(u.grid.h1sq(u.values)))


def norm_h2(u: ComplexField) -> float:
    return float(np.sqrt(u.grid.h2sq(u.values)))


def norm_lp(u: ComplexField, p: float) -> float:
    if not p >= 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    return float(u.grid.integrate(np.abs(u.values) ** p) ** (1.0 / p))


def norm_l2_alpha(u: ComplexField, alpha: float) -> float:
    """Weighted norm ``||(1 + |x|^2)^(alpha/2) u||`` with centred coordinates."""
    if not 0 < alpha <= 2:
        raise ParameterError(f"alpha must lie in (0, 2], got {alpha}")
    g = u.grid
    return float(np.sqrt(g.l2sq(g.weight(alpha) * u.values)))


def laplacian(u: ComplexField) -> ComplexField:
    return u.with_values(u.grid.laplacian(u.values))


def gradient(u: ComplexField) -> list:
    return [u.with_values(d) for d in u.grid.gradient(u.values)]


def semigroup_apply(u: ComplexField, t: float) -> ComplexField:
    return u.with_values(u.grid.propagate(u.values, t))


def spectral_norm_l2(u: ComplexField) -> float:
    """L2 norm from transform coefficients (Parseval)."""
    g = u.grid
    c = g.forward(u.values)
    if g.boundary is Boundary.PERIODIC:
        return float(np.sqrt(g.cell_volume * np.sum(np.abs(c) ** 2) / g.n ** g.dim))
    return float(np.sqrt(g.cell_volume * np.sum(np.abs(c) ** 2)))

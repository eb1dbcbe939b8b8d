"""Q-Wiener increments, diffusion coefficients and the star-integral drift.

The covariance operator is diagonal in the grid's Fourier (or sine) basis with
eigenvalues ``q_k = a (1 + |k|^2)^(-r)`` for modes up to an index cutoff.
Three cases are supported:

1. additive complex noise, ``dW`` enters as is;
2. ``i g(|u|^2) u dW`` with complex ``W``;
3. ``i g(|u|^2) u dW`` with real ``W`` (cos/sin basis), which conserves mass.

Complex coefficients are standard complex normals (``E|xi|^2 = 1``).  In
real-Hilbert terms that is the basis ``{e_k, i e_k}`` with eigenvalue ``q_k/2``
each; the correction sums are taken over that real basis.

Randomness is counter based: the normals of fine step ``j`` of sample ``s`` come
from a Philox stream with key ``(master_seed, s)`` and counter ``(0, 0, j, 0)``,
so results do not depend on evaluation order or on how samples are batched.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import optimize

from .errors import ConfigurationError, ParameterError
from .grid import Boundary, ComplexField, Grid


class NoiseCase(str, Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE_COMPLEX = "multiplicative_complex"
    MULTIPLICATIVE_REAL = "multiplicative_real"

    @property
    def multiplicative(self) -> bool:
        return self is not NoiseCase.ADDITIVE

    @property
    def real_noise(self) -> bool:
        return self is NoiseCase.MULTIPLICATIVE_REAL


class GFamily(str, Enum):
    ONE = "one"
    INVERSE_SHIFT = "inverse_shift"
    RATIONAL = "rational"
    RATIONAL_SQ = "rational_sq"
    LOG_RATIONAL = "log_rational"
    SUPER_LOG = "super_log"


def _g(family: GFamily, c: float, x):
    x = np.asarray(x, dtype=float)
    if family is GFamily.ONE:
        return np.ones_like(x)
    if family is GFamily.INVERSE_SHIFT:
        return 1.0 / (c + x)
    if family is GFamily.RATIONAL:
        return x / (c + x)
    if family is GFamily.RATIONAL_SQ:
        return x / (c + x * x)
    if family is GFamily.LOG_RATIONAL:
        return np.log(c + x) - np.log1p(c * x)
    return np.log(c + x)


def _gp(family: GFamily, c: float, x):
    x = np.asarray(x, dtype=float)
    if family is GFamily.ONE:
        return np.zeros_like(x)
    if family is GFamily.INVERSE_SHIFT:
        return -1.0 / (c + x) ** 2
    if family is GFamily.RATIONAL:
        return c / (c + x) ** 2
    if family is GFamily.RATIONAL_SQ:
        return (c - x * x) / (c + x * x) ** 2
    if family is GFamily.LOG_RATIONAL:
        return (1.0 - c * c) / ((c + x) * (1.0 + c * x))
    return 1.0 / (c + x)


def _gpp(family: GFamily, c: float, x):
    x = np.asarray(x, dtype=float)
    if family is GFamily.ONE:
        return np.zeros_like(x)
    if family is GFamily.INVERSE_SHIFT:
        return 2.0 / (c + x) ** 3
    if family is GFamily.RATIONAL:
        return -2.0 * c / (c + x) ** 3
    if family is GFamily.RATIONAL_SQ:
        return 2.0 * x * (x * x - 3.0 * c) / (c + x * x) ** 3
    if family is GFamily.LOG_RATIONAL:
        return -1.0 / (c + x) ** 2 + c * c / (1.0 + c * x) ** 2
    return -1.0 / (c + x) ** 2


def _sup_1d(fn, lo=-12.0, hi=12.0, n=200001):
    """Sup of ``fn(x)`` over ``x = 10**s`` (plus ``x = 0``), refined locally."""
    s = np.linspace(lo, hi, n)
    vals = fn(10.0 ** s)
    best = max(float(np.max(vals)), float(fn(np.array([0.0]))[0]))
    i = int(np.argmax(vals))
    a, b = s[max(i - 2, 0)], s[min(i + 2, n - 1)]
    res = optimize.minimize_scalar(lambda t: -float(fn(np.array([10.0 ** t]))[0]),
                                   bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-12})
    return max(best, -float(res.fun))


def _sup_2d(fn, lo=-6.0, hi=6.0, n=801):
    """Sup of ``fn(x, y)`` for ``x, y >= 0`` on a log grid, refined by Nelder-Mead."""
    s = np.concatenate([[-np.inf], np.linspace(lo, hi, n)])
    X, Y = np.meshgrid(10.0 ** s, 10.0 ** s, indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        V = fn(X, Y)
    V = np.where(np.isfinite(V), V, -np.inf)
    best = float(np.max(V))
    flat = np.argsort(V, axis=None)[-8:]
    for idx in flat:
        i, j = np.unravel_index(idx, V.shape)
        x0 = np.array([X[i, j], Y[i, j]])

        def neg(p):
            x, y = abs(p[0]), abs(p[1])
            with np.errstate(divide="ignore", invalid="ignore"):
                v = fn(np.array(x), np.array(y))
            return -float(v) if np.isfinite(v) else 0.0

        res = optimize.minimize(neg, x0, method="Nelder-Mead",
                                options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 4000})
        best = max(best, -float(res.fun))
    return best


@lru_cache(maxsize=None)
def g_constants(family: GFamily, c: float) -> dict:
    """Numerically computed constants of the diffusion function.

    ``growth``   sup|g| + sup|g'(x) x|  (``inf`` for unbounded ``g``)
    ``growth2``  growth + sup|g''(x) x^2|
    ``con_g``    sup over x, y >= 0 of (x+y)(g(x^2)-g(y^2)) / |x-y|
    ``con_g1``   Lipschitz constant of z -> g'(|z|^2) g(|z|^2) |z|^2 z
    ``C_g``      max of the applicable ones plus a relative safety margin
    """
    family = GFamily(family)
    g = lambda x: _g(family, c, x)
    gp = lambda x: _gp(family, c, x)
    gpp = lambda x: _gpp(family, c, x)
    sup_gpx = _sup_1d(lambda x: np.abs(gp(x) * x))
    out = {"sup_gprime_x": sup_gpx}
    if family is GFamily.SUPER_LOG:
        out.update(growth=np.inf, growth2=np.inf, con_g=np.inf, con_g1=np.inf)
        out["C_g"] = sup_gpx * (1 + 1e-9)
        return out
    sup_g = _sup_1d(lambda x: np.abs(g(x)))
    out["growth"] = sup_g + sup_gpx
    out["growth2"] = out["growth"] + _sup_1d(lambda x: np.abs(gpp(x) * x * x))

    def cong(x, y):
        return (x + y) * (g(x * x) - g(y * y)) / np.abs(x - y)

    out["con_g"] = max(_sup_2d(cong), 0.0)

    def phi(s):
        return gp(s) * g(s) * s

    def dphi(s):
        return (gpp(s) * g(s) + gp(s) ** 2) * s + gp(s) * g(s)

    out["con_g1"] = _sup_1d(lambda s: np.maximum(np.abs(phi(s)),
                                                 np.abs(phi(s) + 2 * s * dphi(s))))
    out["C_g"] = max(out["growth2"], out["con_g"], out["con_g1"]) * (1 + 1e-6)
    return out


@dataclass(frozen=True)
class GKind:
    family: GFamily = GFamily.ONE
    c: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", GFamily(self.family))
        if not self.c > 0:
            raise ParameterError(f"g parameter c must be positive, got {self.c}")

    @property
    def bounded(self) -> bool:
        return self.family is not GFamily.SUPER_LOG

    def value(self, x):
        return _g(self.family, self.c, x)

    def prime(self, x):
        return _gp(self.family, self.c, x)

    def second(self, x):
        return _gpp(self.family, self.c, x)

    @property
    def constants(self) -> dict:
        return g_constants(self.family, float(self.c))

    @property
    def C_g(self) -> float:
        return self.constants["C_g"]


def g_eval(x, g: GKind):
    return g.value(x)


def g_prime(x, g: GKind):
    return g.prime(x)


@dataclass(frozen=True)
class Spectrum:
    decay: float = 2.0
    amplitude: float = 1.0
    cutoff: int = 16

    def __post_init__(self):
        if not self.decay > 1:
            raise ParameterError(f"spectral decay exponent must exceed 1, got {self.decay}")
        if self.amplitude < 0:
            raise ParameterError("spectral amplitude must be nonnegative")
        if self.cutoff < 0:
            raise ParameterError("mode cutoff must be nonnegative")


@dataclass(frozen=True)
class NoiseSpec:
    case: NoiseCase = NoiseCase.MULTIPLICATIVE_REAL
    spectrum: Spectrum = field(default_factory=Spectrum)
    g: GKind = field(default_factory=GKind)
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "case", NoiseCase(self.case))
        if not 0 <= self.master_seed < 2 ** 64:
            raise ParameterError("master seed must fit in 64 bits")
        if self.g.family is GFamily.SUPER_LOG and self.case is not NoiseCase.MULTIPLICATIVE_REAL:
            raise ConfigurationError("super-linear g is admitted only with real multiplicative noise")

    def with_seed(self, seed: int) -> "NoiseSpec":
        return replace(self, master_seed=seed)


@dataclass(frozen=True)
class NoiseStream:
    """Counter-based stream for one Monte Carlo sample; ``step`` is the fine-step counter."""

    master_seed: int
    sample_index: int
    step: int = 0

    def generator(self, step: int | None = None) -> np.random.Generator:
        j = self.step if step is None else step
        key = np.array([self.master_seed, self.sample_index], dtype=np.uint64)
        ctr = np.array([0, 0, j, 0], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=ctr))

    def advance(self, n: int = 1) -> "NoiseStream":
        return replace(self, step=self.step + n)


def _basis_1d(grid: Grid, cutoff: int, real: bool):
    """Orthonormal 1-D basis rows (discrete L2) and their wavenumbers."""
    L, x = grid.length, grid.x
    if grid.boundary is Boundary.DIRICHLET:
        if cutoff > grid.n - 1:
            raise ConfigurationError("mode cutoff exceeds the number of sine modes")
        m = np.arange(1, cutoff + 1)
        k = np.pi * m / L
        rows = np.sqrt(2.0 / L) * np.sin(np.outer(k, x + 0.5 * L))
        return rows.astype(complex), k
    if cutoff >= grid.n // 2:
        raise ConfigurationError("mode cutoff must stay below the Nyquist index")
    if real:
        n = np.arange(1, cutoff + 1)
        kk = 2.0 * np.pi * n / L
        rows = [np.full_like(x, 1.0 / np.sqrt(L))]
        ks = [0.0]
        for kv in kk:
            rows.append(np.sqrt(2.0 / L) * np.cos(kv * x))
            rows.append(np.sqrt(2.0 / L) * np.sin(kv * x))
            ks += [kv, kv]
        return np.array(rows).astype(complex), np.array(ks)
    n = np.arange(-cutoff, cutoff + 1)
    k = 2.0 * np.pi * n / L
    rows = np.exp(1j * np.outer(k, x)) / np.sqrt(L)
    return rows, k


class NoiseModel:
    """A :class:`NoiseSpec` bound to a grid, with precomputed basis and correction sums."""

    def __init__(self, spec: NoiseSpec, grid: Grid):
        self.spec = spec
        self.grid = grid
        real = spec.case.real_noise
        self.rows, k1 = _basis_1d(grid, spec.spectrum.cutoff, real)
        m = len(k1)
        kk = np.meshgrid(*([k1] * grid.dim), indexing="ij")
        k2 = sum(k * k for k in kk)
        sp = spec.spectrum
        self.q = sp.amplitude * (1.0 + k2) ** (-sp.decay)
        self.sqrt_q = np.sqrt(self.q)
        self.n_modes = m ** grid.dim
        self.mode_shape = (m,) * grid.dim
        self.real = real
        # correction sums over the real-Hilbert basis of Q^(1/2)
        if self.n_modes == 0:
            self.sum_abs2 = np.zeros(grid.shape)
            self.sum_im = np.zeros(grid.shape, dtype=complex)
        else:
            phis = self._mode_functions()
            if real:
                self.sum_abs2 = np.sum(np.abs(phis) ** 2, axis=0)
                self.sum_im = np.sum(np.imag(phis) * phis, axis=0)
            else:
                half = phis / np.sqrt(2.0)
                self.sum_abs2 = 2 * np.sum(np.abs(half) ** 2, axis=0)
                self.sum_im = np.sum(np.imag(half) * half + np.imag(1j * half) * (1j * half), axis=0)

    @property
    def trace(self) -> float:
        """``sum_k q_k``, i.e. ``E ||dW||^2 / dt``."""
        return float(np.sum(self.q))

    def h1_trace_tail(self, n_far: int | None = None) -> float:
        """Share of ``sum_k q_k (1 + |k|^2)`` lying beyond the mode cutoff.

        The reference sum runs to index ``n_far`` per axis; a small value means
        the truncated covariance is close to its untruncated power law.
        """
        g, sp = self.grid, self.spec.spectrum
        n_far = n_far or (20_000 if g.dim == 1 else 1_000)
        if g.boundary is Boundary.DIRICHLET:
            idx = np.arange(1, n_far + 1)
            k1 = np.pi * idx / g.length
        else:
            idx = np.abs(np.arange(-n_far, n_far + 1))
            k1 = 2.0 * np.pi * idx / g.length
        kk = np.meshgrid(*([k1] * g.dim), indexing="ij")
        ii = np.meshgrid(*([idx] * g.dim), indexing="ij")
        k2 = sum(k * k for k in kk)
        w = (1.0 + k2) ** (1.0 - sp.decay)
        inside = np.ones(k2.shape, dtype=bool)
        for i in ii:
            inside &= i <= sp.cutoff
        total = float(np.sum(w))
        return float(np.sum(w[~inside]) / total) if total > 0 else 0.0

    def _mode_functions(self) -> np.ndarray:
        """All ``Q^(1/2) e_k`` on the grid, shape ``(n_modes, *grid.shape)``."""
        eye = np.eye(self.n_modes).reshape((self.n_modes,) + self.mode_shape)
        return self._synth(eye * self.sqrt_q[None])

    def _synth(self, coeff: np.ndarray) -> np.ndarray:
        """Map mode coefficients ``(..., m[, m])`` to grid values ``(..., N[, N])``."""
        if self.grid.dim == 1:
            return coeff @ self.rows
        return np.einsum("...ab,aj,bk->...jk", coeff, self.rows, self.rows, optimize=True)

    def _normals(self, stream: NoiseStream, step: int) -> np.ndarray:
        gen = stream.generator(step)
        if self.real:
            return gen.standard_normal(self.mode_shape)
        z = gen.standard_normal((2,) + self.mode_shape)
        return (z[0] + 1j * z[1]) / np.sqrt(2.0)

    def coefficients(self, dt: float, stream: NoiseStream, substeps: int = 1) -> np.ndarray:
        """Mode coefficients of the increment over ``substeps`` fine steps of ``dt/substeps``.

        The fine steps consumed are ``stream.step * substeps + j``.
        """
        if not dt > 0:
            raise ParameterError(f"dt must be positive, got {dt}")
        h = dt / substeps
        base = stream.step * substeps
        acc = self._normals(stream, base)
        for j in range(1, substeps):
            acc = acc + self._normals(stream, base + j)
        return np.sqrt(h) * acc

    def increment(self, dt: float, stream: NoiseStream, substeps: int = 1) -> np.ndarray:
        if self.n_modes == 0:
            return np.zeros(self.grid.shape, dtype=complex)
        xi = self.coefficients(dt, stream, substeps)
        dW = self._synth(xi * self.sqrt_q)
        return dW.real.astype(complex) if self.real else dW

    def increments(self, dt: float, seed: int, samples, step: int, substeps: int = 1) -> np.ndarray:
        """Batch of increments for the given sample indices, shape ``(len(samples), *grid)``."""
        if self.n_modes == 0:
            return np.zeros((len(samples),) + self.grid.shape, dtype=complex)
        # synthesize sample by sample so values do not depend on batch composition
        dW = np.stack([self._synth(self.coefficients(dt, NoiseStream(seed, int(s), step), substeps)
                                   * self.sqrt_q) for s in samples])
        return dW.real.astype(complex) if self.real else dW

    # drift and diffusion ---------------------------------------------------

    def ito_correction_values(self, u: np.ndarray, rho=None) -> np.ndarray:
        if not self.spec.case.multiplicative:
            return np.zeros_like(u)
        if rho is None:
            rho = np.abs(u) ** 2
        g = self.spec.g.value(rho)
        out = -0.5 * self.sum_abs2 * g * g * u
        if not self.real:
            gp = self.spec.g.prime(rho)
            out = out - 1j * g * gp * rho * u * self.sum_im
        return out

    def diffusion_values(self, u: np.ndarray, dW: np.ndarray, rho=None) -> np.ndarray:
        if not self.spec.case.multiplicative:
            return np.broadcast_to(dW, np.broadcast_shapes(np.shape(u), np.shape(dW))).copy()
        if rho is None:
            rho = np.abs(u) ** 2
        return 1j * self.spec.g.value(rho) * u * dW


def sample_increment(spec: NoiseSpec, grid: Grid, dt: float, stream: NoiseStream) -> ComplexField:
    return ComplexField(grid, NoiseModel(spec, grid).increment(dt, stream))


def ito_correction(u: ComplexField, spec: NoiseSpec) -> ComplexField:
    """Drift turning ``i g(|u|^2) u dW`` into the star integral (zero for additive noise)."""
    return u.with_values(NoiseModel(spec, u.grid).ito_correction_values(u.values))


def diffusion_apply(u: ComplexField, spec: NoiseSpec, dW: ComplexField) -> ComplexField:
    return u.with_values(NoiseModel(spec, u.grid).diffusion_values(u.values, dW.values))

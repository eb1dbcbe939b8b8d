"""Time integration of the regularized stochastic logarithmic Schroedinger equation.

Three steppers share one batched engine:

``EXP_EULER``
    exponential Euler on the Ito form: the star-integral correction drift is
    added explicitly,
    ``u+ = S(dt)[u + dt (N(u) + C(u)) + G(u) dW]``.
``SPLIT_STEP``
    Lie splitting on the Stratonovich form.  The pointwise substep
    ``u * exp(i (lam f dt + g dW))`` is exact, and so is ``S(dt)``.  Requires
    additive or real multiplicative noise.
``MIDPOINT``
    implicit midpoint in the interaction picture, solved by fixed-point
    iteration.  Stratonovich, so no correction drift.

Rows of a batch may carry different regularization parameters and sample
indices; rows with the same sample index consume identical increments.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import observables as obs
from .errors import ConfigurationError, ParameterError
from .grid import ComplexField, Grid
from .noise import NoiseCase, NoiseModel, NoiseSpec, NoiseStream
from .regularization import EquationSpec, Family, f_values


class Scheme(str, Enum):
    EXP_EULER = "exp_euler"
    SPLIT_STEP = "split_step"
    MIDPOINT = "midpoint"


class Status(str, Enum):
    RUNNING = "running"
    FINISHED = "finished"
    BLOW_UP = "blow_up"
    NO_CONVERGENCE = "no_convergence"


@dataclass(frozen=True)
class SolverConfig:
    scheme: Scheme = Scheme.SPLIT_STEP
    dt: float = 1e-3
    t_end: float = 1.0
    truncation_radius: float | None = None
    truncation_plateau: float | None = None
    truncation_norm: str = "h2"
    midpoint_tol: float = 1e-12
    midpoint_max_iter: int = 50
    dealias: bool = True
    blowup_threshold: float = 1e12
    observe_every: int = 10
    noise_substeps: int = 1
    laplacian: bool = True

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ParameterError("t_end must be nonnegative")
        if self.t_end > 0 and self.dt > self.t_end * (1 + 1e-12):
            raise ParameterError("dt exceeds t_end")
        if self.truncation_radius is not None and not self.truncation_radius > 0:
            raise ParameterError("truncation radius must be positive")
        if self.truncation_norm not in ("h1", "h2"):
            raise ParameterError("truncation norm must be 'h1' or 'h2'")
        if self.observe_every < 1 or self.noise_substeps < 1:
            raise ParameterError("observe_every and noise_substeps must be >= 1")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ParameterError("t_end must be an integer multiple of dt")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


def smoothstep_cutoff(m, radius: float, plateau: float | None = None):
    """C1 cutoff: 1 on ``[0, plateau]``, 0 beyond ``2 radius``, cubic blend between."""
    p = radius if plateau is None else plateau
    top = 2.0 * radius
    if not p < top:
        raise ParameterError("cutoff plateau must lie below 2R")
    s = np.clip((top - np.asarray(m, dtype=float)) / (top - p), 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def truncation_factor(running_max, cfg: SolverConfig):
    """Cutoff applied to the running supremum of the configured norm."""
    if cfg.truncation_radius is None:
        return np.ones_like(np.asarray(running_max, dtype=float))
    return smoothstep_cutoff(running_max, cfg.truncation_radius, cfg.truncation_plateau)


class Stepper:
    """One time step for a batch of rows sharing grid, equation and noise law."""

    def __init__(self, grid: Grid, eq: EquationSpec, noise: NoiseSpec, cfg: SolverConfig,
                 eps=None):
        if cfg.scheme is Scheme.SPLIT_STEP and noise.case is NoiseCase.MULTIPLICATIVE_COMPLEX:
            raise ConfigurationError("split-step is exact only for additive or real noise")
        self.grid, self.eq, self.cfg = grid, eq, cfg
        self.noise = noise
        self.model = NoiseModel(noise, grid)
        self.family = eq.reg.family
        e = eq.reg.epsilon if eps is None else np.asarray(eps, dtype=float)
        self.eps = np.asarray(e, dtype=float)
        dt = cfg.dt
        if cfg.laplacian:
            self.full = grid.semigroup_multiplier(dt)
            self.half = grid.semigroup_multiplier(0.5 * dt)
        else:
            self.full = self.half = None
        self.last_iterations = 0

    def _eps(self, u):
        e = self.eps
        return e.reshape(e.shape + (1,) * (u.ndim - e.ndim))

    def _prop(self, u, which):
        mult = self.full if which == "full" else self.half
        if mult is None:
            return u
        return self.grid.apply_multiplier(u, mult)

    def _f(self, rho, u):
        with np.errstate(divide="ignore"):
            f = f_values(rho, self.family, self._eps(u))
        if self.family is Family.EXACT:
            f = np.where(rho > 0, f, 0.0)
        return f

    def step(self, u: np.ndarray, dW: np.ndarray, theta=None):
        """Advance ``u`` by one step; returns ``(u_new, converged_mask)``."""
        th = 1.0 if theta is None else np.asarray(theta).reshape(
            np.shape(theta) + (1,) * self.grid.dim)
        scheme = self.cfg.scheme
        if scheme is Scheme.EXP_EULER:
            return self._exp_euler(u, dW, th), None
        if scheme is Scheme.SPLIT_STEP:
            return self._split(u, dW, th), None
        return self._midpoint(u, dW, th)

    def _exp_euler(self, u, dW, th):
        g, dt = self.grid, self.cfg.dt
        rho = np.abs(u) ** 2
        drift = 1j * self.eq.lam * self._f(rho, u) * u + self.model.ito_correction_values(u, rho)
        incr = th * (dt * drift + self.model.diffusion_values(u, dW, rho))
        if self.cfg.dealias:
            c = g.forward(u) + g.spectral.dealias_mask * g.forward(incr)
            if self.full is not None:
                c = c * self.full
            return g.inverse(c)
        return self._prop(u + incr, "full")

    def _split(self, u, dW, th):
        dt = self.cfg.dt
        rho = np.abs(u) ** 2
        phase = th * (self.eq.lam * dt) * self._f(rho, u)
        if self.noise.case is NoiseCase.MULTIPLICATIVE_REAL:
            phase = phase + th * self.noise.g.value(rho) * dW.real
        v = self._prop(u * np.exp(1j * phase), "full")
        if self.noise.case is NoiseCase.ADDITIVE:
            v = v + th * dW
        return v

    def _midpoint(self, u, dW, th):
        dt, cfg = self.cfg.dt, self.cfg
        lam = self.eq.lam
        v = self._prop(u, "half")

        def rhs(m):
            rho = np.abs(m) ** 2
            out = dt * 1j * lam * self._f(rho, m) * m + self.model.diffusion_values(m, dW, rho)
            return th * out

        w = v + rhs(v)
        axes = self.grid.axes
        done = np.zeros(u.shape[:u.ndim - self.grid.dim], dtype=bool)
        it = 0
        for it in range(1, cfg.midpoint_max_iter + 1):
            w_new = v + rhs(0.5 * (v + w))
            err = np.max(np.abs(w_new - w), axis=axes)
            scale = np.maximum(1.0, np.max(np.abs(w_new), axis=axes))
            w = w_new
            done = err <= cfg.midpoint_tol * scale
            if np.all(done):
                break
        self.last_iterations = it
        return self._prop(w, "half"), done


@dataclass
class BatchResult:
    u: np.ndarray
    status: np.ndarray
    steps: np.ndarray
    noise_digests: list | None = None
    max_iterations: int = 0


def run_batch(grid: Grid, u0: np.ndarray, eq: EquationSpec, noise: NoiseSpec, cfg: SolverConfig,
              samples, eps=None, observe=None, hash_noise: bool = False) -> BatchResult:
    """Integrate a batch of rows from ``t = 0`` to ``cfg.t_end``.

    ``u0`` has shape ``(B, *grid.shape)`` (or broadcasts to it); ``samples`` gives
    each row's Monte Carlo index and ``eps`` its regularization parameter.
    ``observe(step, t, u, alive)`` is called at step 0, every
    ``cfg.observe_every`` steps and at the final step.
    """
    samples = np.asarray(samples, dtype=np.int64)
    B = samples.shape[0]
    u = np.array(np.broadcast_to(u0, (B,) + grid.shape), dtype=complex)
    if eps is None:
        eps = np.full(B, eq.reg.epsilon)
    eps = np.asarray(eps, dtype=float)
    stepper = Stepper(grid, eq, noise, cfg, eps)
    model = stepper.model
    uniq, inv = np.unique(samples, return_inverse=True)
    status = np.array([Status.RUNNING] * B, dtype=object)
    alive = np.ones(B, dtype=bool)
    steps_done = np.zeros(B, dtype=np.int64)
    digests = [hashlib.blake2b(digest_size=16) for _ in range(B)] if hash_noise else None
    trunc = cfg.truncation_radius is not None
    norm_fn = grid.h2sq if cfg.truncation_norm == "h2" else grid.h1sq
    running = np.sqrt(norm_fn(u)) if trunc else None
    n = cfg.n_steps
    max_it = 0

    if observe is not None:
        observe(0, 0.0, u, alive.copy())
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(n):
            dW_u = model.increments(cfg.dt, noise.master_seed, uniq, step, cfg.noise_substeps)
            dW = dW_u[inv]
            if digests is not None:
                for r in range(B):
                    digests[r].update(dW[r].tobytes())
            theta = truncation_factor(running, cfg) if trunc else None
            u_new, conv = stepper.step(u, dW, theta)
            max_it = max(max_it, stepper.last_iterations)
            bad = ~np.all(np.isfinite(u_new), axis=grid.axes)
            if conv is not None:
                nc = alive & ~conv & ~bad
                status[nc] = Status.NO_CONVERGENCE
                alive &= ~nc
            blow = alive & bad
            status[blow] = Status.BLOW_UP
            alive &= ~blow
            u = np.where(alive.reshape((B,) + (1,) * grid.dim), u_new, u)
            steps_done[alive] += 1
            if trunc:
                running = np.maximum(running, np.where(alive, np.sqrt(norm_fn(u)), running))
            last = step + 1 == n
            if (step + 1) % cfg.observe_every == 0 or last:
                h1 = grid.h1sq(u)
                over = alive & ~(h1 <= cfg.blowup_threshold ** 2)
                status[over] = Status.BLOW_UP
                alive &= ~over
                if observe is not None:
                    observe(step + 1, (step + 1) * cfg.dt, u, alive.copy())
            if not alive.any():
                break
    status[alive] = Status.FINISHED
    return BatchResult(u=u, status=status, steps=steps_done,
                       noise_digests=[d.hexdigest() for d in digests] if digests else None,
                       max_iterations=max_it)


# single-path API ------------------------------------------------------------

@dataclass(frozen=True)
class PathState:
    t: float
    u: ComplexField
    step_index: int
    stream: NoiseStream
    status: Status = Status.RUNNING
    running_max: float = 0.0


@dataclass
class PathRecord:
    """Outcome of :func:`evolve` for one Monte Carlo path."""

    u: ComplexField
    status: Status
    t: float
    steps: int
    series: obs.ObservableSeries
    noise_digest: str | None = None


def initial_state(u0: ComplexField, noise: NoiseSpec, sample_index: int = 0,
                  cfg: SolverConfig | None = None) -> PathState:
    rm = 0.0
    if cfg is not None and cfg.truncation_radius is not None:
        f = u0.grid.h2sq if cfg.truncation_norm == "h2" else u0.grid.h1sq
        rm = float(np.sqrt(f(u0.values)))
    return PathState(0.0, u0, 0, NoiseStream(noise.master_seed, sample_index), running_max=rm)


def _step(state: PathState, eq, noise, cfg, scheme: Scheme) -> PathState:
    if state.status is not Status.RUNNING:
        raise ConfigurationError("cannot step a path that is not running")
    cfg = cfg.with_(scheme=scheme)
    grid = state.u.grid
    stepper = Stepper(grid, eq, noise, cfg)
    dW = stepper.model.increment(cfg.dt, state.stream, cfg.noise_substeps)
    theta = None
    if cfg.truncation_radius is not None:
        theta = truncation_factor(np.array(state.running_max), cfg)
    with np.errstate(over="ignore", invalid="ignore"):
        u_new, conv = stepper.step(state.u.values, dW, theta)
    status = Status.RUNNING
    if conv is not None and not bool(np.all(conv)):
        status = Status.NO_CONVERGENCE
    if not np.all(np.isfinite(u_new)) or not grid.h1sq(u_new) <= cfg.blowup_threshold ** 2:
        status = Status.BLOW_UP
    if status is not Status.RUNNING:
        return replace(state, status=status)
    rm = state.running_max
    if cfg.truncation_radius is not None:
        f = grid.h2sq if cfg.truncation_norm == "h2" else grid.h1sq
        rm = max(rm, float(np.sqrt(f(u_new))))
    return PathState(state.t + cfg.dt, state.u.with_values(u_new), state.step_index + 1,
                     state.stream.advance(), status, rm)


def step_exp_euler(state: PathState, eq: EquationSpec, noise: NoiseSpec, cfg: SolverConfig) -> PathState:
    return _step(state, eq, noise, cfg, Scheme.EXP_EULER)


def step_splitstep(state: PathState, eq: EquationSpec, noise: NoiseSpec, cfg: SolverConfig) -> PathState:
    return _step(state, eq, noise, cfg, Scheme.SPLIT_STEP)


def step_midpoint(state: PathState, eq: EquationSpec, noise: NoiseSpec, cfg: SolverConfig) -> PathState:
    return _step(state, eq, noise, cfg, Scheme.MIDPOINT)


DEFAULT_OBSERVERS = ("mass", "h1sq", "energy")


def evolve(u0: ComplexField, eq: EquationSpec, noise: NoiseSpec, cfg: SolverConfig,
           observers=DEFAULT_OBSERVERS, sample_index: int = 0, alpha: float = 1.0,
           hash_noise: bool = False) -> PathRecord:
    """Run one path from ``u0`` to ``cfg.t_end``, sampling the named observables."""
    grid = u0.grid
    names = list(observers)
    series = obs.ObservableSeries(names)

    def observe(step, t, u, alive):
        if alive[0]:
            series.append(t, obs.evaluate(names, grid, u, eq, [eq.reg.epsilon], alpha)[:, 0])

    if cfg.n_steps == 0:
        observe(0, 0.0, u0.values[None], np.array([True]))
        return PathRecord(u0, Status.FINISHED, 0.0, 0, series)
    res = run_batch(grid, u0.values[None], eq, noise, cfg, [sample_index],
                    observe=observe, hash_noise=hash_noise)
    steps = int(res.steps[0])
    return PathRecord(ComplexField(grid, res.u[0]), res.status[0], steps * cfg.dt, steps,
                      series, res.noise_digests[0] if res.noise_digests else None)

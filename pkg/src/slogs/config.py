"""Experiment configuration: TOML with dotted keys, validated against a fixed schema.

A config is a flat set of ``section.key = value`` entries (TOML tables are
flattened to the same form).  Unknown keys and ill-typed values are rejected.
The complete key list lives in :data:`SCHEMA`.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigurationError, ParameterError
from .grid import Boundary, ComplexField, Grid
from .noise import GFamily, GKind, NoiseCase, NoiseSpec, Spectrum
from .regularization import EquationSpec, Family, RegKind
from .solver import Scheme, SolverConfig


class Kind(str, Enum):
    EPS_CONVERGENCE = "eps_convergence"
    TEMPORAL_HOELDER = "temporal_hoelder"
    MOMENT_SWEEP = "moment_sweep"
    MASS_DRIFT = "mass_drift"
    INEQUALITY_CHECK = "inequality_check"
    SINGLE_RUN = "single_run"


class Profile(str, Enum):
    GAUSSIAN = "gaussian"
    SECH = "sech"
    GAUSSON = "gausson"
    CONSTANT = "constant"


def _float_list(v):
    if not isinstance(v, list):
        raise TypeError("expected a list")
    return [float(_num(x)) for x in v]


def _int_list(v):
    if not isinstance(v, list):
        raise TypeError("expected a list")
    return [_int(x) for x in v]


def _str_list(v):
    if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
        raise TypeError("expected a list of strings")
    return list(v)


def _num(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError("expected a number")
    return float(v)


def _int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError("expected an integer")
    return int(v)


def _bool(v):
    if not isinstance(v, bool):
        raise TypeError("expected true or false")
    return v


def _str(v):
    if not isinstance(v, str):
        raise TypeError("expected a string")
    return v


# key -> (parser, default); a default of None means "absent"
SCHEMA = {
    "experiment.kind": (_str, "single_run"),
    "experiment.n_samples": (_int, 1),
    "experiment.batch_size": (_int, 8),
    "experiment.eps_ladder": (_float_list, None),
    "experiment.eps_reference": (_num, None),
    "experiment.moment_orders": (_int_list, [2]),
    "experiment.hoelder_lags": (_float_list, None),
    "experiment.alpha": (_num, 1.0),
    "experiment.schemes": (_str_list, None),
    "experiment.cases": (_str_list, None),
    "experiment.g_families": (_str_list, None),
    "experiment.hash_noise": (_bool, True),
    "experiment.max_excluded_fraction": (_num, 0.05),
    "experiment.check_scale": (_num, 1.0),
    "experiment.output_dir": (_str, "out"),
    "grid.dim": (_int, 1),
    "grid.length": (_num, 2 * np.pi),
    "grid.n": (_int, 256),
    "grid.boundary": (_str, "periodic"),
    "eq.lambda": (_num, 1.0),
    "eq.family": (_str, "log_rational"),
    "eq.epsilon": (_num, 1e-2),
    "noise.case": (_str, "multiplicative_real"),
    "noise.decay": (_num, 2.0),
    "noise.amplitude": (_num, 0.0),
    "noise.cutoff": (_int, 16),
    "noise.g": (_str, "one"),
    "noise.g_c": (_num, 1.0),
    "noise.seed": (_int, 0),
    "solver.scheme": (_str, "split_step"),
    "solver.dt": (_num, 1e-3),
    "solver.t_end": (_num, 1.0),
    "solver.truncation_radius": (_num, None),
    "solver.truncation_plateau": (_num, None),
    "solver.truncation_norm": (_str, "h2"),
    "solver.midpoint_tol": (_num, 1e-12),
    "solver.midpoint_max_iter": (_int, 50),
    "solver.dealias": (_bool, True),
    "solver.blowup_threshold": (_num, 1e12),
    "solver.observe_every": (_int, 10),
    "solver.noise_substeps": (_int, 1),
    "init.profile": (_str, "gaussian"),
    "init.amplitude": (_num, 1.0),
    "init.width": (_num, 1.0),
    "init.center": (_num, 0.0),
    "init.momentum": (_num, 0.0),
}


def flatten(tree: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def resolve(raw: dict) -> dict:
    """Validate a flat or nested mapping and fill defaults."""
    flat = flatten(raw)
    unknown = sorted(set(flat) - set(SCHEMA))
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
    out = {}
    for key, (parse, default) in SCHEMA.items():
        if flat.get(key) is not None:
            try:
                out[key] = parse(flat[key])
            except (TypeError, ValueError) as exc:
                raise ConfigurationError(f"{key}: {exc}") from None
        else:
            out[key] = default
    return out


@dataclass(frozen=True)
class InitialProfile:
    profile: Profile = Profile.GAUSSIAN
    amplitude: float = 1.0
    width: float = 1.0
    center: float = 0.0
    momentum: float = 0.0

    def field(self, grid: Grid, lam: float = 1.0) -> ComplexField:
        r2 = sum((c - self.center) ** 2 for c in grid.mesh)
        phase = np.exp(1j * self.momentum * grid.mesh[0])
        a = self.amplitude
        if self.profile is Profile.GAUSSIAN:
            vals = a * np.exp(-r2 / (2 * self.width ** 2))
        elif self.profile is Profile.SECH:
            vals = a / np.cosh(np.sqrt(r2) / self.width)
        elif self.profile is Profile.GAUSSON:
            if not lam > 0:
                raise ParameterError("the Gausson profile needs lambda > 0")
            vals = a * np.exp(-0.5 * lam * r2)
        else:
            vals = np.full(grid.shape, a, dtype=float)
        return ComplexField(grid, vals * phase)


@dataclass(frozen=True)
class ExperimentSpec:
    kind: Kind
    grid: Grid
    eq: EquationSpec
    noise: NoiseSpec
    solver: SolverConfig
    init: InitialProfile
    n_samples: int = 1
    batch_size: int = 8
    eps_ladder: tuple = ()
    eps_reference: float | None = None
    moment_orders: tuple = (2,)
    hoelder_lags: tuple = ()
    alpha: float = 1.0
    schemes: tuple = ()
    cases: tuple = ()
    g_families: tuple = ()
    hash_noise: bool = True
    max_excluded_fraction: float = 0.05
    check_scale: float = 1.0
    output_dir: str = "out"
    resolved: dict = field(default_factory=dict, compare=False)

    def initial_field(self) -> ComplexField:
        return self.init.field(self.grid, self.eq.lam)

    def with_seed(self, seed: int) -> "ExperimentSpec":
        from dataclasses import replace
        res = dict(self.resolved, **{"noise.seed": seed})
        return replace(self, noise=self.noise.with_seed(seed), resolved=res)


def _enum(cls, value, key):
    try:
        return cls(value)
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise ConfigurationError(f"{key}: {value!r} is not one of {choices}") from None


def _parse_g(name: str, c: float) -> GKind:
    return GKind(_enum(GFamily, name, "noise.g"), c)


def build(raw: dict) -> ExperimentSpec:
    """Turn a (flat or nested) mapping into a validated :class:`ExperimentSpec`."""
    r = resolve(raw)
    try:
        return _build(r)
    except (ParameterError, ConfigurationError) as exc:
        raise ConfigurationError(str(exc)) from None


def _build(r: dict) -> ExperimentSpec:
    kind = _enum(Kind, r["experiment.kind"], "experiment.kind")
    grid = Grid(r["grid.dim"], r["grid.length"], r["grid.n"],
                _enum(Boundary, r["grid.boundary"], "grid.boundary"))
    family = _enum(Family, r["eq.family"], "eq.family")
    eps = 0.0 if family is Family.EXACT else r["eq.epsilon"]
    eq = EquationSpec(r["eq.lambda"], RegKind(family, eps))
    seed = r["noise.seed"]
    if seed < 0:
        raise ConfigurationError("noise.seed must be nonnegative")
    noise = NoiseSpec(_enum(NoiseCase, r["noise.case"], "noise.case"),
                      Spectrum(r["noise.decay"], r["noise.amplitude"], r["noise.cutoff"]),
                      _parse_g(r["noise.g"], r["noise.g_c"]), seed)
    solver = SolverConfig(
        scheme=_enum(Scheme, r["solver.scheme"], "solver.scheme"),
        dt=r["solver.dt"], t_end=r["solver.t_end"],
        truncation_radius=r["solver.truncation_radius"],
        truncation_plateau=r["solver.truncation_plateau"],
        truncation_norm=r["solver.truncation_norm"],
        midpoint_tol=r["solver.midpoint_tol"], midpoint_max_iter=r["solver.midpoint_max_iter"],
        dealias=r["solver.dealias"], blowup_threshold=r["solver.blowup_threshold"],
        observe_every=r["solver.observe_every"], noise_substeps=r["solver.noise_substeps"])
    init = InitialProfile(_enum(Profile, r["init.profile"], "init.profile"), r["init.amplitude"],
                          r["init.width"], r["init.center"], r["init.momentum"])
    if init.profile is Profile.GAUSSON and not eq.lam > 0:
        raise ConfigurationError("the Gausson profile needs eq.lambda > 0")
    if r["experiment.n_samples"] < 1 or r["experiment.batch_size"] < 1:
        raise ConfigurationError("n_samples and batch_size must be >= 1")
    orders = tuple(r["experiment.moment_orders"])
    if not orders or any(p < 2 or p % 2 for p in orders):
        raise ConfigurationError("moment orders must be even integers >= 2")
    ladder = tuple(r["experiment.eps_ladder"] or ())
    ref = r["experiment.eps_reference"]
    lags = tuple(r["experiment.hoelder_lags"] or ())
    if kind in (Kind.EPS_CONVERGENCE, Kind.MOMENT_SWEEP):
        if not ladder:
            raise ConfigurationError("experiment.eps_ladder is required")
        if any(not 0 < e < 1 for e in ladder):
            raise ConfigurationError("ladder entries must lie in (0, 1)")
        if any(b >= a for a, b in zip(ladder, ladder[1:])):
            raise ConfigurationError("eps ladder must be strictly decreasing")
        if family is Family.EXACT:
            raise ConfigurationError("an epsilon sweep needs a regularized family")
    if kind is Kind.EPS_CONVERGENCE:
        if ref is None or not 0 < ref <= min(ladder):
            raise ConfigurationError("eps_reference must lie in (0, min(eps_ladder)]")
    if kind is Kind.TEMPORAL_HOELDER:
        if not lags:
            raise ConfigurationError("experiment.hoelder_lags is required")
        stride = solver.dt * solver.observe_every
        for lag in lags:
            if lag < 10 * solver.dt - 1e-12:
                raise ConfigurationError(f"lag {lag} is below 10 dt")
            if abs(lag / stride - round(lag / stride)) > 1e-6:
                raise ConfigurationError(f"lag {lag} is not a multiple of dt * observe_every")
            if lag > solver.t_end:
                raise ConfigurationError(f"lag {lag} exceeds t_end")
    schemes = tuple(_enum(Scheme, s, "experiment.schemes") for s in (r["experiment.schemes"] or ()))
    cases = tuple(_enum(NoiseCase, c, "experiment.cases") for c in (r["experiment.cases"] or ()))
    gfam = tuple(_enum(GFamily, g, "experiment.g_families") for g in (r["experiment.g_families"] or ()))
    if not 0 <= r["experiment.max_excluded_fraction"] <= 1:
        raise ConfigurationError("max_excluded_fraction must lie in [0, 1]")
    return ExperimentSpec(
        kind=kind, grid=grid, eq=eq, noise=noise, solver=solver, init=init,
        n_samples=r["experiment.n_samples"], batch_size=r["experiment.batch_size"],
        eps_ladder=ladder, eps_reference=ref, moment_orders=orders, hoelder_lags=lags,
        alpha=r["experiment.alpha"], schemes=schemes, cases=cases, g_families=gfam,
        hash_noise=r["experiment.hash_noise"],
        max_excluded_fraction=r["experiment.max_excluded_fraction"],
        check_scale=r["experiment.check_scale"], output_dir=r["experiment.output_dir"],
        resolved=r)


def loads(text: str) -> ExperimentSpec:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"config is not valid TOML: {exc}") from None
    return build(raw)


def load(path) -> ExperimentSpec:
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file not found: {p}")
    return loads(p.read_text(encoding="utf-8"))

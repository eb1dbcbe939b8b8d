"""Monte Carlo drivers: epsilon-convergence, temporal Hoelder, moment sweeps,
mass drift and the inequality suites, with reproducible persistence.

Samples are split into fixed chunks of ``batch_size`` consecutive indices.
Chunking does not depend on the number of workers and every chunk draws its
increments from counter-based streams, so all outputs are bit-identical for
any worker count.  Aggregation always runs in ascending sample order.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import inequalities
from . import observables as obs
from .config import ExperimentSpec, Kind
from .errors import ConfigurationError
from .noise import GFamily, GKind, NoiseCase, NoiseModel
from .solver import Scheme, Status, run_batch
from .stats import fit_loglog_slope, mean_stderr

log = logging.getLogger("slogs")

SWEEP_CHANNELS = ("mass", "h1sq", "h2sq", "l2alpha_sq", "energy")
SERIES_CHANNELS = ("mass", "kinetic", "entropy", "energy", "h1sq", "h2sq")


@dataclass
class Table:
    header: list
    rows: list = field(default_factory=list)

    def write(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header)
            for row in self.rows:
                w.writerow([_fmt(v) for v in row])

    def column(self, name: str) -> list:
        i = self.header.index(name)
        return [r[i] for r in self.rows]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


@dataclass
class RunRecord:
    kind: str
    spec: ExperimentSpec
    sample_status: list
    tables: dict
    fits: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    started: str = ""
    finished: str = ""
    workers: int = 1

    @property
    def n_samples(self) -> int:
        return len(self.sample_status)

    @property
    def excluded(self) -> int:
        return sum(s != Status.FINISHED.value for s in self.sample_status)

    @property
    def completed(self) -> int:
        return self.n_samples - self.excluded

    @property
    def valid(self) -> bool:
        if not self.sample_status:
            return True
        return self.excluded <= self.spec.max_excluded_fraction * self.n_samples

    @property
    def summary(self) -> Table:
        return self.tables["summary"]

    def manifest(self) -> dict:
        return {
            "kind": self.kind,
            "code_version": __version__,
            "master_seed": self.spec.noise.master_seed,
            "noise_h1_trace_tail": NoiseModel(self.spec.noise, self.spec.grid).h1_trace_tail(),
            "config": self.spec.resolved,
            "started": self.started,
            "finished": self.finished,
            "workers": self.workers,
            "n_samples": self.n_samples,
            "completed": self.completed,
            "excluded": self.excluded,
            "valid": self.valid,
            "sample_status": self.sample_status,
            "fits": self.fits,
            "checks": self.checks,
            "extra": self.extra,
        }

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, table in self.tables.items():
            table.write(out / f"{name}.csv")
        for name, series in self.series.items():
            series.write_csv(out / f"{name}.csv")
        with open(out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(_jsonable(self.manifest()), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return out


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if hasattr(v, "value"):
        return v.value
    return v


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# chunked execution ----------------------------------------------------------

def chunks(n: int, size: int) -> list:
    return [list(range(a, min(a + size, n))) for a in range(0, n, size)]


def _pmap(fn, args: list, workers: int) -> list:
    if workers <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=min(workers, len(args))) as pool:
        return list(pool.map(fn, *zip(*args)))


def _row_ok(status) -> np.ndarray:
    return np.array([s is Status.FINISHED for s in status])


def _statuses(ok_rows: np.ndarray, status_rows: np.ndarray) -> list:
    """Per-sample status: finished only when every row of the sample finished."""
    out = []
    for ok, st in zip(ok_rows, status_rows):
        if ok.all():
            out.append(Status.FINISHED.value)
        else:
            out.append(next(s.value for s in st if s is not Status.FINISHED))
    return out


def _fit(xs, ys, es):
    pts = [(x, y, e) for x, y, e in zip(xs, ys, es) if y > 0 and math.isfinite(y)]
    if len(pts) < 3 or len(pts) < len(xs):
        return None
    return fit_loglog_slope(pts).as_dict()


# epsilon convergence -------------------------------------------------------

def _conv_chunk(spec: ExperimentSpec, samples: list) -> dict:
    eps = np.array(list(spec.eps_ladder) + [spec.eps_reference])
    E, S = len(eps), len(samples)
    orders = spec.moment_orders
    grid = spec.grid
    rows_s = np.repeat(samples, E)
    rows_e = np.tile(eps, S)
    sup = np.zeros((S, E - 1))

    def observe(step, t, u, alive):
        uu = u.reshape((S, E) + grid.shape)
        d = grid.l2sq(uu[:, :E - 1] - uu[:, E - 1:])
        np.maximum(sup, d, out=sup)

    res = run_batch(grid, spec.initial_field().values, spec.eq, spec.noise, spec.solver,
                    rows_s, rows_e, observe=observe, hash_noise=spec.hash_noise)
    status = res.status.reshape(S, E)
    digests = None
    if res.noise_digests is not None:
        digests = [res.noise_digests[i * E:(i + 1) * E] for i in range(S)]
    # err^p with err = sup ||.||_{L2}, i.e. (sup of the squared norm)^(p/2)
    moments = np.stack([sup ** (p / 2) for p in orders], axis=-1)
    return {"moments": moments, "status": status, "digests": digests}


def run_eps_convergence(spec: ExperimentSpec, workers: int = 1) -> RunRecord:
    if spec.kind is not Kind.EPS_CONVERGENCE:
        raise ConfigurationError("spec is not an eps-convergence experiment")
    started = _now()
    parts = _pmap(_conv_chunk, [(spec, c) for c in chunks(spec.n_samples, spec.batch_size)], workers)
    moments = np.concatenate([p["moments"] for p in parts])
    status = np.concatenate([p["status"] for p in parts])
    ok = np.array([_row_ok(s) for s in status])
    sample_status = _statuses(ok, status)
    use = ok.all(axis=1)
    coupled = None
    digests = []
    if spec.hash_noise:
        for p in parts:
            digests.extend(p["digests"])
        coupled = all(len(set(d)) == 1 for d in digests)
    ladder = list(spec.eps_ladder)
    header = ["epsilon"]
    for p in spec.moment_orders:
        header += [f"err_p{p}_mean", f"err_p{p}_stderr"]
    header.append("n_used")
    table = Table(header)
    stats = {}
    for j, p in enumerate(spec.moment_orders):
        m, se = mean_stderr(moments[use, :, j]) if use.any() else (
            np.full(len(ladder), np.nan), np.full(len(ladder), np.nan))
        stats[p] = (np.atleast_1d(m), np.atleast_1d(se))
    for i, e in enumerate(ladder):
        row = [e]
        for p in spec.moment_orders:
            row += [stats[p][0][i], stats[p][1][i]]
        row.append(int(use.sum()))
        table.rows.append(row)
    fits, checks = {}, {}
    for p in spec.moment_orders:
        m, se = stats[p]
        fits[f"err_p{p}"] = _fit(ladder, m, se)
        inc = [m[i + 1] <= m[i] + 3 * math.hypot(se[i], se[i + 1]) for i in range(len(m) - 1)]
        checks[f"err_p{p}_monotone_3se"] = bool(all(inc))
    if coupled is not None:
        checks["noise_coupling_identical"] = coupled
    per_sample = Table(["sample", "status"] + [f"sup_err_sq_eps{e!r}" for e in ladder])
    for s in range(spec.n_samples):
        per_sample.rows.append([s, sample_status[s]] + list(moments[s, :, 0] ** (2 / spec.moment_orders[0])))
    extra = {"eps_reference": spec.eps_reference}
    if spec.hash_noise:
        extra["noise_digests"] = [d[0] for d in digests]
    return RunRecord("eps_convergence", spec, sample_status,
                     {"summary": table, "samples": per_sample}, fits, checks, extra,
                     started=started, finished=_now(), workers=workers)


# temporal Hoelder -----------------------------------------------------------

def _hoelder_chunk(spec: ExperimentSpec, samples: list) -> dict:
    grid, cfg = spec.grid, spec.solver
    stride = cfg.dt * cfg.observe_every
    snaps = []

    def observe(step, t, u, alive):
        if step % cfg.observe_every == 0:
            snaps.append(u.copy())

    res = run_batch(grid, spec.initial_field().values, spec.eq, spec.noise, cfg,
                    np.array(samples), observe=observe)
    U = np.array(snaps)
    S = len(samples)
    out = np.zeros((S, len(spec.hoelder_lags), len(spec.moment_orders)))
    for i, lag in enumerate(spec.hoelder_lags):
        k = int(round(lag / stride))
        if k >= U.shape[0]:
            out[:, i] = np.nan
            continue
        d2 = grid.l2sq(U[k:] - U[:-k])
        for j, p in enumerate(spec.moment_orders):
            out[:, i, j] = np.mean(d2 ** (p / 2), axis=0)
    return {"moments": out, "status": res.status}


def run_hoelder(spec: ExperimentSpec, workers: int = 1) -> RunRecord:
    if spec.kind is not Kind.TEMPORAL_HOELDER:
        raise ConfigurationError("spec is not a temporal Hoelder experiment")
    started = _now()
    parts = _pmap(_hoelder_chunk, [(spec, c) for c in chunks(spec.n_samples, spec.batch_size)], workers)
    moments = np.concatenate([p["moments"] for p in parts])
    status = np.concatenate([p["status"] for p in parts])
    ok = _row_ok(status)
    sample_status = [s.value for s in status]
    lags = list(spec.hoelder_lags)
    header = ["lag"]
    for p in spec.moment_orders:
        header += [f"moment_p{p}_mean", f"moment_p{p}_stderr"]
    header.append("n_used")
    table = Table(header)
    fits = {}
    cols = {}
    for j, p in enumerate(spec.moment_orders):
        if ok.any():
            cols[p] = mean_stderr(moments[ok, :, j])
        else:
            cols[p] = (np.full(len(lags), np.nan), np.full(len(lags), np.nan))
        fits[f"moment_p{p}"] = _fit(lags, *cols[p]) if len(lags) >= 3 else None
    for i, lag in enumerate(lags):
        row = [lag]
        for p in spec.moment_orders:
            row += [cols[p][0][i], cols[p][1][i]]
        row.append(int(ok.sum()))
        table.rows.append(row)
    extra = {"expected_slope": {str(p): p / 2 for p in spec.moment_orders}}
    return RunRecord("temporal_hoelder", spec, sample_status, {"summary": table}, fits, {}, extra,
                     started=started, finished=_now(), workers=workers)


# moment sweep ---------------------------------------------------------------

def _sweep_chunk(spec: ExperimentSpec, samples: list) -> dict:
    ladder = np.array(spec.eps_ladder)
    E, S = len(ladder), len(samples)
    grid = spec.grid
    rows_s = np.repeat(samples, E)
    rows_e = np.tile(ladder, S)
    sup = np.zeros((len(SWEEP_CHANNELS), S * E))

    def observe(step, t, u, alive):
        v = obs.evaluate(SWEEP_CHANNELS, grid, u, spec.eq, rows_e, spec.alpha)
        v[SWEEP_CHANNELS.index("energy")] = np.abs(v[SWEEP_CHANNELS.index("energy")])
        np.maximum(sup, v, out=sup)

    res = run_batch(grid, spec.initial_field().values, spec.eq, spec.noise, spec.solver,
                    rows_s, rows_e, observe=observe)
    return {"sup": sup.reshape(len(SWEEP_CHANNELS), S, E).transpose(1, 2, 0),
            "status": res.status.reshape(S, E)}


def _channel_moment(name: str, sup, p: int):
    # norms are tracked squared; the energy channel holds sup |H|
    return sup ** p if name == "energy" else sup ** (p / 2)


H1_BAND = 0.20
ENERGY_BAND = 0.30
H2_MIN_SLOPE = -2.3


def _band(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.max(np.abs(v - v.mean())) / abs(v.mean()))


def run_moment_sweep(spec: ExperimentSpec, workers: int = 1) -> RunRecord:
    if spec.kind is not Kind.MOMENT_SWEEP:
        raise ConfigurationError("spec is not a moment sweep")
    started = _now()
    parts = _pmap(_sweep_chunk, [(spec, c) for c in chunks(spec.n_samples, spec.batch_size)], workers)
    sup = np.concatenate([p["sup"] for p in parts])
    status = np.concatenate([p["status"] for p in parts])
    ok = np.array([_row_ok(s) for s in status])
    sample_status = _statuses(ok, status)
    use = ok.all(axis=1)
    ladder = list(spec.eps_ladder)
    header = ["epsilon"]
    cols = {}
    for p in spec.moment_orders:
        for c, name in enumerate(SWEEP_CHANNELS):
            key = f"{name}_p{p}"
            header += [key + "_mean", key + "_stderr"]
            vals = _channel_moment(name, sup[use, :, c], p)
            cols[key] = mean_stderr(vals) if use.any() else (
                np.full(len(ladder), np.nan), np.full(len(ladder), np.nan))
    header.append("n_used")
    table = Table(header)
    for i, e in enumerate(ladder):
        row = [e]
        for key in cols:
            row += [cols[key][0][i], cols[key][1][i]]
        row.append(int(use.sum()))
        table.rows.append(row)
    fits = {key: _fit(ladder, m, se) for key, (m, se) in cols.items()}
    checks = {}
    for p in spec.moment_orders:
        h1 = _band(cols[f"h1sq_p{p}"][0])
        en = _band(cols[f"energy_p{p}"][0])
        f2 = fits.get(f"h2sq_p{p}")
        checks[f"p{p}"] = {
            "h1_band": h1, "h1_bounded": h1 <= H1_BAND,
            "energy_band": en, "energy_bounded": en <= ENERGY_BAND,
            "h2_slope": None if f2 is None else f2["slope"],
            "h2_growth_allowed": None if f2 is None else bool(H2_MIN_SLOPE <= f2["slope"] <= 0.0),
        }
    return RunRecord("moment_sweep", spec, sample_status, {"summary": table}, fits, checks,
                     {"alpha": spec.alpha}, started=started, finished=_now(), workers=workers)


# mass drift -----------------------------------------------------------------

def _compatible(scheme: Scheme, case: NoiseCase, g: GKind) -> bool:
    if scheme is Scheme.SPLIT_STEP and case is NoiseCase.MULTIPLICATIVE_COMPLEX:
        return False
    if g.family is GFamily.SUPER_LOG and case is not NoiseCase.MULTIPLICATIVE_REAL:
        return False
    return True


def _mass_chunk(spec: ExperimentSpec, samples: list) -> dict:
    grid = spec.grid
    S = len(samples)
    m0 = None
    worst = np.zeros(S)
    last = np.zeros(S)

    def observe(step, t, u, alive):
        nonlocal m0
        m = grid.l2sq(u)
        if m0 is None:
            m0 = m
        rel = (m - m0) / m0
        np.maximum(worst, np.abs(rel), out=worst)
        last[:] = rel

    res = run_batch(grid, spec.initial_field().values, spec.eq, spec.noise, spec.solver,
                    np.array(samples), observe=observe)
    return {"worst": worst, "final": last, "status": res.status}


def mass_drift_combos(spec: ExperimentSpec) -> list:
    schemes = spec.schemes or (spec.solver.scheme,)
    cases = spec.cases or (spec.noise.case,)
    gks = [GKind(f, spec.noise.g.c) for f in spec.g_families] or [spec.noise.g]
    return [(s, c, g) for s in schemes for c in cases for g in gks]


def run_mass_drift(spec: ExperimentSpec, workers: int = 1) -> RunRecord:
    if spec.kind is not Kind.MASS_DRIFT:
        raise ConfigurationError("spec is not a mass-drift audit")
    started = _now()
    combos = mass_drift_combos(spec)
    sub = {}
    args = []
    for key in combos:
        scheme, case, g = key
        if not _compatible(scheme, case, g):
            continue
        s2 = replace(spec, solver=spec.solver.with_(scheme=scheme),
                     noise=replace(spec.noise, case=case, g=g))
        sub[key] = s2
        args += [(s2, c) for c in chunks(spec.n_samples, spec.batch_size)]
    results = _pmap(_mass_chunk, args, workers)
    table = Table(["scheme", "case", "g", "n_used", "max_rel_drift", "mean_final_rel_drift",
                   "stderr_final_rel_drift"])
    sample_status = []
    per_chunk = len(chunks(spec.n_samples, spec.batch_size))
    it = iter(range(0, len(results), per_chunk))
    for key in combos:
        scheme, case, g = key
        if key not in sub:
            table.rows.append([scheme.value, case.value, g.family.value, 0, "skipped", "", ""])
            continue
        i = next(it)
        parts = results[i:i + per_chunk]
        worst = np.concatenate([p["worst"] for p in parts])
        final = np.concatenate([p["final"] for p in parts])
        status = np.concatenate([p["status"] for p in parts])
        ok = _row_ok(status)
        sample_status += [s.value for s in status]
        m, se = mean_stderr(final[ok]) if ok.any() else (np.nan, np.nan)
        table.rows.append([scheme.value, case.value, g.family.value, int(ok.sum()),
                           float(np.max(worst[ok])) if ok.any() else float("nan"),
                           float(m), float(se)])
    return RunRecord("mass_drift", spec, sample_status, {"summary": table},
                     started=started, finished=_now(), workers=workers)


# inequality suites ----------------------------------------------------------

def run_inequality_check(spec: ExperimentSpec, workers: int = 1) -> RunRecord:
    started = _now()
    results = inequalities.run_all(spec.check_scale)
    table = Table(["suite", "params", "n", "violations", "worst_ratio"])
    for r in results:
        table.rows.append([r.name, r.params, r.n, r.violations, r.worst_ratio])
    checks = {"total_violations": int(sum(r.violations for r in results))}
    return RunRecord("inequality_check", spec, [], {"summary": table}, checks=checks,
                     started=started, finished=_now(), workers=workers)


# single runs ----------------------------------------------------------------

def _single_chunk(spec: ExperimentSpec, samples: list) -> dict:
    grid = spec.grid
    S = len(samples)
    series = [obs.ObservableSeries(list(SERIES_CHANNELS)) for _ in samples]
    eps = np.full(S, spec.eq.reg.epsilon)

    def observe(step, t, u, alive):
        v = obs.evaluate(SERIES_CHANNELS, grid, u, spec.eq, eps, spec.alpha)
        for i in range(S):
            if alive[i]:
                series[i].append(t, v[:, i])

    res = run_batch(grid, spec.initial_field().values, spec.eq, spec.noise, spec.solver,
                    np.array(samples), observe=observe, hash_noise=spec.hash_noise)
    return {"series": series, "status": res.status, "steps": res.steps,
            "digests": res.noise_digests}


def run_single(spec: ExperimentSpec, workers: int = 1) -> RunRecord:
    started = _now()
    if spec.solver.n_steps == 0:
        u0 = spec.initial_field().values[None]
        s = obs.ObservableSeries(list(SERIES_CHANNELS))
        s.append(0.0, obs.evaluate(SERIES_CHANNELS, spec.grid, u0, spec.eq,
                                   [spec.eq.reg.epsilon], spec.alpha)[:, 0])
        parts = [{"series": [s] * spec.n_samples,
                  "status": np.array([Status.FINISHED] * spec.n_samples, dtype=object),
                  "steps": np.zeros(spec.n_samples, dtype=int), "digests": None}]
    else:
        parts = _pmap(_single_chunk, [(spec, c) for c in chunks(spec.n_samples, spec.batch_size)],
                      workers)
    series, status, steps, digests = [], [], [], []
    for p in parts:
        series += p["series"]
        status += list(p["status"])
        steps += list(p["steps"])
        digests += p["digests"] or [""] * len(p["status"])
    table = Table(["sample", "status", "steps", "t_final"] +
                  [f"final_{c}" for c in SERIES_CHANNELS] + ["noise_digest"])
    for s, (ser, st, n, d) in enumerate(zip(series, status, steps, digests)):
        last = ser.rows[-1] if ser.rows else [float("nan")] * len(SERIES_CHANNELS)
        table.rows.append([s, st.value, int(n), ser.times[-1] if ser.times else 0.0] + list(last) + [d])
    width = max(4, len(str(spec.n_samples - 1)))
    named = {f"series_{s:0{width}d}": ser for s, ser in enumerate(series)}
    return RunRecord("single_run", spec, [s.value for s in status], {"summary": table},
                     series=named, started=started, finished=_now(), workers=workers)


# Ito / Stratonovich cross-validation ---------------------------------------

def scheme_gap(spec: ExperimentSpec, dt: float, fine_dt: float, samples,
               schemes=(Scheme.EXP_EULER, Scheme.SPLIT_STEP)) -> np.ndarray:
    """Per-sample ``||u_a(T) - u_b(T)||`` for two schemes driven by one Brownian path.

    Both runs aggregate the same fine increments of size ``fine_dt``, so
    refining ``dt`` keeps the path fixed.
    """
    sub = dt / fine_dt
    if abs(sub - round(sub)) > 1e-9 or round(sub) < 1:
        raise ConfigurationError("dt must be an integer multiple of fine_dt")
    finals = []
    for scheme in schemes:
        cfg = spec.solver.with_(scheme=scheme, dt=dt, noise_substeps=int(round(sub)),
                                observe_every=10 ** 9)
        res = run_batch(spec.grid, spec.initial_field().values, spec.eq, spec.noise, cfg,
                        np.asarray(samples))
        if not all(s is Status.FINISHED for s in res.status):
            raise RuntimeError(f"{scheme.value} run did not finish at dt={dt}")
        finals.append(res.u)
    return np.sqrt(spec.grid.l2sq(finals[0] - finals[1]))


def crossval(spec: ExperimentSpec, dts, samples) -> dict:
    """Scheme gap at each ``dt`` (coarse to fine) and successive reduction ratios."""
    dts = sorted(dts, reverse=True)
    fine = dts[-1]
    gaps = [float(np.mean(scheme_gap(spec, dt, fine, samples))) for dt in dts]
    ratios = [a / b for a, b in zip(gaps, gaps[1:])]
    return {"dt": dts, "gap": gaps, "ratio": ratios}


RUNNERS = {
    Kind.EPS_CONVERGENCE: run_eps_convergence,
    Kind.TEMPORAL_HOELDER: run_hoelder,
    Kind.MOMENT_SWEEP: run_moment_sweep,
    Kind.MASS_DRIFT: run_mass_drift,
    Kind.INEQUALITY_CHECK: run_inequality_check,
    Kind.SINGLE_RUN: run_single,
}


def run(spec: ExperimentSpec, workers: int = 1) -> RunRecord:
    return RUNNERS[spec.kind](spec, workers)

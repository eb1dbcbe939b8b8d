from pathlib import Path

import pytest

from slogs import config as cfg
from slogs.errors import ConfigurationError
from slogs.noise import GFamily, NoiseCase
from slogs.regularization import Family
from slogs.solver import Scheme

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

CONVERGE = """
experiment.kind = "eps_convergence"
experiment.eps_ladder = [0.1, 0.01, 0.001]
experiment.eps_reference = 1e-4
solver.dt = 0.01
solver.t_end = 0.1
"""


def test_defaults():
    spec = cfg.build({})
    assert spec.kind is cfg.Kind.SINGLE_RUN
    assert spec.solver.scheme is Scheme.SPLIT_STEP
    assert spec.noise.case is NoiseCase.MULTIPLICATIVE_REAL
    assert spec.noise.spectrum.amplitude == 0.0
    assert spec.eq.reg.family is Family.LOG_RATIONAL


def test_nested_and_flat_agree():
    a = cfg.build({"grid": {"n": 64}, "noise": {"g": "rational", "g_c": 2.0}})
    b = cfg.build({"grid.n": 64, "noise.g": "rational", "noise.g_c": 2.0})
    assert a == b
    assert a.noise.g.family is GFamily.RATIONAL and a.noise.g.c == 2.0


def test_round_trip_through_resolved():
    spec = cfg.loads(CONVERGE)
    again = cfg.build(spec.resolved)
    assert again == spec


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.toml")), ids=lambda p: p.name)
def test_shipped_configs_load(path):
    spec = cfg.load(path)
    assert spec.n_samples >= 1


@pytest.mark.parametrize("raw,msg", [
    ({"grid.nn": 3}, "unknown config keys"),
    ({"grid.n": "many"}, "grid.n"),
    ({"grid.n": 2.5}, "grid.n"),
    ({"solver.dealias": 1}, "solver.dealias"),
    ({"noise.case": "loud"}, "noise.case"),
    ({"noise.seed": -1}, "seed"),
    ({"solver.dt": 0.3, "solver.t_end": 1.0}, "multiple"),
    ({"experiment.n_samples": 0}, "n_samples"),
    ({"experiment.moment_orders": [3]}, "even"),
    ({"experiment.max_excluded_fraction": 2.0}, "max_excluded"),
])
def test_invalid_values(raw, msg):
    with pytest.raises(ConfigurationError, match=msg):
        cfg.build(raw)


@pytest.mark.parametrize("ladder,ref,msg", [
    (None, 1e-4, "eps_ladder is required"),
    ([0.1, 0.1, 0.01], 1e-4, "strictly decreasing"),
    ([0.01, 0.1, 0.001], 1e-4, "strictly decreasing"),
    ([1.5, 0.1, 0.01], 1e-4, r"\(0, 1\)"),
    ([0.1, 0.01, 0.001], 1e-2, "eps_reference"),
    ([0.1, 0.01, 0.001], None, "eps_reference"),
])
def test_ladder_validation(ladder, ref, msg):
    raw = {"experiment.kind": "eps_convergence", "experiment.eps_ladder": ladder,
           "experiment.eps_reference": ref}
    with pytest.raises(ConfigurationError, match=msg):
        cfg.build(raw)


def test_reference_may_equal_finest_rung():
    spec = cfg.build({"experiment.kind": "eps_convergence", "experiment.eps_ladder": [0.1, 0.01],
                      "experiment.eps_reference": 0.01})
    assert spec.eps_reference == 0.01


def test_exact_family_cannot_be_swept():
    with pytest.raises(ConfigurationError, match="regularized"):
        cfg.build({"experiment.kind": "moment_sweep", "experiment.eps_ladder": [0.1, 0.01],
                   "eq.family": "exact"})


@pytest.mark.parametrize("lags,msg", [
    (None, "required"),
    ([0.005], "below 10 dt"),
    ([0.015], "multiple"),
    ([2.0], "exceeds"),
])
def test_hoelder_lags(lags, msg):
    raw = {"experiment.kind": "temporal_hoelder", "experiment.hoelder_lags": lags,
           "solver.dt": 1e-3, "solver.observe_every": 10}
    with pytest.raises(ConfigurationError, match=msg):
        cfg.build(raw)
    ok = dict(raw, **{"experiment.hoelder_lags": [0.01, 0.1]})
    assert cfg.build(ok).hoelder_lags == (0.01, 0.1)


def test_missing_file_and_bad_toml(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        cfg.load(tmp_path / "nope.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("grid.n = = 3")
    with pytest.raises(ConfigurationError, match="TOML"):
        cfg.load(bad)


def test_initial_profiles():
    base = {"grid.length": 20.0, "grid.n": 128}
    for profile in ("gaussian", "sech", "constant"):
        u = cfg.build(dict(base, **{"init.profile": profile, "init.amplitude": 2.0})).initial_field()
        assert abs(abs(u.values).max() - 2.0) < 1e-2
    with pytest.raises(ConfigurationError):
        cfg.build(dict(base, **{"init.profile": "gausson", "eq.lambda": -1.0}))


def test_with_seed():
    spec = cfg.build({"noise.seed": 3}).with_seed(7)
    assert spec.noise.master_seed == 7 and spec.resolved["noise.seed"] == 7
